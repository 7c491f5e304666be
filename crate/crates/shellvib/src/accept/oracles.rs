//! Independent reference computations for the element, the patch
//! evaluation, the rigid-body null space and the Schur reduction.

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3x2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shellvib_core::assembly::{
    assemble_system, element_matrices, quadrature_rule, rigid_body_modes, AssembledSystem, DofMap, ElectricCondition,
    ShellModel,
};
use shellvib_core::material::{isotropic_h, transform_and_relax, MaterialSpec};
use shellvib_core::mesh::{
    build_patches, gather_regular, generate_benchmark_mesh, subdivide_once, BenchmarkSpec, ControlMesh, Patch,
    PatchKind, RoofSpec, SphereSpec,
};
use shellvib_core::shell::reference_frame;
use shellvib_core::solver::{recover_potentials, schur_reduce, solve_static, ReducedStiffness};
use shellvib_core::sparse::CsrMatrix;
use shellvib_core::subd::{eval_patch_basis, eval_patch_jet, regular_jet, Order, SurfaceJet};
use shellvib_core::Vec3;

use super::Check;
use crate::Result;

type Tensor4 = [[[[f64; 2]; 2]; 2]; 2];

/// Three-point Gauss rule on [-1/2, 1/2].
const THICKNESS_RULE: [(f64, f64); 3] = [
    (-0.387_298_334_620_741_7, 5.0 / 18.0),
    (0.0, 8.0 / 18.0),
    (0.387_298_334_620_741_7, 5.0 / 18.0),
];

struct OraclePoint {
    /// Quadrature weight times area Jacobian.
    da: f64,
    jet: Vec<[f64; 6]>,
    reference: SurfaceJet,
    normal: Vec3,
    c: Tensor4,
    e: Matrix2<f64>,
    kappa: Matrix2<f64>,
    kappa33: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum Part {
    Elastic,
    Electric,
    Kinetic,
    Work,
}

/// Total energy of one element written out through the thickness, with
/// strains taken from the deformed surface jets.
struct ElementEnergy {
    points: Vec<OraclePoint>,
    h: f64,
    rho: f64,
    traction: Vec3,
    electric: bool,
}

fn jet_entry(s: &SurfaceJet, k: usize) -> Vec3 {
    [s.x, s.a1, s.a2, s.a11, s.a12, s.a22][k]
}

fn zero_jet() -> SurfaceJet {
    let z = Vec3::zeros();
    SurfaceJet { x: z, a1: z, a2: z, a11: z, a12: z, a22: z }
}

fn add_jet(s: &mut SurfaceJet, jet: &[f64; 6], d: Vec3) {
    s.x += jet[0] * d;
    s.a1 += jet[1] * d;
    s.a2 += jet[2] * d;
    s.a11 += jet[3] * d;
    s.a12 += jet[4] * d;
    s.a22 += jet[5] * d;
}

impl ElementEnergy {
    fn new(model: &ShellModel, e: usize) -> Result<ElementEnergy> {
        let patch = &model.patches.patches[e];
        let support = &model.supports()[e];
        let pos = model.mesh().vertices();
        let mut points = Vec::new();
        for (xi, eta, w) in quadrature_rule(patch) {
            let basis = eval_patch_basis(patch, xi, eta, Order::Second)?;
            let jet = support.fold_jet(&basis.jet);
            let mut reference = zero_jet();
            for (j, &v) in jet.iter().zip(&support.vertices) {
                add_jet(&mut reference, j, pos[v]);
            }
            let n = reference.a1.cross(&reference.a2);
            let frame = reference_frame(&reference)?;
            let (c, em, kappa, kappa33) = match &model.material {
                MaterialSpec::Isotropic { young, poisson, .. } => {
                    let mut c = isotropic_h(&frame, *poisson);
                    let s = young / (1.0 - poisson * poisson);
                    c.iter_mut().flatten().flatten().flatten().for_each(|x| *x *= s);
                    (c, Matrix2::zeros(), Matrix2::zeros(), 0.0)
                }
                spec @ MaterialSpec::Piezo { .. } => {
                    let (t1, t2) = frame.tangent_dirs();
                    let r = transform_and_relax(spec, &frame, t1, t2)?;
                    (r.c, r.e, r.kappa, r.kappa33)
                }
            };
            points.push(OraclePoint { da: w * n.norm(), jet, reference, normal: n.normalize(), c, e: em, kappa, kappa33 });
        }
        Ok(ElementEnergy {
            points,
            h: model.thickness,
            rho: model.material.density(),
            traction: model.areal_load + model.thickness * model.body_force,
            electric: model.electric != ElectricCondition::Elastic,
        })
    }

    fn size(&self) -> f64 {
        self.points.iter().map(|p| p.reference.a1.norm().max(p.reference.a2.norm())).fold(0.0, f64::max)
    }

    /// Energy part at displacement `du` (dof `3 a + i`) and potential
    /// coefficients `dpsi`, `dphi` (per support vertex).
    fn eval(&self, part: Part, du: &[(usize, f64)], dpsi: &[(usize, f64)], dphi: &[(usize, f64)]) -> f64 {
        let h = self.h;
        let mut total = 0.0;
        for p in &self.points {
            let mut cur = p.reference;
            let mut disp = zero_jet();
            for &(dof, amount) in du {
                let mut d = Vec3::zeros();
                d[dof % 3] = amount;
                add_jet(&mut cur, &p.jet[dof / 3], d);
                add_jet(&mut disp, &p.jet[dof / 3], d);
            }
            let density = match part {
                Part::Kinetic => 0.5 * self.rho * h * disp.x.norm_squared(),
                Part::Work => self.traction.dot(&disp.x),
                Part::Elastic | Part::Electric => {
                    let n1 = cur.a1.cross(&cur.a2).normalize();
                    let mut alpha = [[0.0; 2]; 2];
                    let mut beta = [[0.0; 2]; 2];
                    for a in 0..2 {
                        for b in 0..2 {
                            let (ca, cb) = (jet_entry(&cur, 1 + a), jet_entry(&cur, 1 + b));
                            let (ra, rb) = (jet_entry(&p.reference, 1 + a), jet_entry(&p.reference, 1 + b));
                            alpha[a][b] = 0.5 * (ca.dot(&cb) - ra.dot(&rb));
                            beta[a][b] = p.reference.second(a, b).dot(&p.normal) - cur.second(a, b).dot(&n1);
                        }
                    }
                    let field = |coef: &[(usize, f64)]| {
                        let mut v = [0.0; 3];
                        for &(a, c) in coef {
                            for k in 0..3 {
                                v[k] += c * p.jet[a][k];
                            }
                        }
                        v
                    };
                    let (psi, phi) = (field(dpsi), field(dphi));
                    let mut s = 0.0;
                    for &(z, wz) in &THICKNESS_RULE {
                        let zeta = z * h;
                        let mut eps = [[0.0; 2]; 2];
                        for a in 0..2 {
                            for b in 0..2 {
                                eps[a][b] = alpha[a][b] + zeta * beta[a][b];
                            }
                        }
                        let val = if part == Part::Elastic {
                            let mut w = 0.0;
                            for a in 0..2 {
                                for b in 0..2 {
                                    for c in 0..2 {
                                        for d in 0..2 {
                                            w += eps[a][b] * p.c[a][b][c][d] * eps[c][d];
                                        }
                                    }
                                }
                            }
                            0.5 * w
                        } else if self.electric {
                            // Potential zeta psi + (zeta^2 - h^2/4) phi.
                            let q = zeta * zeta - 0.25 * h * h;
                            let e3 = psi[0] + 2.0 * zeta * phi[0];
                            let grad = [zeta * psi[1] + q * phi[1], zeta * psi[2] + q * phi[2]];
                            let mut coupling = 0.0;
                            let mut dielectric = p.kappa33 * e3 * e3;
                            for a in 0..2 {
                                for b in 0..2 {
                                    coupling += p.e[(a, b)] * eps[a][b];
                                    dielectric += p.kappa[(a, b)] * grad[a] * grad[b];
                                }
                            }
                            e3 * coupling - 0.5 * dielectric
                        } else {
                            0.0
                        };
                        s += wz * h * val;
                    }
                    s
                }
            };
            total += p.da * density;
        }
        total
    }
}

/// Central mixed second difference of `f` along two perturbations.
fn mixed(f: impl Fn(f64, f64) -> f64, ei: f64, ej: f64) -> f64 {
    (f(ei, ej) - f(ei, -ej) - f(-ei, ej) + f(-ei, -ej)) / (4.0 * ei * ej)
}

fn rel_err(fd: &DMatrix<f64>, exact: &DMatrix<f64>) -> f64 {
    let scale = exact.amax().max(fd.amax());
    if scale == 0.0 {
        return 0.0;
    }
    (fd - exact).amax() / scale
}

/// Largest relative block error of element `e` against finite differences
/// of the oracle energy, with the name of the worst block.
fn element_error(model: &ShellModel, e: usize) -> Result<(f64, &'static str)> {
    let mats = element_matrices(model, e)?;
    let en = &ElementEnergy::new(model, e)?;
    let n = mats.vertices.len();
    let eu = 1e-5 * en.size();
    let ep = 1.0;
    let mut worst = (0.0, "");
    let mut record = |err: f64, name: &'static str| {
        if err > worst.0 || worst.1.is_empty() {
            worst = (err, name);
        }
    };

    let mut k = DMatrix::zeros(3 * n, 3 * n);
    let mut m = DMatrix::zeros(3 * n, 3 * n);
    for i in 0..3 * n {
        for j in i..3 * n {
            let f = |part| move |a: f64, b: f64| en.eval(part, &[(i, a), (j, b)], &[], &[]);
            k[(i, j)] = mixed(f(Part::Elastic), eu, eu);
            m[(i, j)] = mixed(f(Part::Kinetic), eu, eu);
            k[(j, i)] = k[(i, j)];
            m[(j, i)] = m[(i, j)];
        }
    }
    record(rel_err(&k, &mats.stiffness), "stiffness");
    let mut m_exact = DMatrix::zeros(3 * n, 3 * n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..3 {
                m_exact[(3 * a + c, 3 * b + c)] = mats.mass[(a, b)];
            }
        }
    }
    record(rel_err(&m, &m_exact), "mass");
    let load = DMatrix::from_fn(3 * n, 1, |i, _| {
        (en.eval(Part::Work, &[(i, eu)], &[], &[]) - en.eval(Part::Work, &[(i, -eu)], &[], &[])) / (2.0 * eu)
    });
    record(rel_err(&load, &DMatrix::from_column_slice(3 * n, 1, mats.load.as_slice())), "load");

    let coupling = |which: usize| {
        DMatrix::from_fn(3 * n, n, |i, a| {
            mixed(
                |x, y| {
                    let p = [(a, y)];
                    let (psi, phi): (&[(usize, f64)], &[(usize, f64)]) = if which == 0 { (&p, &[]) } else { (&[], &p) };
                    en.eval(Part::Electric, &[(i, x)], psi, phi)
                },
                eu,
                ep,
            )
        })
    };
    let dielectric = |wa: usize, wb: usize| {
        DMatrix::from_fn(n, n, |a, b| {
            -mixed(
                |x, y| {
                    let mut psi = Vec::new();
                    let mut phi = Vec::new();
                    if wa == 0 { psi.push((a, x)) } else { phi.push((a, x)) }
                    if wb == 0 { psi.push((b, y)) } else { phi.push((b, y)) }
                    en.eval(Part::Electric, &[], &psi, &phi)
                },
                ep,
                ep,
            )
        })
    };
    if let Some(c) = &mats.c_psi {
        record(rel_err(&coupling(0), c), "c_psi");
    }
    if let Some(c) = &mats.c_phi {
        record(rel_err(&coupling(1), c), "c_phi");
    }
    if let Some(d) = &mats.d1 {
        record(rel_err(&dielectric(0, 0), d), "d1");
    }
    if let Some(d) = &mats.d2 {
        record(rel_err(&dielectric(1, 1), d), "d2");
    }
    if let (Some(d1), Some(d2)) = (&mats.d1, &mats.d2) {
        let cross = dielectric(0, 1);
        record(cross.amax() / d1.amax().max(d2.amax()), "psi-phi");
    }
    if mats.c_psi.is_none() && mats.c_phi.is_none() && en.electric {
        record(1.0, "missing electric blocks");
    }
    Ok(worst)
}

fn pick_elements(model: &ShellModel, regular: usize, irregular: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut reg: Vec<usize> = Vec::new();
    let mut irr: Vec<usize> = Vec::new();
    for (e, p) in model.patches.patches.iter().enumerate() {
        if p.is_regular() { reg.push(e) } else { irr.push(e) }
    }
    let mut out = Vec::new();
    for (pool, count) in [(reg, regular), (irr, irregular)] {
        let mut pool = pool;
        for _ in 0..count.min(pool.len()) {
            out.push(pool.swap_remove(rng.random_range(0..pool.len())));
        }
    }
    out
}

/// Element blocks against finite differences of the energy on 20 random
/// elements of a piezoelectric sphere, a piezoelectric roof and an
/// isotropic sphere.
pub fn element_hessian() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let sphere = generate_benchmark_mesh(&BenchmarkSpec::Sphere(SphereSpec { radius: 0.1, level: 2 }))?;
    let roof = generate_benchmark_mesh(&BenchmarkSpec::Roof(RoofSpec {
        length: 0.5,
        radius: 0.25,
        half_angle: 40f64.to_radians(),
        n: 8,
    }))?;
    let bt = MaterialSpec::barium_titanate();
    let steel = MaterialSpec::Isotropic { young: 2.0e11, poisson: 0.3, density: 7800.0 };
    let mut models = vec![
        (ShellModel::new(&sphere, 2e-3, bt.clone(), ElectricCondition::Unelectroded)?, 4, 4),
        (ShellModel::new(&roof, 2.5e-3, bt, ElectricCondition::Unelectroded)?, 6, 0),
        (ShellModel::new(&sphere, 1e-3, steel, ElectricCondition::Elastic)?, 3, 3),
    ];
    for (m, _, _) in &mut models {
        m.areal_load = Vec3::new(1.0, -2.0, 3.0);
        m.body_force = Vec3::new(0.0, 0.0, -9.81 * m.material.density());
    }
    let mut worst = (0.0, "", 0);
    let mut count = 0;
    let mut irregular = 0;
    for (model, reg, irr) in &models {
        for e in pick_elements(model, *reg, *irr, &mut rng) {
            let (err, block) = element_error(model, e)?;
            count += 1;
            irregular += usize::from(!model.patches.patches[e].is_regular());
            if err >= worst.0 {
                worst = (err, block, e);
            }
        }
    }
    Ok(Check::new(
        count == 20 && irregular >= 7 && worst.0 <= 1e-6,
        format!(
            "{count} elements ({irregular} irregular), max relative error {:.2e} ({} of element {})",
            worst.0, worst.1, worst.2
        ),
    ))
}

/// Quad mesh of an n-sided prism: each cap is a fan of n quads around a
/// centre of valence n, each side face is split into four quads.
pub fn prism_mesh(n: usize, radius: f64, height: f64) -> Result<ControlMesh> {
    let ring = 2 * n;
    let mut v = Vec::new();
    for z in [0.5 * height, 0.0, -0.5 * height] {
        for k in 0..ring {
            let t = std::f64::consts::PI * k as f64 / n as f64;
            // Odd ring points sit on the polygon edges.
            let s = if k % 2 == 1 { (std::f64::consts::PI / n as f64).cos() } else { 1.0 };
            v.push(Vec3::new(radius * s * t.cos(), radius * s * t.sin(), z));
        }
    }
    let (top, mid, bot) = (0, ring, 2 * ring);
    v.push(Vec3::new(0.0, 0.0, 0.5 * height));
    v.push(Vec3::new(0.0, 0.0, -0.5 * height));
    let (ct, cb) = (3 * ring, 3 * ring + 1);
    let at = |base: usize, k: usize| base + k % ring;
    let mut faces = Vec::new();
    for i in 0..n {
        faces.push([ct, at(top, 2 * i), at(top, 2 * i + 1), at(top, 2 * i + 2)]);
        faces.push([cb, at(bot, 2 * i + 2), at(bot, 2 * i + 1), at(bot, 2 * i)]);
    }
    for k in 0..ring {
        faces.push([at(bot, k), at(bot, k + 1), at(mid, k + 1), at(mid, k)]);
        faces.push([at(mid, k), at(mid, k + 1), at(top, k + 1), at(top, k)]);
    }
    Ok(ControlMesh::new(v, faces)?)
}

/// Rotation `(a, b) -> (b, 1 - a)` applied `k` times: offset and linear part.
fn rotate(k: usize, a: f64, b: f64) -> (f64, f64, Matrix2<f64>) {
    let (mut x, mut y) = (a, b);
    let mut lin = Matrix2::identity();
    let r = Matrix2::new(0.0, 1.0, -1.0, 0.0);
    for _ in 0..k {
        (x, y) = (y, 1.0 - x);
        lin = r * lin;
    }
    (x, y, lin)
}

/// Position, face-coordinate gradient and Hessian of the limit surface.
struct FaceJet {
    x: Vec3,
    d: Matrix3x2<f64>,
    dd: [Matrix2<f64>; 3],
}

fn face_jet(s: &SurfaceJet, lin: &Matrix2<f64>) -> FaceJet {
    let j = Matrix3x2::from_columns(&[s.a1, s.a2]);
    let mut dd = [Matrix2::zeros(); 3];
    for (c, m) in dd.iter_mut().enumerate() {
        let h = Matrix2::new(s.a11[c], s.a12[c], s.a12[c], s.a22[c]);
        *m = lin.transpose() * h * lin;
    }
    FaceJet { x: s.x, d: j * lin, dd }
}

/// Limit surface of face `f` of a closed mesh at face coordinates `(u, v)`
/// found by globally subdividing until the point lies in a regular face.
fn subdivision_oracle(levels: &mut Vec<ControlMesh>, f: usize, u: f64, v: f64) -> Result<FaceJet> {
    let (mut f, mut s, mut t) = (f, u, v);
    let mut lin = Matrix2::identity();
    let mut level = 0;
    loop {
        let mesh = &levels[level];
        if mesh.faces()[f].iter().all(|&c| mesh.valence(c) == 4) {
            let patch = gather_regular(mesh, f)?;
            let jet = regular_jet(s, t)?;
            let mut sj = zero_jet();
            for (j, &c) in jet.iter().zip(&patch.control_ids) {
                add_jet(&mut sj, j, mesh.vertices()[c]);
            }
            return Ok(face_jet(&sj, &lin));
        }
        let (k, a, b, r) = (0..4)
            .map(|k| {
                let (a, b, r) = rotate(k, s, t);
                (k, a, b, r)
            })
            .find(|&(_, a, b, _)| a <= 0.5 && b <= 0.5)
            .expect("point inside the face");
        (f, s, t) = (4 * f + k, 2.0 * a, 2.0 * b);
        lin = 2.0 * r * lin;
        level += 1;
        if levels.len() == level {
            let next = subdivide_once(levels.last().unwrap())?;
            levels.push(next);
        }
    }
}

fn jet_error(a: &FaceJet, b: &FaceJet, size: f64) -> f64 {
    let hs: f64 = b.dd.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
    let dh: f64 = a.dd.iter().zip(&b.dd).map(|(x, y)| (x - y).norm_squared()).sum::<f64>().sqrt();
    ((a.x - b.x).norm() / size).max((a.d - b.d).norm() / b.d.norm()).max(dh / hs)
}

/// Irregular patch evaluation against global subdivision at 50 random
/// points on perturbed meshes with valences 3, 5 and 6.
pub fn irregular_evaluation() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(52);
    let mut worst: f64 = 0.0;
    let mut valences = std::collections::BTreeSet::new();
    let mut count = 0;
    for (n, points) in [(4, 16), (5, 17), (6, 17)] {
        let base = prism_mesh(n, 1.0, 1.6)?;
        let mut noise = || Vec3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()) * 0.08 - Vec3::repeat(0.04);
        let shifts: Vec<Vec3> = (0..base.vertices().len()).map(|_| noise()).collect();
        let base = ControlMesh::new(
            base.vertices().iter().zip(&shifts).map(|(p, s)| p + s).collect(),
            base.faces().to_vec(),
        )?;
        let m0 = subdivide_once(&base)?;
        let ps = build_patches(&m0)?;
        assert_eq!(ps.isolation_steps, 0);
        let irregular: Vec<&Patch> = ps.patches.iter().filter(|p| !p.is_regular()).collect();
        let mut levels = vec![m0.clone()];
        let (lo, hi) = m0.bounding_box();
        let size = (hi - lo).norm();
        let mut done = 0;
        while done < points {
            let patch = irregular[rng.random_range(0..irregular.len())];
            let (u, v) = (rng.random::<f64>(), rng.random::<f64>());
            let (xi, eta, lin) = rotate(patch.start_corner, u, v);
            if xi.max(eta) < 1.0 / 16.0 {
                continue;
            }
            let (_, sj) = eval_patch_jet(patch, m0.vertices(), xi, eta, Order::Second)?;
            let exact = subdivision_oracle(&mut levels, patch.face, u, v)?;
            worst = worst.max(jet_error(&face_jet(&sj, &lin), &exact, size));
            valences.insert(patch.valence());
            done += 1;
        }
        count += done;
    }
    Ok(Check::new(
        count == 50 && worst <= 1e-9,
        format!("{count} points, valences {valences:?}, max relative error {worst:.2e}"),
    ))
}

/// Basis sums at 100 random points per patch class.
pub fn partition_of_unity() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    let mut worst: f64 = 0.0;
    let kinds = [
        PatchKind::Regular,
        PatchKind::Irregular { valence: 3 },
        PatchKind::Irregular { valence: 5 },
        PatchKind::Irregular { valence: 6 },
        PatchKind::Irregular { valence: 7 },
        PatchKind::Irregular { valence: 8 },
    ];
    for kind in kinds {
        let count = match kind {
            PatchKind::Regular => 16,
            PatchKind::Irregular { valence } => 2 * valence + 8,
        };
        let patch = Patch { face: 0, kind, start_corner: 0, control_ids: vec![0; count] };
        for _ in 0..100 {
            let (xi, eta) = (rng.random_range(1e-6..=1.0), rng.random_range(1e-6..=1.0));
            let b = eval_patch_basis(&patch, xi, eta, Order::Second)?;
            let mut sums = [0.0; 6];
            let mut mags = [0.0; 6];
            for j in &b.jet {
                for k in 0..6 {
                    sums[k] += j[k];
                    mags[k] += j[k].abs();
                }
            }
            worst = worst.max((sums[0] - 1.0).abs());
            for k in 1..6 {
                worst = worst.max(sums[k].abs() / mags[k].max(1.0));
            }
        }
    }
    Ok(Check::new(worst <= 1e-12, format!("{} patch classes x 100 points, max defect {worst:.2e}", kinds.len())))
}

/// Spectral norm of a symmetric operator by power iteration.
pub fn spectral_norm(n: usize, apply: impl Fn(&[f64]) -> Vec<f64>, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let mut est = 0.0;
    for _ in 0..60 {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let y = apply(&x);
        est = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        x = y;
    }
    est
}

/// Rigid-body fields against the stiffness of the free level-4 sphere.
pub fn rigid_null_space() -> Result<Check> {
    let mesh = generate_benchmark_mesh(&BenchmarkSpec::Sphere(SphereSpec { radius: 0.1135, level: 4 }))?;
    let mat = MaterialSpec::Isotropic { young: 193.05e9, poisson: 0.28, density: 8025.937 };
    let model = ShellModel::new(&mesh, 1.5875e-3, mat, ElectricCondition::Elastic)?;
    let sys = assemble_system(&model)?;
    let k = &sys.stiffness;
    let norm = spectral_norm(k.nrows(), |x| k.mul_vec(x), 54);
    let mut worst: f64 = 0.0;
    for r in rigid_body_modes(&sys.coords) {
        let kr = k.mul_vec(&r);
        let ratio = kr.iter().map(|v| v * v).sum::<f64>().sqrt() / (norm * r.iter().map(|v| v * v).sum::<f64>().sqrt());
        worst = worst.max(ratio);
    }
    Ok(Check::new(worst <= 1e-9, format!("6 rigid fields, max |Ku| / (|K| |u|) = {worst:.2e}")))
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng, scale: f64) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5);
    (&b * b.transpose() + DMatrix::identity(n, n) * (0.5 * n as f64)) * scale
}

/// Explicit, implicit and static Schur reductions of a random system with
/// 20 vertices against dense elimination of the full block system.
pub fn schur_reduction() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let v = 20;
    let n = 3 * v;
    let k = random_spd(n, &mut rng, 1e3);
    let c1 = DMatrix::from_fn(n, v, |_, _| rng.random::<f64>() - 0.5);
    let c2 = DMatrix::from_fn(n, v, |_, _| 3.0 * (rng.random::<f64>() - 0.5));
    let d1 = random_spd(v, &mut rng, 0.1);
    let d2 = random_spd(v, &mut rng, 0.02);
    let load: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    let coords: Vec<Vec3> = (0..v).map(|_| Vec3::new(rng.random(), rng.random(), rng.random())).collect();
    let sys = AssembledSystem {
        n_vertices: v,
        coords,
        mass: CsrMatrix::identity(n),
        stiffness: CsrMatrix::from_dense(&k, 0.0),
        c_psi: Some(CsrMatrix::from_dense(&c1, 0.0)),
        c_phi: Some(CsrMatrix::from_dense(&c2, 0.0)),
        d1: Some(CsrMatrix::from_dense(&d1, 0.0)),
        d2: Some(CsrMatrix::from_dense(&d2, 0.0)),
        load: load.clone(),
        voltage_load: None,
        dofs: DofMap::all(n),
    };

    // Full block matrix [[K, C1, C2], [C1^T, -D1, 0], [C2^T, 0, -D2]].
    let t = n + 2 * v;
    let mut full = DMatrix::zeros(t, t);
    full.view_mut((0, 0), (n, n)).copy_from(&k);
    full.view_mut((0, n), (n, v)).copy_from(&c1);
    full.view_mut((0, n + v), (n, v)).copy_from(&c2);
    full.view_mut((n, 0), (v, n)).copy_from(&c1.transpose());
    full.view_mut((n + v, 0), (v, n)).copy_from(&c2.transpose());
    full.view_mut((n, n), (v, v)).copy_from(&(-&d1));
    full.view_mut((n + v, n + v), (v, v)).copy_from(&(-&d2));

    // Eliminate the electric rows by Gaussian elimination.
    let ee = full.view((n, n), (2 * v, 2 * v)).clone_owned();
    let ue = full.view((0, n), (n, 2 * v)).clone_owned();
    let lu = ee.lu();
    let x = lu.solve(&ue.transpose()).expect("electric block is regular");
    let dense = &k - &ue * x;
    let scale = dense.amax();

    let explicit = schur_reduce(&sys)?.to_dense();
    let e_explicit = (&explicit - &dense).amax() / scale;

    let reduced = ReducedStiffness::new(&sys)?;
    let mut e_apply: f64 = 0.0;
    for _ in 0..5 {
        let u = DVector::from_fn(n, |_, _| rng.random::<f64>() - 0.5);
        let exact = &dense * &u;
        let got = DVector::from_vec(reduced.apply(u.as_slice()));
        e_apply = e_apply.max((got - &exact).amax() / exact.amax());
    }

    let mut rhs = DVector::zeros(t);
    rhs.rows_mut(0, n).copy_from_slice(&load);
    let sol = full.clone().lu().solve(&rhs).expect("block system is regular");
    let st = solve_static(&sys, &load)?;
    let u_exact = sol.rows(0, n).clone_owned();
    let mut e_static = (DVector::from_vec(st.displacement.clone()) - &u_exact).amax() / u_exact.amax();
    let (psi, phi) = recover_potentials(&sys, &st.displacement)?;
    for (got, off) in [(psi, n), (phi, n + v)] {
        let exact = sol.rows(off, v).clone_owned();
        let got = DVector::from_vec(got.unwrap_or_default());
        e_static = e_static.max((got - &exact).amax() / exact.amax());
    }
    let worst = e_explicit.max(e_apply).max(e_static);
    Ok(Check::new(
        worst <= 1e-10,
        format!(
            "V = {v}: explicit {e_explicit:.2e}, implicit {e_apply:.2e}, static solve {e_static:.2e}"
        ),
    ))
}
