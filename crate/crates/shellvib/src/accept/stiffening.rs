//! Positive semidefiniteness of the electric stiffening terms and the
//! closed-mesh capability run.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use shellvib_core::assembly::{apply_constraints, assemble_system, AssembledSystem};
use shellvib_core::mesh::{subdivide_once, ControlMesh};
use shellvib_core::solver::{schur_reduce, ReducedStiffness, SymFactor};
use shellvib_core::sparse::CsrMatrix;
use shellvib_core::Vec3;

use super::benchmarks::{roof_config, ROOF_CASES, ROOF_LENGTH, ROOF_N};
use super::oracles::{prism_mesh, spectral_norm};
use super::Check;
use crate::config::{ElectricConfig, RunConfig};
use crate::pipeline::{self, Solution};
use crate::{obj, Error, Result};

/// Relative eigenvalue floor for the semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-8;

fn constrained(cfg: &RunConfig) -> Result<AssembledSystem> {
    let mesh = pipeline::build_mesh(cfg, Path::new("."))?;
    let model = pipeline::build_model(cfg, &mesh)?;
    Ok(apply_constraints(&assemble_system(&model)?, &model)?)
}

fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.min()
}

/// Inertia test for `C D^-1 C^T >= -tau I`: the matrix
/// `[[tau I, C], [C^T, -D]]` has `n` positive and `V` negative pivots
/// exactly when `D` is positive definite and `tau I + C D^-1 C^T` is too.
pub fn inertia_certificate(sys: &AssembledSystem, c: &CsrMatrix, d: &CsrMatrix, tau: f64) -> Result<bool> {
    let n = c.nrows();
    let v = c.ncols();
    let mut trip: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, i, tau)).collect();
    for i in 0..n {
        let (cols, vals) = c.row(i);
        for (&j, &x) in cols.iter().zip(vals) {
            trip.push((i, n + j, x));
            trip.push((n + j, i, x));
        }
    }
    for i in 0..v {
        let (cols, vals) = d.row(i);
        for (&j, &x) in cols.iter().zip(vals) {
            trip.push((n + i, n + j, -x));
        }
    }
    let a = CsrMatrix::from_triplets(n + v, n + v, &trip);
    let mut node_of = sys.node_of_free();
    node_of.extend(0..v);
    Ok(SymFactor::new(&a, &node_of, &sys.coords)?.inertia() == (n, v))
}

/// Dense eigenvalue check and inertia certificate on the 40° roof.
pub fn roof_psd() -> Result<Check> {
    let (deg, radius, _) = ROOF_CASES[1];
    let system = |e: ElectricConfig| {
        let mut cfg = roof_config(ROOF_LENGTH, radius, deg, ROOF_N);
        cfg.electric = e;
        constrained(&cfg)
    };
    let el = system(ElectricConfig::Elastic)?;
    let sc = system(ElectricConfig::ShortCircuited)?;
    let ue = system(ElectricConfig::Unelectroded)?;
    let k = el.stiffness.to_dense();
    let a_sc = schur_reduce(&sc)?.to_dense();
    let a_ue = schur_reduce(&ue)?.to_dense();
    let norm = SymmetricEigen::new(a_ue.clone()).eigenvalues.amax();
    let tau = PSD_TOL * norm;
    let m1 = min_eigenvalue(&a_sc - &k);
    let m2 = min_eigenvalue(&a_ue - &a_sc);
    let cert = inertia_certificate(&ue, ue.c_phi.as_ref().unwrap(), ue.d2.as_ref().unwrap(), tau)?
        && inertia_certificate(&ue, ue.c_psi.as_ref().unwrap(), ue.d1.as_ref().unwrap(), tau)?;
    Ok(Check::new(
        m1 >= -tau && m2 >= -tau && cert,
        format!(
            "{} dofs, |A| = {norm:.3e}: min eig(A_SC - K) = {m1:.3e}, min eig(A_UE - A_SC) = {m2:.3e}, \
             floor {:.3e}, inertia certificates {}",
            k.nrows(),
            -tau,
            if cert { "hold" } else { "fail" }
        ),
    ))
}

/// Closed speaker-sized surface: an octagonal prism refined `levels` times
/// and projected onto an oblate spheroid standing on the plane y = 0.
pub fn speaker_mesh(levels: usize) -> Result<ControlMesh> {
    let (a, c) = (0.0694, 0.0711 / 2.0);
    let mut m = prism_mesh(8, 1.0, 1.2)?;
    for _ in 0..levels {
        m = subdivide_once(&m)?;
    }
    Ok(m.map_positions(|p| {
        let s = ((p.x / a).powi(2) + (p.y / a).powi(2) + (p.z / c).powi(2)).sqrt();
        let q = p / s;
        Vec3::new(q.x, q.z + c, -q.y)
    }))
}

struct TempDir(PathBuf);

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

fn sub_system(sys: &AssembledSystem, psi: bool, phi: bool) -> AssembledSystem {
    let mut s = sys.clone();
    if !psi {
        (s.c_psi, s.d1) = (None, None);
    }
    if !phi {
        (s.c_phi, s.d2) = (None, None);
    }
    s
}

/// Smallest Rayleigh quotient of `A_hi - A_lo` over the given vectors,
/// relative to `norm`.
fn min_rayleigh(hi: &ReducedStiffness, lo: &ReducedStiffness, vectors: &[Vec<f64>], norm: f64) -> f64 {
    vectors
        .iter()
        .map(|x| {
            let (a, b) = (hi.apply(x), lo.apply(x));
            let q: f64 = x.iter().zip(a.iter().zip(&b)).map(|(x, (a, b))| x * (a - b)).sum();
            q / (x.iter().map(|v| v * v).sum::<f64>() * norm)
        })
        .fold(f64::INFINITY, f64::min)
}

/// OBJ round trip and unelectroded modal run on a closed mesh.
pub fn closed_mesh(fast: bool) -> Result<Check> {
    let levels = if fast { 3 } else { 4 };
    let mesh = speaker_mesh(levels)?;
    let dir = TempDir(std::env::temp_dir().join(format!("shellvib-accept-{}", std::process::id())));
    fs::create_dir_all(&dir.0).map_err(|e| Error::io(&dir.0, e))?;
    obj::save_obj(dir.0.join("speaker.obj"), &mesh)?;
    let config = dir.0.join("speaker.json");
    let json = serde_json::json!({
        "mesh": {"obj": "speaker.obj"},
        "thickness": 0.002,
        "material": "barium_titanate",
        "electric": "unelectroded",
        "analysis": {"modal": {"num_modes": 10}},
        "output": {"vtk": null}
    });
    fs::write(&config, json.to_string()).map_err(|e| Error::io(&config, e))?;
    let (_, out, _) = pipeline::run(&config)?;
    let Solution::Modal(r) = &out.solution else { unreachable!("modal analysis requested") };

    let sys = &out.system;
    let el = sub_system(sys, false, false);
    let sc = sub_system(sys, false, true);
    let (k, a_sc, a_ue) = (ReducedStiffness::new(&el)?, ReducedStiffness::new(&sc)?, ReducedStiffness::new(sys)?);
    let norm = spectral_norm(sys.num_free(), |x| a_ue.apply(x), 61);
    let tau = PSD_TOL * norm;
    let cert = inertia_certificate(sys, sys.c_phi.as_ref().unwrap(), sys.d2.as_ref().unwrap(), tau)?
        && inertia_certificate(sys, sys.c_psi.as_ref().unwrap(), sys.d1.as_ref().unwrap(), tau)?;
    let mut rng = ChaCha8Rng::seed_from_u64(62);
    let mut probes = r.modes.clone();
    probes.extend((0..10).map(|_| (0..sys.num_free()).map(|_| rng.random::<f64>() - 0.5).collect()));
    let q1 = min_rayleigh(&a_sc, &k, &probes, norm);
    let q2 = min_rayleigh(&a_ue, &a_sc, &probes, norm);

    let s = &out.stats;
    let rigid = r.num_rigid();
    let ok = s.closed
        && s.elements <= 12288
        && rigid == 6
        && r.rigid.iter().take(6).all(|&x| x)
        && cert
        && q1 >= -PSD_TOL
        && q2 >= -PSD_TOL;
    let flex = r.flexible_frequencies();
    Ok(Check::new(
        ok,
        format!(
            "{} elements, {} extraordinary vertices, {} dofs: {rigid} rigid modes, first flexible {:.1} Hz; \
             inertia certificates {}, min Rayleigh quotients {q1:.2e} / {q2:.2e}",
            s.elements,
            s.extraordinary_vertices,
            sys.num_free(),
            flex.first().copied().unwrap_or(f64::NAN),
            if cert { "hold" } else { "fail" }
        ),
    ))
}
