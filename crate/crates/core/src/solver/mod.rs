//! Schur reduction of the electric unknowns, modal and static solves and
//! recovery of the potential fields.

mod eigen;
mod factor;

pub use eigen::{ModalOptions, RIGID_RATIO};
pub use factor::{ShiftedSolver, SymFactor};

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::assembly::{AssembledSystem, ShellModel};
use crate::sparse::CsrMatrix;
use crate::subd::{eval_patch_basis, Order};
use crate::{Error, Result, Vec3};
use eigen::{Eigenpairs, Problem};
use factor::factor_dielectric;

/// Stiffness with the electric unknowns condensed out, applied without
/// forming the dense Schur complement.
pub struct ReducedStiffness<'a> {
    sys: &'a AssembledSystem,
    psi: Option<(&'a CsrMatrix, SymFactor)>,
    phi: Option<(&'a CsrMatrix, SymFactor)>,
}

impl<'a> ReducedStiffness<'a> {
    pub fn new(sys: &'a AssembledSystem) -> Result<ReducedStiffness<'a>> {
        let pair = |c: &'a Option<CsrMatrix>, d: &Option<CsrMatrix>| -> Result<Option<(&'a CsrMatrix, SymFactor)>> {
            match (c, d) {
                (Some(c), Some(d)) => Ok(Some((c, factor_dielectric(d, &sys.coords)?))),
                _ => Ok(None),
            }
        };
        Ok(ReducedStiffness { sys, psi: pair(&sys.c_psi, &sys.d1)?, phi: pair(&sys.c_phi, &sys.d2)? })
    }

    pub fn dim(&self) -> usize {
        self.sys.num_free()
    }

    pub fn is_coupled(&self) -> bool {
        self.psi.is_some() || self.phi.is_some()
    }

    /// `A u` on free dofs.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        let mut y = self.sys.stiffness.mul_vec(u);
        for (c, d) in self.psi.iter().chain(&self.phi) {
            let q = d.solve(&c.tr_mul_vec(u));
            for (y, v) in y.iter_mut().zip(c.mul_vec(&q)) {
                *y += v;
            }
        }
        y
    }

    /// `(psi, phi) = (D1^-1 C_psi^T u, D2^-1 C_phi^T u)` for the blocks
    /// present.
    pub fn potentials(&self, u: &[f64]) -> (Option<Vec<f64>>, Option<Vec<f64>>) {
        let rec = |b: &Option<(&CsrMatrix, SymFactor)>| b.as_ref().map(|(c, d)| d.solve(&c.tr_mul_vec(u)));
        (rec(&self.psi), rec(&self.phi))
    }
}

/// Explicit Schur complement `K + C_psi D1^-1 C_psi^T + C_phi D2^-1 C_phi^T`.
/// The coupling terms are dense, so this is meant for small systems.
pub fn schur_reduce(sys: &AssembledSystem) -> Result<CsrMatrix> {
    let red = ReducedStiffness::new(sys)?;
    if !red.is_coupled() {
        return Ok(sys.stiffness.clone());
    }
    let mut a = sys.stiffness.to_dense();
    for (c, d) in red.psi.iter().chain(&red.phi) {
        let cd = c.to_dense();
        let mut z = DMatrix::zeros(cd.ncols(), cd.nrows());
        for j in 0..cd.nrows() {
            let col: Vec<f64> = cd.row(j).iter().cloned().collect();
            let s = d.solve(&col);
            z.set_column(j, &nalgebra::DVector::from_vec(s));
        }
        a += &cd * z;
    }
    let mut out = CsrMatrix::from_dense(&a, 0.0);
    out.symmetrize();
    Ok(out)
}

/// Eigen-solution of `A u = omega^2 M u`.
#[derive(Clone, Debug)]
pub struct ModalResult {
    /// omega², ascending.
    pub eigenvalues: Vec<f64>,
    /// Hz.
    pub frequencies: Vec<f64>,
    pub rigid: Vec<bool>,
    /// `|A u - lambda M u| / |lambda M u|`; rigid modes are normalised by
    /// the first flexible eigenvalue instead of their own.
    pub residuals: Vec<f64>,
    /// Mass-normalised shapes on free dofs.
    pub modes: Vec<Vec<f64>>,
    pub psi: Option<Vec<Vec<f64>>>,
    pub phi: Option<Vec<Vec<f64>>>,
    pub iterations: usize,
}

impl ModalResult {
    pub fn num_rigid(&self) -> usize {
        self.rigid.iter().filter(|&&r| r).count()
    }

    /// Frequencies of the flexible modes only.
    pub fn flexible_frequencies(&self) -> Vec<f64> {
        self.frequencies.iter().zip(&self.rigid).filter(|(_, &r)| !r).map(|(&f, _)| f).collect()
    }
}

fn frequency(lambda: f64) -> f64 {
    lambda.max(0.0).sqrt() / (2.0 * PI)
}

fn check_modes(n: usize, opts: &ModalOptions) -> Result<()> {
    if opts.num_modes == 0 || opts.num_modes > n {
        return Err(Error::InvalidArgument(format!(
            "requested {} modes from a problem with {n} free dofs",
            opts.num_modes
        )));
    }
    Ok(())
}

fn run_eigen(p: &Problem, opts: &ModalOptions) -> Result<Eigenpairs> {
    if p.n <= opts.dense_threshold {
        eigen::dense(p, opts.num_modes)
    } else {
        eigen::krylov(p, opts.num_modes, opts)
    }
}

/// Lowest `opts.num_modes` eigenpairs of the reduced system, with the
/// potential coefficients recovered per mode.
pub fn solve_modal(sys: &AssembledSystem, opts: &ModalOptions) -> Result<ModalResult> {
    let n = sys.num_free();
    check_modes(n, opts)?;
    let red = ReducedStiffness::new(sys)?;
    let apply = |x: &[f64]| red.apply(x);
    let pairs = if n <= opts.dense_threshold {
        let unused = |x: &[f64]| x.to_vec();
        run_eigen(&Problem { n, apply_a: &apply, m: &sys.mass, solve_shifted: &unused }, opts)?
    } else {
        let sigma = (2.0 * PI * opts.shift_hz).powi(2);
        let shifted = ShiftedSolver::new(sys, sigma)?;
        let solve = |b: &[f64]| shifted.solve(b);
        run_eigen(&Problem { n, apply_a: &apply, m: &sys.mass, solve_shifted: &solve }, opts)?
    };
    let mut psi = red.psi.as_ref().map(|_| Vec::new());
    let mut phi = red.phi.as_ref().map(|_| Vec::new());
    for v in &pairs.vectors {
        let (a, b) = red.potentials(v);
        if let (Some(list), Some(x)) = (&mut psi, a) {
            list.push(x);
        }
        if let (Some(list), Some(x)) = (&mut phi, b) {
            list.push(x);
        }
    }
    Ok(ModalResult {
        frequencies: pairs.values.iter().map(|&l| frequency(l)).collect(),
        eigenvalues: pairs.values,
        rigid: pairs.rigid,
        residuals: pairs.residuals,
        modes: pairs.vectors,
        psi,
        phi,
        iterations: pairs.iterations,
    })
}

/// Lowest eigenpairs of explicit matrices `A u = lambda M u`.
pub fn solve_modal_matrices(a: &CsrMatrix, m: &CsrMatrix, opts: &ModalOptions) -> Result<ModalResult> {
    let n = a.nrows();
    check_modes(n, opts)?;
    let apply = |x: &[f64]| a.mul_vec(x);
    let pairs = if n <= opts.dense_threshold {
        let unused = |x: &[f64]| x.to_vec();
        run_eigen(&Problem { n, apply_a: &apply, m, solve_shifted: &unused }, opts)?
    } else {
        let sigma = (2.0 * PI * opts.shift_hz).powi(2);
        let shifted = CsrMatrix::linear_combination(1.0, a, sigma, m);
        let node_of: Vec<usize> = (0..n).collect();
        let coords: Vec<Vec3> = (0..n).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect();
        let f = SymFactor::new(&shifted, &node_of, &coords)?;
        let solve = |b: &[f64]| f.solve(b);
        run_eigen(&Problem { n, apply_a: &apply, m, solve_shifted: &solve }, opts)?
    };
    Ok(ModalResult {
        frequencies: pairs.values.iter().map(|&l| frequency(l)).collect(),
        eigenvalues: pairs.values,
        rigid: pairs.rigid,
        residuals: pairs.residuals,
        modes: pairs.vectors,
        psi: None,
        phi: None,
        iterations: pairs.iterations,
    })
}

/// Static solution on free dofs plus recovered potentials.
#[derive(Clone, Debug)]
pub struct StaticResult {
    pub displacement: Vec<f64>,
    pub psi: Option<Vec<f64>>,
    pub phi: Option<Vec<f64>>,
}

/// Solves `A u = rhs` on the free dofs of a constrained system.
pub fn solve_static(sys: &AssembledSystem, rhs: &[f64]) -> Result<StaticResult> {
    let n = sys.num_free();
    if rhs.len() != n {
        return Err(Error::InvalidArgument(format!("load has {} entries for {n} free dofs", rhs.len())));
    }
    let red = ReducedStiffness::new(sys)?;
    let u = if rhs.iter().all(|&v| v == 0.0) {
        vec![0.0; n]
    } else {
        let solver = ShiftedSolver::new(sys, 0.0)?;
        let mut u = solver.solve(rhs);
        // One step of iterative refinement.
        let au = red.apply(&u);
        let r: Vec<f64> = rhs.iter().zip(&au).map(|(b, a)| b - a).collect();
        for (u, d) in u.iter_mut().zip(solver.solve(&r)) {
            *u += d;
        }
        u
    };
    let (psi, phi) = red.potentials(&u);
    Ok(StaticResult { displacement: u, psi, phi })
}

/// Potential coefficients `(psi, phi)` belonging to a displacement on free
/// dofs; absent blocks give `None`.
pub fn recover_potentials(sys: &AssembledSystem, u: &[f64]) -> Result<(Option<Vec<f64>>, Option<Vec<f64>>)> {
    Ok(ReducedStiffness::new(sys)?.potentials(u))
}

/// Evaluates a per-vertex field with `D` components on the limit surface
/// of element `face` at face coordinates `(u, v)`.
pub fn field_at<const D: usize>(
    model: &ShellModel,
    face: usize,
    u: f64,
    v: f64,
    value: impl Fn(usize) -> [f64; D],
) -> Result<[f64; D]> {
    let patch = model
        .patches
        .patches
        .get(face)
        .ok_or_else(|| Error::InvalidArgument(format!("element {face} does not exist")))?;
    let support = &model.supports()[face];
    let (x, y) = patch.to_patch_coords(u, v);
    let basis = eval_patch_basis(patch, x, y, Order::Value)?;
    let mut out = [0.0; D];
    for (r, j) in support.fold_jet(&basis.jet).iter().enumerate() {
        let val = value(support.vertices[r]);
        for k in 0..D {
            out[k] += j[0] * val[k];
        }
    }
    Ok(out)
}

/// Displacement on the limit surface from a full dof vector `3 v + i`.
pub fn displacement_at(model: &ShellModel, u_full: &[f64], face: usize, u: f64, v: f64) -> Result<Vec3> {
    let d = field_at(model, face, u, v, |a| [u_full[3 * a], u_full[3 * a + 1], u_full[3 * a + 2]])?;
    Ok(Vec3::new(d[0], d[1], d[2]))
}

/// Limit-surface position.
pub fn position_at(model: &ShellModel, face: usize, u: f64, v: f64) -> Result<Vec3> {
    let pos = model.mesh().vertices();
    let d = field_at(model, face, u, v, |a| [pos[a].x, pos[a].y, pos[a].z])?;
    Ok(Vec3::new(d[0], d[1], d[2]))
}
