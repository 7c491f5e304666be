use crate::assembly::AssembledSystem;
use crate::sparse::{nested_dissection, CsrMatrix, Ldl};
use crate::{Error, Result, Vec3};

/// Pivots below this fraction of the (unit) scaled diagonal count as zero.
const PIVOT_TOL: f64 = 1e-13;

/// LDL^T of a symmetrically scaled matrix `S A S` with `S = |diag A|^-1/2`.
#[derive(Clone, Debug)]
pub struct SymFactor {
    ldl: Ldl,
    scale: Vec<f64>,
}

impl SymFactor {
    /// Factorises `a` with a nested-dissection ordering over the geometric
    /// nodes `node_of[dof]` placed at `coords`.
    pub fn new(a: &CsrMatrix, node_of: &[usize], coords: &[Vec3]) -> Result<SymFactor> {
        let scale: Vec<f64> = a
            .diagonal()
            .iter()
            .map(|&d| if d != 0.0 { 1.0 / d.abs().sqrt() } else { 1.0 })
            .collect();
        let mut scaled = a.clone();
        for i in 0..scaled.nrows() {
            let start = scaled.indptr()[i];
            let end = scaled.indptr()[i + 1];
            let cols: Vec<usize> = scaled.indices()[start..end].to_vec();
            let values = scaled.values_mut();
            for (p, j) in (start..end).zip(cols) {
                values[p] *= scale[i] * scale[j];
            }
        }
        let perm = nested_dissection(&scaled, node_of, coords);
        let ldl = Ldl::factor(&scaled, perm, PIVOT_TOL)?;
        Ok(SymFactor { ldl, scale })
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }

    pub fn inertia(&self) -> (usize, usize) {
        self.ldl.inertia()
    }

    pub fn factor_nnz(&self) -> usize {
        self.ldl.factor_nnz()
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x: Vec<f64> = b.iter().zip(&self.scale).map(|(b, s)| b * s).collect();
        self.ldl.solve_in_place(&mut x);
        for (x, s) in x.iter_mut().zip(&self.scale) {
            *x *= s;
        }
        x
    }
}

/// Factor of a dielectric block, which must be positive definite.
pub(crate) fn factor_dielectric(d: &CsrMatrix, coords: &[Vec3]) -> Result<SymFactor> {
    let node_of: Vec<usize> = (0..d.nrows()).collect();
    let f = SymFactor::new(d, &node_of, coords).map_err(|e| match e {
        Error::SingularStiffness { .. } => Error::SingularDielectric { pivot: 0, value: 0.0 },
        other => other,
    })?;
    if let Some((i, &v)) = f.ldl.pivots().iter().enumerate().find(|(_, &v)| v <= 0.0) {
        return Err(Error::SingularDielectric { pivot: i, value: v });
    }
    Ok(f)
}

/// Solver for `(A + sigma M) x = b` where `A` is the Schur complement of
/// the electric unknowns. The electric unknowns are kept in a
/// quasi-definite augmented matrix
///
/// ```text
/// [ K + sigma M   C_psi   C_phi ]
/// [ C_psi^T       -D1     0     ]
/// [ C_phi^T       0       -D2   ]
/// ```
///
/// whose LDL^T factorisation exists for any symmetric ordering.
#[derive(Clone, Debug)]
pub struct ShiftedSolver {
    factor: SymFactor,
    n_u: usize,
}

impl ShiftedSolver {
    pub fn new(sys: &AssembledSystem, sigma: f64) -> Result<ShiftedSolver> {
        let n_u = sys.num_free();
        let nv = sys.n_vertices;
        let mut blocks: Vec<(&CsrMatrix, &CsrMatrix)> = Vec::new();
        if let (Some(c), Some(d)) = (&sys.c_psi, &sys.d1) {
            blocks.push((c, d));
        }
        if let (Some(c), Some(d)) = (&sys.c_phi, &sys.d2) {
            blocks.push((c, d));
        }
        let mut node_of = sys.node_of_free();
        let factor = if blocks.is_empty() && sigma == 0.0 {
            SymFactor::new(&sys.stiffness, &node_of, &sys.coords)?
        } else {
            let n = n_u + blocks.len() * nv;
            let mut t: Vec<(usize, usize, f64)> = Vec::new();
            let shifted = if sigma != 0.0 {
                CsrMatrix::linear_combination(1.0, &sys.stiffness, sigma, &sys.mass)
            } else {
                sys.stiffness.clone()
            };
            push_block(&mut t, &shifted, 0, 0, 1.0);
            for (k, (c, d)) in blocks.iter().enumerate() {
                let off = n_u + k * nv;
                push_block(&mut t, c, 0, off, 1.0);
                push_block(&mut t, &c.transpose(), off, 0, 1.0);
                push_block(&mut t, d, off, off, -1.0);
                node_of.extend(0..nv);
            }
            SymFactor::new(&CsrMatrix::from_triplets(n, n, &t), &node_of, &sys.coords)?
        };
        Ok(ShiftedSolver { factor, n_u })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = b.to_vec();
        rhs.resize(self.factor.dim(), 0.0);
        let mut x = self.factor.solve(&rhs);
        x.truncate(self.n_u);
        x
    }

    pub fn factor_nnz(&self) -> usize {
        self.factor.factor_nnz()
    }
}

fn push_block(t: &mut Vec<(usize, usize, f64)>, m: &CsrMatrix, r0: usize, c0: usize, s: f64) {
    for i in 0..m.nrows() {
        let (cols, vals) = m.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            t.push((r0 + i, c0 + j, s * v));
        }
    }
}
