use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::sparse::CsrMatrix;
use crate::{Error, Result};

/// Controls for the generalized symmetric eigensolver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModalOptions {
    pub num_modes: usize,
    /// Spectral shift in Hz added for factorisation only.
    pub shift_hz: f64,
    /// Relative residual bound `|A u - lambda M u| / |lambda M u|`.
    pub tol: f64,
    pub block_size: usize,
    pub max_iterations: usize,
    /// Problems with at most this many dofs are solved densely.
    pub dense_threshold: usize,
    pub seed: u64,
}

impl Default for ModalOptions {
    fn default() -> Self {
        ModalOptions {
            num_modes: 10,
            shift_hz: 1.0,
            tol: 1e-8,
            block_size: 6,
            max_iterations: 400,
            dense_threshold: 600,
            seed: 0x5eed,
        }
    }
}

/// Frequencies below this fraction of the first flexible frequency are
/// rigid-body modes.
pub const RIGID_RATIO: f64 = 1e-3;

/// Eigenpairs with rigid flags and residuals.
#[derive(Clone, Debug)]
pub(crate) struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub rigid: Vec<bool>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

/// Problem `A x = lambda M x` given through its actions.
pub(crate) struct Problem<'a> {
    pub n: usize,
    pub apply_a: &'a dyn Fn(&[f64]) -> Vec<f64>,
    pub m: &'a CsrMatrix,
    /// Solves `(A + sigma M) x = b`.
    pub solve_shifted: &'a dyn Fn(&[f64]) -> Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * x;
    }
}

/// Rigid flags and the scale used to normalise each residual.
pub(crate) fn classify(values: &[f64]) -> (Vec<bool>, Vec<f64>) {
    let f: Vec<f64> = values.iter().map(|&l| l.max(0.0).sqrt()).collect();
    let fmax = f.iter().cloned().fold(0.0, f64::max);
    let flex = f.iter().position(|&x| x > 0.0 && x >= RIGID_RATIO * fmax);
    let rigid: Vec<bool> = match flex {
        Some(i) => f.iter().map(|&x| x < RIGID_RATIO * f[i]).collect(),
        None => vec![true; f.len()],
    };
    let flex_value = flex.map(|i| values[i]).unwrap_or(0.0);
    let scale = values
        .iter()
        .zip(&rigid)
        .map(|(&l, &r)| if r { flex_value.max(l.abs()) } else { l.abs() })
        .map(|s| if s > 0.0 { s } else { 1.0 })
        .collect();
    (rigid, scale)
}

fn residuals(values: &[f64], ax: &[Vec<f64>], mx: &[Vec<f64>]) -> (Vec<bool>, Vec<f64>) {
    let (rigid, scale) = classify(values);
    let res = values
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let mut r = ax[i].clone();
            axpy(&mut r, -l, &mx[i]);
            let d = scale[i] * norm(&mx[i]);
            if d > 0.0 {
                norm(&r) / d
            } else {
                norm(&r)
            }
        })
        .collect();
    (rigid, res)
}

/// Deterministic sign: largest-magnitude entry positive.
fn fix_sign(v: &mut [f64]) {
    let mut best = 0.0f64;
    let mut sign = 1.0;
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Dense solve via Cholesky reduction to a standard problem.
pub(crate) fn dense(p: &Problem, k: usize) -> Result<Eigenpairs> {
    let n = p.n;
    let mut a = DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = (p.apply_a)(&e);
        e[j] = 0.0;
        for i in 0..n {
            a[(i, j)] = col[i];
        }
    }
    let a = 0.5 * (&a + a.transpose());
    let m = p.m.to_dense();
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidArgument("mass matrix is not positive definite".into()))?;
    let l = chol.l();
    let linv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::InvalidArgument("mass matrix is not positive definite".into()))?;
    let c = &linv * &a * linv.transpose();
    let c = 0.5 * (&c + c.transpose());
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order[..k].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Vec::with_capacity(k);
    for &i in &order[..k] {
        let y = eig.eigenvectors.column(i).into_owned();
        let x = linv.transpose() * y;
        let mut v: Vec<f64> = x.iter().cloned().collect();
        fix_sign(&mut v);
        vectors.push(v);
    }
    let ax: Vec<Vec<f64>> = vectors.iter().map(|v| (p.apply_a)(v)).collect();
    let mx: Vec<Vec<f64>> = vectors.iter().map(|v| p.m.mul_vec(v)).collect();
    let (rigid, residuals) = residuals(&values, &ax, &mx);
    Ok(Eigenpairs { values, vectors, rigid, residuals, iterations: 1 })
}

struct Basis {
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    mv: Vec<Vec<f64>>,
    /// Projected stiffness `V^T A V`.
    h: DMatrix<f64>,
}

impl Basis {
    fn len(&self) -> usize {
        self.v.len()
    }

    /// M-orthonormalises `w` against the basis and itself and appends the
    /// surviving directions.
    fn extend(&mut self, p: &Problem, block: Vec<Vec<f64>>) -> usize {
        let mut added = 0;
        for mut w in block {
            let mut mw = p.m.mul_vec(&w);
            let initial = dot(&w, &mw).max(0.0).sqrt();
            if initial == 0.0 {
                continue;
            }
            for _ in 0..2 {
                for (v, mv) in self.v.iter().zip(&self.mv) {
                    let c = dot(&w, mv);
                    axpy(&mut w, -c, v);
                }
                mw = p.m.mul_vec(&w);
            }
            let nrm = dot(&w, &mw).max(0.0).sqrt();
            if nrm <= 1e-10 * initial {
                continue;
            }
            for x in w.iter_mut() {
                *x /= nrm;
            }
            for x in mw.iter_mut() {
                *x /= nrm;
            }
            let aw = (p.apply_a)(&w);
            let m = self.len();
            let mut h = DMatrix::zeros(m + 1, m + 1);
            h.view_mut((0, 0), (m, m)).copy_from(&self.h);
            for i in 0..m {
                let s = 0.5 * (dot(&self.v[i], &aw) + dot(&w, &self.av[i]));
                h[(i, m)] = s;
                h[(m, i)] = s;
            }
            h[(m, m)] = dot(&w, &aw);
            self.h = h;
            self.v.push(w);
            self.av.push(aw);
            self.mv.push(mw);
            added += 1;
        }
        added
    }

    fn combine(vs: &[Vec<f64>], y: &DMatrix<f64>, col: usize) -> Vec<f64> {
        let mut out = vec![0.0; vs[0].len()];
        for (i, v) in vs.iter().enumerate() {
            let c = y[(i, col)];
            if c != 0.0 {
                axpy(&mut out, c, v);
            }
        }
        out
    }
}

/// Block shift-and-invert subspace solver with full M-orthogonalisation
/// and thick restarts. Each step expands the basis by `(A + sigma M)^-1 r`
/// for the residuals `r` of the least converged wanted Ritz vectors.
pub(crate) fn krylov(p: &Problem, k: usize, opts: &ModalOptions) -> Result<Eigenpairs> {
    let n = p.n;
    let b = opts.block_size.max(1);
    let max_basis = (k + 10 * b).max(2 * k + 2 * b).min(n);
    let keep = (k + b).min(max_basis.saturating_sub(b)).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis = Basis { v: Vec::new(), av: Vec::new(), mv: Vec::new(), h: DMatrix::zeros(0, 0) };

    let start = b.max(k.min(2 * b));
    let mut block: Vec<Vec<f64>> = (0..start)
        .map(|_| {
            let r: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            (p.solve_shifted)(&p.m.mul_vec(&r))
        })
        .collect();
    let mut last_res = Vec::new();
    for iter in 1..=opts.max_iterations {
        basis.extend(p, std::mem::take(&mut block));
        let m = basis.len();
        if m < k {
            // The start block was deficient; top up with random directions.
            block = (0..k - m)
                .map(|_| {
                    let r: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
                    (p.solve_shifted)(&p.m.mul_vec(&r))
                })
                .collect();
            continue;
        }
        let eig = SymmetricEigen::new(basis.h.clone());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let y = DMatrix::from_fn(m, m, |r, c| eig.eigenvectors[(r, order[c])]);
        let theta: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

        let wanted = keep.min(m);
        let x: Vec<Vec<f64>> = (0..wanted).map(|c| Basis::combine(&basis.v, &y, c)).collect();
        let ax: Vec<Vec<f64>> = (0..k).map(|c| Basis::combine(&basis.av, &y, c)).collect();
        let mx: Vec<Vec<f64>> = (0..wanted).map(|c| Basis::combine(&basis.mv, &y, c)).collect();
        let (_, res) = residuals(&theta[..k], &ax[..k], &mx[..k]);
        last_res = res.clone();
        let mut restart = basis.len() + b > max_basis;
        if res.iter().all(|&r| r <= opts.tol) || m == n {
            // Confirm with products computed afresh, not accumulated ones.
            let fresh_ax: Vec<Vec<f64>> = x[..k].iter().map(|v| (p.apply_a)(v)).collect();
            let fresh_mx: Vec<Vec<f64>> = x[..k].iter().map(|v| p.m.mul_vec(v)).collect();
            let (rigid, res) = residuals(&theta[..k], &fresh_ax, &fresh_mx);
            last_res = res.clone();
            if res.iter().all(|&r| r <= opts.tol) {
                let mut vectors = x[..k].to_vec();
                for v in &mut vectors {
                    fix_sign(v);
                }
                return Ok(Eigenpairs { values: theta[..k].to_vec(), vectors, rigid, residuals: res, iterations: iter });
            }
            if m == n {
                break;
            }
            restart = true;
        }

        let mut pick: Vec<usize> = (0..k).filter(|&i| res[i] > opts.tol).take(b).collect();
        let mut extra = k;
        while pick.len() < b && extra < wanted {
            pick.push(extra);
            extra += 1;
        }
        // Unconverged wanted vectors are corrected by `S r` with a fresh
        // residual `r`; `S M x` would carry the same direction but lose it
        // to cancellation against `x` once the residual is small.
        block = pick
            .iter()
            .map(|&i| {
                if i < k {
                    let mut r = (p.apply_a)(&x[i]);
                    axpy(&mut r, -theta[i], &p.m.mul_vec(&x[i]));
                    (p.solve_shifted)(&r)
                } else {
                    (p.solve_shifted)(&mx[i])
                }
            })
            .collect();

        if restart {
            // Rebuild from the Ritz vectors so that rounding in the
            // accumulated products does not build up over restarts.
            basis = Basis { v: Vec::new(), av: Vec::new(), mv: Vec::new(), h: DMatrix::zeros(0, 0) };
            basis.extend(p, x);
        }
    }
    let worst = last_res.iter().cloned().fold(0.0, f64::max);
    Err(Error::EigenNoConvergence { worst_residual: worst, iterations: opts.max_iterations, residuals: last_res })
}
