use super::ordering::invert;
use super::CsrMatrix;
use crate::{Error, Result};

const NONE: usize = usize::MAX;

/// Sparse `P A P^T = L D L^T` factorisation of a symmetric matrix stored
/// with both triangles.
///
/// Up-looking algorithm driven by the elimination tree. Works for
/// indefinite but strongly factorisable (e.g. quasi-definite) matrices; no
/// pivoting is performed beyond the supplied permutation.
#[derive(Clone, Debug)]
pub struct Ldl {
    n: usize,
    perm: Vec<usize>,
    /// Column pointers of the strictly lower factor.
    lp: Vec<usize>,
    li: Vec<u32>,
    lx: Vec<f64>,
    d: Vec<f64>,
}

impl Ldl {
    /// Factorises `a` with ordering `perm` (`perm[new] = old`). A pivot with
    /// magnitude below `pivot_tol` times the largest diagonal entry is
    /// treated as singular.
    pub fn factor(a: &CsrMatrix, perm: Vec<usize>, pivot_tol: f64) -> Result<Ldl> {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        assert_eq!(perm.len(), n);
        let pinv = invert(&perm);
        let scale = a.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));

        // Elimination tree and column counts.
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            flag[k] = k;
            for &j in a.row(perm[k]).0 {
                let mut i = pinv[j];
                if i >= k {
                    continue;
                }
                while flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let total = lp[n];
        if n > u32::MAX as usize {
            return Err(Error::Assembly(format!("{n} unknowns exceed the factor index range")));
        }

        let mut li = vec![0u32; total];
        let mut lx = vec![0.0; total];
        let mut d = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut pattern = vec![0usize; n];
        lnz.iter_mut().for_each(|c| *c = 0);
        flag.iter_mut().for_each(|f| *f = NONE);
        let mut tiny = 0;
        for k in 0..n {
            y[k] = 0.0;
            let mut top = n;
            flag[k] = k;
            let (cols, vals) = a.row(perm[k]);
            for (&j, &v) in cols.iter().zip(vals) {
                let mut i = pinv[j];
                if i > k {
                    continue;
                }
                y[i] += v;
                let mut len = 0;
                while flag[i] != k {
                    pattern[len] = i;
                    len += 1;
                    flag[i] = k;
                    i = parent[i];
                }
                while len > 0 {
                    top -= 1;
                    len -= 1;
                    pattern[top] = pattern[len];
                }
            }
            let mut dk = y[k];
            y[k] = 0.0;
            for &i in &pattern[top..n] {
                let yi = y[i];
                y[i] = 0.0;
                let start = lp[i];
                let end = start + lnz[i];
                for p in start..end {
                    y[li[p] as usize] -= lx[p] * yi;
                }
                let l = yi / d[i];
                dk -= l * yi;
                li[end] = k as u32;
                lx[end] = l;
                lnz[i] += 1;
            }
            if !dk.is_finite() || dk.abs() <= pivot_tol * scale {
                tiny += 1;
                if dk == 0.0 || !dk.is_finite() {
                    return Err(Error::SingularStiffness { null_space: tiny });
                }
            }
            d[k] = dk;
        }
        if tiny > 0 {
            return Err(Error::SingularStiffness { null_space: tiny });
        }
        Ok(Ldl { n, perm, lp, li, lx, d })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Nonzeros in the strictly lower factor.
    pub fn factor_nnz(&self) -> usize {
        self.lx.len()
    }

    /// Pivots of D in elimination order.
    pub fn pivots(&self) -> &[f64] {
        &self.d
    }

    /// (positive, negative) pivot counts.
    pub fn inertia(&self) -> (usize, usize) {
        let neg = self.d.iter().filter(|&&v| v < 0.0).count();
        (self.n - neg, neg)
    }

    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for j in 0..n {
            let xj = x[j];
            if xj != 0.0 {
                for p in self.lp[j]..self.lp[j + 1] {
                    x[self.li[p] as usize] -= self.lx[p] * xj;
                }
            }
        }
        for (xj, dj) in x.iter_mut().zip(&self.d) {
            *xj /= dj;
        }
        for j in (0..n).rev() {
            let mut s = x[j];
            for p in self.lp[j]..self.lp[j + 1] {
                s -= self.lx[p] * x[self.li[p] as usize];
            }
            x[j] = s;
        }
        for (k, &p) in self.perm.iter().enumerate() {
            b[p] = x[k];
        }
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}
