//! Sparse matrices and direct/iterative solvers.

mod csr;
mod ldl;
mod ordering;

pub use csr::CsrMatrix;
pub use ldl::Ldl;
pub use ordering::{invert, nested_dissection};

/// Jacobi-preconditioned conjugate gradients for a symmetric positive
/// definite `a`. Returns the solution and the final relative residual.
pub fn pcg(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, rtol: f64, max_iter: usize) -> (Vec<f64>, f64) {
    let n = b.len();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let mut x = x0.map_or_else(|| vec![0.0; n], |x| x.to_vec());
    let ax = a.mul_vec(&x);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    let bnorm = dot(b, b).sqrt();
    if bnorm == 0.0 {
        return (vec![0.0; n], 0.0);
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut q = vec![0.0; n];
    let mut rel = dot(&r, &r).sqrt() / bnorm;
    for _ in 0..max_iter {
        if rel <= rtol {
            break;
        }
        a.mul_vec_into(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        rel = dot(&r, &r).sqrt() / bnorm;
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    (x, rel)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cg_solves_laplacian() {
        let n = 50;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(n, n, &t);
        let b = vec![1.0; n];
        let (x, rel) = pcg(&a, &b, None, 1e-12, 500);
        assert!(rel < 1e-12);
        let r = a.mul_vec(&x);
        for v in r {
            assert!((v - 1.0).abs() < 1e-9);
        }
    }
}
