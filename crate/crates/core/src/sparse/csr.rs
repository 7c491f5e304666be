use nalgebra::DMatrix;

/// Compressed sparse row matrix with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CsrMatrix { nrows, ncols, indptr: vec![0; nrows + 1], indices: Vec::new(), values: Vec::new() }
    }

    /// Allocates the given sparsity pattern with zero values. Each row's
    /// column list is sorted and deduplicated.
    pub fn from_pattern(nrows: usize, ncols: usize, mut rows: Vec<Vec<usize>>) -> Self {
        assert_eq!(rows.len(), nrows);
        let mut indptr = Vec::with_capacity(nrows + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            debug_assert!(r.last().is_none_or(|&c| c < ncols));
            indices.extend_from_slice(r);
            indptr.push(indices.len());
        }
        let values = vec![0.0; indices.len()];
        CsrMatrix { nrows, ncols, indptr, indices, values }
    }

    /// Builds a matrix from (row, col, value) triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut rows = vec![Vec::new(); nrows];
        for &(i, j, _) in triplets {
            rows[i].push(j);
        }
        let mut m = Self::from_pattern(nrows, ncols, rows);
        for &(i, j, v) in triplets {
            m.add_at(i, j, v);
        }
        m
    }

    pub fn from_dense(d: &DMatrix<f64>, drop_tol: f64) -> Self {
        let mut t = Vec::new();
        for i in 0..d.nrows() {
            for j in 0..d.ncols() {
                if d[(i, j)].abs() > drop_tol {
                    t.push((i, j, d[(i, j)]));
                }
            }
        }
        Self::from_triplets(d.nrows(), d.ncols(), &t)
    }

    pub fn identity(n: usize) -> Self {
        let t: Vec<_> = (0..n).map(|i| (i, i, 1.0)).collect();
        Self::from_triplets(n, n, &t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.indptr[i]..self.indptr[i + 1];
        (&self.indices[r.clone()], &self.values[r])
    }

    fn position(&self, i: usize, j: usize) -> Option<usize> {
        let (cols, _) = self.row(i);
        cols.binary_search(&j).ok().map(|k| self.indptr[i] + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds `v` to an entry that must exist in the pattern.
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside sparsity pattern"));
        self.values[k] += v;
    }

    /// Adds `v` if the entry exists; returns whether it did.
    pub fn try_add_at(&mut self, i: usize, j: usize, v: f64) -> bool {
        match self.position(i, j) {
            Some(k) => {
                self.values[k] += v;
                true
            }
            None => false,
        }
    }

    /// `y = A x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.ncols);
        for (i, yi) in y.iter_mut().enumerate().take(self.nrows) {
            let (cols, vals) = self.row(i);
            *yi = cols.iter().zip(vals).map(|(&j, &a)| a * x[j]).sum();
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `y = A^T x`.
    pub fn tr_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&j, &a) in cols.iter().zip(vals) {
                y[j] += a * xi;
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &j in &self.indices {
            counts[j + 1] += 1;
        }
        for j in 0..self.ncols {
            counts[j + 1] += counts[j];
        }
        let indptr = counts.clone();
        let mut next = counts;
        let mut indices = vec![0; self.nnz()];
        let mut values = vec![0.0; self.nnz()];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                let k = next[j];
                indices[k] = i;
                values[k] = v;
                next[j] += 1;
            }
        }
        CsrMatrix { nrows: self.ncols, ncols: self.nrows, indptr, indices, values }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn scale(&mut self, s: f64) {
        for v in &mut self.values {
            *v *= s;
        }
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        let mut m = self.clone();
        m.scale(s);
        m
    }

    /// `a A + b B` for matrices of the same shape.
    pub fn linear_combination(a: f64, x: &CsrMatrix, b: f64, y: &CsrMatrix) -> CsrMatrix {
        assert_eq!((x.nrows, x.ncols), (y.nrows, y.ncols));
        let mut t = Vec::with_capacity(x.nnz() + y.nnz());
        for i in 0..x.nrows {
            let (c, v) = x.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &w)| (i, j, a * w)));
            let (c, v) = y.row(i);
            t.extend(c.iter().zip(v).map(|(&j, &w)| (i, j, b * w)));
        }
        CsrMatrix::from_triplets(x.nrows, x.ncols, &t)
    }

    /// Keeps rows `rows` and columns `cols` (in the given orders).
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> CsrMatrix {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (k, &c) in cols.iter().enumerate() {
            col_map[c] = k;
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        indptr.push(0);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut buf: Vec<(usize, f64)> = Vec::new();
        for &r in rows {
            let (c, v) = self.row(r);
            buf.clear();
            buf.extend(
                c.iter()
                    .zip(v)
                    .filter(|(&j, _)| col_map[j] != usize::MAX)
                    .map(|(&j, &w)| (col_map[j], w)),
            );
            buf.sort_unstable_by_key(|p| p.0);
            for &(j, w) in &buf {
                indices.push(j);
                values.push(w);
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: rows.len(), ncols: cols.len(), indptr, indices, values }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest |A_ij - A_ji|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                worst = worst.max((a - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Replaces the matrix with (A + A^T) / 2. The pattern must be symmetric.
    pub fn symmetrize(&mut self) {
        let t = self.transpose();
        if t.indices == self.indices && t.indptr == self.indptr {
            for (a, b) in self.values.iter_mut().zip(&t.values) {
                *a = 0.5 * (*a + b);
            }
        } else {
            *self = CsrMatrix::linear_combination(0.5, self, 0.5, &t);
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            let (c, v) = self.row(i);
            for (&j, &a) in c.iter().zip(v) {
                d[(i, j)] += a;
            }
        }
        d
    }

    /// x^T A y.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        (0..self.nrows)
            .map(|i| {
                let (c, v) = self.row(i);
                x[i] * c.iter().zip(v).map(|(&j, &a)| a * y[j]).sum::<f64>()
            })
            .sum()
    }

    /// Sparse product `A B`.
    pub fn mul(&self, b: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, b.nrows);
        let mut acc = vec![0.0; b.ncols];
        let mut mark = vec![usize::MAX; b.ncols];
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut cols: Vec<usize> = Vec::new();
        for i in 0..self.nrows {
            cols.clear();
            let (ca, va) = self.row(i);
            for (&k, &a) in ca.iter().zip(va) {
                let (cb, vb) = b.row(k);
                for (&j, &w) in cb.iter().zip(vb) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        cols.push(j);
                    }
                    acc[j] += a * w;
                }
            }
            cols.sort_unstable();
            for &j in &cols {
                indices.push(j);
                values.push(acc[j]);
            }
            indptr.push(indices.len());
        }
        CsrMatrix { nrows: self.nrows, ncols: b.ncols, indptr, indices, values }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates() {
        let m = CsrMatrix::from_triplets(2, 3, &[(0, 1, 1.0), (0, 1, 2.0), (1, 2, -1.0)]);
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 2), -1.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn transpose_and_products() {
        let d = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 3.0, 0.0, -4.0]);
        let m = CsrMatrix::from_dense(&d, 0.0);
        assert_eq!(m.transpose().to_dense(), d.transpose());
        let x = [1.0, 2.0];
        assert_eq!(m.mul_vec(&x), vec![1.0, 8.0, -8.0]);
        assert_eq!(m.tr_mul_vec(&[1.0, 1.0, 1.0]), vec![3.0, -1.0]);
        assert_eq!(m.mul(&m.transpose()).to_dense(), &d * d.transpose());
        let s = m.select(&[2, 0], &[1]);
        assert_eq!(s.to_dense(), DMatrix::from_row_slice(2, 1, &[-4.0, 0.0]));
    }

    #[test]
    fn symmetrize_averages() {
        let mut m = CsrMatrix::from_triplets(2, 2, &[(0, 1, 1.0), (1, 0, 3.0), (0, 0, 1.0)]);
        assert_eq!(m.asymmetry(), 2.0);
        m.symmetrize();
        assert_eq!(m.get(0, 1), 2.0);
        assert_eq!(m.asymmetry(), 0.0);
    }
}
