use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;

use super::{regular_jet, Order};
use crate::mesh::{gather_irregular, gather_regular_from, subdivision_stencil, ControlMesh};
use crate::{Error, Result, Vec3};

/// Deepest local subdivision used to reach a regular sub-patch.
pub const MAX_DEPTH: usize = 20;

/// Local subdivision operators of an irregular patch of one valence.
#[derive(Debug)]
pub struct IrregularTables {
    pub valence: usize,
    /// Maps the `2n + 8` ring to the ring of the extraordinary child.
    pub a: DMatrix<f64>,
    /// Maps the ring to the 16-point grids of the three regular children,
    /// in the order (1, 0), (1, 1), (0, 1) of the half-size quadrants.
    pub p: [DMatrix<f64>; 3],
}

/// Faces of the local control net around an extraordinary vertex.
fn local_faces(n: usize) -> Vec<[usize; 4]> {
    let mut faces: Vec<[usize; 4]> = (0..n)
        .map(|k| [0, 1 + 2 * k, 2 + 2 * k, 1 + 2 * ((k + 1) % n)])
        .collect();
    let m = 2 * n;
    faces.extend([
        [m, m + 1, m + 2, 1],
        [1, m + 2, m + 3, 2],
        [2, m + 3, m + 4, m + 5],
        [3, 2, m + 5, m + 6],
        [4, 3, m + 6, m + 7],
    ]);
    faces
}

impl IrregularTables {
    fn build(n: usize) -> Result<IrregularTables> {
        if n < 3 {
            return Err(Error::UnsupportedTopology(format!("interior valence {n}")));
        }
        let k = 2 * n + 8;
        let local = ControlMesh::new(vec![Vec3::zeros(); k], local_faces(n))?;
        let r = subdivision_stencil(k, local.faces(), local.topology());
        let sub = ControlMesh::new(vec![Vec3::zeros(); r.stencil.len()], r.faces.clone())?;
        let rows = |ids: &[usize]| {
            let mut m = DMatrix::zeros(ids.len(), k);
            for (i, &id) in ids.iter().enumerate() {
                for &(j, w) in &r.stencil[id] {
                    m[(i, j)] = w;
                }
            }
            m
        };
        // Children of the local face 0 are sub-faces 0..4; quadrants 1, 2, 3
        // put their corners 3, 2, 1 at the local origin.
        let child = gather_irregular(&sub, 0, 0)?;
        let a = rows(&child.control_ids);
        let p = [
            rows(&gather_regular_from(&sub, 1, 3)?.control_ids),
            rows(&gather_regular_from(&sub, 2, 2)?.control_ids),
            rows(&gather_regular_from(&sub, 3, 1)?.control_ids),
        ];
        Ok(IrregularTables { valence: n, a, p })
    }

    pub fn num_controls(&self) -> usize {
        2 * self.valence + 8
    }

    /// Basis jet at patch coordinates `(xi, eta)`.
    pub fn eval(&self, xi: f64, eta: f64, order: Order) -> Result<Vec<[f64; 6]>> {
        let k = self.num_controls();
        if xi == 0.0 && eta == 0.0 {
            if order > Order::Value {
                return Err(Error::EvCornerSingular);
            }
            return Ok(limit_mask(self.valence).into_iter().map(|w| [w, 0., 0., 0., 0., 0.]).collect());
        }
        let (mut u, mut v) = (xi, eta);
        let mut depth = 1;
        while u.max(v) < 0.5 {
            u *= 2.0;
            v *= 2.0;
            depth += 1;
            if depth > MAX_DEPTH {
                return Err(Error::NoConvergence(depth));
            }
        }
        let (q, lu, lv) = if u >= 0.5 {
            if v < 0.5 {
                (0, 2.0 * u - 1.0, 2.0 * v)
            } else {
                (1, 2.0 * u - 1.0, 2.0 * v - 1.0)
            }
        } else {
            (2, 2.0 * u, 2.0 * v - 1.0)
        };
        let reg = regular_jet(lu.clamp(0.0, 1.0), lv.clamp(0.0, 1.0))?;
        let reg = DMatrix::from_fn(16, 6, |i, c| reg[i][c]);
        let mut w = self.p[q].tr_mul(&reg);
        for _ in 1..depth {
            w = self.a.tr_mul(&w);
        }
        let s1 = (1u64 << depth) as f64;
        let s2 = s1 * s1;
        Ok((0..k)
            .map(|i| {
                [w[(i, 0)], s1 * w[(i, 1)], s1 * w[(i, 2)], s2 * w[(i, 3)], s2 * w[(i, 4)], s2 * w[(i, 5)]]
            })
            .collect())
    }
}

/// Weights giving the limit position of the extraordinary vertex.
pub fn limit_mask(n: usize) -> Vec<f64> {
    let nf = n as f64;
    let mut w = vec![0.0; 2 * n + 8];
    w[0] = nf / (nf + 5.0);
    for k in 0..n {
        w[1 + 2 * k] = 4.0 / (nf * (nf + 5.0));
        w[2 + 2 * k] = 1.0 / (nf * (nf + 5.0));
    }
    w
}

/// Shared, lazily built tables for valence `n`.
pub fn local_tables(n: usize) -> Result<Arc<IrregularTables>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, Arc<IrregularTables>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| RwLock::new(HashMap::new()));
    if let Some(t) = cache.read().expect("table cache poisoned").get(&n) {
        return Ok(t.clone());
    }
    let t = Arc::new(IrregularTables::build(n)?);
    cache
        .write()
        .expect("table cache poisoned")
        .entry(n)
        .or_insert_with(|| t.clone());
    Ok(t)
}
