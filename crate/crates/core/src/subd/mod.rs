//! Limit-surface basis functions of Catmull-Clark patches.
//!
//! Regular patches are uniform bicubic B-splines. Irregular patches are
//! evaluated by subdividing the local control net until the point falls into
//! a regular sub-patch, then chaining derivatives by powers of two.

mod irregular;

pub use irregular::{limit_mask, local_tables, IrregularTables, MAX_DEPTH};

use crate::mesh::{Patch, PatchKind};
use crate::{Error, Result, Vec3};

/// Index of each derivative inside a jet entry.
pub const N: usize = 0;
pub const D1: usize = 1;
pub const D2: usize = 2;
pub const D11: usize = 3;
pub const D12: usize = 4;
pub const D22: usize = 5;

/// How many derivatives to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Order {
    Value,
    First,
    Second,
}

/// Basis values and parametric derivatives of one patch at one point.
///
/// `jet[a]` holds `[N, N_1, N_2, N_11, N_12, N_22]` for the patch's control
/// point `a`. Derivatives beyond the requested order are zero.
#[derive(Clone, Debug, PartialEq)]
pub struct BasisJet {
    pub xi: f64,
    pub eta: f64,
    pub jet: Vec<[f64; 6]>,
}

/// Position and parametric derivatives of the surface at one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfaceJet {
    pub x: Vec3,
    pub a1: Vec3,
    pub a2: Vec3,
    pub a11: Vec3,
    pub a12: Vec3,
    pub a22: Vec3,
}

impl SurfaceJet {
    /// Second derivative vector `a_{ab}` for `a, b` in {0, 1}.
    pub fn second(&self, a: usize, b: usize) -> Vec3 {
        match (a, b) {
            (0, 0) => self.a11,
            (1, 1) => self.a22,
            _ => self.a12,
        }
    }

    pub fn tangent(&self, a: usize) -> Vec3 {
        if a == 0 {
            self.a1
        } else {
            self.a2
        }
    }
}

impl BasisJet {
    pub fn len(&self) -> usize {
        self.jet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jet.is_empty()
    }

    /// Contracts the jet with control positions in patch order.
    pub fn surface(&self, points: impl Fn(usize) -> Vec3) -> SurfaceJet {
        let mut s = [Vec3::zeros(); 6];
        for (a, j) in self.jet.iter().enumerate() {
            let p = points(a);
            for (k, acc) in s.iter_mut().enumerate() {
                *acc += j[k] * p;
            }
        }
        SurfaceJet { x: s[N], a1: s[D1], a2: s[D2], a11: s[D11], a12: s[D12], a22: s[D22] }
    }

    /// First derivative of basis `a` along parametric direction `dir`.
    pub fn d(&self, a: usize, dir: usize) -> f64 {
        self.jet[a][D1 + dir]
    }

    /// Second derivative of basis `a` along directions `i`, `j`.
    pub fn dd(&self, a: usize, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.jet[a][D11],
            (1, 1) => self.jet[a][D22],
            _ => self.jet[a][D12],
        }
    }
}

/// Uniform cubic B-spline segment: values, first and second derivatives of
/// the four basis functions at `t`.
pub fn bspline_jet_1d(t: f64) -> Result<[[f64; 4]; 3]> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::DomainError(t));
    }
    Ok(bspline_unchecked(t))
}

fn bspline_unchecked(t: f64) -> [[f64; 4]; 3] {
    let s = 1.0 - t;
    let t2 = t * t;
    let t3 = t2 * t;
    [
        [
            s * s * s / 6.0,
            (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
            (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
            t3 / 6.0,
        ],
        [-0.5 * s * s, 1.5 * t2 - 2.0 * t, -1.5 * t2 + t + 0.5, 0.5 * t2],
        [s, 3.0 * t - 2.0, -3.0 * t + 1.0, t],
    ]
}

/// Tensor-product jet of a regular patch, in grid order `j * 4 + i`.
pub fn regular_jet(xi: f64, eta: f64) -> Result<Vec<[f64; 6]>> {
    let bu = bspline_jet_1d(xi)?;
    let bv = bspline_jet_1d(eta)?;
    let mut out = vec![[0.0; 6]; 16];
    for j in 0..4 {
        for i in 0..4 {
            out[j * 4 + i] = [
                bu[0][i] * bv[0][j],
                bu[1][i] * bv[0][j],
                bu[0][i] * bv[1][j],
                bu[2][i] * bv[0][j],
                bu[1][i] * bv[1][j],
                bu[0][i] * bv[2][j],
            ];
        }
    }
    Ok(out)
}

/// Basis jet of a patch at patch coordinates `(xi, eta)`.
pub fn eval_patch_basis(patch: &Patch, xi: f64, eta: f64, order: Order) -> Result<BasisJet> {
    for t in [xi, eta] {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::DomainError(t));
        }
    }
    let jet = match patch.kind {
        PatchKind::Regular => regular_jet(xi, eta)?,
        PatchKind::Irregular { valence } => local_tables(valence)?.eval(xi, eta, order)?,
    };
    Ok(BasisJet { xi, eta, jet })
}

/// Basis and surface jet of a patch, with control positions indexed by the
/// mesh-wide vertex ids.
pub fn eval_patch_jet(
    patch: &Patch,
    positions: &[Vec3],
    xi: f64,
    eta: f64,
    order: Order,
) -> Result<(BasisJet, SurfaceJet)> {
    let basis = eval_patch_basis(patch, xi, eta, order)?;
    let surface = basis.surface(|a| positions[patch.control_ids[a]]);
    Ok((basis, surface))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_patches, subdivide_once};
    use crate::mesh::testing::{cube, grid};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn bspline_values() {
        let b = bspline_jet_1d(0.0).unwrap();
        let expect = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 0.0];
        for k in 0..4 {
            assert!((b[0][k] - expect[k]).abs() < 1e-15);
        }
        let b = bspline_jet_1d(0.5).unwrap();
        let expect = [1.0 / 48.0, 23.0 / 48.0, 23.0 / 48.0, 1.0 / 48.0];
        for k in 0..4 {
            assert!((b[0][k] - expect[k]).abs() < 1e-15);
        }
        assert!(matches!(bspline_jet_1d(1.5), Err(Error::DomainError(_))));
        assert!(matches!(bspline_jet_1d(-1e-9), Err(Error::DomainError(_))));
    }

    #[test]
    fn bspline_derivatives_match_finite_differences() {
        let h = 1e-6;
        for &t in &[0.1, 0.37, 0.5, 0.81] {
            let b = bspline_unchecked(t);
            let p = bspline_unchecked(t + h);
            let m = bspline_unchecked(t - h);
            for k in 0..4 {
                assert!(((p[0][k] - m[0][k]) / (2.0 * h) - b[1][k]).abs() < 1e-9);
                assert!(((p[1][k] - m[1][k]) / (2.0 * h) - b[2][k]).abs() < 1e-8);
            }
        }
    }

    proptest! {
        #[test]
        fn bspline_partition(t in 0.0f64..=1.0) {
            let b = bspline_jet_1d(t).unwrap();
            prop_assert!((b[0].iter().sum::<f64>() - 1.0).abs() < 1e-14);
            prop_assert!(b[1].iter().sum::<f64>().abs() < 1e-14);
            prop_assert!(b[2].iter().sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn regular_patch_on_integer_grid_is_linear() {
        let ps = build_patches(&grid(5, 5)).unwrap();
        let patch = &ps.patches[12];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let (u, v) = (rng.random::<f64>(), rng.random::<f64>());
            let (_, s) = eval_patch_jet(patch, ps.mesh.vertices(), u, v, Order::Second).unwrap();
            assert!((s.a1 - Vec3::x()).norm() < 1e-14);
            assert!((s.a2 - Vec3::y()).norm() < 1e-14);
            assert!(s.a11.norm() + s.a12.norm() + s.a22.norm() < 1e-13);
        }
    }

    #[test]
    fn constant_net_gives_constant_surface() {
        let m = subdivide_once(&cube()).unwrap();
        let ps = build_patches(&m).unwrap();
        let p = Vec3::new(0.3, -2.0, 5.0);
        let pts = vec![p; ps.mesh.vertices().len()];
        for patch in &ps.patches {
            let (_, s) = eval_patch_jet(patch, &pts, 0.2, 0.9, Order::Second).unwrap();
            assert!((s.x - p).norm() < 1e-12);
            assert!(s.a1.norm() + s.a2.norm() < 1e-11);
            assert!(s.a11.norm() + s.a12.norm() + s.a22.norm() < 1e-10);
        }
    }

    #[test]
    fn scaling_scales_surface_jet() {
        let m = subdivide_once(&cube()).unwrap();
        let ps = build_patches(&m).unwrap();
        let s = 2.5;
        let scaled: Vec<Vec3> = ps.mesh.vertices().iter().map(|p| s * p).collect();
        for patch in ps.patches.iter().take(5) {
            let (_, a) = eval_patch_jet(patch, ps.mesh.vertices(), 0.4, 0.3, Order::Second).unwrap();
            let (_, b) = eval_patch_jet(patch, &scaled, 0.4, 0.3, Order::Second).unwrap();
            for (p, q) in [(a.x, b.x), (a.a1, b.a1), (a.a2, b.a2), (a.a11, b.a11), (a.a12, b.a12), (a.a22, b.a22)] {
                assert!((s * p - q).norm() <= 1e-14 * (1.0 + q.norm()));
            }
        }
    }

    #[test]
    fn patches_agree_across_shared_edges() {
        // Position and normal continuity on a mesh with extraordinary vertices.
        let m = subdivide_once(&cube()).unwrap().map_positions(|p| {
            Vec3::new(p.x * (1.0 + 0.1 * p.y), p.y, p.z + 0.2 * p.x * p.x)
        });
        let ps = build_patches(&m).unwrap();
        let topo = ps.mesh.topology();
        let faces = ps.mesh.faces();
        let mut checked = 0;
        for (f, face) in faces.iter().enumerate() {
            for k in 0..4 {
                let (a, b) = (face[k], face[(k + 1) % 4]);
                let Some((g, kg)) = topo.half_edge(b, a) else { continue };
                for s in 1..=10 {
                    let t = s as f64 / 11.0;
                    // Edge a->b of f at parameter t equals edge b->a of g at 1 - t.
                    let (u, v) = edge_coords(k, t);
                    let (ug, vg) = edge_coords(kg, 1.0 - t);
                    let p1 = &ps.patches[f];
                    let p2 = &ps.patches[g];
                    let (x1, y1) = p1.to_patch_coords(u, v);
                    let (x2, y2) = p2.to_patch_coords(ug, vg);
                    let (_, s1) = eval_patch_jet(p1, ps.mesh.vertices(), x1, y1, Order::First).unwrap();
                    let (_, s2) = eval_patch_jet(p2, ps.mesh.vertices(), x2, y2, Order::First).unwrap();
                    assert!((s1.x - s2.x).norm() < 1e-8);
                    let n1 = s1.a1.cross(&s1.a2).normalize();
                    let n2 = s2.a1.cross(&s2.a2).normalize();
                    assert!((n1 - n2).norm() < 1e-8, "face {f} edge {k}: {n1} vs {n2}");
                    checked += 1;
                }
            }
        }
        assert_eq!(checked, 24 * 4 * 10);
    }

    /// Face-corner coordinates of a point on edge `k` (from corner k to k+1).
    fn edge_coords(k: usize, t: f64) -> (f64, f64) {
        match k {
            0 => (t, 0.0),
            1 => (1.0, t),
            2 => (1.0 - t, 1.0),
            _ => (0.0, 1.0 - t),
        }
    }

    fn check_partition(jet: &[[f64; 6]]) {
        let mut sums = [0.0; 6];
        let mut scale = [0.0f64; 6];
        for j in jet {
            for k in 0..6 {
                sums[k] += j[k];
                scale[k] = scale[k].max(j[k].abs());
            }
        }
        assert!((sums[0] - 1.0).abs() < 1e-10);
        for k in 1..6 {
            assert!(sums[k].abs() < 1e-8 * scale[k].max(1.0), "component {k}: {}", sums[k]);
        }
    }

    #[test]
    fn partition_of_unity_at_random_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let kinds = [
            PatchKind::Regular,
            PatchKind::Irregular { valence: 3 },
            PatchKind::Irregular { valence: 5 },
            PatchKind::Irregular { valence: 6 },
        ];
        for kind in kinds {
            let n = match kind {
                PatchKind::Regular => 16,
                PatchKind::Irregular { valence } => 2 * valence + 8,
            };
            let patch = Patch { face: 0, kind, start_corner: 0, control_ids: (0..n).collect() };
            for _ in 0..100 {
                let (u, v) = (rng.random::<f64>(), rng.random::<f64>());
                let b = eval_patch_basis(&patch, u, v, Order::Second).unwrap();
                check_partition(&b.jet);
            }
        }
    }
}
