//! Mid-surface geometry and linearised Kirchhoff-Love strain operators.

use nalgebra::{DMatrix, Matrix2};

use crate::subd::{BasisJet, SurfaceJet};
use crate::{Error, Result, Vec3};

/// Smallest admissible area Jacobian, in m².
const MIN_JACOBIAN: f64 = 1e-14;

/// Covariant and contravariant description of the reference mid-surface at
/// one point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RefFrame {
    pub a1: Vec3,
    pub a2: Vec3,
    /// Unit normal.
    pub a3: Vec3,
    /// Area Jacobian |a1 x a2|.
    pub jacobian: f64,
    pub a11: Vec3,
    pub a12: Vec3,
    pub a22: Vec3,
    /// Covariant metric a_ab.
    pub metric: Matrix2<f64>,
    /// Contravariant metric a^ab.
    pub inv_metric: Matrix2<f64>,
    /// Contravariant vectors a^1, a^2.
    pub g1: Vec3,
    pub g2: Vec3,
}

impl RefFrame {
    pub fn tangent(&self, a: usize) -> Vec3 {
        if a == 0 {
            self.a1
        } else {
            self.a2
        }
    }

    pub fn dual(&self, a: usize) -> Vec3 {
        if a == 0 {
            self.g1
        } else {
            self.g2
        }
    }

    pub fn second(&self, a: usize, b: usize) -> Vec3 {
        match (a, b) {
            (0, 0) => self.a11,
            (1, 1) => self.a22,
            _ => self.a12,
        }
    }

    /// Curvature coefficients b_ab = a_{ab} . a3.
    pub fn curvature(&self) -> Matrix2<f64> {
        Matrix2::new(
            self.a11.dot(&self.a3),
            self.a12.dot(&self.a3),
            self.a12.dot(&self.a3),
            self.a22.dot(&self.a3),
        )
    }

    /// Material tangent directions: t1 along a1, t2 = a3 x t1.
    pub fn tangent_dirs(&self) -> (Vec3, Vec3) {
        let t1 = self.a1.normalize();
        (t1, self.a3.cross(&t1))
    }
}

pub fn reference_frame(jet: &SurfaceJet) -> Result<RefFrame> {
    let n = jet.a1.cross(&jet.a2);
    let j = n.norm();
    if !(j > MIN_JACOBIAN) {
        return Err(Error::DegenerateElement(j));
    }
    let a3 = n / j;
    let metric = Matrix2::new(
        jet.a1.dot(&jet.a1),
        jet.a1.dot(&jet.a2),
        jet.a2.dot(&jet.a1),
        jet.a2.dot(&jet.a2),
    );
    let det = metric[(0, 0)] * metric[(1, 1)] - metric[(0, 1)] * metric[(1, 0)];
    let inv_metric = Matrix2::new(metric[(1, 1)], -metric[(0, 1)], -metric[(1, 0)], metric[(0, 0)]) / det;
    let g1 = inv_metric[(0, 0)] * jet.a1 + inv_metric[(0, 1)] * jet.a2;
    let g2 = inv_metric[(1, 0)] * jet.a1 + inv_metric[(1, 1)] * jet.a2;
    Ok(RefFrame {
        a1: jet.a1,
        a2: jet.a2,
        a3,
        jacobian: j,
        a11: jet.a11,
        a12: jet.a12,
        a22: jet.a22,
        metric,
        inv_metric,
        g1,
        g2,
    })
}

/// Strain component order used throughout: (11, 22, 12), tensor shear.
pub const COMPONENTS: [(usize, usize); 3] = [(0, 0), (1, 1), (0, 1)];

/// Linear maps from nodal displacements to strains at one point.
///
/// Both matrices are `3 x 3n` for `n` basis functions; column `3 A + i`
/// belongs to displacement component `i` of control point `A`, row `r` to
/// strain component `COMPONENTS[r]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StrainOperators {
    pub membrane: DMatrix<f64>,
    pub bending: DMatrix<f64>,
}

pub fn strain_operators(frame: &RefFrame, basis: &BasisJet) -> StrainOperators {
    strain_operators_from_jet(frame, &basis.jet)
}

/// Same as [`strain_operators`] for a raw jet array (e.g. after folding
/// ghost vertices).
pub fn strain_operators_from_jet(frame: &RefFrame, jet: &[[f64; 6]]) -> StrainOperators {
    let n = jet.len();
    let mut membrane = DMatrix::zeros(3, 3 * n);
    let mut bending = DMatrix::zeros(3, 3 * n);
    let f = frame;
    let inv_j = 1.0 / f.jacobian;
    let a2x3 = f.a2.cross(&f.a3);
    let a3x1 = f.a3.cross(&f.a1);
    for (r, &(a, b)) in COMPONENTS.iter().enumerate() {
        let aab = f.second(a, b);
        let c1 = aab.cross(&f.a2) * inv_j;
        let c2 = f.a1.cross(&aab) * inv_j;
        let k = f.a3.dot(&aab) * inv_j;
        let d1 = c1 + k * a2x3;
        let d2 = c2 + k * a3x1;
        let (ta, tb) = (f.tangent(a), f.tangent(b));
        let dd = match (a, b) {
            (0, 0) => 3,
            (1, 1) => 5,
            _ => 4,
        };
        for (i, j) in jet.iter().enumerate() {
            let (n1, n2) = (j[1], j[2]);
            let (na, nb) = (j[1 + a], j[1 + b]);
            let m = 0.5 * (nb * ta + na * tb);
            let bv = -j[dd] * f.a3 + n1 * d1 + n2 * d2;
            for c in 0..3 {
                membrane[(r, 3 * i + c)] = m[c];
                bending[(r, 3 * i + c)] = bv[c];
            }
        }
    }
    StrainOperators { membrane, bending }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::testing::grid;
    use crate::mesh::{build_patches, subdivide_once, ControlMesh, RealSupport};
    use crate::subd::{eval_patch_jet, Order};
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn flat_frame() -> RefFrame {
        let jet = SurfaceJet {
            x: Vec3::zeros(),
            a1: Vec3::x(),
            a2: Vec3::y(),
            a11: Vec3::zeros(),
            a12: Vec3::zeros(),
            a22: Vec3::zeros(),
        };
        reference_frame(&jet).unwrap()
    }

    #[test]
    fn flat_plane_frame() {
        let f = flat_frame();
        assert_eq!(f.metric, Matrix2::identity());
        assert_eq!(f.jacobian, 1.0);
        assert_eq!(f.a3, Vec3::z());
    }

    #[test]
    fn frame_invariants_and_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let mut v = || Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            let jet = SurfaceJet { x: v(), a1: v(), a2: v(), a11: v(), a12: v(), a22: v() };
            let f = reference_frame(&jet).unwrap();
            assert!(f.a3.dot(&f.a1).abs() < 1e-12 && f.a3.dot(&f.a2).abs() < 1e-12);
            assert!((f.a3.norm() - 1.0).abs() < 1e-12);
            assert!((f.inv_metric * f.metric - Matrix2::identity()).norm() < 1e-10);
            assert!((f.g1.dot(&f.a1) - 1.0).abs() < 1e-9 && f.g1.dot(&f.a2).abs() < 1e-9);
            let s = 3.0;
            let scaled = SurfaceJet {
                x: s * jet.x,
                a1: s * jet.a1,
                a2: s * jet.a2,
                a11: s * jet.a11,
                a12: s * jet.a12,
                a22: s * jet.a22,
            };
            let g = reference_frame(&scaled).unwrap();
            assert!((g.jacobian - s * s * f.jacobian).abs() < 1e-12 * g.jacobian);
            assert!((g.inv_metric - f.inv_metric / (s * s)).norm() < 1e-10 * f.inv_metric.norm());
        }
    }

    #[test]
    fn degenerate_tangent_plane() {
        let jet = SurfaceJet {
            x: Vec3::zeros(),
            a1: Vec3::x(),
            a2: 2.0 * Vec3::x(),
            a11: Vec3::zeros(),
            a12: Vec3::zeros(),
            a22: Vec3::zeros(),
        };
        assert!(matches!(reference_frame(&jet), Err(Error::DegenerateElement(_))));
    }

    /// Nonlinear strains of a deformed configuration, computed from
    /// surface jets directly: alpha = (a_ab - A_ab)/2, beta = B_ab - b_ab.
    fn nonlinear_strains(reference: &SurfaceJet, current: &SurfaceJet) -> [f64; 6] {
        let n0 = reference.a1.cross(&reference.a2).normalize();
        let n1 = current.a1.cross(&current.a2).normalize();
        let mut out = [0.0; 6];
        for (r, &(a, b)) in COMPONENTS.iter().enumerate() {
            out[r] = 0.5 * (current.tangent(a).dot(&current.tangent(b)) - reference.tangent(a).dot(&reference.tangent(b)));
            out[3 + r] = reference.second(a, b).dot(&n0) - current.second(a, b).dot(&n1);
        }
        out
    }

    fn curved_patchset() -> crate::mesh::PatchSet {
        let m = subdivide_once(&crate::mesh::testing::cube())
            .unwrap()
            .map_positions(|p| Vec3::new(p.x * (1.0 + 0.2 * p.z), p.y, p.z + 0.1 * p.x * p.y));
        build_patches(&m).unwrap()
    }

    #[test]
    fn operators_match_finite_differences_of_nonlinear_strains() {
        let ps = curved_patchset();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let eps = 1e-6;
        for patch in ps.patches.iter().take(6) {
            let n = patch.control_ids.len();
            let u: Vec<Vec3> = (0..n)
                .map(|_| Vec3::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let (xi, eta) = (0.3 + 0.4 * rng.random::<f64>(), 0.2 + 0.5 * rng.random::<f64>());
            let (basis, jet) = eval_patch_jet(patch, ps.mesh.vertices(), xi, eta, Order::Second).unwrap();
            let frame = reference_frame(&jet).unwrap();
            let ops = strain_operators(&frame, &basis);
            let uvec = DVector::from_iterator(3 * n, u.iter().flat_map(|p| [p.x, p.y, p.z]));
            let lin_m = &ops.membrane * &uvec;
            let lin_b = &ops.bending * &uvec;
            let plus = basis.surface(|a| ps.mesh.vertices()[patch.control_ids[a]] + eps * u[a]);
            let minus = basis.surface(|a| ps.mesh.vertices()[patch.control_ids[a]] - eps * u[a]);
            let sp = nonlinear_strains(&jet, &plus);
            let sm = nonlinear_strains(&jet, &minus);
            let scale = lin_m.norm() + lin_b.norm();
            for r in 0..3 {
                let fd_m = (sp[r] - sm[r]) / (2.0 * eps);
                let fd_b = (sp[3 + r] - sm[3 + r]) / (2.0 * eps);
                assert!((fd_m - lin_m[r]).abs() <= 1e-5 * scale, "membrane {r}: {fd_m} vs {}", lin_m[r]);
                assert!((fd_b - lin_b[r]).abs() <= 1e-5 * scale, "bending {r}: {fd_b} vs {}", lin_b[r]);
            }
        }
    }

    #[test]
    fn rigid_motions_are_strain_free() {
        let ps = curved_patchset();
        for patch in ps.patches.iter().take(8) {
            let (basis, jet) = eval_patch_jet(patch, ps.mesh.vertices(), 0.6, 0.35, Order::Second).unwrap();
            let frame = reference_frame(&jet).unwrap();
            let ops = strain_operators(&frame, &basis);
            let c = Vec3::new(0.3, -1.2, 0.7);
            let w = Vec3::new(0.4, 0.1, -0.9);
            let pts: Vec<Vec3> = patch.control_ids.iter().map(|&i| ps.mesh.vertices()[i]).collect();
            let translation = DVector::from_iterator(pts.len() * 3, pts.iter().flat_map(|_| [c.x, c.y, c.z]));
            let rotation = DVector::from_iterator(pts.len() * 3, pts.iter().flat_map(|p| {
                let r = w.cross(p);
                [r.x, r.y, r.z]
            }));
            for v in [translation, rotation] {
                let scale = v.norm();
                assert!((&ops.membrane * &v).norm() < 1e-10 * scale);
                assert!((&ops.bending * &v).norm() < 1e-9 * scale);
            }
        }
    }

    #[test]
    fn plate_bending_of_parabolic_deflection() {
        // u_z = x^2 on a flat plate: beta_11 = -2, beta_22 = beta_12 = 0.
        let g: ControlMesh = grid(8, 8);
        let ps = build_patches(&g).unwrap();
        let (fitted, _) = crate::mesh::fit_limit_surface(&g, |_, _, _, x| Vec3::new(x.x, x.y, x.x * x.x)).unwrap();
        let patch = &ps.patches[3 * 8 + 4];
        let sup = RealSupport::new(&ps.mesh, patch);
        let (basis, jet) = eval_patch_jet(patch, ps.mesh.vertices(), 0.5, 0.5, Order::Second).unwrap();
        let folded = sup.fold_jet(&basis.jet);
        let frame = reference_frame(&jet).unwrap();
        let ops = strain_operators_from_jet(&frame, &folded);
        let u = DVector::from_iterator(
            3 * sup.len(),
            sup.vertices.iter().flat_map(|&v| [0.0, 0.0, fitted.vertices()[v].z]),
        );
        let beta = &ops.bending * &u;
        assert!((beta[0] + 2.0).abs() < 0.02, "{beta}");
        assert!(beta[1].abs() < 0.02 && beta[2].abs() < 0.02);
    }
}
