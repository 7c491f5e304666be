//! Constitutive data: crystal-frame constants, transformation to the shell's
//! curvilinear frame and thin-shell stress relaxation.

use nalgebra::{Matrix2, Matrix3, Vector3};

use crate::shell::RefFrame;
use crate::{Error, Result, Vec3};

/// Material constants in the crystal frame. Voigt order is
/// (11, 22, 33, 23, 13, 12); the third crystal axis is the poling direction
/// and is aligned with the shell normal.
#[derive(Clone, Debug, PartialEq)]
pub enum MaterialSpec {
    Isotropic {
        /// Pa.
        young: f64,
        poisson: f64,
        /// kg/m³.
        density: f64,
    },
    Piezo {
        /// Elastic constants, Pa.
        c: [[f64; 6]; 6],
        /// Piezoelectric stress constants e_{k,J}, C/m².
        e: [[f64; 6]; 3],
        /// Dielectric permittivity, C²/(N m²).
        kappa: [[f64; 3]; 3],
        density: f64,
    },
}

/// Full 3D tensors derived from a Voigt description.
#[derive(Clone, Debug, PartialEq)]
pub struct CrystalTensors {
    pub c: [[[[f64; 3]; 3]; 3]; 3],
    pub e: [[[f64; 3]; 3]; 3],
    pub kappa: [[f64; 3]; 3],
}

/// In-plane moduli after transformation and relaxation of the normal stress.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelaxedModuli {
    /// Ĉ^{abcd}.
    pub c: [[[[f64; 2]; 2]; 2]; 2],
    /// ê^{3bc}.
    pub e: Matrix2<f64>,
    /// κ̂^{ab}.
    pub kappa: Matrix2<f64>,
    /// κ̂^{33}.
    pub kappa33: f64,
}

const VOIGT: [[usize; 3]; 3] = [[0, 5, 4], [5, 1, 3], [4, 3, 2]];

impl MaterialSpec {
    pub fn density(&self) -> f64 {
        match self {
            MaterialSpec::Isotropic { density, .. } | MaterialSpec::Piezo { density, .. } => *density,
        }
    }

    pub fn is_piezo(&self) -> bool {
        matches!(self, MaterialSpec::Piezo { .. })
    }

    /// Barium titanate (hexagonal 6mm) with thickness poling.
    ///
    /// C44 = C55 only enters transverse shear and is not used by the
    /// Kirchhoff-Love model; a nominal 43 GPa is stored.
    pub fn barium_titanate() -> MaterialSpec {
        let gpa = 1e9;
        let (c11, c12, c13, c33, c44, c66) = (166.0 * gpa, 77.0 * gpa, 78.0 * gpa, 162.0 * gpa, 43.0 * gpa, 45.0 * gpa);
        let c = [
            [c11, c12, c13, 0.0, 0.0, 0.0],
            [c12, c11, c13, 0.0, 0.0, 0.0],
            [c13, c13, c33, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, c44, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, c44, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, c66],
        ];
        let e = [
            [0.0; 6],
            [0.0; 6],
            [-4.4, -4.4, 18.6, 0.0, 0.0, 0.0],
        ];
        let kappa = [[11.2e-9, 0.0, 0.0], [0.0, 11.2e-9, 0.0], [0.0, 0.0, 12.6e-9]];
        MaterialSpec::Piezo { c, e, kappa, density: 5800.0 }
    }

    /// Validates physical admissibility.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("material: {m}")));
        if !(self.density() > 0.0) {
            return bad("density must be positive");
        }
        match self {
            MaterialSpec::Isotropic { young, poisson, .. } => {
                if !(*young > 0.0) {
                    return bad("Young's modulus must be positive");
                }
                if !(0.0..0.5).contains(poisson) {
                    return bad("Poisson ratio must lie in [0, 0.5)");
                }
            }
            MaterialSpec::Piezo { c, kappa, .. } => {
                let cm = nalgebra::Matrix6::from_fn(|i, j| c[i][j]);
                if (cm - cm.transpose()).norm() > 1e-9 * cm.norm() || cm.cholesky().is_none() {
                    return bad("elastic matrix must be symmetric positive definite");
                }
                let k = Matrix3::from_fn(|i, j| kappa[i][j]);
                if (k - k.transpose()).norm() > 1e-9 * k.norm() || k.cholesky().is_none() {
                    return bad("permittivity must be symmetric positive definite");
                }
            }
        }
        Ok(())
    }

    /// Full crystal-frame tensors with tensor (not engineering) shear.
    pub fn tensors(&self) -> CrystalTensors {
        match self {
            MaterialSpec::Isotropic { young, poisson, .. } => {
                let (e, nu) = (*young, *poisson);
                let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
                let mu = e / (2.0 * (1.0 + nu));
                let d = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
                let mut c = [[[[0.0; 3]; 3]; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            for l in 0..3 {
                                c[i][j][k][l] = lambda * d(i, j) * d(k, l) + mu * (d(i, k) * d(j, l) + d(i, l) * d(j, k));
                            }
                        }
                    }
                }
                CrystalTensors { c, e: [[[0.0; 3]; 3]; 3], kappa: [[0.0; 3]; 3] }
            }
            MaterialSpec::Piezo { c: cv, e: ev, kappa, .. } => {
                let mut c = [[[[0.0; 3]; 3]; 3]; 3];
                let mut e = [[[0.0; 3]; 3]; 3];
                for i in 0..3 {
                    for j in 0..3 {
                        for k in 0..3 {
                            e[k][i][j] = ev[k][VOIGT[i][j]];
                            for l in 0..3 {
                                c[i][j][k][l] = cv[VOIGT[i][j]][VOIGT[k][l]];
                            }
                        }
                    }
                }
                CrystalTensors { c, e, kappa: *kappa }
            }
        }
    }
}

/// Transforms crystal tensors to contravariant shell components with
/// `T^i_m = g^i . t_m` (g^3 = t3 = a3) and relaxes the normal stress.
///
/// Tangential piezoelectric coefficients e^{abc} are dropped: with poling
/// along the normal only the thickness field couples to in-plane strain.
pub fn transform_and_relax(spec: &MaterialSpec, frame: &RefFrame, t1: Vec3, t2: Vec3) -> Result<RelaxedModuli> {
    transform_tensors_and_relax(&spec.tensors(), frame, t1, t2)
}

pub fn transform_tensors_and_relax(t: &CrystalTensors, frame: &RefFrame, t1: Vec3, t2: Vec3) -> Result<RelaxedModuli> {
    let tm = [
        [frame.g1.dot(&t1), frame.g1.dot(&t2), 0.0],
        [frame.g2.dot(&t1), frame.g2.dot(&t2), 0.0],
        [0.0, 0.0, 1.0],
    ];
    let c = transform4(&t.c, &tm);
    let e = transform3(&t.e, &tm);
    let kappa = transform2(&t.kappa, &tm);

    let c3333 = c[2][2][2][2];
    // Crystal-frame constants: transformed in-plane components carry the
    // metric and are not comparable with C3333.
    let scale = (0..3).map(|i| t.c[i][i][i][i].abs()).fold(0.0, f64::max);
    if !(c3333 > 1e-12 * scale) {
        return Err(Error::IllConditionedRelaxation(c3333));
    }
    let mut out = RelaxedModuli {
        c: [[[[0.0; 2]; 2]; 2]; 2],
        e: Matrix2::zeros(),
        kappa: Matrix2::zeros(),
        kappa33: kappa[2][2] + e[2][2][2] * e[2][2][2] / c3333,
    };
    for a in 0..2 {
        for b in 0..2 {
            out.e[(a, b)] = e[2][a][b] - e[2][2][2] * c[2][2][a][b] / c3333;
            out.kappa[(a, b)] = kappa[a][b] + e[a][2][2] * e[b][2][2] / c3333;
            for cc in 0..2 {
                for d in 0..2 {
                    out.c[a][b][cc][d] = c[a][b][cc][d] - c[a][b][2][2] * c[2][2][cc][d] / c3333;
                }
            }
        }
    }
    Ok(out)
}

fn transform4(c: &[[[[f64; 3]; 3]; 3]; 3], t: &[[f64; 3]; 3]) -> [[[[f64; 3]; 3]; 3]; 3] {
    // Contract one index at a time.
    let mut a = *c;
    for slot in 0..4 {
        let mut b = [[[[0.0; 3]; 3]; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let idx = [i, j, k, l];
                        let mut s = 0.0;
                        for m in 0..3 {
                            let tv = t[idx[slot]][m];
                            if tv == 0.0 {
                                continue;
                            }
                            let mut src = idx;
                            src[slot] = m;
                            s += tv * a[src[0]][src[1]][src[2]][src[3]];
                        }
                        b[i][j][k][l] = s;
                    }
                }
            }
        }
        a = b;
    }
    a
}

fn transform3(e: &[[[f64; 3]; 3]; 3], t: &[[f64; 3]; 3]) -> [[[f64; 3]; 3]; 3] {
    let mut out = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    for m in 0..3 {
                        for n in 0..3 {
                            s += e[l][m][n] * t[k][l] * t[i][m] * t[j][n];
                        }
                    }
                }
                out[k][i][j] = s;
            }
        }
    }
    out
}

fn transform2(k: &[[f64; 3]; 3], t: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for a in 0..3 {
                for b in 0..3 {
                    s += k[a][b] * t[i][a] * t[j][b];
                }
            }
            out[i][j] = s;
        }
    }
    out
}

/// H^{abcd} = nu a^ab a^cd + (1 - nu)/2 (a^ac a^bd + a^ad a^bc).
pub fn isotropic_h(frame: &RefFrame, nu: f64) -> [[[[f64; 2]; 2]; 2]; 2] {
    let g = &frame.inv_metric;
    let mut h = [[[[0.0; 2]; 2]; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for d in 0..2 {
                    h[a][b][c][d] = nu * g[(a, b)] * g[(c, d)] + 0.5 * (1.0 - nu) * (g[(a, c)] * g[(b, d)] + g[(a, d)] * g[(b, c)]);
                }
            }
        }
    }
    h
}

/// 3x3 form of an in-plane fourth-order tensor acting on strain vectors
/// (11, 22, 12) with tensor shear, so that `s^T D s = S:C:S`.
pub fn strain_matrix(c: &[[[[f64; 2]; 2]; 2]; 2]) -> Matrix3<f64> {
    let idx = [(0, 0), (1, 1), (0, 1)];
    let w = [1.0, 1.0, 2.0];
    Matrix3::from_fn(|r, s| {
        let (a, b) = idx[r];
        let (cc, d) = idx[s];
        w[r] * w[s] * c[a][b][cc][d]
    })
}

/// Coupling vector for `e:S` on strain vectors (11, 22, 12).
pub fn coupling_vector(e: &Matrix2<f64>) -> Vector3<f64> {
    Vector3::new(e[(0, 0)], e[(1, 1)], e[(0, 1)] + e[(1, 0)])
}
