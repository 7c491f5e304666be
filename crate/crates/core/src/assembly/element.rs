use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::{quadrature_rule, ElectricCondition, ShellModel};
use crate::material::{coupling_vector, isotropic_h, strain_matrix, transform_and_relax, MaterialSpec};
use crate::shell::{reference_frame, strain_operators_from_jet};
use crate::subd::{eval_patch_basis, BasisJet, Order};
use crate::Result;

/// Element contributions over the element's real support.
///
/// Local unknown `3 a + i` is displacement component `i` of
/// `vertices[a]`; scalar blocks use `a` directly. The consistent mass
/// matrix is `mass ⊗ I3`.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementMatrices {
    pub vertices: Vec<usize>,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// Displacement to linear potential coefficient ψ.
    pub c_psi: Option<DMatrix<f64>>,
    /// Displacement to quadratic potential coefficient φ.
    pub c_phi: Option<DMatrix<f64>>,
    pub d1: Option<DMatrix<f64>>,
    pub d2: Option<DMatrix<f64>>,
    pub load: DVector<f64>,
    /// Membrane load caused by a prescribed electrode voltage.
    pub voltage_load: Option<DVector<f64>>,
}

struct PointModuli {
    /// Membrane/bending constitutive matrix on (11, 22, 12) strains.
    d: Matrix3<f64>,
    coupling: Vector3<f64>,
    kappa: nalgebra::Matrix2<f64>,
    kappa33: f64,
}

fn point_moduli(material: &MaterialSpec, frame: &crate::shell::RefFrame, electric: bool) -> Result<PointModuli> {
    match material {
        MaterialSpec::Isotropic { young, poisson, .. } => {
            let h = isotropic_h(frame, *poisson);
            Ok(PointModuli {
                d: young / (1.0 - poisson * poisson) * strain_matrix(&h),
                coupling: Vector3::zeros(),
                kappa: nalgebra::Matrix2::zeros(),
                kappa33: 0.0,
            })
        }
        MaterialSpec::Piezo { .. } => {
            let (t1, t2) = frame.tangent_dirs();
            let r = transform_and_relax(material, frame, t1, t2)?;
            let coupling = if electric { coupling_vector(&r.e) } else { Vector3::zeros() };
            Ok(PointModuli { d: strain_matrix(&r.c), coupling, kappa: r.kappa, kappa33: r.kappa33 })
        }
    }
}

/// Integrates all energy terms of element `e` of the model.
pub fn element_matrices(model: &ShellModel, e: usize) -> Result<ElementMatrices> {
    element_matrices_inner(model, e).map_err(|err| err.in_element(e))
}

fn element_matrices_inner(model: &ShellModel, e: usize) -> Result<ElementMatrices> {
    let patch = &model.patches.patches[e];
    let support = &model.supports()[e];
    let positions = model.mesh().vertices();
    let n = support.len();
    let h = model.thickness;
    let rho = model.material.density();
    let electric = model.electric;
    let with_psi = electric.has_psi();
    let with_phi = electric.has_phi();

    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(3 * n, 3 * n);
    let mut c_psi = with_psi.then(|| DMatrix::zeros(3 * n, n));
    let mut c_phi = with_phi.then(|| DMatrix::zeros(3 * n, n));
    let mut d1 = with_psi.then(|| DMatrix::zeros(n, n));
    let mut d2 = with_phi.then(|| DMatrix::zeros(n, n));
    let mut load = DVector::zeros(3 * n);
    let voltage = match electric {
        ElectricCondition::Electroded { voltage } => Some(voltage),
        _ => None,
    };
    let mut voltage_load = voltage.map(|_| DVector::zeros(3 * n));
    let traction = model.areal_load + h * model.body_force;
    let bend = h.powi(3) / 12.0;

    for (xi, eta, w) in quadrature_rule(patch) {
        let basis = eval_patch_basis(patch, xi, eta, Order::Second)?;
        let folded = BasisJet { xi, eta, jet: support.fold_jet(&basis.jet) };
        let jet = folded.surface(|r| positions[support.vertices[r]]);
        let frame = reference_frame(&jet)?;
        let ops = strain_operators_from_jet(&frame, &folded.jet);
        let moduli = point_moduli(&model.material, &frame, with_psi || with_phi)?;
        let da = frame.jacobian * w;
        let nv = DVector::from_iterator(n, folded.jet.iter().map(|j| j[0]));

        mass.ger(rho * h * da, &nv, &nv, 1.0);
        let dm = &moduli.d * &ops.membrane;
        let db = &moduli.d * &ops.bending;
        stiffness.gemm_tr(h * da, &ops.membrane, &dm, 1.0);
        stiffness.gemm_tr(bend * da, &ops.bending, &db, 1.0);
        for (a, j) in folded.jet.iter().enumerate() {
            for i in 0..3 {
                load[3 * a + i] += da * traction[i] * j[0];
            }
        }

        let em = ops.membrane.tr_mul(&DVector::from_column_slice(moduli.coupling.as_slice()));
        let eb = ops.bending.tr_mul(&DVector::from_column_slice(moduli.coupling.as_slice()));
        if let Some(c) = &mut c_psi {
            c.ger(h * da, &em, &nv, 1.0);
        }
        if let Some(c) = &mut c_phi {
            c.ger(h.powi(3) / 6.0 * da, &eb, &nv, 1.0);
        }
        if let (Some(v), Some(f)) = (voltage, &mut voltage_load) {
            f.axpy(2.0 * v * da, &em, 1.0);
        }
        if with_psi || with_phi {
            // Gradient term kappa^{ab} N_{,a} M_{,b}.
            let mut grad = DMatrix::zeros(n, n);
            for (a, ja) in folded.jet.iter().enumerate() {
                for (b, jb) in folded.jet.iter().enumerate() {
                    let mut s = 0.0;
                    for p in 0..2 {
                        for q in 0..2 {
                            s += moduli.kappa[(p, q)] * ja[1 + p] * jb[1 + q];
                        }
                    }
                    grad[(a, b)] = s;
                }
            }
            let nn = &nv * nv.transpose();
            if let Some(d) = &mut d1 {
                *d += (da * bend) * &grad + (da * h * moduli.kappa33) * &nn;
            }
            if let Some(d) = &mut d2 {
                *d += (da * h.powi(5) / 30.0) * &grad + (da * h.powi(3) / 3.0 * moduli.kappa33) * &nn;
            }
        }
    }
    Ok(ElementMatrices {
        vertices: support.vertices.clone(),
        mass,
        stiffness,
        c_psi,
        c_phi,
        d1,
        d2,
        load,
        voltage_load,
    })
}
