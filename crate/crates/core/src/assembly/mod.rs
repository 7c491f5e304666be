//! Quadrature, element matrices and the global block system.

mod element;
mod quadrature;

pub use element::{element_matrices, ElementMatrices};
pub use quadrature::{quadrature_rule, QuadPoint, IRREGULAR_RING_DEPTH};

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::material::MaterialSpec;
use crate::mesh::{build_patches, ControlMesh, PatchSet, RealSupport};
use crate::sparse::CsrMatrix;
use crate::{Error, Result, Vec3};

/// Electrode configuration of the top and bottom faces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElectricCondition {
    /// Purely mechanical analysis.
    Elastic,
    /// Both potential coefficients ψ and φ are free.
    Unelectroded,
    /// Electrodes grounded: ψ = 0, φ free.
    ShortCircuited,
    /// Electrodes held at ±voltage: ψ = 2 V / h, φ free.
    Electroded { voltage: f64 },
}

impl ElectricCondition {
    pub fn has_psi(&self) -> bool {
        matches!(self, ElectricCondition::Unelectroded)
    }

    pub fn has_phi(&self) -> bool {
        !matches!(self, ElectricCondition::Elastic)
    }
}

/// Set of real control vertices.
#[derive(Clone, Debug, PartialEq)]
pub enum VertexSelector {
    All,
    Indices(Vec<usize>),
    /// Vertices with `|x[axis] - value| <= tol`.
    Plane { axis: usize, value: f64, tol: f64 },
}

/// Displacement components fixed to zero on a set of vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub selector: VertexSelector,
    pub components: [bool; 3],
}

/// Everything needed to assemble a shell problem.
#[derive(Clone, Debug)]
pub struct ShellModel {
    pub patches: PatchSet,
    supports: Vec<RealSupport>,
    pub thickness: f64,
    pub material: MaterialSpec,
    pub electric: ElectricCondition,
    pub constraints: Vec<Constraint>,
    /// Force per unit mid-surface area, N/m².
    pub areal_load: Vec3,
    /// Force per unit volume, N/m³.
    pub body_force: Vec3,
}

impl ShellModel {
    pub fn new(
        mesh: &ControlMesh,
        thickness: f64,
        material: MaterialSpec,
        electric: ElectricCondition,
    ) -> Result<ShellModel> {
        let patches = build_patches(mesh)?;
        let supports = patches.supports();
        let model = ShellModel {
            patches,
            supports,
            thickness,
            material,
            electric,
            constraints: Vec::new(),
            areal_load: Vec3::zeros(),
            body_force: Vec3::zeros(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return Err(Error::InvalidArgument(format!("thickness must be positive, got {}", self.thickness)));
        }
        self.material.validate()?;
        if self.electric != ElectricCondition::Elastic && !self.material.is_piezo() {
            return Err(Error::InvalidArgument(
                "electric conditions other than elastic need a piezoelectric material".into(),
            ));
        }
        self.fixed_dofs().map(|_| ())
    }

    /// Analysis mesh (after isolation and with ghost ring).
    pub fn mesh(&self) -> &ControlMesh {
        &self.patches.mesh
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh().num_real_vertices()
    }

    pub fn num_elements(&self) -> usize {
        self.patches.patches.len()
    }

    pub fn supports(&self) -> &[RealSupport] {
        &self.supports
    }

    pub fn resolve(&self, selector: &VertexSelector) -> Result<Vec<usize>> {
        let nv = self.num_vertices();
        let pos = self.mesh().vertices();
        match selector {
            VertexSelector::All => Ok((0..nv).collect()),
            VertexSelector::Indices(ids) => {
                if let Some(&bad) = ids.iter().find(|&&v| v >= nv) {
                    return Err(Error::BadConstraint(bad));
                }
                Ok(ids.clone())
            }
            VertexSelector::Plane { axis, value, tol } => {
                if *axis > 2 {
                    return Err(Error::InvalidArgument(format!("plane axis {axis}")));
                }
                Ok((0..nv).filter(|&v| (pos[v][*axis] - value).abs() <= *tol).collect())
            }
        }
    }

    /// Sorted constrained displacement dofs `3 v + i`.
    pub fn fixed_dofs(&self) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for c in &self.constraints {
            for v in self.resolve(&c.selector)? {
                for i in 0..3 {
                    if c.components[i] {
                        out.push(3 * v + i);
                    }
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }
}

/// Map between the full displacement numbering `3 v + i` and free dofs.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    pub n_full: usize,
    /// Full index of each free dof, ascending.
    pub free: Vec<usize>,
}

impl DofMap {
    pub fn all(n_full: usize) -> DofMap {
        DofMap { n_full, free: (0..n_full).collect() }
    }

    pub fn num_free(&self) -> usize {
        self.free.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.free.len() == self.n_full
    }

    /// Scatters free values into a full vector with zeros elsewhere.
    pub fn expand(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_full];
        for (&g, &v) in self.free.iter().zip(x) {
            out[g] = v;
        }
        out
    }

    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&g| full[g]).collect()
    }
}

/// Global block system. Displacement blocks are indexed by free dofs,
/// potential blocks by real vertices.
///
/// With `A = K + C_psi D1^-1 C_psi^T + C_phi D2^-1 C_phi^T` the electric
/// rows read `C^T u - D p = 0` and the mechanical rows
/// `K u + C_psi psi + C_phi phi = f`.
#[derive(Clone, Debug)]
pub struct AssembledSystem {
    pub n_vertices: usize,
    /// Real vertex positions, used for fill-reducing orderings.
    pub coords: Vec<Vec3>,
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub c_psi: Option<CsrMatrix>,
    pub c_phi: Option<CsrMatrix>,
    pub d1: Option<CsrMatrix>,
    pub d2: Option<CsrMatrix>,
    pub load: Vec<f64>,
    /// Equivalent load of the prescribed voltage; the static right-hand
    /// side is `load - voltage_load`.
    pub voltage_load: Option<Vec<f64>>,
    pub dofs: DofMap,
}

impl AssembledSystem {
    pub fn num_free(&self) -> usize {
        self.dofs.num_free()
    }

    /// Vertex owning each free displacement dof.
    pub fn node_of_free(&self) -> Vec<usize> {
        self.dofs.free.iter().map(|&g| g / 3).collect()
    }

    /// Right-hand side of the static problem on free dofs.
    pub fn static_rhs(&self) -> Vec<f64> {
        match &self.voltage_load {
            Some(v) => self.load.iter().zip(v).map(|(f, v)| f - v).collect(),
            None => self.load.clone(),
        }
    }
}

/// Expands a vertex graph to block rows of `rbs` x `cbs` entries.
fn block_pattern(graph: &[Vec<usize>], rbs: usize, cbs: usize) -> Vec<Vec<usize>> {
    let mut rows = Vec::with_capacity(graph.len() * rbs);
    for adj in graph {
        let cols: Vec<usize> = adj.iter().flat_map(|&b| (0..cbs).map(move |j| cbs * b + j)).collect();
        for _ in 0..rbs {
            rows.push(cols.clone());
        }
    }
    rows
}

/// Adds a local block matrix whose rows are `rbs` unknowns per vertex and
/// columns `cbs` unknowns per vertex.
fn scatter(m: &mut CsrMatrix, verts: &[usize], rbs: usize, cbs: usize, local: &DMatrix<f64>) {
    let mut slots: Vec<usize> = Vec::with_capacity(verts.len());
    for (a, &va) in verts.iter().enumerate() {
        for i in 0..rbs {
            let row = rbs * va + i;
            slots.clear();
            {
                let start = m.indptr()[row];
                let end = m.indptr()[row + 1];
                let cols = &m.indices()[start..end];
                for &vb in verts {
                    let pos = cols.binary_search(&(cbs * vb)).expect("entry in pattern");
                    slots.push(start + pos);
                }
            }
            let values = m.values_mut();
            for (b, &s) in slots.iter().enumerate() {
                for j in 0..cbs {
                    values[s + j] += local[(rbs * a + i, cbs * b + j)];
                }
            }
        }
    }
}

/// Elements computed in parallel per chunk; scattering stays sequential in
/// element order so results do not depend on the thread count.
const CHUNK: usize = 256;

pub fn assemble_system(model: &ShellModel) -> Result<AssembledSystem> {
    model.validate()?;
    let nv = model.num_vertices();
    let graph = model.patches.vertex_graph(model.supports());
    let with_psi = model.electric.has_psi();
    let with_phi = model.electric.has_phi();
    let with_voltage = matches!(model.electric, ElectricCondition::Electroded { .. });

    let uu = block_pattern(&graph, 3, 3);
    let mut mass = CsrMatrix::from_pattern(3 * nv, 3 * nv, uu.clone());
    let mut stiffness = CsrMatrix::from_pattern(3 * nv, 3 * nv, uu);
    let coupling = || CsrMatrix::from_pattern(3 * nv, nv, block_pattern(&graph, 3, 1));
    let scalar = || CsrMatrix::from_pattern(nv, nv, graph.clone());
    let mut c_psi = with_psi.then(coupling);
    let mut c_phi = with_phi.then(coupling);
    let mut d1 = with_psi.then(scalar);
    let mut d2 = with_phi.then(scalar);
    let mut load = vec![0.0; 3 * nv];
    let mut voltage_load = with_voltage.then(|| vec![0.0; 3 * nv]);

    let ne = model.num_elements();
    let mut start = 0;
    while start < ne {
        let end = (start + CHUNK).min(ne);
        let blocks: Vec<Result<ElementMatrices>> =
            (start..end).into_par_iter().map(|e| element_matrices(model, e)).collect();
        for b in blocks {
            let b = b?;
            let verts = &b.vertices;
            let mut m3 = DMatrix::zeros(3 * verts.len(), 3 * verts.len());
            for a in 0..verts.len() {
                for c in 0..verts.len() {
                    for i in 0..3 {
                        m3[(3 * a + i, 3 * c + i)] = b.mass[(a, c)];
                    }
                }
            }
            scatter(&mut mass, verts, 3, 3, &m3);
            scatter(&mut stiffness, verts, 3, 3, &b.stiffness);
            for (target, local) in [(&mut c_psi, &b.c_psi), (&mut c_phi, &b.c_phi)] {
                if let (Some(t), Some(l)) = (target, local) {
                    scatter(t, verts, 3, 1, l);
                }
            }
            for (target, local) in [(&mut d1, &b.d1), (&mut d2, &b.d2)] {
                if let (Some(t), Some(l)) = (target, local) {
                    scatter(t, verts, 1, 1, l);
                }
            }
            for (a, &v) in verts.iter().enumerate() {
                for i in 0..3 {
                    load[3 * v + i] += b.load[3 * a + i];
                    if let (Some(f), Some(l)) = (&mut voltage_load, &b.voltage_load) {
                        f[3 * v + i] += l[3 * a + i];
                    }
                }
            }
        }
        start = end;
    }
    for m in [Some(&mut mass), Some(&mut stiffness), d1.as_mut(), d2.as_mut()].into_iter().flatten() {
        m.symmetrize();
    }
    Ok(AssembledSystem {
        n_vertices: nv,
        coords: model.mesh().vertices()[..nv].to_vec(),
        mass,
        stiffness,
        c_psi,
        c_phi,
        d1,
        d2,
        load,
        voltage_load,
        dofs: DofMap::all(3 * nv),
    })
}

/// Removes the model's constrained displacement dofs. Constrained values
/// are zero, so loads need no adjustment. Potentials stay free.
pub fn apply_constraints(sys: &AssembledSystem, model: &ShellModel) -> Result<AssembledSystem> {
    let fixed = model.fixed_dofs()?;
    if fixed.iter().any(|&d| d >= sys.dofs.n_full) {
        return Err(Error::Assembly("constraint outside the assembled system".into()));
    }
    let keep: Vec<usize> = (0..sys.num_free())
        .filter(|&k| fixed.binary_search(&sys.dofs.free[k]).is_err())
        .collect();
    let scalar_cols: Vec<usize> = (0..sys.n_vertices).collect();
    let pick = |v: &Vec<f64>| keep.iter().map(|&k| v[k]).collect::<Vec<f64>>();
    Ok(AssembledSystem {
        n_vertices: sys.n_vertices,
        coords: sys.coords.clone(),
        mass: sys.mass.select(&keep, &keep),
        stiffness: sys.stiffness.select(&keep, &keep),
        c_psi: sys.c_psi.as_ref().map(|c| c.select(&keep, &scalar_cols)),
        c_phi: sys.c_phi.as_ref().map(|c| c.select(&keep, &scalar_cols)),
        d1: sys.d1.clone(),
        d2: sys.d2.clone(),
        load: pick(&sys.load),
        voltage_load: sys.voltage_load.as_ref().map(pick),
        dofs: DofMap { n_full: sys.dofs.n_full, free: keep.iter().map(|&k| sys.dofs.free[k]).collect() },
    })
}

/// Six rigid-body displacement fields on the full dof numbering: three
/// translations and three infinitesimal rotations about the centroid.
pub fn rigid_body_modes(coords: &[Vec3]) -> Vec<Vec<f64>> {
    let n = coords.len();
    let c = coords.iter().sum::<Vec3>() / n.max(1) as f64;
    let mut out = Vec::with_capacity(6);
    for axis in 0..3 {
        let mut t = vec![0.0; 3 * n];
        for v in 0..n {
            t[3 * v + axis] = 1.0;
        }
        out.push(t);
    }
    for axis in 0..3 {
        let mut w = Vec3::zeros();
        w[axis] = 1.0;
        let r: Vec<f64> = coords.iter().flat_map(|p| {
            let u = w.cross(&(p - c));
            [u.x, u.y, u.z]
        }).collect();
        out.push(r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::testing::grid;
    use crate::mesh::{generate_benchmark_mesh, BenchmarkSpec, RoofSpec, SphereSpec};

    fn steel() -> MaterialSpec {
        MaterialSpec::Isotropic { young: 200e9, poisson: 0.3, density: 7800.0 }
    }

    fn sphere(level: usize) -> ControlMesh {
        generate_benchmark_mesh(&BenchmarkSpec::Sphere(SphereSpec { radius: 0.5, level })).unwrap()
    }

    fn roof(n: usize) -> ControlMesh {
        let spec = RoofSpec { length: 0.5, radius: 0.25, half_angle: 40f64.to_radians(), n };
        generate_benchmark_mesh(&BenchmarkSpec::Roof(spec)).unwrap()
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn flat_mass_equals_area() {
        let g = grid(4, 3);
        let mat = MaterialSpec::Isotropic { young: 1.0, poisson: 0.0, density: 2.0 };
        let model = ShellModel::new(&g, 0.5, mat, ElectricCondition::Elastic).unwrap();
        let sys = assemble_system(&model).unwrap();
        for comp in 0..3 {
            let mut total = 0.0;
            for r in (comp..sys.mass.nrows()).step_by(3) {
                total += sys.mass.row(r).1.iter().sum::<f64>();
            }
            assert!((total - 12.0).abs() < 1e-10, "{total}");
        }
    }

    #[test]
    fn sphere_mass_equals_surface_area() {
        let model = ShellModel::new(&sphere(3), 0.01, steel(), ElectricCondition::Elastic).unwrap();
        let sys = assemble_system(&model).unwrap();
        let total: f64 = (0..sys.mass.nrows()).step_by(3).map(|r| sys.mass.row(r).1.iter().sum::<f64>()).sum();
        let area = 4.0 * std::f64::consts::PI * 0.25;
        assert!((total / (7800.0 * 0.01) - area).abs() < 2e-4 * area);
    }

    #[test]
    fn rigid_modes_in_null_space_of_free_sphere() {
        let model = ShellModel::new(&sphere(2), 0.02, steel(), ElectricCondition::Elastic).unwrap();
        let sys = assemble_system(&model).unwrap();
        let k = &sys.stiffness;
        assert!(k.asymmetry() <= 1e-12 * k.max_abs());
        for r in rigid_body_modes(&sys.coords) {
            let ku = k.mul_vec(&r);
            assert!(norm(&ku) <= 1e-9 * k.frobenius_norm() * norm(&r), "{}", norm(&ku));
        }
    }

    #[test]
    fn element_stiffness_annihilates_rigid_motion() {
        let model = ShellModel::new(&roof(8), 0.01, steel(), ElectricCondition::Elastic).unwrap();
        for e in [0, 9, 35, 63] {
            let b = element_matrices(&model, e).unwrap();
            let coords: Vec<Vec3> = b.vertices.iter().map(|&v| model.mesh().vertices()[v]).collect();
            let kn = b.stiffness.norm();
            for r in rigid_body_modes(&coords) {
                let u = nalgebra::DVector::from_vec(r);
                assert!((&b.stiffness * &u).norm() <= 1e-9 * kn * u.norm());
            }
        }
    }

    #[test]
    fn piezo_blocks_follow_condition() {
        let m = roof(8);
        let mat = MaterialSpec::barium_titanate();
        let h = 2.5e-4;
        let el = assemble_system(&ShellModel::new(&m, h, mat.clone(), ElectricCondition::Elastic).unwrap()).unwrap();
        assert!(el.c_psi.is_none() && el.c_phi.is_none() && el.d1.is_none() && el.d2.is_none());
        let sc = assemble_system(&ShellModel::new(&m, h, mat.clone(), ElectricCondition::ShortCircuited).unwrap()).unwrap();
        assert!(sc.c_psi.is_none() && sc.c_phi.is_some() && sc.d2.is_some() && sc.d1.is_none());
        let ue = assemble_system(&ShellModel::new(&m, h, mat.clone(), ElectricCondition::Unelectroded).unwrap()).unwrap();
        assert!(ue.c_psi.is_some() && ue.d1.is_some());
        assert!(matches!(
            ShellModel::new(&m, h, steel(), ElectricCondition::Unelectroded),
            Err(Error::InvalidArgument(_))
        ));

        // Rigid motions produce no membrane or bending strain, hence no charge.
        let cpsi = ue.c_psi.as_ref().unwrap();
        let cphi = ue.c_phi.as_ref().unwrap();
        for r in rigid_body_modes(&ue.coords) {
            for c in [cpsi, cphi] {
                let q = c.tr_mul_vec(&r);
                let scale = c.frobenius_norm() * norm(&r);
                assert!(norm(&q) <= 1e-9 * scale);
            }
        }
        // Dielectric blocks are symmetric positive definite.
        for d in [ue.d1.as_ref().unwrap(), ue.d2.as_ref().unwrap()] {
            let dense = d.to_dense();
            assert!((&dense - dense.transpose()).norm() <= 1e-12 * dense.norm());
            assert!(dense.cholesky().is_some());
        }
    }

    #[test]
    fn constraints_remove_dofs() {
        let mut model = ShellModel::new(&roof(8), 0.01, steel(), ElectricCondition::Elastic).unwrap();
        model.areal_load = Vec3::new(0.0, 0.0, -1.0);
        let sys = assemble_system(&model).unwrap();
        model.constraints = vec![
            Constraint { selector: VertexSelector::Plane { axis: 1, value: 0.0, tol: 1e-9 }, components: [true, false, true] },
            Constraint { selector: VertexSelector::Indices(vec![0]), components: [true, true, true] },
        ];
        let c = apply_constraints(&sys, &model).unwrap();
        // Nine vertices on y = 0 lose x and z, vertex 0 (also on y = 0) loses y.
        assert_eq!(c.num_free(), sys.num_free() - 19);
        assert_eq!(c.stiffness.nrows(), c.num_free());
        let full = c.dofs.expand(&c.load);
        assert_eq!(full[2], 0.0);
        model.constraints = vec![Constraint { selector: VertexSelector::Indices(vec![10_000]), components: [true; 3] }];
        assert!(matches!(apply_constraints(&sys, &model), Err(Error::BadConstraint(10_000))));
    }

    #[test]
    fn assembly_is_deterministic() {
        let model = ShellModel::new(&sphere(2), 0.02, steel(), ElectricCondition::Elastic).unwrap();
        let a = assemble_system(&model).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let b = pool.install(|| assemble_system(&model).unwrap());
        assert_eq!(a.stiffness, b.stiffness);
        assert_eq!(a.mass, b.mass);
    }
}
