//! Quad control meshes and everything that changes them.
//!
//! A [`ControlMesh`] owns control point positions and counter-clockwise quad
//! faces. Open meshes can carry a ring of *ghost* vertices and faces obtained
//! by reflecting the boundary layer (`P_ghost = 2 P_boundary - P_interior`).
//! Ghost faces are never elements; they only complete the one-ring of
//! boundary elements so that every element sees a full tensor-product
//! support. Ghost vertices always come after the real vertices.

mod benchmark;
mod fit;
mod patch;
mod subdivide;
mod topology;

pub use benchmark::{generate_benchmark_mesh, roof_point, BenchmarkSpec, RoofSpec, SphereSpec};
pub use fit::{fit_limit_surface, FitReport, FIT_SAMPLES_PER_SIDE};
pub use patch::{build_patches, gather_irregular, gather_regular, Patch, PatchKind, PatchSet, RealSupport};
pub(crate) use patch::gather_regular_from;
#[cfg(test)]
pub(crate) use patch::REGULAR_GRID;
pub use subdivide::{subdivide_once, subdivision_stencil, Refinement};
pub use topology::Topology;

use crate::{Error, Result, Vec3};

#[derive(Clone, Debug)]
pub struct ControlMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 4]>,
    ghost_faces: Vec<[usize; 4]>,
    /// For ghost vertex `num_real + k`: the (boundary, interior) pair it reflects.
    ghost_of: Vec<(usize, usize)>,
    topo: Topology,
    /// Topology over real and ghost faces; `None` when there are no ghosts.
    extended: Option<Topology>,
}

impl ControlMesh {
    /// Builds a mesh and derives its topology.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 4]>) -> Result<Self> {
        let topo = Topology::build(vertices.len(), &faces)?;
        Ok(ControlMesh {
            vertices,
            faces,
            ghost_faces: Vec::new(),
            ghost_of: Vec::new(),
            topo,
            extended: None,
        })
    }

    /// Builds a mesh from faces given as arbitrary polygons, rejecting
    /// anything that is not a quad.
    pub fn from_polygons(vertices: Vec<Vec3>, polygons: &[Vec<usize>]) -> Result<Self> {
        let mut faces = Vec::with_capacity(polygons.len());
        for (f, poly) in polygons.iter().enumerate() {
            if poly.len() != 4 {
                return Err(Error::QuadOnly {
                    face: f,
                    reason: format!("{} vertices", poly.len()),
                });
            }
            faces.push([poly[0], poly[1], poly[2], poly[3]]);
        }
        Self::new(vertices, faces)
    }

    /// All control points, real vertices first, then ghosts.
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    /// Element faces (ghost faces excluded).
    pub fn faces(&self) -> &[[usize; 4]] {
        &self.faces
    }

    pub fn ghost_faces(&self) -> &[[usize; 4]] {
        &self.ghost_faces
    }

    /// Vertices of face `f` in the extended numbering (element faces first,
    /// then ghost faces).
    pub fn face_vertices(&self, f: usize) -> [usize; 4] {
        if f < self.faces.len() {
            self.faces[f]
        } else {
            self.ghost_faces[f - self.faces.len()]
        }
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Number of vertices that carry degrees of freedom.
    pub fn num_real_vertices(&self) -> usize {
        self.vertices.len() - self.ghost_of.len()
    }

    pub fn num_ghost_vertices(&self) -> usize {
        self.ghost_of.len()
    }

    pub fn has_ghosts(&self) -> bool {
        !self.ghost_of.is_empty()
    }

    pub fn is_ghost(&self, v: usize) -> bool {
        v >= self.num_real_vertices()
    }

    /// The (boundary, interior) pair reflected by ghost vertex `v`.
    pub fn ghost_of(&self, v: usize) -> Option<(usize, usize)> {
        v.checked_sub(self.num_real_vertices())
            .and_then(|k| self.ghost_of.get(k).copied())
    }

    /// Topology of the element faces.
    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    /// Topology including ghost faces, used for gathering patch supports.
    pub fn extended_topology(&self) -> &Topology {
        self.extended.as_ref().unwrap_or(&self.topo)
    }

    pub fn num_edges(&self) -> usize {
        self.topo.num_edges()
    }

    pub fn valence(&self, v: usize) -> usize {
        self.topo.valence(v)
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.topo.is_boundary_vertex(v)
    }

    pub fn is_closed(&self) -> bool {
        self.topo.num_boundary_edges() == 0
    }

    /// Interior vertex whose valence differs from four.
    pub fn is_extraordinary(&self, v: usize) -> bool {
        v < self.num_real_vertices() && !self.topo.is_boundary_vertex(v) && self.topo.valence(v) != 4
    }

    pub fn extraordinary_vertices(&self) -> Vec<usize> {
        (0..self.num_real_vertices())
            .filter(|&v| self.is_extraordinary(v))
            .collect()
    }

    /// Boundary vertex whose neighbourhood cannot be completed by a simple
    /// reflection (more than two incident faces).
    pub fn is_boundary_extraordinary(&self, v: usize) -> bool {
        self.topo.is_boundary_vertex(v) && self.topo.face_count(v) > 2
    }

    /// Every face has at most one extraordinary vertex and no two
    /// extraordinary vertices share an edge.
    pub fn extraordinary_isolated(&self) -> bool {
        let faces_ok = self
            .faces
            .iter()
            .all(|f| f.iter().filter(|&&v| self.is_extraordinary(v)).count() <= 1);
        faces_ok
            && self
                .topo
                .edges()
                .iter()
                .all(|&(a, b)| !(self.is_extraordinary(a) && self.is_extraordinary(b)))
    }

    /// Copy of the mesh without ghost vertices and faces.
    pub fn without_ghosts(&self) -> ControlMesh {
        let n = self.num_real_vertices();
        ControlMesh {
            vertices: self.vertices[..n].to_vec(),
            faces: self.faces.clone(),
            ghost_faces: Vec::new(),
            ghost_of: Vec::new(),
            topo: self.topo.clone(),
            extended: None,
        }
    }

    /// Replaces the real control points and recomputes ghost positions.
    pub fn with_positions(&self, real: &[Vec3]) -> Result<ControlMesh> {
        if real.len() != self.num_real_vertices() {
            return Err(Error::InvalidArgument(format!(
                "expected {} positions, got {}",
                self.num_real_vertices(),
                real.len()
            )));
        }
        let mut out = self.clone();
        out.vertices[..real.len()].copy_from_slice(real);
        out.update_ghost_positions();
        Ok(out)
    }

    /// Applies `f` to every real control point; ghosts follow their relation.
    pub fn map_positions(&self, f: impl Fn(&Vec3) -> Vec3) -> ControlMesh {
        let mut out = self.clone();
        let n = out.num_real_vertices();
        for p in &mut out.vertices[..n] {
            *p = f(p);
        }
        out.update_ghost_positions();
        out
    }

    fn update_ghost_positions(&mut self) {
        let n = self.num_real_vertices();
        for (k, &(b, i)) in self.ghost_of.iter().enumerate() {
            self.vertices[n + k] = 2.0 * self.vertices[b] - self.vertices[i];
        }
    }

    /// Appends a reflected ghost ring to an open mesh. Closed meshes and
    /// meshes that already carry ghosts are returned unchanged.
    pub fn with_ghost_ring(&self) -> Result<ControlMesh> {
        if self.has_ghosts() || self.is_closed() {
            return Ok(self.clone());
        }
        let topo = &self.topo;
        let nv = self.vertices.len();
        let mut vertices = self.vertices.clone();
        let mut ghost_of: Vec<(usize, usize)> = Vec::new();
        let mut new_ghost = |b: usize, i: usize, vertices: &mut Vec<Vec3>| {
            let id = vertices.len();
            vertices.push(2.0 * vertices[b] - vertices[i]);
            ghost_of.push((b, i));
            id
        };

        // Ghost used by vertex `v` in the ghost face across boundary edge
        // (v, w); keyed by (v, w).
        let mut edge_ghost = std::collections::HashMap::new();
        let mut corner_faces = Vec::new();
        for v in 0..nv {
            if !topo.is_boundary_vertex(v) {
                continue;
            }
            let fan = topo.fan(v)?;
            match fan.faces.len() {
                2 => {
                    // Boundary vertex with one interior edge.
                    let (f0, k0) = fan.faces[0];
                    let face = &self.faces[f0];
                    let interior = face[(k0 + 3) % 4];
                    let g = new_ghost(v, interior, &mut vertices);
                    let first = face[(k0 + 1) % 4];
                    let (f1, k1) = fan.faces[1];
                    let last = self.faces[f1][(k1 + 3) % 4];
                    edge_ghost.insert((v, first), g);
                    edge_ghost.insert((v, last), g);
                }
                1 => {
                    let (f0, k0) = fan.faces[0];
                    let face = self.faces[f0];
                    let p = face[(k0 + 1) % 4];
                    let d = face[(k0 + 2) % 4];
                    let q = face[(k0 + 3) % 4];
                    let gp = new_ghost(v, q, &mut vertices);
                    let gq = new_ghost(v, p, &mut vertices);
                    let gd = new_ghost(v, d, &mut vertices);
                    edge_ghost.insert((v, p), gp);
                    edge_ghost.insert((v, q), gq);
                    corner_faces.push([gd, gp, v, gq]);
                }
                n => {
                    return Err(Error::UnsupportedTopology(format!(
                        "boundary vertex {v} has {n} incident faces; only regular boundary \
                         vertices (2 faces) and corners (1 face) are supported"
                    )))
                }
            }
        }

        let mut ghost_faces = Vec::new();
        for (f, face) in self.faces.iter().enumerate() {
            for k in 0..4 {
                let (a, b) = (face[k], face[(k + 1) % 4]);
                if topo.half_edge(b, a).is_some() {
                    continue;
                }
                let _ = f;
                let ga = edge_ghost[&(a, b)];
                let gb = edge_ghost[&(b, a)];
                ghost_faces.push([b, a, ga, gb]);
            }
        }
        ghost_faces.extend(corner_faces);

        let all: Vec<[usize; 4]> = self.faces.iter().chain(ghost_faces.iter()).copied().collect();
        let extended = Topology::build(vertices.len(), &all)?;
        Ok(ControlMesh {
            vertices,
            faces: self.faces.clone(),
            ghost_faces,
            ghost_of,
            topo: self.topo.clone(),
            extended: Some(extended),
        })
    }

    /// Axis-aligned bounding box of the real vertices.
    pub fn bounding_box(&self) -> (Vec3, Vec3) {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for p in &self.vertices[..self.num_real_vertices()] {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (lo, hi)
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use super::*;

    pub fn cube() -> ControlMesh {
        let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
        let vertices = vec![
            v(-1., -1., -1.),
            v(1., -1., -1.),
            v(1., 1., -1.),
            v(-1., 1., -1.),
            v(-1., -1., 1.),
            v(1., -1., 1.),
            v(1., 1., 1.),
            v(-1., 1., 1.),
        ];
        let faces = vec![
            [0, 3, 2, 1],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [1, 2, 6, 5],
            [2, 3, 7, 6],
            [3, 0, 4, 7],
        ];
        ControlMesh::new(vertices, faces).unwrap()
    }

    /// Planar grid of `nx` by `ny` quads with unit spacing in the z = 0 plane.
    pub fn grid(nx: usize, ny: usize) -> ControlMesh {
        let mut vertices = Vec::new();
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Vec3::new(i as f64, j as f64, 0.0));
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut faces = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        ControlMesh::new(vertices, faces).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;

    #[test]
    fn cube_counts() {
        let m = cube();
        assert_eq!(m.vertices().len(), 8);
        assert_eq!(m.num_edges(), 12);
        assert!(m.is_closed());
        for v in 0..8 {
            assert_eq!(m.valence(v), 3);
            assert!(m.is_extraordinary(v));
        }
        assert!(!m.extraordinary_isolated());
    }

    #[test]
    fn grid_counts() {
        let m = grid(2, 2);
        assert_eq!(m.vertices().len(), 9);
        assert_eq!(m.valence(4), 4);
        assert!(!m.is_boundary_vertex(4));
        let boundary = (0..9).filter(|&v| m.is_boundary_vertex(v)).count();
        assert_eq!(boundary, 8);
        assert!(m.extraordinary_vertices().is_empty());
    }

    #[test]
    fn triangle_is_rejected() {
        let vertices = vec![Vec3::zeros(), Vec3::x(), Vec3::y()];
        let err = ControlMesh::from_polygons(vertices, &[vec![0, 1, 2]]).unwrap_err();
        assert!(matches!(err, Error::QuadOnly { .. }));
    }

    #[test]
    fn ghost_ring_of_structured_grid() {
        let n = 4;
        let m = grid(n, n).with_ghost_ring().unwrap();
        assert_eq!(m.num_ghost_vertices(), 4 * n + 8);
        assert_eq!(m.ghost_faces().len(), 4 * n + 4);
        for v in m.num_real_vertices()..m.vertices().len() {
            let (b, i) = m.ghost_of(v).unwrap();
            let p = m.vertices()[v];
            assert_eq!(p, 2.0 * m.vertices()[b] - m.vertices()[i]);
            // Reflected grid stays on the integer lattice one step outside.
            assert!(p.x >= -1.0 && p.x <= (n + 1) as f64);
            assert!(p.y >= -1.0 && p.y <= (n + 1) as f64);
        }
        // Every real vertex is regular in the extended topology.
        let ext = m.extended_topology();
        for v in 0..m.num_real_vertices() {
            assert_eq!(ext.face_count(v), 4);
            assert!(!ext.is_boundary_vertex(v));
        }
    }

    #[test]
    fn ghosts_follow_moved_points() {
        let m = grid(3, 3).with_ghost_ring().unwrap();
        let moved = m.map_positions(|p| Vec3::new(p.x, p.y, p.x * p.y));
        for v in moved.num_real_vertices()..moved.vertices().len() {
            let (b, i) = moved.ghost_of(v).unwrap();
            let expect = 2.0 * moved.vertices()[b] - moved.vertices()[i];
            assert_eq!(moved.vertices()[v], expect);
        }
    }
}
