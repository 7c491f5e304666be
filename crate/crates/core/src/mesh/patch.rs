use super::{subdivide_once, ControlMesh, Topology};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PatchKind {
    Regular,
    /// Element with one extraordinary corner of the given valence.
    Irregular { valence: usize },
}

/// One element together with the control points that support it.
///
/// Regular patches store 16 ids in grid order `j * 4 + i`, where `i` runs
/// along the first parametric direction and the element occupies the cell
/// between grid lines 1 and 2. Irregular patches store `2n + 8` ids: the
/// extraordinary vertex, then alternating edge and face neighbours
/// `e_k, d_k` going counter-clockwise from the element, then seven outer
/// points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Patch {
    pub face: usize,
    pub kind: PatchKind,
    /// Face corner placed at parametric origin.
    pub start_corner: usize,
    pub control_ids: Vec<usize>,
}

impl Patch {
    pub fn valence(&self) -> usize {
        match self.kind {
            PatchKind::Regular => 4,
            PatchKind::Irregular { valence } => valence,
        }
    }

    pub fn is_regular(&self) -> bool {
        self.kind == PatchKind::Regular
    }

    /// Converts coordinates relative to face corner 0 into patch coordinates.
    pub fn to_patch_coords(&self, u: f64, v: f64) -> (f64, f64) {
        let (mut a, mut b) = (u, v);
        for _ in 0..self.start_corner {
            (a, b) = (b, 1.0 - a);
        }
        (a, b)
    }
}

/// Patch support expressed on real (non-ghost) vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct RealSupport {
    /// Distinct real vertices, sorted.
    pub vertices: Vec<usize>,
    /// For each patch control point: (index into `vertices`, weight).
    pub fold: Vec<Vec<(usize, f64)>>,
}

impl RealSupport {
    /// Folds the ghost reflection `P_g = 2 P_b - P_i` into the patch basis.
    pub fn new(mesh: &ControlMesh, patch: &Patch) -> RealSupport {
        let mut vertices: Vec<usize> = Vec::with_capacity(patch.control_ids.len());
        for &c in &patch.control_ids {
            match mesh.ghost_of(c) {
                Some((b, i)) => vertices.extend([b, i]),
                None => vertices.push(c),
            }
        }
        vertices.sort_unstable();
        vertices.dedup();
        let local = |v: usize| vertices.binary_search(&v).expect("vertex in support");
        let fold = patch
            .control_ids
            .iter()
            .map(|&c| match mesh.ghost_of(c) {
                Some((b, i)) => vec![(local(b), 2.0), (local(i), -1.0)],
                None => vec![(local(c), 1.0)],
            })
            .collect();
        RealSupport { vertices, fold }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Maps per-control-point jets to per-real-vertex jets.
    pub fn fold_jet(&self, jet: &[[f64; 6]]) -> Vec<[f64; 6]> {
        let mut out = vec![[0.0; 6]; self.vertices.len()];
        for (a, entries) in self.fold.iter().enumerate() {
            for &(r, w) in entries {
                for k in 0..6 {
                    out[r][k] += w * jet[a][k];
                }
            }
        }
        out
    }
}

/// Element mesh after preprocessing plus one patch per element.
#[derive(Clone, Debug)]
pub struct PatchSet {
    /// Possibly refined mesh, with ghost ring when open.
    pub mesh: ControlMesh,
    pub patches: Vec<Patch>,
    /// Number of isolation subdivisions applied.
    pub isolation_steps: usize,
}

impl PatchSet {
    pub fn num_irregular(&self) -> usize {
        self.patches.iter().filter(|p| !p.is_regular()).count()
    }

    pub fn supports(&self) -> Vec<RealSupport> {
        self.patches.iter().map(|p| RealSupport::new(&self.mesh, p)).collect()
    }

    /// Symmetric vertex adjacency induced by shared element supports,
    /// including the diagonal.
    pub fn vertex_graph(&self, supports: &[RealSupport]) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::new(); self.mesh.num_real_vertices()];
        for s in supports {
            for &a in &s.vertices {
                rows[a].extend_from_slice(&s.vertices);
            }
        }
        for r in &mut rows {
            r.sort_unstable();
            r.dedup();
        }
        rows
    }
}

/// Prepares a mesh for analysis: isolates extraordinary vertices, adds a
/// ghost ring to open meshes and gathers every element's support.
pub fn build_patches(mesh: &ControlMesh) -> Result<PatchSet> {
    let mut m = mesh.without_ghosts();
    let mut steps = 0;
    while !m.extraordinary_isolated() {
        if steps == 2 {
            return Err(Error::IsolationFailed(steps));
        }
        m = subdivide_once(&m)?;
        steps += 1;
    }
    let m = m.with_ghost_ring()?;
    let mut patches = Vec::with_capacity(m.num_faces());
    for f in 0..m.num_faces() {
        let face = m.faces()[f];
        let ev: Vec<usize> = (0..4).filter(|&k| m.is_extraordinary(face[k])).collect();
        let patch = match ev.as_slice() {
            [] => gather_regular(&m, f)?,
            [k] => gather_irregular(&m, f, *k)?,
            _ => return Err(Error::IsolationFailed(steps)),
        };
        patches.push(patch);
    }
    Ok(PatchSet { mesh: m, patches, isolation_steps: steps })
}

/// Regular 4x4 support of face `f`.
pub fn gather_regular(mesh: &ControlMesh, f: usize) -> Result<Patch> {
    gather_regular_from(mesh, f, 0)
}

/// Regular support with face corner `start` placed at the parametric origin.
pub(crate) fn gather_regular_from(mesh: &ControlMesh, f: usize, start: usize) -> Result<Patch> {
    let ring = gather_ring(mesh, f, start)?;
    if ring.len() != 16 {
        return Err(Error::UnsupportedTopology(format!(
            "face {f} has an extraordinary corner and cannot be regular"
        )));
    }
    let mut grid = vec![0; 16];
    for (k, &(i, j)) in REGULAR_GRID.iter().enumerate() {
        grid[j * 4 + i] = ring[k];
    }
    Ok(Patch { face: f, kind: PatchKind::Regular, start_corner: start, control_ids: grid })
}

/// Support of face `f` whose corner `corner` is extraordinary.
pub fn gather_irregular(mesh: &ControlMesh, f: usize, corner: usize) -> Result<Patch> {
    let ring = gather_ring(mesh, f, corner)?;
    let valence = (ring.len() - 8) / 2;
    Ok(Patch {
        face: f,
        kind: PatchKind::Irregular { valence },
        start_corner: corner,
        control_ids: ring,
    })
}

/// Grid position (i, j) of each ring index when the valence is four.
pub(crate) const REGULAR_GRID: [(usize, usize); 16] = [
    (1, 1),
    (2, 1),
    (2, 2),
    (1, 2),
    (0, 2),
    (0, 1),
    (0, 0),
    (1, 0),
    (2, 0),
    (3, 0),
    (3, 1),
    (3, 2),
    (3, 3),
    (2, 3),
    (1, 3),
    (0, 3),
];

fn gather_ring(mesh: &ControlMesh, f: usize, corner: usize) -> Result<Vec<usize>> {
    let topo = mesh.extended_topology();
    let face = mesh.faces()[f];
    let c0 = face[corner];
    let fan = topo.fan(c0)?;
    if fan.open {
        return Err(Error::UnsupportedTopology(format!(
            "vertex {c0} of face {f} lies on the boundary without a ghost ring"
        )));
    }
    let n = fan.faces.len();
    let start = fan
        .faces
        .iter()
        .position(|&p| p == (f, corner))
        .ok_or_else(|| Error::UnsupportedTopology(format!("face {f} missing from fan of {c0}")))?;

    let mut ids = Vec::with_capacity(2 * n + 8);
    ids.push(c0);
    for k in 0..n {
        let (g, c) = fan.faces[(start + k) % n];
        let fv = mesh.face_vertices(g);
        ids.push(fv[(c + 1) % 4]);
        ids.push(fv[(c + 2) % 4]);
    }
    let e = |k: usize| ids[1 + 2 * (k % n)];
    let d = |k: usize| ids[2 + 2 * (k % n)];
    let (c1, c2, c3) = (face[(corner + 1) % 4], face[(corner + 2) % 4], face[(corner + 3) % 4]);
    for k in [1, 2, 3] {
        check_regular(topo, face[(corner + k) % 4], f)?;
    }

    let (g30, g31) = across(mesh, topo, d(n - 1), e(0))?;
    let (g31b, g32) = across(mesh, topo, c1, c2)?;
    let (g33, g23) = across(mesh, topo, g32, c2)?;
    let (g23b, g13) = across(mesh, topo, c2, c3)?;
    let (g13b, g03) = across(mesh, topo, e(1), d(1))?;
    if g31 != g31b || g23 != g23b || g13 != g13b {
        return Err(Error::UnsupportedTopology(format!(
            "inconsistent one-ring around face {f}"
        )));
    }
    ids.extend([g30, g31, g32, g33, g23, g13, g03]);

    let mut sorted = ids.clone();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != ids.len() {
        return Err(Error::UnsupportedTopology(format!(
            "support of face {f} wraps onto itself; refine the mesh"
        )));
    }
    Ok(ids)
}

fn check_regular(topo: &Topology, v: usize, f: usize) -> Result<()> {
    let fan = topo.fan(v)?;
    if fan.open || fan.faces.len() != 4 {
        return Err(Error::UnsupportedTopology(format!(
            "face {f}: corner {v} is not regular (valence {}, open {})",
            fan.faces.len(),
            fan.open
        )));
    }
    Ok(())
}

/// For the directed edge `a -> b`, the two far vertices `(p, q)` of the face
/// on the other side, `p` adjacent to `a` and `q` adjacent to `b`.
fn across(mesh: &ControlMesh, topo: &Topology, a: usize, b: usize) -> Result<(usize, usize)> {
    let (g, k) = topo.half_edge(b, a).ok_or_else(|| {
        Error::UnsupportedTopology(format!("edge {a}-{b} has no neighbour across it"))
    })?;
    let fv = mesh.face_vertices(g);
    Ok((fv[(k + 2) % 4], fv[(k + 3) % 4]))
}
