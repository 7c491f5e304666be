use super::{ControlMesh, Topology};
use crate::{Result, Vec3};

/// Sparse row of a subdivision operator: (old vertex, weight).
pub type StencilRow = Vec<(usize, f64)>;

/// One Catmull-Clark step expressed as a linear map from old to new points.
#[derive(Clone, Debug)]
pub struct Refinement {
    /// Row `i` gives new vertex `i` as a weighted sum of old vertices.
    pub stencil: Vec<StencilRow>,
    pub faces: Vec<[usize; 4]>,
}

impl Refinement {
    pub fn apply(&self, points: &[Vec3]) -> Vec<Vec3> {
        self.stencil
            .iter()
            .map(|row| row.iter().fold(Vec3::zeros(), |acc, &(j, w)| acc + w * points[j]))
            .collect()
    }
}

/// Builds the Catmull-Clark refinement operator of a quad mesh.
///
/// New vertex numbering: vertex points `0..V`, edge points `V..V+E` (edge
/// order of the topology), face points after that. Child `k` of face
/// `(c0, c1, c2, c3)` is `(vp(c_k), ep(c_k, c_k+1), fp, ep(c_k-1, c_k))` and
/// gets index `4 f + k`.
pub fn subdivision_stencil(num_vertices: usize, faces: &[[usize; 4]], topo: &Topology) -> Refinement {
    let nv = num_vertices;
    let ne = topo.num_edges();
    let face_row = |f: usize| -> StencilRow { faces[f].iter().map(|&v| (v, 0.25)).collect() };

    let mut stencil: Vec<StencilRow> = Vec::with_capacity(nv + ne + faces.len());
    for v in 0..nv {
        let fan = &topo.fan(v).expect("vertex in range").faces;
        let mut row: StencilRow = Vec::new();
        if fan.is_empty() {
            row.push((v, 1.0));
        } else if topo.is_boundary_vertex(v) {
            if fan.len() == 1 {
                row.push((v, 1.0));
            } else {
                let (f0, k0) = fan[0];
                let (fl, kl) = fan[fan.len() - 1];
                let next = faces[f0][(k0 + 1) % 4];
                let prev = faces[fl][(kl + 3) % 4];
                row.extend([(prev, 0.125), (v, 0.75), (next, 0.125)]);
            }
        } else {
            let n = fan.len() as f64;
            // (Q + 2R + (n-3) S) / n with Q, R averages over the n faces and edge
            // midpoints.
            for &(f, k) in fan {
                for (u, w) in face_row(f) {
                    row.push((u, w / (n * n)));
                }
                let e = faces[f][(k + 1) % 4];
                row.push((v, 1.0 / (n * n)));
                row.push((e, 1.0 / (n * n)));
            }
            row.push((v, (n - 3.0) / n));
        }
        stencil.push(merge(row));
    }
    for &(a, b) in topo.edges() {
        let row = match topo.edge_faces(a, b).expect("edge exists") {
            (f, Some(g)) => {
                let mut r: StencilRow = vec![(a, 0.25), (b, 0.25)];
                r.extend(face_row(f).into_iter().map(|(u, w)| (u, 0.25 * w)));
                r.extend(face_row(g).into_iter().map(|(u, w)| (u, 0.25 * w)));
                merge(r)
            }
            (_, None) => vec![(a, 0.5), (b, 0.5)],
        };
        stencil.push(row);
    }
    for f in 0..faces.len() {
        stencil.push(face_row(f));
    }

    let mut new_faces = Vec::with_capacity(4 * faces.len());
    for (f, face) in faces.iter().enumerate() {
        let fp = nv + ne + f;
        let ep = |a: usize, b: usize| nv + topo.edge_id(a, b).expect("edge exists");
        for k in 0..4 {
            let c = face[k];
            let next = face[(k + 1) % 4];
            let prev = face[(k + 3) % 4];
            new_faces.push([c, ep(c, next), fp, ep(prev, c)]);
        }
    }
    Refinement { stencil, faces: new_faces }
}

fn merge(mut row: StencilRow) -> StencilRow {
    row.sort_by_key(|p| p.0);
    let mut out: StencilRow = Vec::with_capacity(row.len());
    for (j, w) in row {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += w,
            _ => out.push((j, w)),
        }
    }
    out
}

/// One Catmull-Clark step. Ghost rings are dropped first; the result has
/// none.
pub fn subdivide_once(mesh: &ControlMesh) -> Result<ControlMesh> {
    let base = mesh.without_ghosts();
    let r = subdivision_stencil(base.vertices().len(), base.faces(), base.topology());
    let points = r.apply(base.vertices());
    ControlMesh::new(points, r.faces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::testing::{cube, grid};
    use nalgebra::Matrix3;
    use proptest::prelude::*;

    #[test]
    fn cube_counts_follow_euler() {
        let c = cube();
        let s = subdivide_once(&c).unwrap();
        assert_eq!(s.vertices().len(), 26);
        assert_eq!(s.num_faces(), 24);
        assert_eq!(s.num_edges(), 2 * 12 + 4 * 6);
        let s2 = subdivide_once(&s).unwrap();
        assert_eq!(s2.vertices().len(), 26 + 48 + 24);
        assert_eq!(s2.num_faces(), 96);
        // Only the original corners stay extraordinary.
        assert_eq!(s2.extraordinary_vertices(), (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn planar_stays_planar() {
        let g = grid(3, 2).map_positions(|p| Vec3::new(p.x + 0.3 * p.y * p.y, p.y, 0.0));
        let s = subdivide_once(&subdivide_once(&g).unwrap()).unwrap();
        assert!(s.vertices().iter().all(|p| p.z == 0.0));
    }

    #[test]
    fn rows_are_affine() {
        let c = subdivide_once(&cube()).unwrap();
        let r = subdivision_stencil(c.vertices().len(), c.faces(), c.topology());
        for row in &r.stencil {
            let s: f64 = row.iter().map(|p| p.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
        let g = grid(3, 3);
        let r = subdivision_stencil(g.vertices().len(), g.faces(), g.topology());
        for row in &r.stencil {
            let s: f64 = row.iter().map(|p| p.1).sum();
            assert!((s - 1.0).abs() < 1e-14);
        }
    }

    /// Independent oracle: classic point-based Catmull-Clark on a closed mesh,
    /// written directly from face/edge/vertex point definitions.
    fn naive_step(points: &[Vec3], faces: &[[usize; 4]]) -> (Vec<Vec3>, Vec<[usize; 4]>) {
        use std::collections::BTreeMap;
        let fp: Vec<Vec3> = faces
            .iter()
            .map(|f| f.iter().map(|&v| points[v]).sum::<Vec3>() / 4.0)
            .collect();
        let mut edge_faces: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..4 {
                let (a, b) = (f[k], f[(k + 1) % 4]);
                edge_faces.entry((a.min(b), a.max(b))).or_default().push(fi);
            }
        }
        let mut vp = Vec::new();
        for v in 0..points.len() {
            let inc: Vec<usize> = (0..faces.len()).filter(|&f| faces[f].contains(&v)).collect();
            let n = inc.len() as f64;
            let q = inc.iter().map(|&f| fp[f]).sum::<Vec3>() / n;
            let mids: Vec<Vec3> = edge_faces
                .keys()
                .filter(|e| e.0 == v || e.1 == v)
                .map(|e| (points[e.0] + points[e.1]) / 2.0)
                .collect();
            let r = mids.iter().sum::<Vec3>() / mids.len() as f64;
            vp.push((q + 2.0 * r + (n - 3.0) * points[v]) / n);
        }
        let mut ep = BTreeMap::new();
        for (e, fs) in &edge_faces {
            ep.insert(*e, (points[e.0] + points[e.1] + fp[fs[0]] + fp[fs[1]]) / 4.0);
        }
        // Index layout independent from the production numbering.
        let mut out = vp.clone();
        let mut eid = BTreeMap::new();
        for (e, p) in &ep {
            eid.insert(*e, out.len());
            out.push(*p);
        }
        let f0 = out.len();
        out.extend(fp.iter().copied());
        let mut nf = Vec::new();
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..4 {
                let c = f[k];
                let n = f[(k + 1) % 4];
                let p = f[(k + 3) % 4];
                nf.push([c, eid[&(c.min(n), c.max(n))], f0 + fi, eid[&(c.min(p), c.max(p))]]);
            }
        }
        (out, nf)
    }

    /// Checks that two meshes agree up to vertex renumbering.
    fn assert_same_mesh(p: &[Vec3], pf: &[[usize; 4]], q: &[Vec3], qf: &[[usize; 4]]) {
        assert_eq!(p.len(), q.len());
        let map: Vec<usize> = p
            .iter()
            .map(|x| {
                let hits: Vec<usize> = (0..q.len()).filter(|&j| (q[j] - x).norm() < 1e-12).collect();
                assert_eq!(hits.len(), 1);
                hits[0]
            })
            .collect();
        let canon = |f: [usize; 4]| {
            let k = (0..4).min_by_key(|&k| f[k]).unwrap();
            [f[k], f[(k + 1) % 4], f[(k + 2) % 4], f[(k + 3) % 4]]
        };
        let mut a: Vec<[usize; 4]> = pf.iter().map(|f| canon(f.map(|v| map[v]))).collect();
        let mut b: Vec<[usize; 4]> = qf.iter().map(|&f| canon(f)).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn matches_naive_catmull_clark_on_cube() {
        let mut m = cube().map_positions(|p| Vec3::new(p.x * 1.3, p.y + 0.2 * p.z, p.z * 0.7));
        for _ in 0..3 {
            let (np, nf) = naive_step(m.vertices(), m.faces());
            let s = subdivide_once(&m).unwrap();
            assert_same_mesh(s.vertices(), s.faces(), &np, &nf);
            m = s;
        }
    }

    #[test]
    fn corner_limits_converge() {
        // Depth-8 subdivision oracle against the closed-form limit mask
        // (n^2 S + 4 sum e + sum d) / (n (n + 5)).
        let base = cube().map_positions(|p| Vec3::new(p.x, 0.8 * p.y + 0.1 * p.z, p.z));
        let mut m = base.clone();
        for _ in 0..8 {
            m = subdivide_once(&m).unwrap();
        }
        let topo = base.topology();
        for v in 0..8 {
            let fan = &topo.fan(v).unwrap().faces;
            let n = fan.len() as f64;
            let mut acc = n * n * base.vertices()[v];
            for &(f, k) in fan {
                let face = base.faces()[f];
                acc += 4.0 * base.vertices()[face[(k + 1) % 4]] + base.vertices()[face[(k + 2) % 4]];
            }
            let limit = acc / (n * (n + 5.0));
            let rel = (m.vertices()[v] - limit).norm() / limit.norm();
            assert!(rel < 1e-6, "vertex {v}: {rel}");
        }
    }

    proptest! {
        #[test]
        fn affine_invariance(
            a in proptest::array::uniform9(-2.0f64..2.0),
            t in proptest::array::uniform3(-5.0f64..5.0),
        ) {
            let m = Matrix3::from_row_slice(&a);
            let t = Vec3::from(t);
            let base = subdivide_once(&cube()).unwrap();
            let moved = base.map_positions(|p| m * p + t);
            let s1 = subdivide_once(&moved).unwrap();
            let s2 = subdivide_once(&base).unwrap().map_positions(|p| m * p + t);
            let scale = 1.0 + m.norm() + t.norm();
            for (p, q) in s1.vertices().iter().zip(s2.vertices()) {
                prop_assert!((p - q).norm() <= 1e-12 * scale * 4.0);
            }
        }
    }
}
