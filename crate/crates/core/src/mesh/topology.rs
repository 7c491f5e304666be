use std::collections::HashMap;

use crate::{Error, Result};

/// Incident faces of a vertex in counter-clockwise order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fan {
    /// (face, corner) pairs with `faces[face][corner] == v`.
    pub faces: Vec<(usize, usize)>,
    /// True when the fan is open, i.e. the vertex lies on the boundary. The
    /// first face then owns the boundary edge leaving `v`.
    pub open: bool,
}

/// Derived adjacency of a quad mesh.
#[derive(Clone, Debug)]
pub struct Topology {
    half_edges: HashMap<(usize, usize), (usize, usize)>,
    edges: Vec<(usize, usize)>,
    edge_index: HashMap<(usize, usize), usize>,
    valence: Vec<usize>,
    boundary: Vec<bool>,
    fans: Vec<Fan>,
    num_boundary_edges: usize,
}

impl Topology {
    pub fn build(num_vertices: usize, faces: &[[usize; 4]]) -> Result<Topology> {
        let mut half_edges = HashMap::with_capacity(faces.len() * 4);
        let mut incident: Vec<Vec<(usize, usize)>> = vec![Vec::new(); num_vertices];
        for (f, face) in faces.iter().enumerate() {
            for k in 0..4 {
                let v = face[k];
                if v >= num_vertices {
                    return Err(Error::IndexOutOfRange { index: v, len: num_vertices });
                }
                if face[..k].contains(&v) {
                    return Err(Error::QuadOnly {
                        face: f,
                        reason: format!("repeated vertex {v}"),
                    });
                }
            }
            for k in 0..4 {
                let key = (face[k], face[(k + 1) % 4]);
                if half_edges.insert(key, (f, k)).is_some() {
                    return Err(Error::NonManifold(key.0, key.1));
                }
                incident[face[k]].push((f, k));
            }
        }

        let mut edges = Vec::new();
        let mut edge_index = HashMap::with_capacity(faces.len() * 2);
        let mut valence = vec![0; num_vertices];
        let mut boundary = vec![false; num_vertices];
        let mut num_boundary_edges = 0;
        for face in faces {
            for k in 0..4 {
                let (a, b) = (face[k], face[(k + 1) % 4]);
                let key = (a.min(b), a.max(b));
                if edge_index.contains_key(&key) {
                    continue;
                }
                edge_index.insert(key, edges.len());
                edges.push(key);
                valence[a] += 1;
                valence[b] += 1;
                if !half_edges.contains_key(&(b, a)) {
                    num_boundary_edges += 1;
                    boundary[a] = true;
                    boundary[b] = true;
                }
            }
        }

        let mut fans = Vec::with_capacity(num_vertices);
        for v in 0..num_vertices {
            fans.push(walk_fan(v, faces, &half_edges, &incident[v])?);
        }

        Ok(Topology {
            half_edges,
            edges,
            edge_index,
            valence,
            boundary,
            fans,
            num_boundary_edges,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.valence.len()
    }

    /// Face and corner owning the directed edge `a -> b`.
    pub fn half_edge(&self, a: usize, b: usize) -> Option<(usize, usize)> {
        self.half_edges.get(&(a, b)).copied()
    }

    /// Undirected edges as (min, max) pairs in order of first appearance.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_index.get(&(a.min(b), a.max(b))).copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.num_boundary_edges
    }

    pub fn is_boundary_edge(&self, a: usize, b: usize) -> bool {
        self.half_edges.contains_key(&(a, b)) != self.half_edges.contains_key(&(b, a))
    }

    pub fn valence(&self, v: usize) -> usize {
        self.valence[v]
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary[v]
    }

    pub fn face_count(&self, v: usize) -> usize {
        self.fans[v].faces.len()
    }

    pub fn fan(&self, v: usize) -> Result<&Fan> {
        self.fans
            .get(v)
            .ok_or(Error::IndexOutOfRange { index: v, len: self.fans.len() })
    }

    /// Faces on both sides of edge (a, b); the second is `None` on the boundary.
    pub fn edge_faces(&self, a: usize, b: usize) -> Option<(usize, Option<usize>)> {
        match (self.half_edge(a, b), self.half_edge(b, a)) {
            (Some((f, _)), other) => Some((f, other.map(|o| o.0))),
            (None, Some((f, _))) => Some((f, None)),
            (None, None) => None,
        }
    }
}

fn walk_fan(
    v: usize,
    faces: &[[usize; 4]],
    half_edges: &HashMap<(usize, usize), (usize, usize)>,
    incident: &[(usize, usize)],
) -> Result<Fan> {
    if incident.is_empty() {
        return Ok(Fan { faces: Vec::new(), open: false });
    }
    // An open fan starts at the face whose outgoing edge has no twin.
    let start = incident
        .iter()
        .copied()
        .find(|&(f, k)| !half_edges.contains_key(&(faces[f][(k + 1) % 4], v)));
    let open = start.is_some();
    let mut cur = start.unwrap_or(incident[0]);
    let mut fan = Vec::with_capacity(incident.len());
    loop {
        fan.push(cur);
        let (f, k) = cur;
        let prev = faces[f][(k + 3) % 4];
        match half_edges.get(&(v, prev)) {
            Some(&next) if next == fan[0] => break,
            Some(&next) => {
                if fan.len() > incident.len() {
                    return Err(Error::NonManifold(v, prev));
                }
                cur = next;
            }
            None => break,
        }
    }
    if fan.len() != incident.len() {
        return Err(Error::UnsupportedTopology(format!(
            "vertex {v} joins {} faces that do not form a single fan",
            incident.len()
        )));
    }
    Ok(Fan { faces: fan, open })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fan_is_counter_clockwise() {
        // 2x2 grid, centre vertex 4.
        let faces = [[0, 1, 4, 3], [1, 2, 5, 4], [3, 4, 7, 6], [4, 5, 8, 7]];
        let t = Topology::build(9, &faces).unwrap();
        let fan = t.fan(4).unwrap();
        assert!(!fan.open);
        let order: Vec<usize> = fan.faces.iter().map(|p| p.0).collect();
        // Walking CCW around the centre: each step crosses the edge to the
        // previous corner.
        for w in 0..4 {
            let (f, k) = fan.faces[w];
            let prev = faces[f][(k + 3) % 4];
            let (g, _) = fan.faces[(w + 1) % 4];
            assert!(faces[g].contains(&prev));
        }
        let mut sorted = order.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);

        let corner = t.fan(1).unwrap();
        assert!(corner.open);
        assert_eq!(corner.faces.len(), 2);
        // First face of an open fan owns the outgoing boundary edge.
        let (f, k) = corner.faces[0];
        assert!(t.is_boundary_edge(1, faces[f][(k + 1) % 4]));
    }

    #[test]
    fn three_faces_on_an_edge_is_non_manifold() {
        let faces = [[0, 1, 2, 3], [0, 1, 4, 5]];
        assert!(matches!(Topology::build(6, &faces), Err(Error::NonManifold(0, 1))));
    }

    #[test]
    fn dangling_index() {
        let faces = [[0, 1, 2, 9]];
        assert!(matches!(
            Topology::build(4, &faces),
            Err(Error::IndexOutOfRange { index: 9, len: 4 })
        ));
    }
}
