use super::CsrMatrix;
use crate::Vec3;

/// Nodes at or below this count are ordered as they come.
const LEAF_SIZE: usize = 64;

/// Fill-reducing permutation for a matrix whose unknowns belong to
/// geometric nodes (mesh vertices). Returns `perm` with `perm[new] = old`.
///
/// Nodes are ordered by recursive coordinate bisection with vertex
/// separators numbered last; all unknowns of a node stay contiguous.
pub fn nested_dissection(a: &CsrMatrix, node_of: &[usize], coords: &[Vec3]) -> Vec<usize> {
    let n_nodes = coords.len();
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for i in 0..a.nrows() {
        let ni = node_of[i];
        for &j in a.row(i).0 {
            let nj = node_of[j];
            if ni != nj {
                adj[ni].push(nj);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    let mut node_order = Vec::with_capacity(n_nodes);
    let mut side = vec![0u8; n_nodes];
    let all: Vec<usize> = (0..n_nodes).collect();
    dissect(all, &adj, coords, &mut side, &mut node_order);

    let mut dofs_of: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    for (d, &n) in node_of.iter().enumerate() {
        dofs_of[n].push(d);
    }
    node_order.iter().flat_map(|&n| dofs_of[n].iter().copied()).collect()
}

fn dissect(set: Vec<usize>, adj: &[Vec<usize>], coords: &[Vec3], side: &mut [u8], out: &mut Vec<usize>) {
    if set.len() <= LEAF_SIZE {
        out.extend(set);
        return;
    }
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for &v in &set {
        lo = lo.inf(&coords[v]);
        hi = hi.sup(&coords[v]);
    }
    let axis = (hi - lo).imax();
    if hi[axis] - lo[axis] <= 0.0 {
        out.extend(set);
        return;
    }
    let mut keyed: Vec<(f64, usize)> = set.iter().map(|&v| (coords[v][axis], v)).collect();
    let mid = keyed.len() / 2;
    keyed.select_nth_unstable_by(mid, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    // side: 1 = left, 2 = right, 0 = outside the current set.
    for (k, &(_, v)) in keyed.iter().enumerate() {
        side[v] = if k < mid { 1 } else { 2 };
    }
    let touches = |v: usize, other: u8, side: &[u8]| adj[v].iter().any(|&w| side[w] == other);
    let left_border: Vec<usize> = set.iter().copied().filter(|&v| side[v] == 1 && touches(v, 2, side)).collect();
    let right_border: Vec<usize> = set.iter().copied().filter(|&v| side[v] == 2 && touches(v, 1, side)).collect();
    let sep = if left_border.len() <= right_border.len() { left_border } else { right_border };
    for &v in &sep {
        side[v] = 3;
    }
    let left: Vec<usize> = set.iter().copied().filter(|&v| side[v] == 1).collect();
    let right: Vec<usize> = set.iter().copied().filter(|&v| side[v] == 2).collect();
    for &v in &set {
        side[v] = 0;
    }
    if left.is_empty() || right.is_empty() {
        out.extend(set);
        return;
    }
    dissect(left, adj, coords, side, out);
    dissect(right, adj, coords, side, out);
    out.extend(sep);
}

/// Inverse of a permutation.
pub fn invert(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; perm.len()];
    for (new, &old) in perm.iter().enumerate() {
        inv[old] = new;
    }
    inv
}
