use crate::mesh::Patch;

/// L-shaped rings between the extraordinary corner and the rest of an
/// irregular element.
pub const IRREGULAR_RING_DEPTH: usize = 4;

/// Three-point Gauss-Legendre rule on [0, 1].
const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_31, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.887_298_334_620_741_7, 5.0 / 18.0),
];

/// Quadrature point `(xi, eta, weight)` in patch coordinates.
pub type QuadPoint = (f64, f64, f64);

/// Tensor 3x3 Gauss rule on the square `[x0, x0 + s] x [y0, y0 + s]`.
fn gauss_cell(x0: f64, y0: f64, s: f64, out: &mut Vec<QuadPoint>) {
    for &(py, wy) in &GAUSS3 {
        for &(px, wx) in &GAUSS3 {
            out.push((x0 + s * px, y0 + s * py, s * s * wx * wy));
        }
    }
}

/// Quadrature on the unit parameter square of a patch.
///
/// Regular patches use 3x3 Gauss. Irregular patches split the square into
/// L-shaped rings `[0, 2^-k]² \ [0, 2^-(k+1)]²` for `k < depth`, each made
/// of three cells, plus the innermost square, with 3x3 Gauss on every
/// cell. No point lands on the extraordinary corner.
pub fn quadrature_rule(patch: &Patch) -> Vec<QuadPoint> {
    if patch.is_regular() {
        let mut out = Vec::with_capacity(9);
        gauss_cell(0.0, 0.0, 1.0, &mut out);
        return out;
    }
    let mut out = Vec::with_capacity(9 * (3 * IRREGULAR_RING_DEPTH + 1));
    let mut s = 1.0;
    for _ in 0..IRREGULAR_RING_DEPTH {
        let h = 0.5 * s;
        gauss_cell(h, 0.0, h, &mut out);
        gauss_cell(h, h, h, &mut out);
        gauss_cell(0.0, h, h, &mut out);
        s = h;
    }
    gauss_cell(0.0, 0.0, s, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::PatchKind;

    fn patch(kind: PatchKind) -> Patch {
        Patch { face: 0, kind, start_corner: 0, control_ids: Vec::new() }
    }

    fn integrate(rule: &[QuadPoint], f: impl Fn(f64, f64) -> f64) -> f64 {
        rule.iter().map(|&(x, y, w)| w * f(x, y)).sum()
    }

    #[test]
    fn regular_rule() {
        let q = quadrature_rule(&patch(PatchKind::Regular));
        assert_eq!(q.len(), 9);
        assert!((integrate(&q, |_, _| 1.0) - 1.0).abs() < 1e-14);
        assert!((integrate(&q, |x, y| x * x * y * y) - 1.0 / 9.0).abs() < 1e-15);
        assert!((integrate(&q, |x, y| x.powi(5) * y.powi(4)) - 1.0 / 30.0).abs() < 1e-15);
    }

    #[test]
    fn irregular_rule() {
        let q = quadrature_rule(&patch(PatchKind::Irregular { valence: 5 }));
        assert_eq!(q.len(), 9 * (3 * 4 + 1));
        assert!((integrate(&q, |_, _| 1.0) - 1.0).abs() < 1e-12);
        assert!(q.iter().all(|&(x, y, w)| x > 0.0 && y > 0.0 && w > 0.0 && x < 1.0 && y < 1.0));
        assert!((integrate(&q, |x, y| x.powi(5) * y.powi(3)) - 1.0 / 24.0).abs() < 1e-15);
        // Rings resolve a corner singularity far better than plain Gauss.
        let plain = quadrature_rule(&patch(PatchKind::Regular));
        let f = |x: f64, y: f64| (x * x + y * y).powf(-0.25);
        let exact = 1.249_986_334_329;
        let err_rings = (integrate(&q, f) - exact).abs();
        let err_plain = (integrate(&plain, f) - exact).abs();
        assert!(err_rings < 0.2 * err_plain, "{err_rings} {err_plain}");
    }
}
