use nalgebra::DMatrix;

use super::{build_patches, ControlMesh, RealSupport};
use crate::sparse::{nested_dissection, CsrMatrix, Ldl};
use crate::subd::{eval_patch_basis, Order};
use crate::{Error, Result, Vec3};

/// Samples per element side used by the least-squares fit.
pub const FIT_SAMPLES_PER_SIDE: usize = 4;

/// Residual statistics of a fit, measured at the fit samples.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FitReport {
    pub samples: usize,
    pub rms: f64,
    pub max: f64,
}

/// Least-squares fit of the limit surface to a target.
///
/// `target(face, u, v, current)` returns the desired point for the sample
/// at face-corner coordinates `(u, v)` of element `face`, given the current
/// limit point there. The fit samples a uniform grid of
/// [`FIT_SAMPLES_PER_SIDE`]² points per element. Ghost vertices follow
/// their reflection relation. The returned mesh is the analysis mesh of
/// [`build_patches`] (with ghost ring when open); the report measures the
/// residual after the update.
pub fn fit_limit_surface(
    mesh: &ControlMesh,
    target: impl Fn(usize, f64, f64, &Vec3) -> Vec3,
) -> Result<(ControlMesh, FitReport)> {
    let ps = build_patches(mesh)?;
    let m = &ps.mesh;
    let nr = m.num_real_vertices();
    let supports = ps.supports();
    let s = FIT_SAMPLES_PER_SIDE;

    // Per-element sample basis (rows) over the element's real support.
    let mut blocks: Vec<DMatrix<f64>> = Vec::with_capacity(ps.patches.len());
    let mut targets: Vec<Vec<Vec3>> = Vec::with_capacity(ps.patches.len());
    for (patch, sup) in ps.patches.iter().zip(&supports) {
        let mut rows = DMatrix::zeros(s * s, sup.len());
        let mut t = Vec::with_capacity(s * s);
        for q in 0..s * s {
            let u = ((q % s) as f64 + 0.5) / s as f64;
            let v = ((q / s) as f64 + 0.5) / s as f64;
            let (x, y) = patch.to_patch_coords(u, v);
            let b = eval_patch_basis(patch, x, y, Order::Value)?;
            let folded = sup.fold_jet(&b.jet);
            let mut current = Vec3::zeros();
            for (r, j) in folded.iter().enumerate() {
                rows[(q, r)] = j[0];
                current += j[0] * m.vertices()[sup.vertices[r]];
            }
            t.push(target(patch.face, u, v, &current));
        }
        blocks.push(rows);
        targets.push(t);
    }

    let mut normal = CsrMatrix::from_pattern(nr, nr, ps.vertex_graph(&supports));
    let mut rhs = vec![[0.0; 3]; nr];
    for ((rows, t), sup) in blocks.iter().zip(&targets).zip(&supports) {
        let ntn = rows.tr_mul(rows);
        for (a, &va) in sup.vertices.iter().enumerate() {
            for (b, &vb) in sup.vertices.iter().enumerate() {
                normal.add_at(va, vb, ntn[(a, b)]);
            }
            for (q, tq) in t.iter().enumerate() {
                for c in 0..3 {
                    rhs[va][c] += rows[(q, a)] * tq[c];
                }
            }
        }
    }

    let coords: Vec<Vec3> = m.vertices()[..nr].to_vec();
    let node_of: Vec<usize> = (0..nr).collect();
    let perm = nested_dissection(&normal, &node_of, &coords);
    let ldl = Ldl::factor(&normal, perm, 1e-12).map_err(|e| match e {
        Error::SingularStiffness { null_space } => Error::FitSingular { null_space },
        other => other,
    })?;
    let mut solved = vec![Vec3::zeros(); nr];
    for c in 0..3 {
        let b: Vec<f64> = rhs.iter().map(|r| r[c]).collect();
        let x = ldl.solve(&b);
        for (p, xv) in solved.iter_mut().zip(x) {
            p[c] = xv;
        }
    }
    let fitted = m.with_positions(&solved)?;
    let report = residual(&fitted, &blocks, &targets, &supports);
    Ok((fitted, report))
}

fn residual(mesh: &ControlMesh, blocks: &[DMatrix<f64>], targets: &[Vec<Vec3>], supports: &[RealSupport]) -> FitReport {
    let mut sum = 0.0;
    let mut max: f64 = 0.0;
    let mut count = 0;
    for ((rows, t), sup) in blocks.iter().zip(targets).zip(supports) {
        for (q, tq) in t.iter().enumerate() {
            let mut x = Vec3::zeros();
            for (r, &v) in sup.vertices.iter().enumerate() {
                x += rows[(q, r)] * mesh.vertices()[v];
            }
            let e = (x - tq).norm();
            sum += e * e;
            max = max.max(e);
            count += 1;
        }
    }
    FitReport { samples: count, rms: (sum / count.max(1) as f64).sqrt(), max }
}
