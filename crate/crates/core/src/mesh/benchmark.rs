use super::{fit_limit_surface, subdivide_once, ControlMesh};
use crate::{Error, Result, Vec3};

/// Closed sphere meshed from a subdivided cube.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SphereSpec {
    pub radius: f64,
    pub level: usize,
}

/// Open cylindrical roof. The straight edges run along y with length
/// `length`; the cross-section is a circular arc of `radius` spanning
/// `-half_angle..=half_angle` measured from +z.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoofSpec {
    pub length: f64,
    pub radius: f64,
    pub half_angle: f64,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BenchmarkSpec {
    Sphere(SphereSpec),
    Roof(RoofSpec),
}

/// Fit passes for the sphere; the target moves with the surface.
const SPHERE_FIT_PASSES: usize = 4;

pub fn generate_benchmark_mesh(spec: &BenchmarkSpec) -> Result<ControlMesh> {
    match spec {
        BenchmarkSpec::Sphere(s) => sphere(s),
        BenchmarkSpec::Roof(r) => roof(r),
    }
}

fn sphere(spec: &SphereSpec) -> Result<ControlMesh> {
    let r = spec.radius;
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::BadGeometry(format!("sphere radius {r}")));
    }
    if !(2..=8).contains(&spec.level) {
        return Err(Error::BadGeometry(format!("sphere level {} outside 2..=8", spec.level)));
    }
    let a = r / 3f64.sqrt();
    let corners = [
        [-1., -1., -1.],
        [1., -1., -1.],
        [1., 1., -1.],
        [-1., 1., -1.],
        [-1., -1., 1.],
        [1., -1., 1.],
        [1., 1., 1.],
        [-1., 1., 1.],
    ];
    let vertices = corners.iter().map(|c| a * Vec3::new(c[0], c[1], c[2])).collect();
    let faces = vec![[0, 3, 2, 1], [4, 5, 6, 7], [0, 1, 5, 4], [1, 2, 6, 5], [2, 3, 7, 6], [3, 0, 4, 7]];
    let mut m = ControlMesh::new(vertices, faces)?;
    for _ in 0..spec.level {
        m = subdivide_once(&m)?;
    }
    m = m.map_positions(|p| r * p.normalize());
    for _ in 0..SPHERE_FIT_PASSES {
        let (fitted, _) = fit_limit_surface(&m, |_, _, _, x| r * x.normalize())?;
        m = fitted;
    }
    Ok(m)
}

/// Point of the roof surface at grid coordinates `(s, t)` in `[0, 1]²`,
/// `s` along the length and `t` across the arc.
pub fn roof_point(spec: &RoofSpec, s: f64, t: f64) -> Vec3 {
    let phi = spec.half_angle * (1.0 - 2.0 * t);
    Vec3::new(spec.radius * phi.sin(), spec.length * s, spec.radius * phi.cos())
}

fn roof(spec: &RoofSpec) -> Result<ControlMesh> {
    let ok = spec.length > 0.0
        && spec.radius > 0.0
        && spec.half_angle > 0.0
        && spec.half_angle < std::f64::consts::PI
        && spec.n >= 8;
    if !ok {
        return Err(Error::BadGeometry(format!(
            "roof needs positive length and radius, half angle in (0, pi) and n >= 8; got {spec:?}"
        )));
    }
    let n = spec.n;
    let nf = n as f64;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(roof_point(spec, i as f64 / nf, j as f64 / nf));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut faces = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            faces.push([id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let grid = ControlMesh::new(vertices, faces)?;
    let (fitted, _) = fit_limit_surface(&grid, |f, u, v, _| {
        let (i, j) = ((f % n) as f64, (f / n) as f64);
        roof_point(spec, (i + u) / nf, (j + v) / nf)
    })?;
    Ok(fitted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roof_counts() {
        let spec = RoofSpec { length: 0.5, radius: 0.25, half_angle: 40f64.to_radians(), n: 16 };
        let m = generate_benchmark_mesh(&BenchmarkSpec::Roof(spec)).unwrap();
        assert_eq!(m.num_faces(), 256);
        assert!(!m.is_closed());
        assert!(m.has_ghosts());
        // Four boundary polylines of n edges each.
        assert_eq!(m.topology().num_boundary_edges(), 64);
    }

    #[test]
    fn bad_geometry() {
        let s = SphereSpec { radius: -1.0, level: 3 };
        assert!(matches!(generate_benchmark_mesh(&BenchmarkSpec::Sphere(s)), Err(Error::BadGeometry(_))));
        let r = RoofSpec { length: 1.0, radius: 1.0, half_angle: 0.5, n: 4 };
        assert!(matches!(generate_benchmark_mesh(&BenchmarkSpec::Roof(r)), Err(Error::BadGeometry(_))));
    }

    #[test]
    fn sphere_level_two() {
        let m = generate_benchmark_mesh(&BenchmarkSpec::Sphere(SphereSpec { radius: 2.0, level: 2 })).unwrap();
        assert_eq!(m.num_faces(), 96);
        assert_eq!(m.extraordinary_vertices().len(), 8);
        assert!(m.is_closed());
    }
}
