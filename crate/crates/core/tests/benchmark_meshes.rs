use shellvib_core::mesh::{build_patches, generate_benchmark_mesh, BenchmarkSpec, RoofSpec, SphereSpec};
use shellvib_core::subd::{eval_patch_jet, Order};

/// Max and RMS of | |x| - R | / R over 4x4 samples per element.
fn radial_error(level: usize, radius: f64) -> (f64, f64) {
    let m = generate_benchmark_mesh(&BenchmarkSpec::Sphere(SphereSpec { radius, level })).unwrap();
    let ps = build_patches(&m).unwrap();
    let (mut max, mut sum, mut n) = (0.0f64, 0.0, 0);
    for p in &ps.patches {
        for q in 0..16 {
            let u = ((q % 4) as f64 + 0.5) / 4.0;
            let v = ((q / 4) as f64 + 0.5) / 4.0;
            let (_, s) = eval_patch_jet(p, ps.mesh.vertices(), u, v, Order::Value).unwrap();
            let e = (s.x.norm() - radius).abs() / radius;
            max = max.max(e);
            sum += e * e;
            n += 1;
        }
    }
    (max, (sum / n as f64).sqrt())
}

#[test]
fn sphere_counts_per_level() {
    for (level, faces) in [(4, 1536), (5, 6144)] {
        let m = generate_benchmark_mesh(&BenchmarkSpec::Sphere(SphereSpec { radius: 0.1135, level })).unwrap();
        assert_eq!(m.num_faces(), faces);
        assert_eq!(m.extraordinary_vertices().len(), 8);
        assert!(m.extraordinary_vertices().iter().all(|&v| m.valence(v) == 3));
        let ps = build_patches(&m).unwrap();
        assert_eq!(ps.isolation_steps, 0);
        assert_eq!(ps.patches.len(), faces);
        assert_eq!(ps.num_irregular(), 24);
    }
}

#[test]
fn sphere_limit_surface_is_round() {
    let (max, _) = radial_error(4, 0.1135);
    assert!(max <= 1e-4, "level 4 radial error {max}");
}

#[test]
fn sphere_fit_improves_with_level() {
    let r3 = radial_error(3, 1.0).1;
    let r4 = radial_error(4, 1.0).1;
    let r5 = radial_error(5, 1.0).1;
    assert!(r4 < r3 && r5 < r4, "{r3} {r4} {r5}");
}

fn roof_radial_error(n: usize) -> f64 {
    let spec = RoofSpec { length: 0.5, radius: 0.25, half_angle: 40f64.to_radians(), n };
    let m = generate_benchmark_mesh(&BenchmarkSpec::Roof(spec)).unwrap();
    let ps = build_patches(&m).unwrap();
    let mut worst = 0.0f64;
    for p in &ps.patches {
        for &(u, v) in &[(0.5, 0.5), (0.0, 0.0), (1.0, 0.25)] {
            let (x, y) = p.to_patch_coords(u, v);
            let (_, s) = eval_patch_jet(p, ps.mesh.vertices(), x, y, Order::Value).unwrap();
            let r = (s.x.x * s.x.x + s.x.z * s.x.z).sqrt();
            worst = worst.max((r - spec.radius).abs() / spec.radius);
            assert!(s.x.y > -1e-9 && s.x.y < spec.length + 1e-9);
        }
    }
    worst
}

#[test]
fn roof_limit_surface_lies_on_cylinder() {
    // Reflected ghosts flatten the surface at the free edges, so the error
    // is dominated by the boundary and falls quadratically with n.
    let e16 = roof_radial_error(16);
    let e32 = roof_radial_error(32);
    assert!(e16 < 1e-3, "{e16}");
    assert!(e32 < 0.3 * e16, "{e16} {e32}");
}
