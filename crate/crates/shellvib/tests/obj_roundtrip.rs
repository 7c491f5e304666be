use proptest::prelude::*;
use shellvib::core::mesh::{generate_benchmark_mesh, BenchmarkSpec, RoofSpec};
use shellvib::core::Vec3;
use shellvib::obj::{read_obj, write_obj};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn written_meshes_read_back_exactly(
        length in 0.01f64..100.0,
        radius in 0.01f64..100.0,
        half_angle in 0.1f64..3.0,
        n in 8usize..12,
        noise in prop::collection::vec(-1.0f64..1.0, 3 * 13 * 13),
    ) {
        let roof = generate_benchmark_mesh(&BenchmarkSpec::Roof(RoofSpec { length, radius, half_angle, n })).unwrap();
        let mut vertices = roof.without_ghosts().vertices().to_vec();
        for (i, v) in vertices.iter_mut().enumerate() {
            *v += 1e-3 * radius * Vec3::new(noise[3 * i], noise[3 * i + 1], noise[3 * i + 2]);
        }
        let mesh = shellvib::core::mesh::ControlMesh::new(vertices, roof.without_ghosts().faces().to_vec()).unwrap();

        let mut buf = Vec::new();
        write_obj(&mut buf, &mesh).unwrap();
        let back = read_obj(buf.as_slice()).unwrap();
        let expected = mesh.without_ghosts();
        prop_assert_eq!(back.faces(), expected.faces());
        prop_assert_eq!(back.vertices(), expected.vertices());
    }
}
