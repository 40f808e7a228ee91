//! Mesh files round-trip into closed convex bodies that behave like the
//! smooth shapes they approximate.

use std::path::Path;
use std::sync::Arc;

use croftonkit::core::estimators::estimate_hit_distribution;
use croftonkit::core::intersect::intersect;
use croftonkit::core::sampler::{uniform_sphere_point, RandomStream};
use croftonkit::core::{ConvexBody, DirectedLine, Region, SurfacePatch, TriangleMesh, Vector};
use croftonkit::mesh_io::{load_mesh, parse_mesh, write_obj, MeshFormat};
use croftonkit::{CliError, Threads};

#[test]
fn fixture_cube_is_closed_with_area_six() {
    let loaded = load_mesh(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/cube.off")).unwrap();
    assert!(loaded.is_closed());
    assert!(loaded.warnings.is_empty());
    assert_eq!((loaded.mesh.vertex_count(), loaded.mesh.face_count()), (8, 12));
    assert!((loaded.mesh.surface_area().unwrap() - 6.0).abs() < 1e-12);
}

#[test]
fn truncated_off_names_the_line() {
    let text = "OFF\n4 4 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n";
    let err = parse_mesh(text, MeshFormat::Off, Path::new("t.off")).unwrap_err();
    match &err {
        CliError::Parse { line, message, .. } => {
            assert_eq!(*line, 8);
            assert!(message.contains("face 2 of 4"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.to_string().starts_with("t.off:8:"));
}

#[test]
fn icosphere_obj_rays_from_inside_cross_twice() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ico.obj");
    std::fs::write(&path, write_obj(&TriangleMesh::icosphere(2))).unwrap();
    let loaded = load_mesh(&path).unwrap();
    assert!(loaded.is_closed());
    let body = ConvexBody::mesh(loaded.mesh);
    let mut rng = RandomStream::new(5, 0);
    for _ in 0..10_000 {
        let anchor = uniform_sphere_point(3, &mut rng) * (0.8 * rng.uniform());
        let line = DirectedLine::new(anchor, uniform_sphere_point(3, &mut rng)).unwrap();
        let record = intersect(&body, &line).unwrap();
        assert_eq!(record.hits.len(), 2);
        assert!(record.hits[0].param < 0.0 && record.hits[1].param > 0.0);
    }
}

#[test]
fn icosphere_hit_distribution_tracks_the_sphere() {
    let exec = Threads::new(2);
    let region = Region::cap(Vector::from_column_slice(&[0.0, 0.0, 1.0]), 0.0).unwrap();
    let mesh = SurfacePatch::new(Arc::new(ConvexBody::mesh(TriangleMesh::icosphere(3))), region.clone()).unwrap();
    let sphere = SurfacePatch::new(Arc::new(ConvexBody::unit_sphere(3).unwrap()), region).unwrap();
    let a = estimate_hit_distribution(&exec, &mesh, 100_000, 9).unwrap();
    let b = estimate_hit_distribution(&exec, &sphere, 100_000, 9).unwrap();
    assert!((a.p0 / b.p0 - 1.0).abs() < 0.02, "{} vs {}", a.p0, b.p0);
    assert!((a.p2 / b.p2 - 1.0).abs() < 0.02, "{} vs {}", a.p2, b.p2);
}
