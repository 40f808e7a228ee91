//! Cross-module invariants of the kinematic line model.

use std::sync::Arc;

use croftonkit_core::estimators::{crofton_area, estimate_hit_distribution};
use croftonkit_core::exec::Sequential;
use croftonkit_core::intersect::intersect;
use croftonkit_core::sampler::{KinematicLineSampler, RandomStream};
use croftonkit_core::{ConvexBody, Region, SurfacePatch, Vector};
use proptest::prelude::*;

fn unit_sphere() -> Arc<ConvexBody> {
    Arc::new(ConvexBody::unit_sphere(3).unwrap())
}

fn axis(x: f64, y: f64, z: f64) -> Vector {
    Vector::from_column_slice(&[x, y, z])
}

#[test]
fn acceptance_rate_matches_shadow_ratio() {
    for (n, radius) in [(3usize, 2.0f64), (4, 1.5)] {
        let body = Arc::new(ConvexBody::unit_sphere(n).unwrap());
        let mut sampler = KinematicLineSampler::with_radius(body, radius);
        let mut rng = RandomStream::new(3, 0);
        for _ in 0..50_000 {
            sampler.sample_line(&mut rng).unwrap();
        }
        let stats = sampler.stats();
        let p = radius.powi(1 - n as i32);
        let se = (p * (1.0 - p) / stats.proposals as f64).sqrt();
        assert!((stats.acceptance_rate() - p).abs() < 3.0 * se, "n = {n}: {} vs {p}", stats.acceptance_rate());
    }
}

#[test]
fn translated_scaled_hemisphere_area() {
    let body = Arc::new(ConvexBody::sphere(axis(3.0, -1.0, 2.0), 0.5).unwrap());
    let cut = SurfacePatch::new(body, Region::half_space(axis(0.0, 0.0, 1.0), 2.0).unwrap()).unwrap();
    let report = crofton_area(&Sequential, &cut, 200_000, 8).unwrap();
    let exact = 2.0 * std::f64::consts::PI * 0.25;
    assert!(report.within(exact, 3.0), "{} +- {} vs {exact}", report.estimate, report.stderr);
}

#[test]
fn reruns_are_bitwise_identical() {
    let patch = SurfacePatch::new(unit_sphere(), Region::cap(axis(1.0, 0.0, 0.0), 0.1).unwrap()).unwrap();
    let a = estimate_hit_distribution(&Sequential, &patch, 40_000, 17).unwrap();
    let b = estimate_hit_distribution(&Sequential, &patch, 40_000, 17).unwrap();
    let c = estimate_hit_distribution(&Sequential, &patch, 40_000, 18).unwrap();
    assert_eq!(a.counts, b.counts);
    assert_ne!(a.counts, c.counts);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn nested_patches_have_nested_counts(t_outer in -0.9f64..0.9, gap in 0.0f64..0.5, seed in any::<u64>()) {
        let t_inner = (t_outer + gap).min(1.0);
        let outer = Region::cap(axis(0.0, 0.6, 0.8), t_outer).unwrap();
        let inner = Region::cap(axis(0.0, 0.6, 0.8), t_inner).unwrap();
        let mut sampler = KinematicLineSampler::new(unit_sphere());
        let mut rng = RandomStream::new(seed, 0);
        for _ in 0..200 {
            let (line, _) = sampler.sample_line(&mut rng).unwrap();
            let record = intersect(&ConvexBody::unit_sphere(3).unwrap(), &line).unwrap();
            let count = |r: &Region| record.points().filter(|p| r.contains(p)).count();
            prop_assert!(count(&inner) <= count(&outer));
        }
    }

    #[test]
    fn complement_counts_sum_to_two(t in -1.0f64..1.0, seed in any::<u64>()) {
        let region = Region::cap(axis(1.0, 1.0, 0.0), t).unwrap();
        let complement = region.clone().complement();
        let mut sampler = KinematicLineSampler::new(unit_sphere());
        let mut rng = RandomStream::new(seed, 1);
        for _ in 0..200 {
            let (_, record) = sampler.sample_line(&mut rng).unwrap();
            let inside = record.points().filter(|p| region.contains(p)).count();
            let outside = record.points().filter(|p| complement.contains(p)).count();
            prop_assert_eq!(inside + outside, 2);
        }
    }
}
