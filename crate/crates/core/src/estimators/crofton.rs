use alloc::sync::Arc;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use super::{crofton_constant, relative_error};
use crate::exec::{run_chunked, Executor, StreamFamily};
use crate::geom::{sigma_exact, sphere_area, ConvexBody, SurfacePatch};
use crate::intersect::intersect;
use crate::sampler::{KinematicLineSampler, PatchSampler, RandomStream, SamplerStats};
use crate::stats::{EstimatorReport, MeanAccumulator};
use crate::curvature::kernel_from_normals;
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Frequencies of 0, 1 and 2 patch crossings among lines meeting the body.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct HitDistribution {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
    pub stderr0: f64,
    pub stderr1: f64,
    pub stderr2: f64,
    /// Raw counts of 0, 1, 2 crossings.
    pub counts: [u64; 3],
    /// Lines with more than two crossings in the patch (non-convex meshes only).
    pub excess: u64,
    pub n_samples: u64,
    pub seed: u64,
    pub acceptance_rate: f64,
}

impl HitDistribution {
    fn from_counts(counts: [u64; 3], excess: u64, seed: u64, stats: SamplerStats) -> Self {
        let n = counts.iter().sum::<u64>() + excess;
        let p = counts.map(|c| c as f64 / n as f64);
        let se = p.map(|q| (q * (1.0 - q) / n as f64).sqrt());
        Self {
            p0: p[0],
            p1: p[1],
            p2: p[2],
            stderr0: se[0],
            stderr1: se[1],
            stderr2: se[2],
            counts,
            excess,
            n_samples: n,
            seed,
            acceptance_rate: stats.acceptance_rate(),
        }
    }

    /// `E[n_l(A)] = p1 + 2 p2` with its standard error.
    pub fn mean_hits(&self) -> (f64, f64) {
        let n = self.n_samples as f64;
        let mean = self.p1 + 2.0 * self.p2;
        let second = self.p1 + 4.0 * self.p2;
        (mean, ((second - mean * mean) * n / (n - 1.0)).max(0.0).sqrt() / n.sqrt())
    }
}

#[derive(Default)]
struct HitCounts {
    counts: [u64; 3],
    excess: u64,
    stats: SamplerStats,
}

/// Empirical law of `n_l(A)` over `samples` kinematic lines meeting the body.
pub fn estimate_hit_distribution<E: Executor + ?Sized>(
    exec: &E,
    patch: &SurfacePatch,
    samples: usize,
    seed: u64,
) -> Result<HitDistribution> {
    let base = KinematicLineSampler::new(patch.body_arc().clone());
    let region = patch.region();
    let total = run_chunked(
        exec,
        samples,
        seed,
        StreamFamily::LINES,
        |rng, len| {
            let mut sampler = base.clone();
            let mut out = HitCounts::default();
            for _ in 0..len {
                let (_, record) = sampler.sample_line(rng)?;
                match record.points().filter(|p| region.contains(p)).count() {
                    k @ 0..=2 => out.counts[k] += 1,
                    _ => out.excess += 1,
                }
            }
            out.stats = sampler.stats();
            Ok(out)
        },
        |acc, part| {
            for k in 0..3 {
                acc.counts[k] += part.counts[k];
            }
            acc.excess += part.excess;
            acc.stats.merge(&part.stats);
        },
    )?;
    Ok(HitDistribution::from_counts(total.counts, total.excess, seed, total.stats))
}

/// Mean of `f(n_l(A))` over unconditioned lines meeting the body's
/// bounding ball; tangential proposals are redrawn.
fn ball_line_mean<E, F>(
    exec: &E,
    patch: &SurfacePatch,
    samples: usize,
    seed: u64,
    family: StreamFamily,
    f: F,
) -> Result<(MeanAccumulator, SamplerStats, f64)>
where
    E: Executor + ?Sized,
    F: Fn(usize) -> f64 + Sync,
{
    let base = KinematicLineSampler::new(patch.body_arc().clone());
    let radius = base.bounding_radius();
    let body = patch.body();
    let region = patch.region();
    let (acc, stats) = run_chunked(
        exec,
        samples,
        seed,
        family,
        |rng, len| {
            let mut acc = MeanAccumulator::default();
            let mut stats = SamplerStats::default();
            let mut done = 0;
            while done < len {
                let line = base.propose(rng);
                stats.proposals += 1;
                let record = intersect(body, &line)?;
                if record.is_degenerate() {
                    continue;
                }
                if !record.is_empty() {
                    stats.accepted += 1;
                }
                acc.push(f(record.points().filter(|p| region.contains(p)).count()));
                done += 1;
            }
            Ok((acc, stats))
        },
        |acc: &mut (MeanAccumulator, SamplerStats), part| {
            acc.0.merge(&part.0);
            acc.1.merge(&part.1);
        },
    )?;
    Ok((acc, stats, radius))
}

/// Surface area of a patch from the mean crossing count.
///
/// Lines are drawn from every line meeting the body's bounding ball of
/// radius `R` (misses included), whose kinematic measure is `R^(n-1)`
/// times that of the unit sphere, so
/// `H^(n-1)(A) = |S^(n-1)| / 2 * R^(n-1) * E[n_l(A)]`. For the unit sphere
/// `R = 1` and the factor is `2 pi` in `R^3`; for other bodies the bounding
/// ball is the calibration reference.
pub fn crofton_area<E: Executor + ?Sized>(exec: &E, patch: &SurfacePatch, samples: usize, seed: u64) -> Result<EstimatorReport> {
    let n = patch.body().dim();
    let (acc, stats, radius) = ball_line_mean(exec, patch, samples, seed, StreamFamily::LINES, |k| k as f64)?;
    let factor = crofton_constant(n) * radius.powi(n as i32 - 1);
    Ok(EstimatorReport::from_mean(&acc, seed)
        .scaled(factor)
        .with_meta("method", "bounding-ball calibration")
        .with_meta("bounding_radius", radius)
        .with_meta("factor", factor)
        .with_meta("acceptance_rate", stats.acceptance_rate()))
}

/// Mean of the kernel `F(x, y)` over independent uniform pairs on a patch.
///
/// Pairs closer than the kernel guard are redrawn.
pub fn kernel_mean<E: Executor + ?Sized>(
    exec: &E,
    patch: &SurfacePatch,
    pairs: usize,
    seed: u64,
    family: StreamFamily,
) -> Result<MeanAccumulator> {
    let sampler = PatchSampler::new(patch)?;
    let body = patch.body();
    let guard = crate::curvature::KERNEL_GUARD * body.scale();
    run_chunked(
        exec,
        pairs,
        seed,
        family,
        |rng: &mut RandomStream, len| {
            let mut acc = MeanAccumulator::default();
            while acc.count() < len as u64 {
                let x = sampler.sample(rng)?;
                let y = sampler.sample(rng)?;
                if (&x - &y).norm() < guard {
                    continue;
                }
                let (nx, ny) = (body.outward_normal(&x), body.outward_normal(&y));
                acc.push(kernel_from_normals(&x, &nx, &y, &ny));
            }
            Ok(acc)
        },
        |acc, part| acc.merge(&part),
    )
}

/// The constant `c*` of the quadratic Crofton identity, measured on the
/// whole unit sphere where both sides are known in closed form up to it.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct QuadCroftonCalibration {
    pub dim: usize,
    pub constant: f64,
    pub stderr: f64,
    pub lines: u64,
    pub pairs: u64,
    pub seed: u64,
}

/// Both sides of the quadratic Crofton identity for one patch.
///
/// `lhs = c_n * int n_l(A)^2 dmu - H(A)`,
/// `rhs = c* * H(A)^2 * E[F(X, Y)]` with `X, Y` uniform on `A`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct QuadCroftonResult {
    pub lhs: EstimatorReport,
    pub rhs: EstimatorReport,
    /// `H(A)` used on the right-hand side.
    pub area: EstimatorReport,
    pub kernel_mean: EstimatorReport,
    pub calibration: QuadCroftonCalibration,
}

/// Measures `c*` on `S^(n-1)`.
pub fn calibrate_quad_crofton<E: Executor + ?Sized>(
    exec: &E,
    dim: usize,
    lines: usize,
    pairs: usize,
    seed: u64,
) -> Result<QuadCroftonCalibration> {
    let sphere = SurfacePatch::whole(Arc::new(ConvexBody::unit_sphere(dim)?));
    let (lhs, _, _) = ball_line_mean(exec, &sphere, lines, seed, StreamFamily::CALIBRATION_LINES, |k| (k * k - k) as f64)?;
    let f = kernel_mean(exec, &sphere, pairs, seed, StreamFamily::CALIBRATION_PAIRS)?;
    let c = crofton_constant(dim);
    let area = sphere_area(dim);
    let left = c * lhs.mean();
    let right = area * area * f.mean();
    let constant = left / right;
    let rel = relative_error(&[(left, c * lhs.stderr(), 1.0), (f.mean(), f.stderr(), 1.0)]);
    Ok(QuadCroftonCalibration {
        dim,
        constant,
        stderr: constant * rel,
        lines: lhs.count(),
        pairs: f.count(),
        seed,
    })
}

/// Evaluates both sides of the quadratic Crofton identity on `patch`.
///
/// The left side and the area/kernel factors of the right side use
/// disjoint random streams, so the two sides are independent estimates.
/// `H(A)` is exact for sphere patches with a closed-form measure and a
/// Crofton estimate otherwise.
pub fn quad_crofton_check<E: Executor + ?Sized>(
    exec: &E,
    patch: &SurfacePatch,
    calibration: &QuadCroftonCalibration,
    lines: usize,
    pairs: usize,
    seed: u64,
) -> Result<QuadCroftonResult> {
    let n = patch.body().dim();
    if calibration.dim != n {
        return Err(Error::DimensionMismatch { expected: n, found: calibration.dim });
    }
    let (acc, _, radius) = ball_line_mean(exec, patch, lines, seed, StreamFamily::LINES, |k| (k * k - k) as f64)?;
    let factor = crofton_constant(n) * radius.powi(n as i32 - 1);
    let lhs = EstimatorReport::from_mean(&acc, seed).scaled(factor);

    let exact = match patch.body().unit_sphere_dim() {
        Some(_) => sigma_exact(patch)?,
        None => None,
    };
    let area = match exact {
        Some(sigma) => EstimatorReport::new(sigma * sphere_area(n), 0.0, 0, seed).with_meta("method", "closed form"),
        None => {
            let (a, _, _) = ball_line_mean(exec, patch, lines, seed, StreamFamily::AUXILIARY, |k| k as f64)?;
            EstimatorReport::from_mean(&a, seed).scaled(factor).with_meta("method", "crofton")
        }
    };
    if area.estimate <= 1e-6 * surface_scale(patch.body()) {
        return Err(Error::InvalidPatch("patch area is too small for the kernel integral".into()));
    }
    let f = kernel_mean(exec, patch, pairs, seed, StreamFamily::PAIRS)?;
    let kernel = EstimatorReport::from_mean(&f, seed);
    let value = calibration.constant * area.estimate * area.estimate * f.mean();
    let rel = relative_error(&[
        (calibration.constant, calibration.stderr, 1.0),
        (area.estimate, area.stderr, 2.0),
        (f.mean(), f.stderr(), 1.0),
    ]);
    let rhs = EstimatorReport::new(value, value.abs() * rel, f.count(), seed);
    Ok(QuadCroftonResult { lhs, rhs, area, kernel_mean: kernel, calibration: *calibration })
}

fn surface_scale(body: &ConvexBody) -> f64 {
    body.scale().powi(body.dim() as i32 - 1)
}
