use alloc::sync::Arc;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use super::relative_error;
use crate::exec::{run_chunked, Executor, StreamFamily};
use crate::geom::{basis, sigma_exact, ConvexBody, Region, SurfacePatch};
use crate::sampler::{BoundarySampler, KinematicLineSampler, PatchSampler};
use crate::stats::{EstimatorReport, MeanAccumulator};
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// The constant `c_n` linking joint hit probabilities of disjoint sphere
/// patches to `int_A int_B |x - y|^(3 - n) dsigma dsigma`, measured on a
/// hemisphere and its complement.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PairCalibration {
    pub dim: usize,
    pub constant: EstimatorReport,
    pub joint: EstimatorReport,
    pub kernel_integral: EstimatorReport,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct PairHitResult {
    /// `P(l meets A and l meets B)`, direct Monte Carlo.
    pub joint: EstimatorReport,
    /// `int_A int_B |x - y|^(3 - n)` in normalized measure.
    pub kernel_integral: EstimatorReport,
    /// `c_n * kernel_integral`, the joint probability predicted by the kernel.
    pub predicted: EstimatorReport,
    pub calibration: PairCalibration,
}

fn sphere_dim(patch: &SurfacePatch) -> Result<usize> {
    patch.body().unit_sphere_dim().ok_or(Error::NotASphere)
}

fn joint_probability<E: Executor + ?Sized>(
    exec: &E,
    a: &SurfacePatch,
    b: &SurfacePatch,
    lines: usize,
    seed: u64,
    family: StreamFamily,
) -> Result<EstimatorReport> {
    let base = KinematicLineSampler::new(a.body_arc().clone());
    let (ra, rb) = (a.region(), b.region());
    let acc = run_chunked(
        exec,
        lines,
        seed,
        family,
        |rng, len| {
            let mut sampler = base.clone();
            let mut acc = MeanAccumulator::default();
            for _ in 0..len {
                let (_, record) = sampler.sample_line(rng)?;
                let hit_a = record.points().any(|p| ra.contains(p));
                let hit_b = record.points().any(|p| rb.contains(p));
                acc.push(if hit_a && hit_b { 1.0 } else { 0.0 });
            }
            Ok(acc)
        },
        |acc, part| acc.merge(&part),
    )?;
    Ok(EstimatorReport::from_mean(&acc, seed))
}

/// `sigma(A)`: closed form where available, else the fraction of uniform
/// sphere points inside `A`.
fn sigma<E: Executor + ?Sized>(exec: &E, patch: &SurfacePatch, samples: usize, seed: u64, family: StreamFamily) -> Result<EstimatorReport> {
    if let Some(s) = sigma_exact(patch)? {
        return Ok(EstimatorReport::new(s, 0.0, 0, seed));
    }
    let sampler = BoundarySampler::new(patch.body_arc().clone())?;
    let region = patch.region();
    let acc = run_chunked(
        exec,
        samples,
        seed,
        family,
        |rng, len| {
            let mut acc = MeanAccumulator::default();
            for _ in 0..len {
                acc.push(if region.contains(&sampler.sample(rng)?) { 1.0 } else { 0.0 });
            }
            Ok(acc)
        },
        |acc, part| acc.merge(&part),
    )?;
    Ok(EstimatorReport::from_mean(&acc, seed))
}

fn kernel_integral<E: Executor + ?Sized>(
    exec: &E,
    a: &SurfacePatch,
    b: &SurfacePatch,
    pairs: usize,
    seed: u64,
    family: StreamFamily,
) -> Result<EstimatorReport> {
    let n = sphere_dim(a)?;
    let exponent = 3.0 - n as f64;
    let (sa, sb) = (PatchSampler::new(a)?, PatchSampler::new(b)?);
    let acc = run_chunked(
        exec,
        pairs,
        seed,
        family,
        |rng, len| {
            let mut acc = MeanAccumulator::default();
            for _ in 0..len {
                let x = sa.sample(rng)?;
                let y = sb.sample(rng)?;
                acc.push((&x - &y).norm().powf(exponent));
            }
            Ok(acc)
        },
        |acc, part| acc.merge(&part),
    )?;
    let mean = EstimatorReport::from_mean(&acc, seed);
    let sig_a = sigma(exec, a, pairs, seed, family.sub(1))?;
    let sig_b = sigma(exec, b, pairs, seed, family.sub(2))?;
    let value = sig_a.estimate * sig_b.estimate * mean.estimate;
    let rel = relative_error(&[
        (sig_a.estimate, sig_a.stderr, 1.0),
        (sig_b.estimate, sig_b.stderr, 1.0),
        (mean.estimate, mean.stderr, 1.0),
    ]);
    Ok(EstimatorReport::new(value, value.abs() * rel, acc.count(), seed))
}

/// Calibrates `c_n` on `S^(n-1)` with `A = {x_1 >= 0}`, `B = A^c`.
pub fn calibrate_pair_constant<E: Executor + ?Sized>(
    exec: &E,
    dim: usize,
    lines: usize,
    pairs: usize,
    seed: u64,
) -> Result<PairCalibration> {
    let sphere = Arc::new(ConvexBody::unit_sphere(dim)?);
    let a = SurfacePatch::new(sphere, Region::cap(basis(dim, 0), 0.0)?)?;
    let b = a.complement();
    let joint = joint_probability(exec, &a, &b, lines, seed, StreamFamily::CALIBRATION_LINES)?;
    let integral = kernel_integral(exec, &a, &b, pairs, seed, StreamFamily::CALIBRATION_PAIRS)?;
    let value = joint.estimate / integral.estimate;
    let rel = relative_error(&[(joint.estimate, joint.stderr, 1.0), (integral.estimate, integral.stderr, 1.0)]);
    Ok(PairCalibration {
        dim,
        constant: EstimatorReport::new(value, value * rel, joint.n_samples, seed),
        joint,
        kernel_integral: integral,
    })
}

/// Joint hit probability of two disjoint patches of one unit sphere,
/// alongside the kernel integral and the probability it predicts.
pub fn pair_hit_probability<E: Executor + ?Sized>(
    exec: &E,
    a: &SurfacePatch,
    b: &SurfacePatch,
    lines: usize,
    pairs: usize,
    seed: u64,
) -> Result<PairHitResult> {
    let n = sphere_dim(a)?;
    let calibration = calibrate_pair_constant(exec, n, lines, pairs, seed)?;
    pair_hit_probability_with(exec, a, b, &calibration, lines, pairs, seed)
}

/// As [`pair_hit_probability`] with a previously measured `c_n`.
pub fn pair_hit_probability_with<E: Executor + ?Sized>(
    exec: &E,
    a: &SurfacePatch,
    b: &SurfacePatch,
    calibration: &PairCalibration,
    lines: usize,
    pairs: usize,
    seed: u64,
) -> Result<PairHitResult> {
    let n = sphere_dim(a)?;
    if sphere_dim(b)? != n || calibration.dim != n {
        return Err(Error::DimensionMismatch { expected: n, found: sphere_dim(b)?.max(calibration.dim) });
    }
    check_disjoint(exec, a, b, pairs.min(10_000), seed)?;
    let joint = joint_probability(exec, a, b, lines, seed, StreamFamily::LINES)?;
    let integral = kernel_integral(exec, a, b, pairs, seed, StreamFamily::PAIRS)?;
    let c = &calibration.constant;
    let value = c.estimate * integral.estimate;
    let rel = relative_error(&[(c.estimate, c.stderr, 1.0), (integral.estimate, integral.stderr, 1.0)]);
    let predicted = EstimatorReport::new(value, value.abs() * rel, integral.n_samples, seed);
    Ok(PairHitResult { joint, kernel_integral: integral, predicted, calibration: calibration.clone() })
}

fn check_disjoint<E: Executor + ?Sized>(exec: &E, a: &SurfacePatch, b: &SurfacePatch, probes: usize, seed: u64) -> Result<()> {
    let (sa, sb) = (PatchSampler::new(a)?, PatchSampler::new(b)?);
    let (ra, rb) = (a.region(), b.region());
    run_chunked(
        exec,
        probes,
        seed,
        StreamFamily::PILOT,
        |rng, len| {
            for _ in 0..len {
                if rb.contains(&sa.sample(rng)?) || ra.contains(&sb.sample(rng)?) {
                    return Err(Error::OverlappingPatches);
                }
            }
            Ok(())
        },
        |_, _| {},
    )
}
