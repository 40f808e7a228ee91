use alloc::sync::Arc;
use alloc::vec::Vec;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use crate::exec::{run_chunked, Executor, StreamFamily};
use crate::geom::ConvexBody;
use crate::sampler::{KinematicLineSampler, RandomStream};
use crate::stats::{EstimatorReport, LinearFit, MeanAccumulator};
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// One point of an empirical chord-length distribution function.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CdfPoint {
    pub d: f64,
    pub cdf: f64,
    pub stderr: f64,
}

/// Empirical law of the chord length `|X - Y|` under the kinematic measure.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ChordCdf {
    pub points: Vec<CdfPoint>,
    pub mean_length: EstimatorReport,
    pub n_samples: u64,
    pub seed: u64,
}

#[derive(Default)]
struct CdfCounts {
    below: Vec<u64>,
    length: MeanAccumulator,
}

/// Chord-length distribution function of `body` evaluated on `grid`
/// (non-decreasing distances).
pub fn chord_cdf<E: Executor + ?Sized>(
    exec: &E,
    body: &Arc<ConvexBody>,
    grid: &[f64],
    samples: usize,
    seed: u64,
) -> Result<ChordCdf> {
    if grid.windows(2).any(|w| w[1] < w[0]) || grid.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument("chord-length grid must be finite and non-decreasing".into()));
    }
    let base = KinematicLineSampler::new(body.clone());
    let total = run_chunked(
        exec,
        samples,
        seed,
        StreamFamily::LINES,
        |rng, len| {
            let mut sampler = base.clone();
            let mut out = CdfCounts { below: alloc::vec![0; grid.len()], ..Default::default() };
            for _ in 0..len {
                let length = sampler.sample_chord(rng)?.length();
                out.length.push(length);
                // grid is sorted: every d at or beyond the first d >= length counts
                let first = grid.partition_point(|&d| d < length);
                out.below[first..].iter_mut().for_each(|c| *c += 1);
            }
            Ok(out)
        },
        |acc, part| {
            if acc.below.is_empty() {
                acc.below = part.below;
            } else {
                acc.below.iter_mut().zip(&part.below).for_each(|(a, b)| *a += b);
            }
            acc.length.merge(&part.length);
        },
    )?;
    let n = total.length.count() as f64;
    let points = grid
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            let p = total.below.get(i).map_or(0.0, |&c| c as f64 / n);
            CdfPoint { d, cdf: p, stderr: (p * (1.0 - p) / n).sqrt() }
        })
        .collect();
    Ok(ChordCdf {
        points,
        mean_length: EstimatorReport::from_mean(&total.length, seed),
        n_samples: total.length.count(),
        seed,
    })
}

/// Moments of a random chord `(X, Y)` of the unit sphere `S^(n-1)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ChordMoments {
    pub dim: usize,
    /// `E<X, Y>`.
    pub dot: EstimatorReport,
    /// `E|X - Y|`.
    pub length: EstimatorReport,
    /// `E|X - Y|^2`.
    pub length_sq: EstimatorReport,
    /// Largest `|<X, Y> - (1 - |X - Y|^2 / 2)|` seen over all samples.
    pub identity_defect: f64,
}

#[derive(Default)]
struct MomentAcc {
    dot: MeanAccumulator,
    length: MeanAccumulator,
    length_sq: MeanAccumulator,
    defect: f64,
}

fn moments_with(
    rng: &mut RandomStream,
    sampler: &mut KinematicLineSampler,
    len: usize,
) -> Result<MomentAcc> {
    let mut acc = MomentAcc::default();
    for _ in 0..len {
        let chord = sampler.sample_chord(rng)?;
        let dot = chord.entry.dot(&chord.exit);
        let sq = (&chord.exit - &chord.entry).norm_squared();
        acc.dot.push(dot);
        acc.length.push(sq.sqrt());
        acc.length_sq.push(sq);
        acc.defect = acc.defect.max((dot - (1.0 - sq / 2.0)).abs());
    }
    Ok(acc)
}

fn merge_moments(acc: &mut MomentAcc, part: MomentAcc) {
    acc.dot.merge(&part.dot);
    acc.length.merge(&part.length);
    acc.length_sq.merge(&part.length_sq);
    acc.defect = acc.defect.max(part.defect);
}

fn moments_in<E: Executor + ?Sized>(
    exec: &E,
    dim: usize,
    samples: usize,
    seed: u64,
    family: StreamFamily,
) -> Result<ChordMoments> {
    let base = KinematicLineSampler::new(Arc::new(ConvexBody::unit_sphere(dim)?));
    let acc = run_chunked(
        exec,
        samples,
        seed,
        family,
        |rng, len| moments_with(rng, &mut base.clone(), len),
        merge_moments,
    )?;
    Ok(ChordMoments {
        dim,
        dot: EstimatorReport::from_mean(&acc.dot, seed),
        length: EstimatorReport::from_mean(&acc.length, seed),
        length_sq: EstimatorReport::from_mean(&acc.length_sq, seed),
        identity_defect: acc.defect,
    })
}

/// Chord moments of `S^(n-1)`.
pub fn chord_moments<E: Executor + ?Sized>(exec: &E, dim: usize, samples: usize, seed: u64) -> Result<ChordMoments> {
    moments_in(exec, dim, samples, seed, StreamFamily::LINES)
}

/// `E<X, Y>` for a random chord of `S^(n-1)`; closed form `(n - 3) / (n + 1)`.
pub fn dot_moment<E: Executor + ?Sized>(exec: &E, dim: usize, samples: usize, seed: u64) -> Result<EstimatorReport> {
    Ok(chord_moments(exec, dim, samples, seed)?.dot)
}

/// Mean chord length across dimensions and its log-log fit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ChordScaling {
    pub dims: Vec<usize>,
    pub mean_length: Vec<EstimatorReport>,
    /// Weighted fit of `log E|X - Y|` against `log n`.
    pub fit: LinearFit,
}

/// `E|X - Y|` on `S^(n-1)` for each `n` in `dims`, each dimension on its
/// own substream family.
pub fn chord_scaling<E: Executor + ?Sized>(exec: &E, dims: &[usize], samples: usize, seed: u64) -> Result<ChordScaling> {
    if dims.len() < 2 {
        return Err(Error::InvalidArgument("chord scaling needs at least two dimensions".into()));
    }
    let mut mean_length = Vec::with_capacity(dims.len());
    for (i, &n) in dims.iter().enumerate() {
        mean_length.push(moments_in(exec, n, samples, seed, StreamFamily::LINES.sub(i as u64))?.length);
    }
    let xs: Vec<f64> = dims.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = mean_length.iter().map(|r| r.estimate.ln()).collect();
    let sigmas: Vec<f64> = mean_length.iter().map(|r| (r.stderr / r.estimate).max(f64::EPSILON)).collect();
    Ok(ChordScaling { dims: dims.to_vec(), mean_length, fit: LinearFit::weighted(&xs, &ys, &sigmas) })
}
