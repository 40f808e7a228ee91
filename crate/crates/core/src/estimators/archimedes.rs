use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use crate::exec::{run_chunked, Executor, StreamFamily};
use crate::geom::cap_area_exact;
use crate::sampler::uniform_sphere_point;
use crate::stats::{EstimatorReport, LinearFit};
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

/// Monte Carlo area of the cap `{z >= t}` of the unit sphere in `R^3`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ArchimedesRow {
    pub t: f64,
    pub area: EstimatorReport,
    pub exact: f64,
}

/// Cap areas over a grid of heights and a weighted line fit of area
/// against height (exact law: `2 pi (1 - t)`).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ArchimedesTable {
    pub rows: Vec<ArchimedesRow>,
    pub fit: LinearFit,
}

/// Estimates all cap areas from one shared set of uniform sphere points.
pub fn archimedes_check<E: Executor + ?Sized>(exec: &E, heights: &[f64], samples: usize, seed: u64) -> Result<ArchimedesTable> {
    if heights.len() < 2 {
        return Err(Error::InvalidArgument("need at least two cap heights".into()));
    }
    let exact = heights.iter().map(|&t| cap_area_exact(t)).collect::<Result<Vec<_>>>()?;
    let counts = run_chunked(
        exec,
        samples,
        seed,
        StreamFamily::POINTS,
        |rng, len| {
            let mut counts = alloc::vec![0u64; heights.len()];
            for _ in 0..len {
                let z = uniform_sphere_point(3, rng)[2];
                counts.iter_mut().zip(heights).filter(|(_, &t)| z >= t).for_each(|(c, _)| *c += 1);
            }
            Ok(counts)
        },
        |acc: &mut Vec<u64>, part| {
            if acc.is_empty() {
                *acc = part;
            } else {
                acc.iter_mut().zip(&part).for_each(|(a, b)| *a += b);
            }
        },
    )?;
    let n = samples as f64;
    let rows: Vec<ArchimedesRow> = heights
        .iter()
        .zip(exact)
        .enumerate()
        .map(|(i, (&t, exact))| {
            let p = counts[i] as f64 / n;
            let area = EstimatorReport::new(4.0 * PI * p, 4.0 * PI * (p * (1.0 - p) / n).sqrt(), samples as u64, seed);
            ArchimedesRow { t, area, exact }
        })
        .collect();
    // Heights at the poles give zero-variance rows; floor their weight at
    // the binomial error of a single sample.
    let floor = 4.0 * PI / n;
    let sigmas: Vec<f64> = rows.iter().map(|r| r.area.stderr.max(floor)).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.area.estimate).collect();
    let fit = LinearFit::weighted(heights, &ys, &sigmas);
    Ok(ArchimedesTable { rows, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;

    #[test]
    fn caps_follow_linear_law() {
        let heights: Vec<f64> = (0..=8).map(|i| -0.8 + 0.2 * i as f64).collect();
        let table = archimedes_check(&Sequential, &heights, 200_000, 1).unwrap();
        for row in &table.rows {
            assert!(row.area.within(row.exact, 3.0), "{row:?}");
        }
        assert!((table.fit.slope + 2.0 * PI).abs() < 3.0 * table.fit.slope_stderr + 1e-9, "{:?}", table.fit);
        assert!((table.fit.intercept - 2.0 * PI).abs() < 3.0 * table.fit.intercept_stderr + 1e-9);
    }

    #[test]
    fn heights_out_of_range() {
        assert_eq!(archimedes_check(&Sequential, &[0.0, 1.5], 10, 1).unwrap_err(), Error::CapHeightOutOfRange(1.5));
    }
}
