use alloc::sync::Arc;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use crate::exec::{run_chunked, Executor, StreamFamily};
use crate::geom::{ConvexBody, Region, Vector};
use crate::sampler::{BoundarySampler, KinematicLineSampler};
use crate::{Error, Result};

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

const TAU: f64 = 2.0 * PI;

/// Latitude bands by longitude sectors about the `z` axis through a
/// body's center, used to discretize entry and exit points.
///
/// Cells are indexed `band * sectors + sector`, bands from the south.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct CellPartition {
    center: Vec<f64>,
    /// Interior band boundaries as heights above the center, increasing.
    band_edges: Vec<f64>,
    /// Per band: longitude where sector 0 starts.
    sector_origin: Vec<f64>,
    /// Per band: sector start offsets from the origin, `[0, ...)`, increasing.
    sector_offsets: Vec<Vec<f64>>,
    /// Boundary measure fraction of each cell.
    measures: Vec<f64>,
}

fn longitude(x: &Vector, c: &[f64]) -> f64 {
    (x[1] - c[1]).atan2(x[0] - c[0])
}

fn wrap(angle: f64) -> f64 {
    let a = angle % TAU;
    if a < 0.0 { a + TAU } else { a }
}

impl CellPartition {
    /// Equal-area partition of the unit sphere in `R^3`: bands of equal
    /// height (equal area by Archimedes) and equal sectors from `-pi`.
    pub fn sphere(bands: usize, sectors: usize) -> Result<Self> {
        check_counts(bands, sectors)?;
        let band_edges = (1..bands).map(|j| -1.0 + 2.0 * j as f64 / bands as f64).collect();
        let offsets: Vec<f64> = (0..sectors).map(|j| TAU * j as f64 / sectors as f64).collect();
        let k = bands * sectors;
        Ok(Self {
            center: alloc::vec![0.0; 3],
            band_edges,
            sector_origin: alloc::vec![-PI; bands],
            sector_offsets: alloc::vec![offsets; bands],
            measures: alloc::vec![1.0 / k as f64; k],
        })
    }

    /// Partition of any body in `R^3` with cells of (approximately) equal
    /// boundary measure: band edges at quantiles of the height of `pilot`
    /// uniform boundary points, sector edges at longitude quantiles within
    /// each band. The unit sphere gets the exact equal-area partition.
    pub fn for_body<E: Executor + ?Sized>(
        exec: &E,
        body: &Arc<ConvexBody>,
        bands: usize,
        sectors: usize,
        pilot: usize,
        seed: u64,
    ) -> Result<Self> {
        if body.dim() != 3 {
            return Err(Error::DimensionMismatch { expected: 3, found: body.dim() });
        }
        if body.unit_sphere_dim().is_some() {
            return Self::sphere(bands, sectors);
        }
        check_counts(bands, sectors)?;
        if pilot < 4 * bands * sectors {
            return Err(Error::InvalidArgument("pilot sample too small for the partition".into()));
        }
        let center: Vec<f64> = body.bounding_ball().0.iter().copied().collect();
        let sampler = BoundarySampler::new(body.clone())?;
        let mut points: Vec<(f64, f64)> = run_chunked(
            exec,
            pilot,
            seed,
            StreamFamily::PILOT,
            |rng, len| {
                (0..len)
                    .map(|_| sampler.sample(rng).map(|x| (x[2] - center[2], longitude(&x, &center))))
                    .collect::<Result<Vec<_>>>()
            },
            |acc: &mut Vec<(f64, f64)>, part| acc.extend(part),
        )?;
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let m = points.len();
        let cut = |j: usize, parts: usize, len: usize| j * len / parts;
        let band_edges: Vec<f64> = (1..bands).map(|j| points[cut(j, bands, m)].0).collect();
        let mut sector_origin = Vec::with_capacity(bands);
        let mut sector_offsets = Vec::with_capacity(bands);
        for b in 0..bands {
            let mut lons: Vec<f64> = points[cut(b, bands, m)..cut(b + 1, bands, m)].iter().map(|p| p.1).collect();
            lons.sort_by(f64::total_cmp);
            let origin = lons[0];
            let len = lons.len();
            sector_origin.push(origin);
            sector_offsets.push((0..sectors).map(|j| lons[cut(j, sectors, len)] - origin).collect());
        }
        let mut partition = Self {
            center,
            band_edges,
            sector_origin,
            sector_offsets,
            measures: Vec::new(),
        };
        let mut counts = alloc::vec![0u64; bands * sectors];
        for &(z, lon) in &points {
            counts[partition.classify_coords(z, lon)] += 1;
        }
        partition.measures = counts.iter().map(|&c| c as f64 / m as f64).collect();
        Ok(partition)
    }

    pub fn bands(&self) -> usize {
        self.band_edges.len() + 1
    }

    pub fn sectors(&self) -> usize {
        self.sector_offsets[0].len()
    }

    pub fn cell_count(&self) -> usize {
        self.bands() * self.sectors()
    }

    /// Boundary measure fraction of each cell; sums to one.
    pub fn measures(&self) -> &[f64] {
        &self.measures
    }

    fn classify_coords(&self, z: f64, lon: f64) -> usize {
        let band = self.band_edges.partition_point(|&e| e <= z);
        let offsets = &self.sector_offsets[band];
        let off = wrap(lon - self.sector_origin[band]);
        let sector = offsets.partition_point(|&o| o <= off).max(1) - 1;
        band * offsets.len() + sector
    }

    /// Cell index of a boundary point.
    pub fn classify(&self, x: &Vector) -> usize {
        self.classify_coords(x[2] - self.center[2], longitude(x, &self.center))
    }

    /// Each cell as a boundary [`Region`] (closed, so neighbours share
    /// their measure-zero edges).
    pub fn cells(&self) -> Vec<Region> {
        let c = Vector::from_column_slice(&self.center);
        let ez = Vector::from_column_slice(&[0.0, 0.0, 1.0]);
        let bands = self.bands();
        let mut out = Vec::with_capacity(self.cell_count());
        for b in 0..bands {
            let mut band = Region::Whole;
            if b > 0 {
                band = band.intersection(Region::HalfSpace { normal: ez.clone(), offset: c[2] + self.band_edges[b - 1] });
            }
            if b + 1 < bands {
                band = band.intersection(Region::HalfSpace { normal: -&ez, offset: -(c[2] + self.band_edges[b]) });
            }
            let offsets = &self.sector_offsets[b];
            for (s, &start) in offsets.iter().enumerate() {
                let end = offsets.get(s + 1).copied().unwrap_or(TAU);
                let region = if offsets.len() == 1 {
                    band.clone()
                } else {
                    let (a, e) = (self.sector_origin[b] + start, self.sector_origin[b] + end);
                    // left of the ray at angle a, right of the ray at angle e
                    let left = Vector::from_column_slice(&[-a.sin(), a.cos(), 0.0]);
                    let right = Vector::from_column_slice(&[e.sin(), -e.cos(), 0.0]);
                    let lo = Region::HalfSpace { offset: left.dot(&c), normal: left };
                    let hi = Region::HalfSpace { offset: right.dot(&c), normal: right };
                    let wedge = if end - start <= PI { lo.intersection(hi) } else { lo.union(hi) };
                    band.clone().intersection(wedge)
                };
                out.push(region);
            }
        }
        out
    }
}

fn check_counts(bands: usize, sectors: usize) -> Result<()> {
    if bands == 0 || sectors == 0 || bands * sectors < 2 {
        return Err(Error::InvalidArgument("partition needs at least two cells".into()));
    }
    Ok(())
}

/// `k x k` table of (entry cell, exit cell) counts.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ContingencyTable {
    pub cells: usize,
    /// Row-major counts: row is the entry cell, column the exit cell.
    pub counts: Vec<u64>,
    pub n_samples: u64,
    pub seed: u64,
}

/// Pearson statistic of a contingency table against independence.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub min_expected: f64,
}

impl ContingencyTable {
    pub fn count(&self, row: usize, col: usize) -> u64 {
        self.counts[row * self.cells + col]
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.chunks(self.cells).map(|r| r.iter().sum()).collect()
    }

    pub fn column_totals(&self) -> Vec<u64> {
        (0..self.cells).map(|j| (0..self.cells).map(|i| self.count(i, j)).sum()).collect()
    }

    /// `sum (O - E)^2 / E` with `E` from the margins and `(k - 1)^2`
    /// degrees of freedom. Fails when some expected count is below five.
    pub fn pearson(&self) -> Result<ChiSquare> {
        let n = self.n_samples as f64;
        let (rows, cols) = (self.row_totals(), self.column_totals());
        let mut statistic = 0.0;
        let mut min_expected = f64::INFINITY;
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                let expected = r as f64 * c as f64 / n;
                min_expected = min_expected.min(expected);
                if expected > 0.0 {
                    let d = self.count(i, j) as f64 - expected;
                    statistic += d * d / expected;
                }
            }
        }
        if !(min_expected >= 5.0) {
            return Err(Error::InsufficientSamples { min_expected });
        }
        Ok(ChiSquare { statistic, dof: (self.cells - 1) * (self.cells - 1), min_expected })
    }
}

/// Tabulates the cells of the entry and exit points of `samples` random chords.
pub fn contingency_table<E: Executor + ?Sized>(
    exec: &E,
    body: &Arc<ConvexBody>,
    partition: &CellPartition,
    samples: usize,
    seed: u64,
) -> Result<ContingencyTable> {
    let k = partition.cell_count();
    let base = KinematicLineSampler::new(body.clone());
    let counts = run_chunked(
        exec,
        samples,
        seed,
        StreamFamily::LINES,
        |rng, len| {
            let mut sampler = base.clone();
            let mut counts = alloc::vec![0u64; k * k];
            for _ in 0..len {
                let chord = sampler.sample_chord(rng)?;
                counts[partition.classify(&chord.entry) * k + partition.classify(&chord.exit)] += 1;
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
    Ok(ContingencyTable { cells: k, counts, n_samples: samples as u64, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Sequential;
    use crate::sampler::{uniform_sphere_point, RandomStream};

    #[test]
    fn sphere_partition_is_equal_area() {
        let p = CellPartition::sphere(6, 8).unwrap();
        assert_eq!(p.cell_count(), 48);
        assert!((p.measures().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut rng = RandomStream::new(1, 0);
        let mut counts = [0u32; 48];
        for _ in 0..48_000 {
            counts[p.classify(&uniform_sphere_point(3, &mut rng))] += 1;
        }
        assert!(counts.iter().all(|&c| (800..1200).contains(&c)), "{counts:?}");
    }

    #[test]
    fn regions_agree_with_classification() {
        let body = Arc::new(ConvexBody::ellipsoid(Vector::from_column_slice(&[1.0, 1.0, 2.0])).unwrap());
        let parts = [
            CellPartition::sphere(6, 8).unwrap(),
            CellPartition::sphere(2, 3).unwrap(),
            CellPartition::for_body(&Sequential, &body, 6, 8, 20_000, 3).unwrap(),
        ];
        let mut rng = RandomStream::new(2, 0);
        for p in &parts {
            let cells = p.cells();
            for _ in 0..5_000 {
                let x = uniform_sphere_point(3, &mut rng).component_mul(&Vector::from_column_slice(&[1.0, 1.0, 2.0]));
                let k = p.classify(&x);
                assert!(cells[k].contains(&x));
                assert_eq!(cells.iter().filter(|c| c.contains(&x)).count(), 1);
            }
        }
    }

    #[test]
    fn body_partition_measures_are_balanced() {
        let body = Arc::new(ConvexBody::ellipsoid(Vector::from_column_slice(&[1.0, 1.0, 2.0])).unwrap());
        let p = CellPartition::for_body(&Sequential, &body, 6, 8, 48_000, 4).unwrap();
        assert!((p.measures().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(p.measures().iter().all(|&m| (m - 1.0 / 48.0).abs() < 0.002), "{:?}", p.measures());
    }

    #[test]
    fn sparse_tables_are_refused() {
        let body = Arc::new(ConvexBody::unit_sphere(3).unwrap());
        let p = CellPartition::sphere(6, 8).unwrap();
        let t = contingency_table(&Sequential, &body, &p, 1000, 5).unwrap();
        assert!(matches!(t.pearson(), Err(Error::InsufficientSamples { .. })));
    }

    #[test]
    fn sphere_entry_and_exit_are_independent() {
        let body = Arc::new(ConvexBody::unit_sphere(3).unwrap());
        let p = CellPartition::sphere(2, 2).unwrap();
        let t = contingency_table(&Sequential, &body, &p, 100_000, 6).unwrap();
        let chi = t.pearson().unwrap();
        assert_eq!(chi.dof, 9);
        // 99.9% quantile of chi-square with 9 degrees of freedom
        assert!(chi.statistic < 27.88, "{chi:?}");
    }
}
