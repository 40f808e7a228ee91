//! Monte Carlo estimators for Crofton-type identities and chord
//! statistics.
//!
//! Every estimator takes an [`Executor`](crate::exec::Executor), a sample
//! count and a seed, and reports estimates with standard errors. Results
//! depend only on the seed, never on the executor.

mod archimedes;
mod chords;
mod crofton;
mod independence;
mod pairs;

pub use archimedes::{archimedes_check, ArchimedesRow, ArchimedesTable};
pub use chords::{chord_cdf, chord_moments, chord_scaling, dot_moment, CdfPoint, ChordCdf, ChordMoments, ChordScaling};
pub use crofton::{
    calibrate_quad_crofton, crofton_area, estimate_hit_distribution, kernel_mean, quad_crofton_check,
    HitDistribution, QuadCroftonCalibration, QuadCroftonResult,
};
pub use independence::{contingency_table, CellPartition, ChiSquare, ContingencyTable};
pub use pairs::{calibrate_pair_constant, pair_hit_probability, pair_hit_probability_with, PairCalibration, PairHitResult};

#[allow(unused_imports)] // redundant when a dependency links std
use num_traits::Float;

use crate::geom::sphere_area;

/// Crofton constant for `R^n` under the kinematic measure normalized on
/// the unit sphere: `H^(n-1)(A) = |S^(n-1)| / 2 * E[n_l(A)]`.
pub fn crofton_constant(n: usize) -> f64 {
    sphere_area(n) / 2.0
}

/// Relative error of a product or quotient of independent estimates.
fn relative_error(terms: &[(f64, f64, f64)]) -> f64 {
    // (value, stderr, power)
    terms
        .iter()
        .map(|&(v, se, p)| if v == 0.0 { 0.0 } else { (p * se / v).powi(2) })
        .sum::<f64>()
        .sqrt()
}
