//! Parallel execution, file formats and the `croftonkit` command line on
//! top of [`croftonkit_core`].
//!
//! The core crate holds all of the mathematics; this crate only reads
//! files and flags, runs estimators on worker threads and writes reports.

pub mod calibration;
pub mod cli;
pub mod descriptor;
pub mod error;
pub mod mesh_io;
pub mod report;
pub mod threads;

pub use croftonkit_core as core;
pub use error::{CliError, CliResult};
pub use threads::Threads;

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Upper-tail probability of a chi-square statistic with `dof` degrees of freedom.
pub fn chi_square_p_value(statistic: f64, dof: usize) -> f64 {
    ChiSquared::new(dof as f64).expect("positive degrees of freedom").sf(statistic)
}
