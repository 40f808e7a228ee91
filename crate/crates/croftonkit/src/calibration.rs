//! Process-wide cache of calibrated constants.
//!
//! Calibrations are deterministic functions of their inputs, so a cached
//! value is exactly what a fresh run would produce.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use croftonkit_core::estimators::{calibrate_pair_constant, calibrate_quad_crofton, PairCalibration, QuadCroftonCalibration};
use croftonkit_core::exec::Executor;
use croftonkit_core::Result;

/// `(dimension, lines, pairs, seed)`.
type Key = (usize, usize, usize, u64);

fn cached<T: Clone + Send + 'static>(
    cell: &'static OnceLock<Mutex<HashMap<Key, T>>>,
    key: Key,
    compute: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let map = cell.get_or_init(Default::default);
    if let Some(hit) = map.lock().expect("calibration cache poisoned").get(&key) {
        return Ok(hit.clone());
    }
    let value = compute()?;
    map.lock().expect("calibration cache poisoned").insert(key, value.clone());
    Ok(value)
}

/// The quadratic Crofton constant `c*` for `R^dim`.
pub fn quad_crofton<E: Executor + ?Sized>(exec: &E, dim: usize, lines: usize, pairs: usize, seed: u64) -> Result<QuadCroftonCalibration> {
    static CACHE: OnceLock<Mutex<HashMap<Key, QuadCroftonCalibration>>> = OnceLock::new();
    cached(&CACHE, (dim, lines, pairs, seed), || calibrate_quad_crofton(exec, dim, lines, pairs, seed))
}

/// The pair-kernel constant `c_n` for `S^(dim-1)`.
pub fn pair_constant<E: Executor + ?Sized>(exec: &E, dim: usize, lines: usize, pairs: usize, seed: u64) -> Result<PairCalibration> {
    static CACHE: OnceLock<Mutex<HashMap<Key, PairCalibration>>> = OnceLock::new();
    cached(&CACHE, (dim, lines, pairs, seed), || calibrate_pair_constant(exec, dim, lines, pairs, seed))
}
