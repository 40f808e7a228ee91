//! A scoped-thread [`Executor`].

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;

use croftonkit_core::exec::Executor;

/// Environment variable holding the default worker count.
pub const WORKERS_ENV: &str = "CROFTONKIT_WORKERS";

/// Runs tasks on up to `workers` threads that pull task indices from a
/// shared counter. Results come back in task order, so estimators give
/// identical output for every worker count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Threads {
    workers: usize,
}

impl Threads {
    pub fn new(workers: usize) -> Self {
        Self { workers: workers.max(1) }
    }

    /// `CROFTONKIT_WORKERS` if set and valid, else the available parallelism.
    pub fn from_env() -> Self {
        Self::new(default_workers())
    }

    pub fn workers(&self) -> usize {
        self.workers
    }
}

pub fn default_workers() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get()))
}

impl Executor for Threads {
    fn map<T, F>(&self, tasks: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync,
    {
        let workers = self.workers.min(tasks);
        if workers <= 1 {
            return (0..tasks).map(f).collect();
        }
        let next = AtomicUsize::new(0);
        let mut done: Vec<(usize, T)> = thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|_| {
                    s.spawn(|| {
                        let mut out = Vec::new();
                        loop {
                            let i = next.fetch_add(1, Ordering::Relaxed);
                            if i >= tasks {
                                break out;
                            }
                            out.push((i, f(i)));
                        }
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
                .collect()
        });
        done.sort_unstable_by_key(|(i, _)| *i);
        done.into_iter().map(|(_, t)| t).collect()
    }
}
