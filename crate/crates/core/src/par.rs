//! Data-parallel helpers.
//!
//! With the `parallel` feature, [`Execution::Parallel`] dispatches to rayon;
//! without it, both variants run the same sequential loop. Output order is
//! always index order, so results do not depend on the schedule.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run in parallel.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Apply `f(i, chunk)` to consecutive `chunk`-sized pieces of `out`.
pub fn for_each_chunk<F>(out: &mut [f64], chunk: usize, exec: Execution, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        out.par_chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
        return;
    }
    let _ = exec;
    out.chunks_mut(chunk).enumerate().for_each(|(i, c)| f(i, c));
}

/// Agent count above which per-agent pair loops are split across threads.
pub const AGENT_PAR_THRESHOLD: usize = 512;

pub(crate) fn for_agents(n: usize) -> Execution {
    if n >= AGENT_PAR_THRESHOLD {
        Execution::Parallel
    } else {
        Execution::Sequential
    }
}
