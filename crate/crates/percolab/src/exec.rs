//! Multi-threaded replica execution.

use std::ops::Range;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::thread;

use percolab_core::stats::Executor;

/// Runs each replica range on its own scoped thread.
///
/// Results come back in range order, so folds are identical to
/// [`Sequential`](percolab_core::stats::Sequential) for any worker count.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Threaded {
    workers: usize,
}

impl Threaded {
    pub fn new(workers: usize) -> Self {
        Threaded { workers: workers.max(1) }
    }

    /// One worker per available CPU.
    pub fn from_machine() -> Self {
        Self::new(default_workers())
    }
}

pub fn default_workers() -> usize {
    thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn run_range<T, F>(range: Range<u64>, replica: &F) -> Result<Vec<T>, u64>
where
    F: Fn(u64) -> T,
{
    let mut out = Vec::with_capacity((range.end - range.start) as usize);
    for i in range {
        match catch_unwind(AssertUnwindSafe(|| replica(i))) {
            Ok(t) => out.push(t),
            Err(_) => return Err(i),
        }
    }
    Ok(out)
}

impl Executor for Threaded {
    fn workers(&self) -> usize {
        self.workers
    }

    fn execute<T, F>(&self, ranges: &[Range<u64>], replica: &F) -> Result<Vec<Vec<T>>, u64>
    where
        T: Send,
        F: Fn(u64) -> T + Sync,
    {
        if ranges.len() <= 1 {
            return ranges.iter().map(|r| run_range(r.clone(), replica)).collect();
        }
        let results: Vec<Result<Vec<T>, u64>> = thread::scope(|s| {
            let handles: Vec<_> = ranges
                .iter()
                .map(|r| {
                    let r = r.clone();
                    s.spawn(move || run_range(r, replica))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("replica panics are caught")).collect()
        });
        // report the lowest failing index, as a sequential run would
        results.into_iter().collect()
    }
}
