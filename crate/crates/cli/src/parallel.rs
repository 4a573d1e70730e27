//! Deterministic replicate fan-out.
//!
//! Replicates are independent by construction — every stream id keys its own
//! Brownian path — so they can run on any number of threads. Streams are
//! split into contiguous chunks and the chunks are joined in spawn order,
//! which restores ascending stream-id order exactly; the worker count can
//! never change a single output byte.

use mutualism_core::analysis::{run_replicate, ReplicateRecord};
use mutualism_core::{ModelParams, SchemeId};

/// Runs replicates `0..n` on up to `workers` threads and returns their
/// records in ascending stream-id order, bit-identical to a sequential run.
#[allow(clippy::too_many_arguments)]
pub fn run_replicates(
    p: &ModelParams,
    scheme: SchemeId,
    n: usize,
    dt: f64,
    n_steps: usize,
    t_burn: f64,
    seed: u64,
    workers: usize,
) -> Vec<ReplicateRecord> {
    let run_range = |lo: usize, hi: usize| {
        (lo as u64..hi as u64)
            .map(|j| run_replicate(p, scheme, dt, n_steps, t_burn, seed, j))
            .collect::<Vec<_>>()
    };
    let workers = workers.clamp(1, n.max(1));
    if workers == 1 {
        return run_range(0, n);
    }
    let chunk = n.div_ceil(workers);
    let mut records = Vec::with_capacity(n);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| (w * chunk, usize::min(n, (w + 1) * chunk)))
            .take_while(|(lo, hi)| lo < hi)
            .map(|(lo, hi)| scope.spawn(move || run_range(lo, hi)))
            .collect();
        for handle in handles {
            records.extend(handle.join().expect("replicate worker panicked"));
        }
    });
    records
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams {
            r1: 1.2,
            r2: 1.0,
            b1: 0.7,
            b2: 0.9,
            k1: 2.0,
            k2: 2.0,
            eps1: 0.8,
            eps2: 0.7,
            alpha1: 0.4,
            alpha2: 0.3,
            x0: 0.5,
            y0: 0.5,
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let p = params();
        let sequential = run_replicates(&p, SchemeId::Milstein, 23, 0.01, 500, 1.0, 42, 1);
        assert_eq!(sequential.len(), 23);
        for workers in [2, 3, 8, 64] {
            let parallel = run_replicates(&p, SchemeId::Milstein, 23, 0.01, 500, 1.0, 42, workers);
            assert_eq!(sequential, parallel, "workers = {workers}");
        }
    }

    #[test]
    fn records_come_back_in_stream_order() {
        let p = params();
        let records = run_replicates(&p, SchemeId::EulerMaruyama, 10, 0.01, 100, 0.25, 7, 4);
        let ids: Vec<u64> = records.iter().map(|r| r.stream_id).collect();
        assert_eq!(ids, (0..10).collect::<Vec<u64>>());
    }

    #[test]
    fn zero_replicates_yield_no_records() {
        assert!(run_replicates(&params(), SchemeId::Milstein, 0, 0.01, 10, 0.0, 0, 4).is_empty());
    }
}
