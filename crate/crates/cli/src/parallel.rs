//! Thread budget and a parallel runner for optimizer restarts.

use std::num::NonZeroUsize;

use sheaf_core::fusion::Minimum;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "SHEAFCTL_THREADS";

/// Worker threads to use: `SHEAFCTL_THREADS` when it is a positive integer, otherwise the
/// available parallelism.
pub fn thread_budget() -> usize {
    let available = std::thread::available_parallelism().map_or(1, NonZeroUsize::get);
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n,
        _ => available,
    }
}

/// Runs one optimizer per start on up to `threads` threads. Results come back in start
/// order, so the outcome does not depend on scheduling.
pub fn run_restarts(
    threads: usize,
    starts: &[Vec<f64>],
    run: &(dyn Fn(&[f64]) -> sheaf_core::Result<Minimum> + Sync),
) -> Vec<sheaf_core::Result<Minimum>> {
    let workers = threads.min(starts.len()).max(1);
    if workers == 1 {
        return starts.iter().map(|s| run(s)).collect();
    }
    let mut slots: Vec<Option<sheaf_core::Result<Minimum>>> = (0..starts.len()).map(|_| None).collect();
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                scope
                    .spawn(move || (w..starts.len()).step_by(workers).map(|i| (i, run(&starts[i]))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("optimizer threads do not panic") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|s| s.expect("every start is run")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn results_keep_start_order() {
        let starts: Vec<Vec<f64>> = (0..7).map(|i| vec![i as f64]).collect();
        let run = |s: &[f64]| Ok(Minimum { x: s.to_vec(), f: s[0], iterations: 0, evaluations: 1, converged: true });
        let seq = run_restarts(1, &starts, &run);
        let par = run_restarts(3, &starts, &run);
        let xs = |v: &[sheaf_core::Result<Minimum>]| v.iter().map(|r| r.as_ref().unwrap().x[0]).collect::<Vec<_>>();
        assert_eq!(xs(&seq), xs(&par));
    }
}
