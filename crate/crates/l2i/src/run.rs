//! Seed-level parallelism over the core harness.

use std::sync::Mutex;

use l2i_core::harness::{run_seed_observed, ExperimentSpec, Row, RunRecord};

use crate::Result;

fn progress(spec: &ExperimentSpec, seed: u64, row: &Row) {
    log::info!("{} seed {seed} step {}/{}: test {:.4}", spec.method(), row.step, spec.steps, row.test_metric);
}

/// Runs every seed of `spec` on up to `threads` threads. Records come back
/// in seed-list order and do not depend on the thread count.
pub fn run_seeds(spec: &ExperimentSpec, threads: usize) -> Result<Vec<RunRecord>> {
    spec.validate()?;
    let seeds = &spec.seeds;
    let slots: Vec<Mutex<Option<l2i_core::Result<RunRecord>>>> = seeds.iter().map(|_| Mutex::new(None)).collect();
    let workers = threads.clamp(1, seeds.len());
    std::thread::scope(|scope| {
        for w in 0..workers {
            let slots = &slots;
            scope.spawn(move || {
                for (i, &seed) in seeds.iter().enumerate().skip(w).step_by(workers) {
                    let r = run_seed_observed(spec, seed, &mut |row| progress(spec, seed, row));
                    *slots[i].lock().expect("slot lock") = Some(r);
                }
            });
        }
    });
    slots.into_iter().map(|m| Ok(m.into_inner().expect("slot lock").expect("every seed ran")?)).collect()
}
