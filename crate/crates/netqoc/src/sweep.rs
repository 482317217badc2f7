//! Sweep points run on worker threads; results come back in latency order.

use std::thread;

use netqoc_core::{assemble_sweep, run_with_plan, SweepError, SweepPoint, SweepSpec};

pub fn run_sweep_parallel(spec: &SweepSpec) -> Result<Vec<SweepPoint>, SweepError> {
    spec.validate()?;
    let traj = spec.plan().map_err(SweepError::Reference)?;
    let configs: Vec<_> = spec.latencies.iter().map(|&l| spec.point_config(l)).collect();
    let explicit_reference = spec.reference.as_ref();
    let (runs, reference) = thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(|| run_with_plan(cfg, &traj)))
            .collect();
        let reference = explicit_reference.map(|cfg| run_with_plan(cfg, &traj));
        let runs: Vec<_> = handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect();
        (runs, reference)
    });
    let reference = match reference {
        Some(r) => r.map_err(SweepError::Reference)?,
        None => runs[0].clone().map_err(SweepError::Reference)?,
    };
    Ok(assemble_sweep(spec, &reference, runs))
}
