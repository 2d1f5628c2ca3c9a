//! Monte-Carlo batch runner with common random numbers across treatments.

use rayon::prelude::*;

use crate::engine::config::TreatmentConfig;
use crate::engine::record::SimulationRecord;
use crate::engine::rng::run_seed;
use crate::engine::simulate::run_simulation_tagged;
use crate::error::{Error, Result};

/// Treatments may differ only in name and regulatory regime.
pub fn check_shared(cfgs: &[TreatmentConfig]) -> Result<()> {
    let Some(first) = cfgs.first() else {
        return Err(Error::config("treatments", "no treatments given"));
    };
    let strip = |c: &TreatmentConfig| {
        let mut c = c.clone();
        c.name.clear();
        c.risk = first.risk;
        c
    };
    let base = strip(first);
    for c in &cfgs[1..] {
        if strip(c) != base {
            return Err(Error::config(
                "treatments",
                format!(
                    "treatment `{}` differs from `{}` in more than its regulation",
                    c.name, first.name
                ),
            ));
        }
    }
    Ok(())
}

/// Run `n_runs` realisations of every treatment and map each record as soon
/// as it is produced, so callers need not hold whole batches in memory.
///
/// Run `r` uses the same derived seed in every treatment. Output is indexed
/// `[treatment][run]` and does not depend on thread scheduling.
pub fn run_batch_map<T, F>(cfgs: &[TreatmentConfig], n_runs: usize, f: F) -> Result<Vec<Vec<T>>>
where
    T: Send,
    F: Fn(usize, usize, SimulationRecord) -> T + Sync,
{
    check_shared(cfgs)?;
    for c in cfgs {
        c.validate()?;
    }
    let master = cfgs[0].master_seed;
    let jobs: Vec<(usize, usize)> = (0..n_runs)
        .flat_map(|r| (0..cfgs.len()).map(move |t| (t, r)))
        .collect();
    let mut out: Vec<(usize, usize, T)> = jobs
        .into_par_iter()
        .map(|(t, r)| {
            let rec = run_simulation_tagged(&cfgs[t], run_seed(master, r), r)?;
            Ok((t, r, f(t, r, rec)))
        })
        .collect::<Result<_>>()?;
    out.sort_by_key(|&(t, r, _)| (t, r));
    let mut grouped: Vec<Vec<T>> = (0..cfgs.len()).map(|_| Vec::with_capacity(n_runs)).collect();
    for (t, _, v) in out {
        grouped[t].push(v);
    }
    Ok(grouped)
}

pub fn run_batch(cfgs: &[TreatmentConfig], n_runs: usize) -> Result<Vec<Vec<SimulationRecord>>> {
    run_batch_map(cfgs, n_runs, |_, _, rec| rec)
}
