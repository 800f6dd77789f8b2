//! Sweep execution.

use fogverse_core::scenario::{plan, ScenarioPlan};
use fogverse_core::{Config, ScenarioResult, SweepSpec};
use rayon::prelude::*;

use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

/// Runs every scenario of `spec`. Results come back ordered by value, policy
/// and replication whichever way they were executed.
pub fn run_sweep(base: &Config, spec: &SweepSpec, exec: Execution) -> Result<Vec<ScenarioResult>> {
    let plans = plan(base, spec)?;
    let mut results: Vec<(usize, ScenarioResult)> = match exec {
        Execution::Serial => plans.iter().map(ScenarioPlan::run).enumerate().collect(),
        Execution::Parallel => plans.par_iter().enumerate().map(|(i, p)| (i, p.run())).collect(),
    };
    results.sort_by_key(|(i, _)| *i);
    Ok(results.into_iter().map(|(_, r)| r).collect())
}
