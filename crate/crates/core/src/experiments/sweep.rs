use rayon::prelude::*;

use super::analysis::{leakage_check, LeakageCheck};
use super::beating::{run_beating, BeatingReport};
use super::config::ScenarioConfig;
use super::Result;

/// Runs `base` once per value of `nu`, in parallel. Reports come back sorted
/// by decreasing `nu`, and every adjacent pair gets a leakage check.
pub fn run_sweep(base: &ScenarioConfig, nus: &[f64]) -> Result<(Vec<BeatingReport>, Vec<LeakageCheck>)> {
    let mut nus = nus.to_vec();
    nus.sort_by(|a, b| b.total_cmp(a));
    nus.dedup();
    let reports = nus
        .par_iter()
        .map(|&nu| {
            let mut cfg = base.clone();
            cfg.nu = nu;
            run_beating(&cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    let checks = reports.windows(2).map(|w| leakage_check(&w[0], &w[1])).collect::<Result<Vec<_>>>()?;
    Ok((reports, checks))
}
