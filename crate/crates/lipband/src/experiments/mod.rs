//! Experiment definitions behind the `lipband` CLI: configuration loading,
//! seeded execution over a worker pool, and CSV/manifest emission.

pub mod adversarial;
pub mod config;
pub mod csvout;
pub mod lp_study;
pub mod manifest;
pub mod risk;
pub mod svg;
pub mod transfer;

pub use config::{ExperimentConfig, ExperimentKind};

use crate::sim::EpisodeResult;
use crate::Result;

/// One named pass/fail check attached to an experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckResult { name: name.to_string(), passed, detail }
    }
}

/// Seed-averaged regret behavior of one policy.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySummary {
    pub label: String,
    /// Mean cumulative pseudo-regret at each checkpoint.
    pub mean_trace: Vec<(u64, f64)>,
    pub mean_final: f64,
    /// Mean regret accumulated up to the midpoint checkpoint.
    pub first_half_increment: f64,
    /// Mean regret accumulated from the midpoint to the horizon.
    pub second_half_increment: f64,
}

impl PolicySummary {
    /// Averages per-seed episode traces (all on the same checkpoint grid).
    pub fn from_runs(label: &str, runs: &[EpisodeResult], horizon: u64) -> Self {
        assert!(!runs.is_empty());
        let grid: Vec<u64> = runs[0].regret_trace.iter().map(|&(t, _)| t).collect();
        let n = runs.len() as f64;
        let mean_trace: Vec<(u64, f64)> = grid
            .iter()
            .enumerate()
            .map(|(idx, &t)| {
                let sum: f64 = runs
                    .iter()
                    .map(|r| {
                        debug_assert_eq!(r.regret_trace[idx].0, t);
                        r.regret_trace[idx].1
                    })
                    .sum();
                (t, sum / n)
            })
            .collect();
        let mean_final = mean_trace.last().map(|&(_, r)| r).unwrap_or(0.0);
        // Midpoint: the latest checkpoint at or before horizon / 2 (the grid
        // always contains horizon / 2 by construction).
        let mid = mean_trace
            .iter()
            .rev()
            .find(|&&(t, _)| t <= horizon / 2)
            .map(|&(_, r)| r)
            .unwrap_or(0.0);
        PolicySummary {
            label: label.to_string(),
            mean_trace,
            mean_final,
            first_half_increment: mid,
            second_half_increment: mean_final - mid,
        }
    }

    /// Second-half mean regret increment strictly below `factor` times the
    /// first-half increment (the log-growth signature).
    pub fn is_sublinear(&self, factor: f64) -> bool {
        self.second_half_increment < factor * self.first_half_increment
    }
}

/// Checkpoint grid shared by regret experiments: 100 log-spaced rounds plus
/// the midpoint and the horizon itself.
pub fn checkpoint_grid(horizon: u64) -> Vec<u64> {
    let mut grid = crate::sim::log_spaced_checkpoints(10, horizon, 100);
    grid.push((horizon / 2).max(1));
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Dispatches an experiment by kind and returns its check results.
pub fn run(config: &ExperimentConfig) -> Result<Vec<CheckResult>> {
    config.validate()?;
    match config.kind {
        ExperimentKind::Risk => Ok(risk::run(config)?.checks()),
        ExperimentKind::Transfer => Ok(transfer::run(config, true)?.checks()),
        ExperimentKind::EstimatorEvolution => Ok(transfer::run(config, false)?.checks()),
        ExperimentKind::LpStudy => Ok(lp_study::run(config)?.checks()),
        ExperimentKind::Adversarial => Ok(adversarial::run(config)?.checks()),
    }
}
