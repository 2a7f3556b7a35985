//! Transfer of the constant across episodes: run an unstructured policy over
//! a generated batch, compare estimators on the shared per-episode
//! estimates, then race the transferred beliefs on fresh episodes.

use std::sync::Arc;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::csvout::{fmt, CsvFile};
use super::manifest::write_manifest;
use super::svg::polyline_chart;
use super::{checkpoint_grid, CheckResult, PolicySummary};
use crate::estimator::{
    quantile_estimator, quantile_level, running_max, EpisodeSummary, EstimatorConfig,
};
use crate::lipschitz::{lipschitz_of, Lipschitz};
use crate::policy::{DelPolicy, PolicyConfig};
use crate::sim::{derive_seed, generate_instance, run_episode, Environment};
use crate::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Evolution of one quantile estimator as episodes accumulate.
#[derive(Debug, Clone)]
pub struct EstimatorTrace {
    pub label: String,
    pub beta: f64,
    pub eps_beta: f64,
    /// `ell_beta` after each prefix of the batch.
    pub levels: Vec<f64>,
    /// `ell_beta + eps_beta` after each prefix.
    pub estimates: Vec<f64>,
}

pub struct TransferReport {
    pub config_hash: String,
    /// Tightest constant of each generated episode (the generator's record).
    pub true_constants: Vec<f64>,
    pub summaries: Vec<EpisodeSummary>,
    pub traces: Vec<EstimatorTrace>,
    pub running_max_trace: Vec<f64>,
    /// Mean regret of the transferred beliefs on fresh episodes, in config
    /// order: unstructured, true constant, then one per estimator config.
    pub eval: Option<Vec<PolicySummary>>,
    quick: bool,
    lipschitz: f64,
}

impl TransferReport {
    /// Trace for a specific grid entry, if configured.
    pub fn trace_for(&self, beta: f64, eps_beta: f64) -> Option<&EstimatorTrace> {
        self.traces
            .iter()
            .find(|t| (t.beta - beta).abs() < 1e-12 && (t.eps_beta - eps_beta).abs() < 1e-12)
    }

    pub fn checks(&self) -> Vec<CheckResult> {
        let mut checks = Vec::new();
        let nondecreasing =
            self.running_max_trace.windows(2).all(|w| w[1] >= w[0]);
        checks.push(CheckResult::new(
            "running-max-nondecreasing",
            nondecreasing,
            format!("final {}", fmt(*self.running_max_trace.last().unwrap())),
        ));

        if let Some(trace) = self.trace_for(0.3, 0.05) {
            let m = trace.estimates.len();
            if m >= 100 {
                let window = &trace.estimates[99..];
                let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let range_limit = if self.quick { 1.0 } else { 0.5 };
                checks.push(CheckResult::new(
                    "quantile-estimator-stabilizes",
                    hi - lo < range_limit,
                    format!("range {:.3} over episodes 100..{m}", hi - lo),
                ));
                let floor = 0.8 * self.lipschitz;
                checks.push(CheckResult::new(
                    "quantile-estimator-stays-near-constant",
                    lo >= floor,
                    format!("min {:.3} vs floor {:.3}", lo, floor),
                ));
            }
        }

        if let Some(eval) = &self.eval {
            let unstructured = &eval[0];
            let oracle = &eval[1];
            if let Some(preferred) = eval.iter().find(|p| p.label.contains("b0.3")) {
                checks.push(CheckResult::new(
                    "transferred-belief-beats-unstructured",
                    preferred.mean_final < 0.95 * unstructured.mean_final,
                    format!("{:.1} vs 0.95 x {:.1}", preferred.mean_final, unstructured.mean_final),
                ));
            }
            let oracle_lowest = eval.iter().all(|p| oracle.mean_final <= p.mean_final + 1e-9);
            checks.push(CheckResult::new(
                "true-constant-has-lowest-regret",
                oracle_lowest,
                format!("oracle {:.1}", oracle.mean_final),
            ));
        }
        checks
    }
}

/// Runs the batch and estimator phases; `with_eval` adds the fresh-episode
/// regret comparison.
pub fn run(config: &ExperimentConfig, with_eval: bool) -> Result<TransferReport> {
    let emb = Arc::new(config.arm_embedding());
    let hash = config.config_hash();
    std::fs::create_dir_all(&config.out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .expect("worker pool");

    // Past episodes: generated instances explored by the unstructured
    // policy; one shared batch reused by every estimator.
    let batch: Vec<(f64, EpisodeSummary)> = pool.install(|| {
        (0..config.episodes)
            .into_par_iter()
            .map(|m| {
                let mut gen_rng =
                    ChaCha12Rng::seed_from_u64(derive_seed(config.base_seed, 1_000_000 + m as u64));
                let instance = generate_instance(&emb, config.lipschitz, (0.05, 0.95), &mut gen_rng);
                let true_lm = lipschitz_of(instance.means(), &emb);
                let mut policy_cfg =
                    PolicyConfig::new(Lipschitz::Unbounded).with_lambda(config.lambda);
                policy_cfg.est_const = config.est_const;
                let mut policy = DelPolicy::fixed(Arc::clone(&emb), policy_cfg);
                let mut env = Environment::new(
                    instance,
                    derive_seed(config.base_seed, 2_000_000 + m as u64),
                );
                let result =
                    run_episode(&mut policy, &mut env, config.horizon, &[config.horizon]);
                let summary = EpisodeSummary::from_final_state(
                    result.means_hat.clone(),
                    result.pulls.clone(),
                    &emb,
                );
                (true_lm, summary)
            })
            .collect()
    });
    let true_constants: Vec<f64> = batch.iter().map(|(l, _)| *l).collect();
    let summaries: Vec<EpisodeSummary> = batch.into_iter().map(|(_, s)| s).collect();
    let hats: Vec<f64> = summaries.iter().map(|s| s.lipschitz_hat).collect();

    // Estimator evolution over growing prefixes.
    let running_max_trace = running_max(&hats);
    let traces: Vec<EstimatorTrace> = config
        .estimator_grid
        .iter()
        .map(|&(beta, eps_beta)| {
            let levels: Vec<f64> =
                (1..=hats.len()).map(|m| quantile_level(&hats[..m], beta)).collect();
            let estimates = levels.iter().map(|l| l + eps_beta).collect();
            EstimatorTrace {
                label: format!("Lhat[b{beta}_e{eps_beta}]"),
                beta,
                eps_beta,
                levels,
                estimates,
            }
        })
        .collect();

    // Fresh-episode regret comparison under the transferred beliefs.
    let eval = if with_eval {
        Some(run_eval(config, &emb, &hats, &pool)?)
    } else {
        None
    };

    emit_files(config, &hash, &true_constants, &summaries, &traces, &running_max_trace, &eval)?;

    Ok(TransferReport {
        config_hash: hash,
        true_constants,
        summaries,
        traces,
        running_max_trace,
        eval,
        quick: config.quick,
        lipschitz: config.lipschitz,
    })
}

fn run_eval(
    config: &ExperimentConfig,
    emb: &Arc<crate::embed::ArmEmbedding>,
    hats: &[f64],
    pool: &rayon::ThreadPool,
) -> Result<Vec<PolicySummary>> {
    let mut beliefs: Vec<(String, Lipschitz)> = vec![
        ("pi(inf)".to_string(), Lipschitz::Unbounded),
        (format!("pi({})", fmt(config.lipschitz)), Lipschitz::Finite(config.lipschitz)),
    ];
    for &(beta, eps_beta) in &config.estimator_grid {
        let cfg = EstimatorConfig::new(beta, eps_beta)?;
        let value = quantile_estimator(hats, &cfg);
        beliefs.push((format!("pi(Lhat[b{beta}_e{eps_beta}])"), Lipschitz::Finite(value)));
    }

    let checkpoints = checkpoint_grid(config.horizon);
    let jobs: Vec<(usize, usize)> = (0..beliefs.len())
        .flat_map(|p| (0..config.eval_episodes).map(move |e| (p, e)))
        .collect();
    let runs: Vec<crate::sim::EpisodeResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, e)| {
                let mut gen_rng = ChaCha12Rng::seed_from_u64(derive_seed(
                    config.base_seed,
                    3_000_000 + e as u64,
                ));
                let instance =
                    generate_instance(emb, config.lipschitz, (0.05, 0.95), &mut gen_rng);
                let mut policy_cfg = PolicyConfig::new(beliefs[p].1).with_lambda(config.lambda);
                policy_cfg.est_const = config.est_const;
                let mut policy = DelPolicy::fixed(Arc::clone(emb), policy_cfg);
                let mut env = Environment::new(
                    instance,
                    derive_seed(config.base_seed, 4_000_000 + e as u64),
                );
                run_episode(&mut policy, &mut env, config.horizon, &checkpoints)
            })
            .collect()
    });
    Ok(beliefs
        .iter()
        .zip(runs.chunks(config.eval_episodes))
        .map(|((label, _), runs)| PolicySummary::from_runs(label, runs, config.horizon))
        .collect())
}

fn emit_files(
    config: &ExperimentConfig,
    hash: &str,
    true_constants: &[f64],
    summaries: &[EpisodeSummary],
    traces: &[EstimatorTrace],
    running_max_trace: &[f64],
    eval: &Option<Vec<PolicySummary>>,
) -> Result<()> {
    let dir = &config.out_dir;

    let mut batch = CsvFile::create(dir, "episode_batch.csv", &["m", "true_lm", "lhat_m", "min_pulls"])?;
    for (m, (lm, s)) in true_constants.iter().zip(summaries).enumerate() {
        batch.row(
            hash,
            derive_seed(config.base_seed, 2_000_000 + m as u64),
            &[m.to_string(), fmt(*lm), fmt(s.lipschitz_hat), s.min_pulls.to_string()],
        )?;
    }
    batch.finish()?;

    let mut trace_csv = CsvFile::create(
        dir,
        "estimator_traces.csv",
        &["estimator", "m", "ell_beta", "lhat_beta", "running_max", "true_l"],
    )?;
    for trace in traces {
        for (idx, (&level, &estimate)) in trace.levels.iter().zip(&trace.estimates).enumerate() {
            trace_csv.row(
                hash,
                config.base_seed,
                &[
                    trace.label.clone(),
                    (idx + 1).to_string(),
                    fmt(level),
                    fmt(estimate),
                    fmt(running_max_trace[idx]),
                    fmt(config.lipschitz),
                ],
            )?;
        }
    }
    for (idx, &value) in running_max_trace.iter().enumerate() {
        trace_csv.row(
            hash,
            config.base_seed,
            &[
                "max".to_string(),
                (idx + 1).to_string(),
                fmt(value),
                fmt(value),
                fmt(value),
                fmt(config.lipschitz),
            ],
        )?;
    }
    trace_csv.finish()?;

    if let Some(eval) = eval {
        let mut regret = CsvFile::create(dir, "eval_regret.csv", &["policy", "t", "mean_regret"])?;
        for p in eval {
            for &(t, r) in &p.mean_trace {
                regret.row(hash, config.base_seed, &[p.label.clone(), t.to_string(), fmt(r)])?;
            }
        }
        regret.finish()?;

        let mut summary =
            CsvFile::create(dir, "eval_summary.csv", &["policy", "mean_final_regret"])?;
        for p in eval {
            summary.row(hash, config.base_seed, &[p.label.clone(), fmt(p.mean_final)])?;
        }
        summary.finish()?;
    }

    write_manifest(dir, config, &[])?;

    if config.emit_svg {
        let mut series: Vec<(String, Vec<(f64, f64)>)> = traces
            .iter()
            .map(|t| {
                (
                    t.label.clone(),
                    t.estimates.iter().enumerate().map(|(m, &v)| ((m + 1) as f64, v)).collect(),
                )
            })
            .collect();
        series.push((
            "max".to_string(),
            running_max_trace.iter().enumerate().map(|(m, &v)| ((m + 1) as f64, v)).collect(),
        ));
        polyline_chart(&dir.join("estimator_evolution.svg"), "estimator evolution", &series)?;
        if let Some(eval) = eval {
            let series: Vec<(String, Vec<(f64, f64)>)> = eval
                .iter()
                .map(|p| {
                    (p.label.clone(), p.mean_trace.iter().map(|&(t, r)| (t as f64, r)).collect())
                })
                .collect();
            polyline_chart(&dir.join("eval_regret.svg"), "mean cumulative regret", &series)?;
        }
    }
    Ok(())
}
