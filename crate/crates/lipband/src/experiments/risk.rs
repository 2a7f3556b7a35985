//! Risk of acting on a wrong constant: four policies on one hard instance
//! where the steep pair hides behind rarely-separated nearby arms.

use std::sync::Arc;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::csvout::{fmt, CsvFile};
use super::manifest::write_manifest;
use super::svg::polyline_chart;
use super::{checkpoint_grid, CheckResult, PolicySummary};
use crate::embed::ArmEmbedding;
use crate::instance::BanditInstance;
use crate::lipschitz::{lipschitz_of, Lipschitz};
use crate::policy::{DelPolicy, PolicyConfig};
use crate::sim::{derive_seed, run_episode, Environment, EpisodeResult};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Belief {
    Fixed(FixedKind),
    Online,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum FixedKind {
    Unbounded,
    True,
    Low,
}

pub struct RiskReport {
    pub config_hash: String,
    /// Order: unstructured, true constant, understated constant, online.
    pub policies: Vec<PolicySummary>,
    /// Final online estimate per seed.
    pub lhat_finals: Vec<f64>,
    /// Fraction of online seeds whose final estimate collapsed below 1.
    pub underestimation_fraction: f64,
}

impl RiskReport {
    pub fn unstructured(&self) -> &PolicySummary {
        &self.policies[0]
    }
    pub fn true_constant(&self) -> &PolicySummary {
        &self.policies[1]
    }
    pub fn understated(&self) -> &PolicySummary {
        &self.policies[2]
    }
    pub fn online(&self) -> &PolicySummary {
        &self.policies[3]
    }

    pub fn checks(&self) -> Vec<CheckResult> {
        let truth = self.true_constant().mean_final;
        vec![
            CheckResult::new(
                "understated-belief-regret-blowup",
                self.understated().mean_final > 5.0 * truth,
                format!("{:.1} vs 5 x {:.1}", self.understated().mean_final, truth),
            ),
            CheckResult::new(
                "online-belief-regret-blowup",
                self.online().mean_final > 3.0 * truth,
                format!("{:.1} vs 3 x {:.1}", self.online().mean_final, truth),
            ),
            CheckResult::new(
                "true-belief-sublinear",
                self.true_constant().is_sublinear(0.75),
                format!(
                    "halves {:.1} then {:.1}",
                    self.true_constant().first_half_increment,
                    self.true_constant().second_half_increment
                ),
            ),
            CheckResult::new(
                "unstructured-sublinear",
                self.unstructured().is_sublinear(0.75),
                format!(
                    "halves {:.1} then {:.1}",
                    self.unstructured().first_half_increment,
                    self.unstructured().second_half_increment
                ),
            ),
            CheckResult::new(
                "online-underestimation-mode",
                self.underestimation_fraction >= 0.05,
                format!("{:.0}% of seeds end below 1", 100.0 * self.underestimation_fraction),
            ),
        ]
    }
}

pub fn run(config: &ExperimentConfig) -> Result<RiskReport> {
    let emb = Arc::new(config.arm_embedding());
    let instance = BanditInstance::new(config.means.clone())?;
    let hash = config.config_hash();
    std::fs::create_dir_all(&config.out_dir)?;

    let beliefs = [
        ("pi(inf)".to_string(), Belief::Fixed(FixedKind::Unbounded)),
        (format!("pi({})", fmt(config.lipschitz)), Belief::Fixed(FixedKind::True)),
        (format!("pi({})", fmt(config.policy_low_l)), Belief::Fixed(FixedKind::Low)),
        ("pi(Lhat_t)".to_string(), Belief::Online),
    ];
    let checkpoints = checkpoint_grid(config.horizon);

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count())
        .build()
        .expect("worker pool");
    let jobs: Vec<(usize, usize)> = (0..beliefs.len())
        .flat_map(|p| (0..config.seeds).map(move |s| (p, s)))
        .collect();
    let runs: Vec<EpisodeResult> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, s)| {
                let mut policy_cfg =
                    PolicyConfig::new(resolve_belief(beliefs[p].1, config)).with_lambda(config.lambda);
                policy_cfg.est_const = config.est_const;
                let mut policy = match beliefs[p].1 {
                    Belief::Online => DelPolicy::online(Arc::clone(&emb), policy_cfg),
                    Belief::Fixed(_) => DelPolicy::fixed(Arc::clone(&emb), policy_cfg),
                };
                let mut env =
                    Environment::new(instance.clone(), derive_seed(config.base_seed, s as u64));
                run_episode(&mut policy, &mut env, config.horizon, &checkpoints)
            })
            .collect()
    });
    let by_policy: Vec<&[EpisodeResult]> =
        runs.chunks(config.seeds).collect();

    let policies: Vec<PolicySummary> = beliefs
        .iter()
        .zip(&by_policy)
        .map(|((label, _), runs)| PolicySummary::from_runs(label, runs, config.horizon))
        .collect();

    let online_runs = by_policy[3];
    let lhat_finals: Vec<f64> =
        online_runs.iter().map(|r| lipschitz_of(&r.means_hat, &emb)).collect();
    let underestimation_fraction =
        lhat_finals.iter().filter(|&&l| l < 1.0).count() as f64 / lhat_finals.len() as f64;

    emit_files(config, &hash, &beliefs, &by_policy, &policies, &lhat_finals, &emb)?;

    Ok(RiskReport { config_hash: hash, policies, lhat_finals, underestimation_fraction })
}

fn resolve_belief(belief: Belief, config: &ExperimentConfig) -> Lipschitz {
    match belief {
        Belief::Fixed(FixedKind::Unbounded) => Lipschitz::Unbounded,
        Belief::Fixed(FixedKind::True) => Lipschitz::Finite(config.lipschitz),
        Belief::Fixed(FixedKind::Low) => Lipschitz::Finite(config.policy_low_l),
        Belief::Online => Lipschitz::Finite(0.0), // replaced online every round
    }
}

#[allow(clippy::too_many_arguments)]
fn emit_files(
    config: &ExperimentConfig,
    hash: &str,
    beliefs: &[(String, Belief)],
    by_policy: &[&[EpisodeResult]],
    policies: &[PolicySummary],
    lhat_finals: &[f64],
    emb: &ArmEmbedding,
) -> Result<()> {
    let dir = &config.out_dir;

    let mut traces = CsvFile::create(dir, "regret_traces.csv", &["policy", "t", "regret"])?;
    for ((label, _), runs) in beliefs.iter().zip(by_policy) {
        for (seed, run) in runs.iter().enumerate() {
            let env_seed = derive_seed(config.base_seed, seed as u64);
            for &(t, r) in &run.regret_trace {
                traces.row(hash, env_seed, &[label.clone(), t.to_string(), fmt(r)])?;
            }
        }
    }
    traces.finish()?;

    let mut pulls = CsvFile::create(dir, "pull_counts.csv", &["policy", "arm", "pulls"])?;
    for ((label, _), runs) in beliefs.iter().zip(by_policy) {
        for (seed, run) in runs.iter().enumerate() {
            let env_seed = derive_seed(config.base_seed, seed as u64);
            for (arm, &n) in run.pulls.iter().enumerate() {
                pulls.row(hash, env_seed, &[label.clone(), arm.to_string(), n.to_string()])?;
            }
        }
    }
    pulls.finish()?;

    // Online-policy artifacts: estimate trajectories, final histogram data,
    // and pulls split by the bottom/top 20% of final estimates.
    let online_runs = by_policy[3];
    let mut lhat_traces = CsvFile::create(dir, "lhat_traces.csv", &["t", "lhat"])?;
    let mut lhat_final = CsvFile::create(dir, "lhat_final.csv", &["lhat_final"])?;
    for (seed, run) in online_runs.iter().enumerate() {
        let env_seed = derive_seed(config.base_seed, seed as u64);
        for &(t, l) in &run.belief_trace {
            lhat_traces.row(hash, env_seed, &[t.to_string(), fmt(l)])?;
        }
        lhat_final.row(hash, env_seed, &[fmt(lhat_finals[seed])])?;
    }
    lhat_traces.finish()?;
    lhat_final.finish()?;

    let mut order: Vec<usize> = (0..online_runs.len()).collect();
    order.sort_by(|&a, &b| lhat_finals[a].total_cmp(&lhat_finals[b]));
    let group_size = (online_runs.len() / 5).max(1);
    let mut groups = CsvFile::create(dir, "pulls_by_group.csv", &["group", "arm", "mean_pulls"])?;
    for (group, members) in [
        ("bottom20", &order[..group_size]),
        ("top20", &order[order.len() - group_size..]),
    ] {
        for arm in 0..emb.num_arms() {
            let mean: f64 = members
                .iter()
                .map(|&s| online_runs[s].pulls[arm] as f64)
                .sum::<f64>()
                / members.len() as f64;
            groups.row(hash, config.base_seed, &[group.to_string(), arm.to_string(), fmt(mean)])?;
        }
    }
    groups.finish()?;

    let mut summary = CsvFile::create(
        dir,
        "summary.csv",
        &["policy", "mean_final_regret", "first_half", "second_half"],
    )?;
    for p in policies {
        summary.row(
            hash,
            config.base_seed,
            &[
                p.label.clone(),
                fmt(p.mean_final),
                fmt(p.first_half_increment),
                fmt(p.second_half_increment),
            ],
        )?;
    }
    summary.finish()?;

    write_manifest(
        dir,
        config,
        &[("underestimation_fraction".to_string(), {
            let f = lhat_finals.iter().filter(|&&l| l < 1.0).count() as f64
                / lhat_finals.len() as f64;
            format!("{f}")
        })],
    )?;

    if config.emit_svg {
        let series: Vec<(String, Vec<(f64, f64)>)> = policies
            .iter()
            .map(|p| {
                (
                    p.label.clone(),
                    p.mean_trace.iter().map(|&(t, r)| (t as f64, r)).collect(),
                )
            })
            .collect();
        polyline_chart(&dir.join("regret_mean.svg"), "mean cumulative regret", &series)?;
    }
    Ok(())
}
