//! Three-phase directed-exploration policy `pi(L)`: forced estimation,
//! feasibility-gated exploitation, LP-tracking exploration.

use std::sync::Arc;

use crate::embed::ArmEmbedding;
use crate::instance::BanditInstance;
use crate::lipschitz::{lipschitz_of, Lipschitz};
use crate::oracle::{in_feasible_set, solve_lower_bound, ExplorationAllocation};

/// Which branch of the policy produced a pull.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Estimation,
    Exploitation,
    Exploration,
}

/// One arm selection, tagged with its phase. `lp_fallback` marks exploration
/// rounds where the LP solve failed and the policy fell back to estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub arm: usize,
    pub phase: Phase,
    pub lp_fallback: bool,
}

/// Which arms count as "current best" when clipping exploration targets.
/// `Empirical` follows the empirical best set each round; `Known` pins a
/// fixed index set (used to study the alternative reading where the clip is
/// tied to the true parameter).
#[derive(Debug, Clone, PartialEq)]
pub enum ClipReference {
    Empirical,
    Known(Vec<usize>),
}

/// Tunables of the policy. The multiplier defaults follow the convention
/// that positive constants may scale the estimation threshold and the log-t
/// clip without affecting asymptotics.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyConfig {
    pub believed: Lipschitz,
    /// Exploitation margin, > 0.
    pub lambda: f64,
    /// Multiplier on the `log t / log log t` estimation threshold.
    pub est_const: f64,
    /// Multiplier on the `log t` exploration clip.
    pub clip_const: f64,
    /// Minimum fraction of exploration rounds spent settling the current
    /// best set. Every LP constraint measures divergence toward the best
    /// value, so grinding against the constraints while the incumbent
    /// estimate is starved can lock the phase open for the whole horizon.
    pub guard_frac: f64,
    pub clip_reference: ClipReference,
}

impl PolicyConfig {
    pub fn new(believed: Lipschitz) -> Self {
        PolicyConfig {
            believed,
            lambda: 0.1,
            est_const: 1.0,
            clip_const: 1.0,
            guard_frac: 0.1,
            clip_reference: ClipReference::Empirical,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    fn validate(&self) {
        assert!(self.lambda > 0.0, "lambda must be positive");
        assert!(self.est_const > 0.0, "est_const must be positive");
        assert!(self.clip_const > 0.0, "clip_const must be positive");
        assert!((0.0..1.0).contains(&self.guard_frac), "guard_frac must lie in [0,1)");
    }
}

/// `max(log log t, 1)`; the raw threshold denominator is nonpositive or
/// undefined for small `t`.
fn loglog_safe(t: u64) -> f64 {
    let ll = (t as f64).ln().ln();
    if ll.is_nan() {
        1.0
    } else {
        ll.max(1.0)
    }
}

/// Policy runtime state for one episode: round counter, pull counts, and
/// incrementally maintained empirical means.
#[derive(Debug, Clone)]
pub struct PolicyState {
    t: u64,
    counts: Vec<u64>,
    means: Vec<f64>,
    /// Rounds decided by the exploration branch so far.
    explore_rounds: u64,
    emb: Arc<ArmEmbedding>,
    pub config: PolicyConfig,
}

impl PolicyState {
    pub fn new(emb: Arc<ArmEmbedding>, config: PolicyConfig) -> Self {
        config.validate();
        let k = emb.num_arms();
        PolicyState {
            t: 1,
            counts: vec![0; k],
            means: vec![0.0; k],
            explore_rounds: 0,
            emb,
            config,
        }
    }

    pub fn round(&self) -> u64 {
        self.t
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn embedding(&self) -> &ArmEmbedding {
        &self.emb
    }

    fn num_arms(&self) -> usize {
        self.counts.len()
    }

    fn least_pulled(&self) -> usize {
        // Lowest index wins ties.
        let mut best = 0;
        for i in 1..self.num_arms() {
            if self.counts[i] < self.counts[best] {
                best = i;
            }
        }
        best
    }

    fn least_pulled_of(&self, arms: &[usize]) -> usize {
        let mut best = arms[0];
        for &i in &arms[1..] {
            if self.counts[i] < self.counts[best] {
                best = i;
            }
        }
        best
    }

    /// Picks the next arm. Estimation preempts exploitation preempts
    /// exploration, in that strict order:
    ///
    /// 1. while any arm sits at or below the forced-sampling floor, pull the
    ///    most under-sampled arm;
    /// 2. if current exploration rates, shrunk by `1 + lambda`, already
    ///    separate every confusing parameter of the empirical instance, pull
    ///    the least-pulled empirical-best arm;
    /// 3. otherwise re-solve the LP at the empirical means and pull the arm
    ///    furthest below its clipped exploration target.
    pub fn select_arm(&mut self) -> Decision {
        let k = self.num_arms();
        let t = self.t;

        let forced = t <= (k as u64).max(3) || {
            let threshold = self.config.est_const * (t as f64).ln() / loglog_safe(t);
            self.counts.iter().any(|&n| (n as f64) <= threshold)
        };
        if forced {
            return Decision { arm: self.least_pulled(), phase: Phase::Estimation, lp_fallback: false };
        }

        // Past the forced block, t >= 4 so log t is safely positive.
        let log_t = (t as f64).ln();
        let hat = BanditInstance::new(self.means.clone())
            .expect("empirical means stay in [0,1]");
        let zeta = ExplorationAllocation::from_counts(&hat, &self.counts, log_t);
        let shrunk = zeta.scaled(1.0 / (1.0 + self.config.lambda));
        if in_feasible_set(&shrunk, &hat, &self.emb, self.config.believed) {
            let arm = self.least_pulled_of(hat.best_set());
            return Decision { arm, phase: Phase::Exploitation, lp_fallback: false };
        }

        self.explore_rounds += 1;
        let sol = solve_lower_bound(&hat, &self.emb, self.config.believed);
        if !sol.is_usable() {
            return Decision { arm: self.least_pulled(), phase: Phase::Estimation, lp_fallback: true };
        }

        let clip_set: &[usize] = match &self.config.clip_reference {
            ClipReference::Empirical => hat.best_set(),
            ClipReference::Known(set) => set,
        };
        let clipped_target = |i: usize| {
            let rate = sol.allocation.rate(i);
            if clip_set.contains(&i) {
                (self.config.clip_const * log_t).min(rate)
            } else {
                (1.0 + self.config.lambda) * rate
            }
        };

        // Serve starved clip-set arms first: an arm of the current best set
        // is owed both its clipped target and a `guard_frac` share of the
        // exploration rounds spent so far. Without this, a near-tie against
        // an unsettled best estimate can demand an enormous rate somewhere
        // and keep the phase grinding on that deficit for the rest of the
        // horizon. Sampling the incumbent is self-limiting: either it
        // really is best (no cost) or its estimate corrects and the demand
        // collapses.
        let guard_floor = self.config.guard_frac * self.explore_rounds as f64;
        let starved = clip_set
            .iter()
            .copied()
            .filter(|&i| {
                let budget = (clipped_target(i) * log_t).max(guard_floor);
                (self.counts[i] as f64) < budget
            })
            .min_by_key(|&i| (self.counts[i], i));
        if let Some(arm) = starved {
            return Decision { arm, phase: Phase::Exploration, lp_fallback: false };
        }

        let mut best_arm = 0;
        let mut best_score = f64::NEG_INFINITY;
        for i in 0..k {
            let score = clipped_target(i) * log_t - self.counts[i] as f64;
            if score > best_score {
                best_score = score;
                best_arm = i;
            }
        }
        Decision { arm: best_arm, phase: Phase::Exploration, lp_fallback: false }
    }

    /// Records one pull: bumps the round, the arm's count, and folds the
    /// reward into the arm's running mean.
    pub fn update(&mut self, arm: usize, reward: f64) {
        assert!(arm < self.num_arms(), "arm index out of range");
        assert!(reward == 0.0 || reward == 1.0, "reward must be 0 or 1, got {reward}");
        let n = self.counts[arm];
        self.means[arm] += (reward - self.means[arm]) / (n as f64 + 1.0);
        self.counts[arm] = n + 1;
        self.t += 1;
    }
}

/// How the policy's believed constant evolves over an episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeliefMode {
    /// Fixed constant for the whole episode.
    Fixed,
    /// Re-estimate the constant from the empirical means before every pull.
    OnlineEstimate,
}

/// Interface the episode runner drives.
pub trait BanditPolicy {
    fn choose(&mut self) -> Decision;
    fn learn(&mut self, arm: usize, reward: f64);
    /// Currently believed constant, when the policy has one (for traces).
    fn believed(&self) -> Option<Lipschitz> {
        None
    }
}

/// The directed-exploration policy, either with a fixed believed constant or
/// re-estimating it online each round.
#[derive(Debug, Clone)]
pub struct DelPolicy {
    state: PolicyState,
    mode: BeliefMode,
}

impl DelPolicy {
    pub fn fixed(emb: Arc<ArmEmbedding>, config: PolicyConfig) -> Self {
        DelPolicy { state: PolicyState::new(emb, config), mode: BeliefMode::Fixed }
    }

    /// Online variant: believed constant tracks the tightest constant of the
    /// empirical means. Starts from 0 until data arrives.
    pub fn online(emb: Arc<ArmEmbedding>, mut config: PolicyConfig) -> Self {
        config.believed = Lipschitz::Finite(0.0);
        DelPolicy { state: PolicyState::new(emb, config), mode: BeliefMode::OnlineEstimate }
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }
}

impl BanditPolicy for DelPolicy {
    fn choose(&mut self) -> Decision {
        if self.mode == BeliefMode::OnlineEstimate {
            let lhat = lipschitz_of(self.state.means(), &self.state.emb);
            self.state.config.believed = Lipschitz::Finite(lhat);
        }
        self.state.select_arm()
    }

    fn learn(&mut self, arm: usize, reward: f64) {
        self.state.update(arm, reward);
    }

    fn believed(&self) -> Option<Lipschitz> {
        Some(self.state.config.believed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn emb3() -> Arc<ArmEmbedding> {
        Arc::new(ArmEmbedding::line(&[0.0, 0.5, 1.0]).unwrap())
    }

    fn state_with(
        emb: Arc<ArmEmbedding>,
        config: PolicyConfig,
        counts: Vec<u64>,
        means: Vec<f64>,
    ) -> PolicyState {
        let mut st = PolicyState::new(emb, config);
        st.counts = counts;
        st.t = 1 + st.counts.iter().sum::<u64>();
        st.means = means;
        st
    }

    #[test]
    fn first_round_is_estimation_of_arm_zero() {
        let mut st = PolicyState::new(emb3(), PolicyConfig::new(Lipschitz::Unbounded));
        let d = st.select_arm();
        assert_eq!(d.arm, 0);
        assert_eq!(d.phase, Phase::Estimation);
    }

    #[test]
    fn estimation_pulls_most_undersampled() {
        let mut st = state_with(
            emb3(),
            PolicyConfig::new(Lipschitz::Unbounded),
            vec![5, 1, 5],
            vec![0.5, 0.2, 0.4],
        );
        // t = 12, threshold ln(12)/max(lnln 12, 1) ~ 2.48 >= 1.
        let d = st.select_arm();
        assert_eq!(d.phase, Phase::Estimation);
        assert_eq!(d.arm, 1);
    }

    #[test]
    fn well_explored_feasible_state_exploits_least_pulled_best() {
        let emb = emb3();
        let means = vec![0.8, 0.8, 0.3];
        let inst = BanditInstance::new(means.clone()).unwrap();
        let config = PolicyConfig::new(Lipschitz::Unbounded);
        // Build counts from a generously scaled LP solution so the
        // feasibility gate holds by construction.
        let sol = solve_lower_bound(&inst, &emb, Lipschitz::Unbounded);
        let t_target = 4000u64;
        let log_t = (t_target as f64).ln();
        let needed = (sol.allocation.rate(2) * (1.0 + config.lambda) * 1.5 * log_t) as u64 + 1;
        let counts = vec![(t_target - needed) / 2 + 1, (t_target - needed) / 2, needed];
        let mut st = state_with(emb, config.clone(), counts, means);
        let zeta = ExplorationAllocation::from_counts(
            &inst,
            st.counts(),
            (st.round() as f64).ln(),
        );
        assert!(in_feasible_set(
            &zeta.scaled(1.0 / (1.0 + config.lambda)),
            &inst,
            &st.emb,
            Lipschitz::Unbounded
        ));
        let d = st.select_arm();
        assert_eq!(d.phase, Phase::Exploitation);
        // Arm 1 is the least-pulled member of the empirical best set {0, 1}.
        assert_eq!(d.arm, 1);
    }

    #[test]
    fn infeasible_state_explores_toward_largest_deficit() {
        let emb = emb3();
        let means = vec![0.8, 0.7, 0.3];
        let config = PolicyConfig::new(Lipschitz::Unbounded);
        // The best arm sits above the lifted clip budget, so the decision
        // comes from the plain deficit argmax; arm 1 trails its LP target.
        let counts = vec![110u64, 101, 30];
        let mut st = state_with(emb.clone(), config.clone(), counts.clone(), means.clone());
        let inst = BanditInstance::new(means).unwrap();
        let log_t = (st.round() as f64).ln();
        let d = st.select_arm();
        assert_eq!(d.phase, Phase::Exploration);
        // Brute-force the argmax of the clipped target deficit.
        let sol = solve_lower_bound(&inst, &emb, Lipschitz::Unbounded);
        let mut expect = 0;
        let mut best = f64::NEG_INFINITY;
        for i in 0..3 {
            let rate = sol.allocation.rate(i);
            let target = if inst.best_set().contains(&i) {
                log_t.min(rate)
            } else {
                (1.0 + config.lambda) * rate
            };
            let score = target * log_t - counts[i] as f64;
            if score > best {
                best = score;
                expect = i;
            }
        }
        assert_eq!(d.arm, expect);
        assert_eq!(d.arm, 1);
    }

    #[test]
    fn exploration_serves_undersampled_best_arm_first() {
        let emb = emb3();
        // The empirical best arm trails its clipped budget; it is served
        // before the deficit argmax regardless of other demands.
        let means = vec![0.5, 0.3, 0.1];
        let counts = vec![20u64, 55, 40];
        let mut st = state_with(emb.clone(), PolicyConfig::new(Lipschitz::Unbounded), counts, means);
        let d = st.select_arm();
        assert_eq!(d.phase, Phase::Exploration);
        assert_eq!(d.arm, 0);
    }

    #[test]
    fn update_applies_incremental_mean() {
        let mut st = PolicyState::new(emb3(), PolicyConfig::new(Lipschitz::Unbounded));
        st.update(0, 1.0);
        assert_eq!(st.means()[0], 1.0);
        assert_eq!(st.counts()[0], 1);
        st.update(0, 0.0);
        assert!((st.means()[0] - 0.5).abs() < 1e-15);
        st.update(0, 0.0);
        // 0.5 + (0 - 0.5)/3 ... after three pulls mean is 1/3.
        assert!((st.means()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(st.round(), 4);
    }

    #[test]
    fn mean_from_half_history() {
        // counts = 1, mean 0.5, reward 0 -> 0.25.
        let mut st = state_with(
            emb3(),
            PolicyConfig::new(Lipschitz::Unbounded),
            vec![1, 0, 0],
            vec![0.5, 0.0, 0.0],
        );
        st.update(0, 0.0);
        assert!((st.means()[0] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn phase_precedence_is_strict() {
        // A state that would exploit still estimates while any count sits
        // below the floor.
        let emb = emb3();
        let mut counts = vec![4000u64, 40, 40];
        let means = vec![0.8, 0.5, 0.3];
        let mut st = state_with(
            emb.clone(),
            PolicyConfig::new(Lipschitz::Unbounded),
            counts.clone(),
            means.clone(),
        );
        assert_ne!(st.select_arm().phase, Phase::Estimation);
        counts[1] = 0;
        let mut st = state_with(emb, PolicyConfig::new(Lipschitz::Unbounded), counts, means);
        let d = st.select_arm();
        assert_eq!(d.phase, Phase::Estimation);
        assert_eq!(d.arm, 1);
    }

    proptest! {
        // Incremental means match the arithmetic average of the reward log.
        #[test]
        fn incremental_mean_matches_recomputation(
            rewards in proptest::collection::vec(0u8..=1, 1..40)
        ) {
            let mut st = PolicyState::new(emb3(), PolicyConfig::new(Lipschitz::Unbounded));
            for &r in &rewards {
                st.update(1, r as f64);
            }
            let avg = rewards.iter().map(|&r| r as f64).sum::<f64>() / rewards.len() as f64;
            prop_assert!((st.means()[1] - avg).abs() < 1e-12);
            prop_assert_eq!(st.counts()[1], rewards.len() as u64);
        }
    }
}
