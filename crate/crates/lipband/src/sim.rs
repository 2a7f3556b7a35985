//! Bernoulli environments, episode execution with pseudo-regret accounting,
//! and the chain instance generator.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::embed::ArmEmbedding;
use crate::instance::BanditInstance;
use crate::policy::{BanditPolicy, Phase};

/// Derives an independent substream seed from a base seed and a stream
/// index (SplitMix64 finalizer), so parallel fan-out matches serial runs.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x1234_5678_9ABC_DEF1);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A bandit instance paired with a seeded reward stream.
#[derive(Debug, Clone)]
pub struct Environment {
    instance: BanditInstance,
    rng: ChaCha12Rng,
}

impl Environment {
    pub fn new(instance: BanditInstance, seed: u64) -> Self {
        Environment { instance, rng: ChaCha12Rng::seed_from_u64(seed) }
    }

    pub fn instance(&self) -> &BanditInstance {
        &self.instance
    }

    /// One Bernoulli draw for the arm's mean: 1.0 with probability `mu(arm)`.
    pub fn pull(&mut self, arm: usize) -> f64 {
        if self.rng.random::<f64>() < self.instance.mean(arm) {
            1.0
        } else {
            0.0
        }
    }
}

/// Rounds spent in each policy phase, plus LP-failure fallbacks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PhaseCounts {
    pub estimation: u64,
    pub exploitation: u64,
    pub exploration: u64,
    pub lp_fallbacks: u64,
}

/// Outcome of one simulated episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// Final pull counts per arm.
    pub pulls: Vec<u64>,
    /// Final empirical means (reward sum over pulls; 0 for unpulled arms).
    pub means_hat: Vec<f64>,
    /// Cumulative pseudo-regret `sum_i gap(i) n_t(i)` at each checkpoint.
    pub regret_trace: Vec<(u64, f64)>,
    pub phase_counts: PhaseCounts,
    /// Believed constant at each checkpoint, when the policy has one
    /// (infinite for the unstructured belief).
    pub belief_trace: Vec<(u64, f64)>,
}

impl EpisodeResult {
    pub fn final_regret(&self) -> f64 {
        self.regret_trace.last().map(|&(_, r)| r).unwrap_or(0.0)
    }

    pub fn final_belief(&self) -> Option<f64> {
        self.belief_trace.last().map(|&(_, b)| b)
    }
}

/// Default checkpoint grid: `n` log-spaced rounds between `lo` and `hi`
/// inclusive, deduplicated.
pub fn log_spaced_checkpoints(lo: u64, hi: u64, n: usize) -> Vec<u64> {
    assert!(hi >= 1 && n >= 1);
    let lo = lo.clamp(1, hi);
    let (ll, lh) = ((lo as f64).ln(), (hi as f64).ln());
    let mut points: Vec<u64> = (0..n)
        .map(|i| {
            let f = if n == 1 { 1.0 } else { i as f64 / (n - 1) as f64 };
            (ll + f * (lh - ll)).exp().round() as u64
        })
        .map(|t| t.clamp(lo, hi))
        .collect();
    points.push(hi);
    points.sort_unstable();
    points.dedup();
    points
}

/// Runs one episode of `horizon` pulls, recording pseudo-regret against the
/// environment's true gaps at each checkpoint. Deterministic given the
/// environment seed and policy configuration.
pub fn run_episode(
    policy: &mut dyn BanditPolicy,
    env: &mut Environment,
    horizon: u64,
    checkpoints: &[u64],
) -> EpisodeResult {
    let k = env.instance().num_arms();
    assert!(horizon >= k as u64, "horizon must cover at least one pull per arm");
    debug_assert!(checkpoints.windows(2).all(|w| w[0] < w[1]), "checkpoints must be ascending");

    let mut pulls = vec![0u64; k];
    let mut reward_sums = vec![0.0f64; k];
    let mut regret = 0.0;
    let mut phase_counts = PhaseCounts::default();
    let mut regret_trace = Vec::with_capacity(checkpoints.len());
    let mut belief_trace = Vec::with_capacity(checkpoints.len());
    let mut next_checkpoint = 0usize;

    for t in 1..=horizon {
        let decision = policy.choose();
        let reward = env.pull(decision.arm);
        policy.learn(decision.arm, reward);

        pulls[decision.arm] += 1;
        reward_sums[decision.arm] += reward;
        regret += env.instance().gap(decision.arm);
        match decision.phase {
            Phase::Estimation => phase_counts.estimation += 1,
            Phase::Exploitation => phase_counts.exploitation += 1,
            Phase::Exploration => phase_counts.exploration += 1,
        }
        if decision.lp_fallback {
            phase_counts.lp_fallbacks += 1;
        }

        while next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == t {
            regret_trace.push((t, regret));
            if let Some(l) = policy.believed() {
                belief_trace.push((t, l.as_f64()));
            }
            next_checkpoint += 1;
        }
    }

    let means_hat = (0..k)
        .map(|i| if pulls[i] > 0 { reward_sums[i] / pulls[i] as f64 } else { 0.0 })
        .collect();
    EpisodeResult { pulls, means_hat, regret_trace, phase_counts, belief_trace }
}

/// Draws an instance from the chain sampler over a sorted 1-D embedding:
/// the first mean is uniform in `bounds`, and each next mean is uniform in
/// the structure-compatible window around its predecessor intersected with
/// `bounds`. The result always satisfies the structure for constant `l`.
pub fn generate_instance(
    emb: &ArmEmbedding,
    l: f64,
    bounds: (f64, f64),
    rng: &mut ChaCha12Rng,
) -> BanditInstance {
    assert!(emb.is_sorted_line(), "chain sampler needs a sorted 1-D embedding");
    assert!(l >= 0.0, "constant must be nonnegative");
    let (lo, hi) = bounds;
    assert!((0.0..=1.0).contains(&lo) && lo < hi && hi <= 1.0, "bad bounds [{lo}, {hi}]");

    let k = emb.num_arms();
    let mut means = Vec::with_capacity(k);
    means.push(uniform(rng, lo, hi));
    for i in 1..k {
        let d = emb.dist(i - 1, i);
        let prev = means[i - 1];
        let a = (prev - l * d).max(lo);
        let b = (prev + l * d).min(hi);
        // The window always contains the predecessor, so it cannot be empty.
        assert!(a <= b);
        means.push(uniform(rng, a, b));
    }
    BanditInstance::new(means).expect("chain sampler stays in bounds")
}

fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
