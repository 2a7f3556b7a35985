//! Estimating the latent Lipschitz constant across episodes: order-statistic
//! estimators with a safety margin, threshold formulas for how much past
//! exploration is enough, learnability audits, and a worst-case pair of
//! episode batches that no estimator can tell apart cheaply.

use crate::embed::ArmEmbedding;
use crate::instance::BanditInstance;
use crate::lipschitz::lipschitz_of;
use crate::{Error, Result};

/// Hyperparameters of the quantile estimator: quantile level `beta` and the
/// additive safety margin `eps_beta` against underestimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub beta: f64,
    pub eps_beta: f64,
}

impl EstimatorConfig {
    pub fn new(beta: f64, eps_beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::InvalidInput(format!("beta must lie in (0,1), got {beta}")));
        }
        if !(eps_beta >= 0.0) {
            return Err(Error::InvalidInput(format!("eps_beta must be >= 0, got {eps_beta}")));
        }
        Ok(EstimatorConfig { beta, eps_beta })
    }
}

/// How learnable the constant is from a batch of past episodes: at least an
/// `alpha` fraction of them have their own tightest constant within
/// `eps_alpha` of the global one, and every arm was pulled at least `tau`
/// times per episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnabilityProfile {
    pub alpha: f64,
    pub eps_alpha: f64,
    pub tau: f64,
}

/// Final statistics of one past episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub means_hat: Vec<f64>,
    pub counts: Vec<u64>,
    /// Tightest constant of the empirical means.
    pub lipschitz_hat: f64,
    /// Pulls of the most under-sampled arm.
    pub min_pulls: u64,
}

impl EpisodeSummary {
    pub fn from_final_state(means_hat: Vec<f64>, counts: Vec<u64>, emb: &ArmEmbedding) -> Self {
        assert_eq!(means_hat.len(), counts.len());
        let lipschitz_hat = lipschitz_of(&means_hat, emb);
        let min_pulls = counts.iter().copied().min().unwrap_or(0);
        EpisodeSummary { means_hat, counts, lipschitz_hat, min_pulls }
    }
}

/// `ceil(beta * m)` with rational intent: products within 1e-9 of an integer
/// snap to it instead of ceiling past it (0.1 * 30 is 3, not 4).
pub fn quantile_rank(beta: f64, m: usize) -> usize {
    assert!(m >= 1, "quantile rank needs a nonempty list");
    assert!(beta > 0.0 && beta < 1.0, "beta must lie in (0,1)");
    let product = beta * m as f64;
    let nearest = product.round();
    let k = if (product - nearest).abs() < 1e-9 { nearest } else { product.ceil() } as usize;
    assert!((1..=m).contains(&k), "quantile rank {k} out of range for m={m}");
    k
}

/// `ell_beta`: the `ceil(beta m)`-th largest element. Duplicates count with
/// multiplicity; no interpolation.
pub fn quantile_level(estimates: &[f64], beta: f64) -> f64 {
    let k = quantile_rank(beta, estimates.len());
    let mut work = estimates.to_vec();
    let (_, nth, _) = work.select_nth_unstable_by(k - 1, |a, b| {
        b.partial_cmp(a).expect("estimates must not be NaN")
    });
    *nth
}

/// The quantile-with-margin estimator `ell_beta + eps_beta`.
pub fn quantile_estimator(estimates: &[f64], cfg: &EstimatorConfig) -> f64 {
    quantile_level(estimates, cfg.beta) + cfg.eps_beta
}

/// Running-max baseline over the whole list.
pub fn max_estimator(estimates: &[f64]) -> f64 {
    assert!(!estimates.is_empty(), "max estimator needs a nonempty list");
    estimates.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Prefix maxima, one entry per episode seen so far.
pub fn running_max(estimates: &[f64]) -> Vec<f64> {
    assert!(!estimates.is_empty(), "running max needs a nonempty list");
    let mut out = Vec::with_capacity(estimates.len());
    let mut acc = f64::NEG_INFINITY;
    for &v in estimates {
        acc = acc.max(v);
        out.push(acc);
    }
    out
}

/// Per-round online estimate: the tightest constant of the current empirical
/// means. Split out from the batch estimators so a policy can refresh its
/// believed constant every round.
pub fn online_estimator(means_hat: &[f64], emb: &ArmEmbedding) -> f64 {
    lipschitz_of(means_hat, emb)
}

/// Per-arm pulls per episode sufficient for the quantile estimator:
/// `(4 / (dx^2 (eps_beta - eps_alpha)^2)) (ln(2K) + 1 / min(beta, alpha - beta))`.
///
/// Panics outside the hypotheses `eps_beta > eps_alpha` and `0 < beta < alpha`.
pub fn required_tau(
    cfg: &EstimatorConfig,
    profile: &LearnabilityProfile,
    delta_x: f64,
    num_arms: usize,
) -> f64 {
    let margin = check_hypotheses(cfg, profile);
    let split = cfg.beta.min(profile.alpha - cfg.beta);
    4.0 / (delta_x * delta_x * margin * margin)
        * ((2.0 * num_arms as f64).ln() + 1.0 / split)
}

/// Number of past episodes sufficient for the quantile estimator:
/// `2 Z ln(2 Z T)` with `Z = 1 / (min(beta, alpha - beta) ln(2K))`.
pub fn required_episodes(
    cfg: &EstimatorConfig,
    profile: &LearnabilityProfile,
    num_arms: usize,
    horizon: u64,
) -> f64 {
    check_hypotheses(cfg, profile);
    let split = cfg.beta.min(profile.alpha - cfg.beta);
    let z = 1.0 / (split * (2.0 * num_arms as f64).ln());
    2.0 * z * (2.0 * z * horizon as f64).ln()
}

/// Probability that the quantile estimator misses the window
/// `[L - eps_beta, L + eps']` on either side:
/// `8 M exp(-(dx^2 eps'^2 / 4) min(beta, alpha - beta) tau M)`, capped at 1.
pub fn concentration_bound(
    profile: &LearnabilityProfile,
    cfg: &EstimatorConfig,
    delta_x: f64,
    episodes: usize,
) -> f64 {
    let margin = check_hypotheses(cfg, profile);
    let split = cfg.beta.min(profile.alpha - cfg.beta);
    let m = episodes as f64;
    let exponent = -(delta_x * delta_x * margin * margin / 4.0) * split * profile.tau * m;
    (8.0 * m * exponent.exp()).min(1.0)
}

fn check_hypotheses(cfg: &EstimatorConfig, profile: &LearnabilityProfile) -> f64 {
    assert!(
        cfg.eps_beta > profile.eps_alpha,
        "hypotheses need eps_beta > eps_alpha ({} vs {})",
        cfg.eps_beta,
        profile.eps_alpha
    );
    assert!(
        cfg.beta < profile.alpha,
        "hypotheses need beta < alpha ({} vs {})",
        cfg.beta,
        profile.alpha
    );
    cfg.eps_beta - profile.eps_alpha
}

/// Measures the learnability constants of a batch against the true
/// per-episode constants recorded by the generator: `alpha` is the fraction
/// of episodes with `L_m >= L - eps_alpha`, `tau` the worst per-arm pull
/// floor.
pub fn audit_assumptions(
    episodes: &[EpisodeSummary],
    true_constants: &[f64],
    true_l: f64,
    eps_alpha: f64,
) -> LearnabilityProfile {
    assert!(!episodes.is_empty(), "audit needs at least one episode");
    assert_eq!(episodes.len(), true_constants.len(), "one true constant per episode");
    let m = episodes.len() as f64;
    let close = true_constants.iter().filter(|&&lm| lm >= true_l - eps_alpha).count();
    let tau = episodes.iter().map(|e| e.min_pulls).min().unwrap_or(0);
    LearnabilityProfile { alpha: close as f64 / m, eps_alpha, tau: tau as f64 }
}

/// Diagnostic variant of [`audit_assumptions`] computed from the *estimated*
/// per-episode constants. Useful when true constants are unavailable, but it
/// measures estimation output, not the latent assumption.
pub fn audit_assumptions_estimated(
    episodes: &[EpisodeSummary],
    true_l: f64,
    eps_alpha: f64,
) -> LearnabilityProfile {
    assert!(!episodes.is_empty(), "audit needs at least one episode");
    let m = episodes.len() as f64;
    let close = episodes.iter().filter(|e| e.lipschitz_hat >= true_l - eps_alpha).count();
    let tau = episodes.iter().map(|e| e.min_pulls).min().unwrap_or(0);
    LearnabilityProfile { alpha: close as f64 / m, eps_alpha, tau: tau as f64 }
}

/// Per-episode gaps `L - L_m` between the global and episode constants.
pub fn lipschitz_gaps(true_l: f64, true_constants: &[f64]) -> Vec<f64> {
    true_constants.iter().map(|&lm| true_l - lm).collect()
}

/// Order of the sample complexity `tau * M` any uniformly good estimator
/// needs: `log T / (dx^2 (eps - eps_alpha)^2 alpha)`. Order only (the hidden
/// constant is not specified), so this is a scale for benchmarks, never an
/// assertion threshold.
pub fn sample_complexity_order(
    delta_x: f64,
    eps: f64,
    eps_alpha: f64,
    alpha: f64,
    horizon: u64,
) -> f64 {
    assert!(eps > eps_alpha, "order formula needs eps > eps_alpha");
    assert!(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0,1]");
    let margin = eps - eps_alpha;
    (horizon as f64).ln() / (delta_x * delta_x * margin * margin * alpha)
}

/// Builds the worst-case pair of episode batches over the given embedding:
/// a batch whose every episode has constant exactly `l`, and a copy whose
/// first `ceil(alpha m)` episodes push the pivot arm up by
/// `(eps - eps_alpha) * delta_x`, raising the constant to `l + eps - eps_alpha`.
/// Both satisfy the learnability assumption for their respective constants.
pub fn adversarial_pair(
    emb: &ArmEmbedding,
    l: f64,
    eps: f64,
    eps_alpha: f64,
    alpha: f64,
    episodes: usize,
    base_mean: f64,
) -> Result<(Vec<BanditInstance>, Vec<BanditInstance>)> {
    if !(base_mean > 0.0 && base_mean < 1.0) {
        return Err(Error::InvalidInput(format!("base mean must lie in (0,1), got {base_mean}")));
    }
    if eps <= eps_alpha {
        return Err(Error::InvalidInput(format!(
            "need eps > eps_alpha, got {eps} vs {eps_alpha}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidInput(format!("alpha must lie in (0,1], got {alpha}")));
    }
    if episodes == 0 {
        return Err(Error::InvalidInput("need at least one episode".into()));
    }
    let dx = emb.delta_x();
    let spike = base_mean + l * dx;
    let perturbed = spike + (eps - eps_alpha) * dx;
    if perturbed > 1.0 {
        return Err(Error::InvalidInput(format!(
            "means overflow [0,1]: c + L dx + (eps - eps_alpha) dx = {perturbed}"
        )));
    }

    // Pivot arm: lowest-index endpoint of a minimum-distance pair.
    let k = emb.num_arms();
    let mut pivot = 0;
    'outer: for i in 0..k {
        for j in 0..k {
            if i != j && emb.dist(i, j) <= dx {
                pivot = i;
                break 'outer;
            }
        }
    }

    let mut base = vec![base_mean; k];
    base[pivot] = spike;
    let base_instance = BanditInstance::new(base.clone())?;
    let tight_batch = vec![base_instance; episodes];

    let boosted = (alpha * episodes as f64).ceil() as usize;
    let mut bumped = base;
    bumped[pivot] = perturbed;
    let bumped_instance = BanditInstance::new(bumped)?;
    let mut loose_batch = tight_batch.clone();
    for slot in loose_batch.iter_mut().take(boosted) {
        *slot = bumped_instance.clone();
    }
    Ok((tight_batch, loose_batch))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn experiment_embedding() -> ArmEmbedding {
        ArmEmbedding::line(&[0.0, 0.8, 0.85, 0.9, 0.95, 1.0]).unwrap()
    }

    #[test]
    fn quantile_picks_kth_largest() {
        let cfg = EstimatorConfig::new(0.5, 0.0).unwrap();
        assert_eq!(quantile_estimator(&[1.0, 2.0, 3.0, 4.0], &cfg), 3.0);
        // Duplicates count with multiplicity.
        let cfg = EstimatorConfig::new(0.4, 0.05).unwrap();
        assert!((quantile_estimator(&[5.0, 5.0, 5.0], &cfg) - 5.05).abs() < 1e-12);
    }

    #[test]
    fn quantile_rank_snaps_rational_products() {
        assert_eq!(quantile_rank(0.1, 30), 3); // 0.1 * 30 floats above 3
        assert_eq!(quantile_rank(0.3, 10), 3);
        assert_eq!(quantile_rank(0.5, 4), 2);
        assert_eq!(quantile_rank(0.31, 10), 4); // genuine fraction ceils
        assert_eq!(quantile_rank(0.999, 1), 1);
    }

    #[test]
    fn quantile_agrees_with_full_sort_on_large_draws() {
        let mut rng = ChaCha12Rng::seed_from_u64(91);
        let draws: Vec<f64> = (0..400).map(|_| rng.random::<f64>() * 6.0).collect();
        let cfg = EstimatorConfig::new(0.3, 0.05).unwrap();
        let got = quantile_estimator(&draws, &cfg);
        // Sort-based oracle: full descending sort then index.
        let mut sorted = draws.clone();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let expect = sorted[quantile_rank(0.3, 400) - 1] + 0.05;
        assert_eq!(got, expect);
    }

    #[test]
    #[should_panic(expected = "nonempty")]
    fn empty_list_is_a_usage_error() {
        quantile_level(&[], 0.5);
    }

    #[test]
    fn max_and_prefix_max() {
        assert_eq!(max_estimator(&[1.0, 3.0, 2.0]), 3.0);
        assert_eq!(running_max(&[1.0, 3.0, 2.0]), vec![1.0, 3.0, 3.0]);
    }

    #[test]
    fn required_tau_arithmetic() {
        let cfg = EstimatorConfig::new(0.15, 0.1).unwrap();
        let profile = LearnabilityProfile { alpha: 0.3, eps_alpha: 0.05, tau: 0.0 };
        let expect = 4.0 / (0.05f64 * 0.05 * 0.05 * 0.05) * (12.0f64.ln() + 1.0 / 0.15);
        assert!((required_tau(&cfg, &profile, 0.05, 6) - expect).abs() < 1e-6);
        // Doubling the margin divides the threshold by 4.
        let wide = EstimatorConfig::new(0.15, 0.15).unwrap();
        let ratio = required_tau(&cfg, &profile, 0.05, 6) / required_tau(&wide, &profile, 0.05, 6);
        assert!((ratio - 4.0).abs() < 1e-9);
    }

    #[test]
    fn beta_at_half_alpha_minimizes_the_split_term() {
        let profile = LearnabilityProfile { alpha: 0.3, eps_alpha: 0.0, tau: 0.0 };
        let at = |beta: f64| {
            required_tau(&EstimatorConfig::new(beta, 0.05).unwrap(), &profile, 0.05, 6)
        };
        let mid = at(0.15);
        assert!(mid < at(0.10));
        assert!(mid < at(0.20));
        // 1/min(beta, alpha-beta) at beta = alpha/2 equals 2/alpha.
        let split_term = 4.0 / (0.05f64 * 0.05 * 0.05 * 0.05) * (12.0f64.ln() + 2.0 / 0.3);
        assert!((mid - split_term).abs() < 1e-6);
    }

    #[test]
    fn required_episodes_arithmetic_and_sufficiency() {
        let cfg = EstimatorConfig::new(0.15, 0.1).unwrap();
        let profile = LearnabilityProfile { alpha: 0.3, eps_alpha: 0.05, tau: 0.0 };
        let z = 1.0 / (0.15 * 12.0f64.ln());
        let expect = 2.0 * z * (2.0 * z * 1e4).ln();
        let m = required_episodes(&cfg, &profile, 6, 10_000);
        assert!((m - expect).abs() < 1e-9);
        // Z doubles when the split halves.
        let narrow = EstimatorConfig::new(0.075, 0.1).unwrap();
        let m2 = required_episodes(&narrow, &profile, 6, 10_000);
        let z2 = 2.0 * z;
        assert!((m2 - 2.0 * z2 * (2.0 * z2 * 1e4).ln()).abs() < 1e-9);
        // The returned M satisfies M >= Z ln M + Z ln T.
        assert!(m >= z * m.ln() + z * (1e4f64).ln());
    }

    #[test]
    fn concentration_bound_caps_and_decreases() {
        let cfg = EstimatorConfig::new(0.15, 0.1).unwrap();
        let zero_tau = LearnabilityProfile { alpha: 0.3, eps_alpha: 0.05, tau: 0.0 };
        assert_eq!(concentration_bound(&zero_tau, &cfg, 0.05, 4), 1.0);
        // Nonincreasing in tau.
        let mut prev = f64::INFINITY;
        for tau in [0.0, 1e4, 1e5, 1e6] {
            let profile = LearnabilityProfile { alpha: 0.3, eps_alpha: 0.05, tau };
            let b = concentration_bound(&profile, &cfg, 0.05, 50);
            assert!(b <= prev + 1e-15);
            prev = b;
        }
        // Nonincreasing in M beyond the turnover point of M exp(-c M).
        let profile = LearnabilityProfile { alpha: 0.3, eps_alpha: 0.05, tau: 1e5 };
        let c = 0.05f64 * 0.05 * 0.05 * 0.05 / 4.0 * 0.15 * 1e5;
        let turnover = (1.0 / c).ceil() as usize + 1;
        let mut prev = concentration_bound(&profile, &cfg, 0.05, turnover);
        for m in (turnover + 1)..(turnover + 20) {
            let b = concentration_bound(&profile, &cfg, 0.05, m);
            assert!(b <= prev + 1e-15);
            prev = b;
        }
    }

    #[test]
    #[should_panic(expected = "eps_beta > eps_alpha")]
    fn hypotheses_are_enforced() {
        let cfg = EstimatorConfig::new(0.15, 0.01).unwrap();
        let profile = LearnabilityProfile { alpha: 0.3, eps_alpha: 0.05, tau: 0.0 };
        required_tau(&cfg, &profile, 0.05, 6);
    }

    #[test]
    fn audit_counts_close_episodes() {
        let emb = experiment_embedding();
        let ep = EpisodeSummary::from_final_state(
            vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
            vec![10, 20, 30, 40, 50, 60],
            &emb,
        );
        let eps = vec![ep.clone(), ep.clone(), ep];
        // All true constants equal L: alpha = 1 for any eps_alpha >= 0.
        let p = audit_assumptions(&eps, &[5.0, 5.0, 5.0], 5.0, 0.0);
        assert_eq!(p.alpha, 1.0);
        assert_eq!(p.tau, 10.0);
        // All constants at L - 2 eps_alpha: alpha = 0.
        let p = audit_assumptions(&eps, &[4.8, 4.8, 4.8], 5.0, 0.1);
        assert_eq!(p.alpha, 0.0);
        // Effectively unbounded margin recovers alpha = 1.
        let p = audit_assumptions(&eps, &[0.1, 0.2, 0.3], 5.0, f64::MAX);
        assert_eq!(p.alpha, 1.0);
    }

    #[test]
    fn adversarial_pair_constants() {
        let emb = experiment_embedding();
        let (tight, loose) =
            adversarial_pair(&emb, 5.0, 0.3, 0.1, 0.5, 10, 0.4).unwrap();
        assert_eq!(tight.len(), 10);
        for inst in &tight {
            assert!((lipschitz_of(inst.means(), &emb) - 5.0).abs() < 1e-9);
        }
        // First ceil(alpha M) = 5 episodes carry the bumped constant.
        for (m, inst) in loose.iter().enumerate() {
            let lm = lipschitz_of(inst.means(), &emb);
            if m < 5 {
                assert!((lm - 5.2).abs() < 1e-9, "episode {m}: {lm}");
            } else {
                assert!((lm - 5.0).abs() < 1e-9, "episode {m}: {lm}");
            }
        }
    }

    #[test]
    fn adversarial_pair_rejects_overflow() {
        let emb = experiment_embedding();
        // 0.8 + 5 * 0.05 = 1.05 > 1.
        assert!(adversarial_pair(&emb, 5.0, 0.3, 0.1, 0.5, 10, 0.8).is_err());
    }

    // Per-episode concentration sanity: with every arm pulled exactly tau
    // times, the frequency of |L_m - Lhat_m| >= eps stays within the
    // Hoeffding-style envelope 2K exp(-dx^2 eps^2 tau / 2) + 0.01.
    #[test]
    fn per_episode_estimation_tail_bound() {
        let emb = experiment_embedding();
        let (batch, _) = adversarial_pair(&emb, 5.0, 0.3, 0.1, 0.5, 1, 0.4).unwrap();
        let inst = &batch[0];
        let true_lm = lipschitz_of(inst.means(), &emb);
        let dx = emb.delta_x();
        let k = emb.num_arms();
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        for &(tau, eps) in &[(2000u64, 1.5f64), (5000, 1.0), (8000, 0.9)] {
            let bound = 2.0 * k as f64 * (-dx * dx * eps * eps * tau as f64 / 2.0).exp();
            let trials = 400;
            let mut misses = 0;
            for _ in 0..trials {
                let mut hats = Vec::with_capacity(k);
                for i in 0..k {
                    let mut wins = 0u64;
                    for _ in 0..tau {
                        if rng.random::<f64>() < inst.mean(i) {
                            wins += 1;
                        }
                    }
                    hats.push(wins as f64 / tau as f64);
                }
                let lhat = lipschitz_of(&hats, &emb);
                if (true_lm - lhat).abs() >= eps {
                    misses += 1;
                }
            }
            let freq = misses as f64 / trials as f64;
            assert!(
                freq <= bound.min(1.0) + 0.01,
                "tau={tau} eps={eps}: freq {freq} vs bound {bound}"
            );
        }
    }

    proptest! {
        // The smallest admissible quantile with no margin is the max.
        #[test]
        fn smallest_quantile_is_max(
            hats in proptest::collection::vec(0.0f64..10.0, 1..30)
        ) {
            let beta = 0.5 / hats.len() as f64; // ceil(beta M) = 1
            prop_assert_eq!(quantile_level(&hats, beta), max_estimator(&hats));
        }

        // Elementwise-larger inputs never decrease the estimate.
        #[test]
        fn quantile_is_monotone(
            hats in proptest::collection::vec(0.0f64..10.0, 1..30),
            bumps in proptest::collection::vec(0.0f64..5.0, 30),
            beta in 0.05f64..0.95,
        ) {
            let bigger: Vec<f64> =
                hats.iter().zip(&bumps).map(|(h, b)| h + b).collect();
            prop_assert!(quantile_level(&bigger, beta) >= quantile_level(&hats, beta));
        }

        // Reordering the list never changes the estimate.
        #[test]
        fn quantile_is_permutation_invariant(
            hats in proptest::collection::vec(0.0f64..10.0, 2..30),
            beta in 0.05f64..0.95,
        ) {
            let mut reversed = hats.clone();
            reversed.reverse();
            prop_assert_eq!(quantile_level(&hats, beta), quantile_level(&reversed, beta));
        }

        // The max dominates any margin-free quantile.
        #[test]
        fn max_dominates_quantiles(
            hats in proptest::collection::vec(0.0f64..10.0, 1..30),
            beta in 0.05f64..0.95,
        ) {
            prop_assert!(max_estimator(&hats) >= quantile_level(&hats, beta));
        }
    }
}
