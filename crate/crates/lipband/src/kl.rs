//! Kullback-Leibler divergence between Bernoulli distributions.

/// Clamp applied to the second KL argument so downstream arithmetic stays
/// finite when a confusing parameter hits 0 or 1 exactly.
pub const KL_CLAMP: f64 = 1e-9;

/// `KL(p || q)` for Bernoulli means, in nats.
///
/// Evaluates `p ln(p/q) + (1-p) ln((1-p)/(1-q))` with the `0 ln 0 := 0`
/// convention. `q` is clamped to `[KL_CLAMP, 1 - KL_CLAMP]` before
/// evaluation; `p` is used exactly. The result is nonnegative and is zero
/// exactly when `p` equals the clamped `q`.
///
/// Panics on NaN or out-of-range arguments.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    assert!(
        p.is_finite() && (0.0..=1.0).contains(&p),
        "bernoulli_kl: p must lie in [0,1], got {p}"
    );
    assert!(
        q.is_finite() && (0.0..=1.0).contains(&q),
        "bernoulli_kl: q must lie in [0,1], got {q}"
    );
    let q = q.clamp(KL_CLAMP, 1.0 - KL_CLAMP);
    let mut kl = 0.0;
    if p > 0.0 {
        kl += p * (p / q).ln();
    }
    if p < 1.0 {
        kl += (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
    }
    // Rounding can leave a tiny negative residue when p ~ q.
    kl.max(0.0)
}
