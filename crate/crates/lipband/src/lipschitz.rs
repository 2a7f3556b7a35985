//! Lipschitz constants of instances and membership in the structure class.

use crate::embed::ArmEmbedding;
use crate::instance::BanditInstance;

/// Slack when testing membership `|mu(i) - mu(j)| <= L d(i,j)`.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

/// A Lipschitz constant on the extended nonnegative reals. The unstructured
/// class (`L = infinity`) is an explicit variant, never a float sentinel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Lipschitz {
    Finite(f64),
    Unbounded,
}

impl Lipschitz {
    /// `L * d`, with `inf * 0 := 0` so a confusing parameter pins its own
    /// arm to the best value even in the unstructured case.
    pub fn scaled(self, d: f64) -> f64 {
        if d == 0.0 {
            return 0.0;
        }
        match self {
            Lipschitz::Finite(l) => l * d,
            Lipschitz::Unbounded => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Lipschitz::Finite(_))
    }

    /// Finite value, or `f64::INFINITY` for the unstructured case. Intended
    /// for display and serialization (writes back as `inf`).
    pub fn as_f64(self) -> f64 {
        match self {
            Lipschitz::Finite(l) => l,
            Lipschitz::Unbounded => f64::INFINITY,
        }
    }

    /// `L + delta`; unbounded absorbs any shift.
    pub fn widened(self, delta: f64) -> Lipschitz {
        match self {
            Lipschitz::Finite(l) => Lipschitz::Finite(l + delta),
            Lipschitz::Unbounded => Lipschitz::Unbounded,
        }
    }
}

impl std::fmt::Display for Lipschitz {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Lipschitz::Finite(l) => write!(f, "{l}"),
            Lipschitz::Unbounded => write!(f, "inf"),
        }
    }
}

/// Tightest Lipschitz constant of a mean vector w.r.t. an embedding:
/// `max_{i != j} |mu(i) - mu(j)| / d(i, j)`.
///
/// Panics when fewer than two arms are given (no pair exists).
pub fn lipschitz_of(means: &[f64], emb: &ArmEmbedding) -> f64 {
    let k = means.len();
    assert!(k >= 2, "lipschitz_of needs at least two arms");
    assert_eq!(k, emb.num_arms(), "means/embedding arm count mismatch");
    let mut tightest = 0.0f64;
    for i in 0..k {
        for j in (i + 1)..k {
            let ratio = (means[i] - means[j]).abs() / emb.dist(i, j);
            tightest = tightest.max(ratio);
        }
    }
    tightest
}

/// Tightest Lipschitz constant of an instance.
pub fn tightest_lipschitz(instance: &BanditInstance, emb: &ArmEmbedding) -> f64 {
    lipschitz_of(instance.means(), emb)
}

/// Whether the instance lies in the structure class for constant `l`.
pub fn is_member(instance: &BanditInstance, emb: &ArmEmbedding, l: Lipschitz) -> bool {
    match l {
        Lipschitz::Unbounded => true,
        Lipschitz::Finite(l) => tightest_lipschitz(instance, emb) <= l + MEMBERSHIP_TOL,
    }
}
