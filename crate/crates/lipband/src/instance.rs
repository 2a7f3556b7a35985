//! Bernoulli bandit instances: mean vectors, best-arm sets, and gaps.

use crate::{Error, Result};

/// Tolerance under which two means are treated as tied for the best arm.
pub const TIE_TOL: f64 = 1e-9;

/// A `K`-armed Bernoulli instance with cached best-arm structure.
#[derive(Debug, Clone, PartialEq)]
pub struct BanditInstance {
    means: Vec<f64>,
    best_value: f64,
    best_set: Vec<usize>,
    gaps: Vec<f64>,
    min_gap: Option<f64>,
    max_gap: f64,
}

impl BanditInstance {
    pub fn new(means: Vec<f64>) -> Result<Self> {
        if means.is_empty() {
            return Err(Error::InvalidInput("instance needs at least one arm".into()));
        }
        for (i, &m) in means.iter().enumerate() {
            if !m.is_finite() || !(0.0..=1.0).contains(&m) {
                return Err(Error::InvalidInput(format!("mean of arm {i} is {m}, outside [0,1]")));
            }
        }
        let best_value = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let best_set: Vec<usize> = (0..means.len())
            .filter(|&i| means[i] >= best_value - TIE_TOL)
            .collect();
        let gaps: Vec<f64> = means.iter().map(|&m| best_value - m).collect();
        let min_gap = (0..means.len())
            .filter(|i| !best_set.contains(i))
            .map(|i| gaps[i])
            .fold(None, |acc: Option<f64>, g| Some(acc.map_or(g, |a| a.min(g))));
        let max_gap = gaps.iter().cloned().fold(0.0, f64::max);

        Ok(BanditInstance { means, best_value, best_set, gaps, min_gap, max_gap })
    }

    pub fn num_arms(&self) -> usize {
        self.means.len()
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn mean(&self, i: usize) -> f64 {
        self.means[i]
    }

    /// Best mean reward `mu_*`.
    pub fn best_value(&self) -> f64 {
        self.best_value
    }

    /// Indices within `TIE_TOL` of the best mean, in increasing order.
    pub fn best_set(&self) -> &[usize] {
        &self.best_set
    }

    pub fn is_optimal(&self, i: usize) -> bool {
        self.gaps[i] <= TIE_TOL
    }

    /// Suboptimal arm indices, in increasing order.
    pub fn suboptimal_arms(&self) -> Vec<usize> {
        (0..self.means.len()).filter(|&i| !self.is_optimal(i)).collect()
    }

    /// Suboptimality gap `mu_* - mu(i)`.
    pub fn gap(&self, i: usize) -> f64 {
        self.gaps[i]
    }

    /// Smallest gap over suboptimal arms; `None` when every arm is optimal.
    pub fn min_gap(&self) -> Option<f64> {
        self.min_gap
    }

    /// Largest gap over all arms (0 when all means tie). Used by the
    /// concentration-regret decomposition, which scales tail probabilities by
    /// the worst per-round loss.
    pub fn max_gap(&self) -> f64 {
        self.max_gap
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig_risk_means() -> Vec<f64> {
        vec![0.1, 0.0005, 0.0005, 0.2005, 0.0005, 0.0005]
    }

    #[test]
    fn best_arm_structure() {
        let inst = BanditInstance::new(fig_risk_means()).unwrap();
        assert_eq!(inst.best_set(), &[3]);
        assert!((inst.best_value() - 0.2005).abs() < 1e-15);
        assert!((inst.min_gap().unwrap() - 0.1005).abs() < 1e-12);
        assert!((inst.max_gap() - 0.2).abs() < 1e-12);
        assert_eq!(inst.suboptimal_arms(), vec![0, 1, 2, 4, 5]);
    }

    #[test]
    fn exact_ties_share_the_best_set() {
        let inst = BanditInstance::new(vec![0.7, 0.7, 0.2]).unwrap();
        assert_eq!(inst.best_set(), &[0, 1]);
        assert!((inst.min_gap().unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn near_ties_within_tolerance_are_optimal() {
        let inst = BanditInstance::new(vec![0.7, 0.7 - 0.5e-9, 0.2]).unwrap();
        assert_eq!(inst.best_set(), &[0, 1]);
        let inst = BanditInstance::new(vec![0.7, 0.7 - 1e-8, 0.2]).unwrap();
        assert_eq!(inst.best_set(), &[0]);
    }

    #[test]
    fn all_optimal_instance_has_no_min_gap() {
        let inst = BanditInstance::new(vec![0.4, 0.4]).unwrap();
        assert_eq!(inst.best_set(), &[0, 1]);
        assert_eq!(inst.min_gap(), None);
        assert_eq!(inst.max_gap(), 0.0);
    }

    #[test]
    fn invalid_means_rejected() {
        assert!(BanditInstance::new(vec![]).is_err());
        assert!(BanditInstance::new(vec![0.5, 1.2]).is_err());
        assert!(BanditInstance::new(vec![f64::NAN]).is_err());
    }
}
