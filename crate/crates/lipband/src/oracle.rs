//! Instance-dependent regret lower bound: confusing parameters, the
//! exploration-rate LP for `C(mu, L)`, feasibility membership, and the
//! closed-form scale-free and continuity windows.

use crate::embed::ArmEmbedding;
use crate::instance::BanditInstance;
use crate::kl::bernoulli_kl;
use crate::lipschitz::Lipschitz;
use crate::simplex::{solve_min_geq, SimplexOutcome, SIMPLEX_TOL};

/// Slack allowed when checking `sum KL * zeta >= 1`.
pub const FEASIBILITY_TOL: f64 = 1e-12;

/// A constraint row whose coefficients all sit at or below the solver
/// tolerance is vacuous: the arm is statistically inseparable from the best
/// at working precision, so no finite exploration satisfies its row.
fn row_is_vacuous(row: &[f64]) -> bool {
    row.iter().all(|&a| a <= SIMPLEX_TOL)
}

/// Per-arm exploration rates (pulls per `log t`), infinite on optimal arms.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplorationAllocation {
    rates: Vec<f64>,
}

impl ExplorationAllocation {
    /// Builds an allocation that is `+inf` on `instance`'s best set and takes
    /// the given finite rates (indexed like `instance.suboptimal_arms()`) on
    /// the rest.
    pub fn from_suboptimal_rates(instance: &BanditInstance, suboptimal_rates: &[f64]) -> Self {
        let subopt = instance.suboptimal_arms();
        assert_eq!(subopt.len(), suboptimal_rates.len(), "rate count mismatch");
        let mut rates = vec![f64::INFINITY; instance.num_arms()];
        for (idx, &arm) in subopt.iter().enumerate() {
            rates[arm] = suboptimal_rates[idx];
        }
        ExplorationAllocation { rates }
    }

    /// Current exploration rates `n_t(i) / log t`, infinite on the best set
    /// of the (empirical) instance.
    pub fn from_counts(instance: &BanditInstance, counts: &[u64], log_t: f64) -> Self {
        assert_eq!(counts.len(), instance.num_arms());
        assert!(log_t > 0.0, "log t must be positive");
        let rates = counts
            .iter()
            .enumerate()
            .map(|(i, &n)| {
                if instance.is_optimal(i) {
                    f64::INFINITY
                } else {
                    n as f64 / log_t
                }
            })
            .collect();
        ExplorationAllocation { rates }
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn rate(&self, i: usize) -> f64 {
        self.rates[i]
    }

    /// Every rate multiplied by `factor` (infinite entries stay infinite).
    pub fn scaled(&self, factor: f64) -> Self {
        ExplorationAllocation { rates: self.rates.iter().map(|&r| r * factor).collect() }
    }
}

/// Solver verdict for the lower-bound LP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    /// Converged but the optimum is not a unique vertex, or the iteration
    /// cap was hit. The value is still the best vertex found.
    Degenerate,
    Infeasible,
    Unbounded,
}

/// `C(mu, L)` together with the optimal exploration allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct LowerBoundSolution {
    /// Optimal LP value (regret per `log T`); NaN unless the status carries
    /// a solution.
    pub value: f64,
    pub allocation: ExplorationAllocation,
    pub status: LpStatus,
}

impl LowerBoundSolution {
    pub fn is_usable(&self) -> bool {
        matches!(self.status, LpStatus::Optimal | LpStatus::Degenerate) && self.value.is_finite()
    }
}

/// The most confusing parameter for suboptimal arm `j`:
/// `nu^j(i) = max(mu(i), mu_* - L d(i,j))`, so arm `j` is pulled up to the
/// best value and every other arm moves as little as the structure allows.
///
/// Panics when `j` is optimal.
pub fn confusing_parameter(
    instance: &BanditInstance,
    emb: &ArmEmbedding,
    l: Lipschitz,
    j: usize,
) -> Vec<f64> {
    assert!(!instance.is_optimal(j), "confusing parameter needs a suboptimal arm, got {j}");
    let best = instance.best_value();
    (0..instance.num_arms())
        .map(|i| instance.mean(i).max(best - l.scaled(emb.dist(i, j))))
        .collect()
}

/// KL coefficient matrix of the LP: one row per suboptimal `j`, one column
/// per suboptimal `i`, entry `KL(mu(i) || nu^j(i))`.
pub fn constraint_matrix(
    instance: &BanditInstance,
    emb: &ArmEmbedding,
    l: Lipschitz,
) -> (Vec<usize>, Vec<Vec<f64>>) {
    let subopt = instance.suboptimal_arms();
    let rows = subopt
        .iter()
        .map(|&j| {
            let nu = confusing_parameter(instance, emb, l, j);
            subopt.iter().map(|&i| bernoulli_kl(instance.mean(i), nu[i])).collect()
        })
        .collect();
    (subopt, rows)
}

/// Solves the lower-bound LP
/// `min sum gap(i) eta(i)  s.t.  sum_i KL(mu(i) || nu^j(i)) eta(i) >= 1`
/// over suboptimal arms, with optimal arms fixed at infinite rate.
pub fn solve_lower_bound(
    instance: &BanditInstance,
    emb: &ArmEmbedding,
    l: Lipschitz,
) -> LowerBoundSolution {
    let (subopt, matrix) = constraint_matrix(instance, emb, l);
    if subopt.is_empty() {
        return LowerBoundSolution {
            value: 0.0,
            allocation: ExplorationAllocation::from_suboptimal_rates(instance, &[]),
            status: LpStatus::Optimal,
        };
    }

    // A row with exactly zero coefficients cannot reach 1: the arm cannot
    // be statistically separated at all (clamping pathology).
    if matrix.iter().any(|row| row.iter().all(|&a| a < 1e-15)) {
        return LowerBoundSolution {
            value: f64::NAN,
            allocation: ExplorationAllocation::from_suboptimal_rates(
                instance,
                &vec![0.0; subopt.len()],
            ),
            status: LpStatus::Infeasible,
        };
    }

    // Rows below the solver tolerance are dropped rather than solved: they
    // belong to arms tied with the best at working precision, and keeping
    // them either trips the tolerance (spurious infeasibility) or demands
    // astronomically large rates.
    let kept: Vec<Vec<f64>> =
        matrix.iter().filter(|row| !row_is_vacuous(row)).cloned().collect();

    let objective: Vec<f64> = subopt.iter().map(|&i| instance.gap(i)).collect();
    let rhs = vec![1.0; kept.len()];
    match solve_min_geq(&objective, &kept, &rhs) {
        SimplexOutcome::Optimal { x, value, alternative_optima } => LowerBoundSolution {
            value,
            allocation: ExplorationAllocation::from_suboptimal_rates(instance, &x),
            status: if alternative_optima { LpStatus::Degenerate } else { LpStatus::Optimal },
        },
        SimplexOutcome::Infeasible => LowerBoundSolution {
            value: f64::NAN,
            allocation: ExplorationAllocation::from_suboptimal_rates(
                instance,
                &vec![0.0; subopt.len()],
            ),
            status: LpStatus::Infeasible,
        },
        SimplexOutcome::Unbounded => LowerBoundSolution {
            value: f64::NAN,
            allocation: ExplorationAllocation::from_suboptimal_rates(
                instance,
                &vec![0.0; subopt.len()],
            ),
            status: LpStatus::Unbounded,
        },
        SimplexOutcome::IterationLimit => LowerBoundSolution {
            value: f64::NAN,
            allocation: ExplorationAllocation::from_suboptimal_rates(
                instance,
                &vec![0.0; subopt.len()],
            ),
            status: LpStatus::Degenerate,
        },
    }
}

/// Whether the exploration rates satisfy every LP constraint, i.e. whether
/// current exploration statistically separates all confusing parameters.
pub fn in_feasible_set(
    zeta: &ExplorationAllocation,
    instance: &BanditInstance,
    emb: &ArmEmbedding,
    l: Lipschitz,
) -> bool {
    let (subopt, matrix) = constraint_matrix(instance, emb, l);
    for &i in &subopt {
        assert!(
            zeta.rate(i).is_finite(),
            "feasibility check needs finite rates on suboptimal arms (arm {i})"
        );
    }
    matrix.iter().all(|row| {
        if row_is_vacuous(row) {
            return true;
        }
        let lhs: f64 = row.iter().zip(&subopt).map(|(&a, &i)| a * zeta.rate(i)).sum();
        lhs >= 1.0 - FEASIBILITY_TOL
    })
}

/// Closed-form upper bound on `C(mu, L)`:
/// `(8 / gap_min^2) * min(K, (8 L sqrt(D) / gap_min + 1)^D)`.
///
/// Panics when the instance has no suboptimal arm.
pub fn scale_free_bound(instance: &BanditInstance, l: f64, dim: usize) -> f64 {
    let gap = instance
        .min_gap()
        .expect("scale_free_bound needs a suboptimal arm (positive minimum gap)");
    let k = instance.num_arms() as f64;
    let cell_count = (8.0 * l * (dim as f64).sqrt() / gap + 1.0).powi(dim as i32);
    (8.0 / (gap * gap)) * k.min(cell_count)
}

/// Width of the window `[L, L + delta)` on which `C(mu, .)` is continuous:
/// the smallest slack `gap(i)/d(i,j) - L` over pairs where the structure cap
/// is active (`mu_* - L d(i,j) >= mu(i)`). Returns 0 when a pair binds
/// exactly or when no pair is active.
pub fn continuity_delta(instance: &BanditInstance, emb: &ArmEmbedding, l: f64) -> f64 {
    let mut window = f64::INFINITY;
    let mut any_active = false;
    let best = instance.best_value();
    for i in instance.suboptimal_arms() {
        for j in 0..instance.num_arms() {
            if j == i {
                continue;
            }
            let d = emb.dist(i, j);
            if best - l * d >= instance.mean(i) {
                any_active = true;
                window = window.min(instance.gap(i) / d - l);
            }
        }
    }
    if any_active {
        window.max(0.0)
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kl::bernoulli_kl;
    use proptest::prelude::*;

    fn fig_risk() -> (BanditInstance, ArmEmbedding) {
        let inst =
            BanditInstance::new(vec![0.1, 0.0005, 0.0005, 0.2005, 0.0005, 0.0005]).unwrap();
        let emb = ArmEmbedding::line(&[0.0, 0.995, 0.996, 0.997, 0.998, 0.999]).unwrap();
        (inst, emb)
    }

    #[test]
    fn unstructured_confusing_parameter_collapses() {
        let inst = BanditInstance::new(vec![0.3, 0.8, 0.5]).unwrap();
        let emb = ArmEmbedding::line(&[0.0, 0.5, 1.0]).unwrap();
        let nu = confusing_parameter(&inst, &emb, Lipschitz::Unbounded, 2);
        assert_eq!(nu, vec![0.3, 0.8, 0.8]);
    }

    #[test]
    fn confusing_parameter_per_coordinate() {
        let (inst, emb) = fig_risk();
        let nu = confusing_parameter(&inst, &emb, Lipschitz::Finite(200.0), 1);
        // Direct per-coordinate evaluation of max(mu(i), 0.2005 - 200 |x(i) - 0.995|).
        for i in 0..6 {
            let expect = inst.mean(i).max(0.2005 - 200.0 * (emb.point(i)[0] - 0.995).abs());
            assert!((nu[i] - expect).abs() < 1e-15, "arm {i}: {} vs {expect}", nu[i]);
        }
        assert_eq!(nu[1], 0.2005);
    }

    #[test]
    fn two_arm_confusing_parameter() {
        let inst = BanditInstance::new(vec![0.9, 0.5]).unwrap();
        let emb = ArmEmbedding::line(&[0.0, 1.0]).unwrap();
        let nu = confusing_parameter(&inst, &emb, Lipschitz::Finite(0.1), 1);
        // max(0.9, 0.9 - 0.1 * 1) keeps the best arm; the target arm itself
        // is pinned to the best value.
        assert!((nu[0] - 0.9).abs() < 1e-15);
        assert!((nu[1] - 0.9).abs() < 1e-15);
    }

    #[test]
    #[should_panic(expected = "suboptimal arm")]
    fn optimal_arm_rejected() {
        let (inst, emb) = fig_risk();
        confusing_parameter(&inst, &emb, Lipschitz::Finite(200.0), 3);
    }

    #[test]
    fn unstructured_lp_matches_decoupled_closed_form() {
        let inst = BanditInstance::new(vec![0.7, 0.3, 0.5, 0.62]).unwrap();
        let emb = ArmEmbedding::line(&[0.0, 0.3, 0.6, 0.9]).unwrap();
        let sol = solve_lower_bound(&inst, &emb, Lipschitz::Unbounded);
        assert_eq!(sol.status, LpStatus::Optimal);
        let mut expect = 0.0;
        for i in inst.suboptimal_arms() {
            let kl = bernoulli_kl(inst.mean(i), inst.best_value());
            expect += inst.gap(i) / kl;
            assert!((sol.allocation.rate(i) - 1.0 / kl).abs() < 1e-9);
        }
        assert!((sol.value - expect).abs() < 1e-9, "{} vs {expect}", sol.value);
        assert!(sol.allocation.rate(0).is_infinite());
    }

    #[test]
    fn single_suboptimal_arm_closed_form() {
        let inst = BanditInstance::new(vec![0.9, 0.5]).unwrap();
        let emb = ArmEmbedding::line(&[0.0, 1.0]).unwrap();
        let sol = solve_lower_bound(&inst, &emb, Lipschitz::Finite(0.7));
        // One variable, one binding constraint with nu^1(1) = mu_*.
        let kl = bernoulli_kl(0.5, 0.9);
        assert!((sol.allocation.rate(1) - 1.0 / kl).abs() < 1e-9);
        assert!((sol.value - 0.4 / kl).abs() < 1e-9);
    }

    #[test]
    fn no_suboptimal_arm_is_zero_regret() {
        let inst = BanditInstance::new(vec![0.4, 0.4]).unwrap();
        let emb = ArmEmbedding::line(&[0.0, 1.0]).unwrap();
        let sol = solve_lower_bound(&inst, &emb, Lipschitz::Finite(1.0));
        assert_eq!(sol.status, LpStatus::Optimal);
        assert_eq!(sol.value, 0.0);
        assert!(sol.allocation.rates().iter().all(|r| r.is_infinite()));
    }

    #[test]
    fn lp_solution_is_feasible_and_scaling_below_breaks_it() {
        let inst = BanditInstance::new(vec![0.9, 0.5]).unwrap();
        let emb = ArmEmbedding::line(&[0.0, 1.0]).unwrap();
        let sol = solve_lower_bound(&inst, &emb, Lipschitz::Finite(0.1));
        assert!(in_feasible_set(&sol.allocation, &inst, &emb, Lipschitz::Finite(0.1)));
        // Single binding constraint: any shrink exits the feasible set.
        let shrunk = sol.allocation.scaled(0.999);
        assert!(!in_feasible_set(&shrunk, &inst, &emb, Lipschitz::Finite(0.1)));
        // And the all-zero allocation trivially fails.
        let zeros = ExplorationAllocation::from_suboptimal_rates(&inst, &[0.0]);
        assert!(!in_feasible_set(&zeros, &inst, &emb, Lipschitz::Finite(0.1)));
    }

    #[test]
    fn scaled_down_solution_violates_a_binding_row() {
        // Multi-constraint case, verified by direct constraint evaluation.
        let (inst, emb) = fig_risk();
        let l = Lipschitz::Finite(200.0);
        let sol = solve_lower_bound(&inst, &emb, l);
        assert!(sol.is_usable());
        assert!(in_feasible_set(&sol.allocation, &inst, &emb, l));
        let shrunk = sol.allocation.scaled(0.999);
        let (subopt, matrix) = constraint_matrix(&inst, &emb, l);
        let any_violated = matrix.iter().any(|row| {
            row.iter().zip(&subopt).map(|(&a, &i)| a * shrunk.rate(i)).sum::<f64>()
                < 1.0 - FEASIBILITY_TOL
        });
        assert!(any_violated);
        assert!(!in_feasible_set(&shrunk, &inst, &emb, l));
    }

    #[test]
    fn scale_free_bound_arithmetic() {
        // gap 0.5, K = 6, L = 0.5, D = 1: 32 * min(6, 8 * 0.5 / 0.5 + 1) = 192.
        let inst = BanditInstance::new(vec![0.9, 0.4, 0.4, 0.4, 0.4, 0.4]).unwrap();
        assert!((scale_free_bound(&inst, 0.5, 1) - 192.0).abs() < 1e-9);
        // L = 0 degenerates to 8 / gap^2.
        assert!((scale_free_bound(&inst, 0.0, 1) - 32.0).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "suboptimal arm")]
    fn scale_free_bound_needs_a_gap() {
        let inst = BanditInstance::new(vec![0.4, 0.4]).unwrap();
        scale_free_bound(&inst, 1.0, 1);
    }

    #[test]
    fn continuity_window_two_arms() {
        let inst = BanditInstance::new(vec![0.9, 0.5]).unwrap();
        let emb = ArmEmbedding::line(&[0.0, 1.0]).unwrap();
        assert!((continuity_delta(&inst, &emb, 0.1) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn continuity_window_collapses_on_binding_pair() {
        // gap = L * d exactly: 0.4 = 0.4 * 1.
        let inst = BanditInstance::new(vec![0.9, 0.5]).unwrap();
        let emb = ArmEmbedding::line(&[0.0, 1.0]).unwrap();
        assert_eq!(continuity_delta(&inst, &emb, 0.4), 0.0);
    }

    #[test]
    fn continuity_window_fig_risk_pairwise() {
        let (inst, emb) = fig_risk();
        // Direct pairwise oracle over active pairs.
        let mut expect = f64::INFINITY;
        let mut active = false;
        for i in inst.suboptimal_arms() {
            for j in 0..6 {
                if j != i && inst.best_value() - 200.0 * emb.dist(i, j) >= inst.mean(i) {
                    active = true;
                    expect = expect.min(inst.gap(i) / emb.dist(i, j) - 200.0);
                }
            }
        }
        let expect = if active { expect.max(0.0) } else { 0.0 };
        assert_eq!(continuity_delta(&inst, &emb, 200.0), expect);
        // The 200-steep pair binds exactly, so the window is empty.
        assert_eq!(expect, 0.0);
    }

    proptest! {
        // nu^j dominates mu elementwise and pins arm j to the best value.
        #[test]
        fn confusing_parameter_dominance(
            means in proptest::collection::vec(0.0f64..=1.0, 4),
            l in 0.0f64..3.0,
        ) {
            let inst = BanditInstance::new(means).unwrap();
            let emb = ArmEmbedding::line(&[0.05, 0.4, 0.7, 0.95]).unwrap();
            for j in inst.suboptimal_arms() {
                let nu = confusing_parameter(&inst, &emb, Lipschitz::Finite(l), j);
                for i in 0..4 {
                    prop_assert!(nu[i] >= inst.mean(i));
                }
                prop_assert_eq!(nu[j], inst.best_value());
            }
        }

        // The LP value never decreases when the structure loosens.
        #[test]
        fn lower_bound_monotone_in_l(
            means in proptest::collection::vec(0.05f64..=0.95, 4),
            l in 0.05f64..2.0,
            widen in 0.0f64..2.0,
        ) {
            let inst = BanditInstance::new(means).unwrap();
            let emb = ArmEmbedding::line(&[0.05, 0.4, 0.7, 0.95]).unwrap();
            if crate::lipschitz::is_member(&inst, &emb, Lipschitz::Finite(l)) {
                let lo = solve_lower_bound(&inst, &emb, Lipschitz::Finite(l));
                let hi = solve_lower_bound(&inst, &emb, Lipschitz::Finite(l + widen));
                if lo.is_usable() && hi.is_usable() {
                    prop_assert!(lo.value <= hi.value + 1e-8);
                }
            }
        }
    }
}
