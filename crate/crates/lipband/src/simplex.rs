//! Dense two-phase primal simplex for small linear programs.
//!
//! Solves `min c.x  s.t.  A x >= b, x >= 0` with `b >= 0`. Problems here
//! have at most `K - 1` variables and constraints, so a dense tableau with
//! Bland's anti-cycling rule is plenty.

/// Feasibility/optimality tolerance.
pub const SIMPLEX_TOL: f64 = 1e-9;

const MAX_ITERATIONS: usize = 100_000;

/// Outcome of a simplex run.
#[derive(Debug, Clone, PartialEq)]
pub enum SimplexOutcome {
    Optimal {
        x: Vec<f64>,
        value: f64,
        /// True when a nonbasic column sits at zero reduced cost, i.e. the
        /// optimum is not a unique vertex.
        alternative_optima: bool,
    },
    Infeasible,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    rows: Vec<Vec<f64>>, // m x (n_total + 1), last column is rhs
    basis: Vec<usize>,
    n_struct: usize,
    n_surplus: usize,
}

impl Tableau {
    fn n_total(&self) -> usize {
        self.n_struct + 2 * self.n_surplus
    }

    fn is_artificial(&self, col: usize) -> bool {
        col >= self.n_struct + self.n_surplus
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.rows[row].len();
        let p = self.rows[row][col];
        for v in self.rows[row].iter_mut() {
            *v /= p;
        }
        for r in 0..self.rows.len() {
            if r == row {
                continue;
            }
            let factor = self.rows[r][col];
            if factor == 0.0 {
                continue;
            }
            for c in 0..width {
                let delta = factor * self.rows[row][c];
                self.rows[r][c] -= delta;
            }
            self.rows[r][col] = 0.0; // kill roundoff in the pivot column
        }
        self.basis[row] = col;
    }

    /// Reduced costs for the given full cost vector.
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut red = cost.to_vec();
        for (row, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb == 0.0 {
                continue;
            }
            for c in 0..self.n_total() {
                red[c] -= cb * self.rows[row][c];
            }
        }
        red
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(row, &b)| cost[b] * self.rows[row][self.n_total()])
            .sum()
    }

    /// One phase of Bland-rule pivoting. `allow` filters entering columns.
    fn run_phase(&mut self, cost: &[f64], allow_artificial: bool) -> Option<SimplexOutcome> {
        for _ in 0..MAX_ITERATIONS {
            let red = self.reduced_costs(cost);
            let entering = (0..self.n_total())
                .filter(|&c| allow_artificial || !self.is_artificial(c))
                .filter(|&c| !self.basis.contains(&c))
                .find(|&c| red[c] < -SIMPLEX_TOL);
            let Some(col) = entering else {
                return None; // optimal for this phase
            };

            let rhs_col = self.n_total();
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][col];
                if a > SIMPLEX_TOL {
                    let ratio = self.rows[r][rhs_col] / a;
                    let better = match leaving {
                        None => true,
                        Some((lr, lratio)) => {
                            ratio < lratio - SIMPLEX_TOL
                                || (ratio < lratio + SIMPLEX_TOL
                                    && self.basis[r] < self.basis[lr])
                        }
                    };
                    if better {
                        leaving = Some((r, ratio));
                    }
                }
            }
            match leaving {
                Some((row, _)) => self.pivot(row, col),
                None => return Some(SimplexOutcome::Unbounded),
            }
        }
        Some(SimplexOutcome::IterationLimit)
    }
}

/// Minimizes `objective . x` subject to `constraints[r] . x >= rhs[r]` and
/// `x >= 0`. All right-hand sides must be nonnegative.
pub fn solve_min_geq(objective: &[f64], constraints: &[Vec<f64>], rhs: &[f64]) -> SimplexOutcome {
    let n = objective.len();
    let m = constraints.len();
    assert_eq!(m, rhs.len(), "constraint/rhs count mismatch");
    assert!(rhs.iter().all(|&b| b >= 0.0), "rhs must be nonnegative");
    for row in constraints {
        assert_eq!(row.len(), n, "constraint width mismatch");
    }
    if m == 0 {
        return SimplexOutcome::Optimal { x: vec![0.0; n], value: 0.0, alternative_optima: false };
    }

    // Columns: [structural | surplus | artificial | rhs].
    let n_total = n + 2 * m;
    let mut rows = Vec::with_capacity(m);
    for r in 0..m {
        let mut row = vec![0.0; n_total + 1];
        row[..n].copy_from_slice(&constraints[r]);
        row[n + r] = -1.0; // surplus
        row[n + m + r] = 1.0; // artificial
        row[n_total] = rhs[r];
        rows.push(row);
    }
    let basis: Vec<usize> = (0..m).map(|r| n + m + r).collect();
    let mut tab = Tableau { rows, basis, n_struct: n, n_surplus: m };

    // Phase 1: minimize the artificial sum.
    let mut phase1_cost = vec![0.0; n_total];
    for c in (n + m)..n_total {
        phase1_cost[c] = 1.0;
    }
    if let Some(outcome) = tab.run_phase(&phase1_cost, true) {
        // Unbounded cannot occur in phase 1 (objective bounded below by 0).
        return outcome;
    }
    if tab.objective(&phase1_cost) > SIMPLEX_TOL {
        return SimplexOutcome::Infeasible;
    }

    // Drive any artificial still basic (at level zero) out of the basis;
    // rows that cannot pivot are redundant and dropped.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.is_artificial(tab.basis[r]) {
            let col = (0..(n + m)).find(|&c| tab.rows[r][c].abs() > SIMPLEX_TOL);
            match col {
                Some(c) => tab.pivot(r, c),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    // Phase 2: original objective, artificial columns barred.
    let mut phase2_cost = vec![0.0; n_total];
    phase2_cost[..n].copy_from_slice(objective);
    if let Some(outcome) = tab.run_phase(&phase2_cost, false) {
        return outcome;
    }

    let mut x = vec![0.0; n];
    let rhs_col = tab.n_total();
    for (row, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.rows[row][rhs_col].max(0.0);
        }
    }
    let value = tab.objective(&phase2_cost);

    let red = tab.reduced_costs(&phase2_cost);
    let alternative_optima = (0..(n + m))
        .filter(|c| !tab.basis.contains(c))
        .any(|c| red[c].abs() <= SIMPLEX_TOL && tab.rows.iter().any(|r| r[c].abs() > SIMPLEX_TOL));

    SimplexOutcome::Optimal { x, value, alternative_optima }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(outcome: SimplexOutcome) -> (Vec<f64>, f64) {
        match outcome {
            SimplexOutcome::Optimal { x, value, .. } => (x, value),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn two_variable_diet() {
        // min x + y  s.t. x + 2y >= 2, 3x + y >= 3  => vertex x = 0.8, y = 0.6
        let (x, value) = optimal(solve_min_geq(
            &[1.0, 1.0],
            &[vec![1.0, 2.0], vec![3.0, 1.0]],
            &[2.0, 3.0],
        ));
        assert!((x[0] - 0.8).abs() < 1e-9);
        assert!((x[1] - 0.6).abs() < 1e-9);
        assert!((value - 1.4).abs() < 1e-9);
    }

    #[test]
    fn decoupled_constraints() {
        // min 2a + 3b s.t. 4a >= 1, 5b >= 1
        let (x, value) = optimal(solve_min_geq(
            &[2.0, 3.0],
            &[vec![4.0, 0.0], vec![0.0, 5.0]],
            &[1.0, 1.0],
        ));
        assert!((x[0] - 0.25).abs() < 1e-12);
        assert!((x[1] - 0.2).abs() < 1e-12);
        assert!((value - 1.1).abs() < 1e-12);
    }

    #[test]
    fn single_constraint_picks_cheapest_cover() {
        // min x1 + 10 x2 s.t. x1 + x2 >= 5 => all on x1
        let (x, value) = optimal(solve_min_geq(
            &[1.0, 10.0],
            &[vec![1.0, 1.0]],
            &[5.0],
        ));
        assert!((x[0] - 5.0).abs() < 1e-9);
        assert!(x[1].abs() < 1e-12);
        assert!((value - 5.0).abs() < 1e-9);
    }

    #[test]
    fn infeasible_zero_row() {
        let outcome = solve_min_geq(&[1.0], &[vec![0.0]], &[1.0]);
        assert_eq!(outcome, SimplexOutcome::Infeasible);
    }

    #[test]
    fn redundant_constraint_is_harmless() {
        // Second row is half the first: same halfspace.
        let (x, value) = optimal(solve_min_geq(
            &[1.0, 1.0],
            &[vec![2.0, 2.0], vec![1.0, 1.0]],
            &[2.0, 1.0],
        ));
        assert!((value - 1.0).abs() < 1e-9);
        assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ties_in_objective_flag_alternatives() {
        // min x + y s.t. x + y >= 1: the whole facet is optimal.
        match solve_min_geq(&[1.0, 1.0], &[vec![1.0, 1.0]], &[1.0]) {
            SimplexOutcome::Optimal { value, alternative_optima, .. } => {
                assert!((value - 1.0).abs() < 1e-9);
                assert!(alternative_optima);
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn no_constraints_means_origin() {
        let (x, value) = optimal(solve_min_geq(&[3.0, 4.0], &[], &[]));
        assert_eq!(x, vec![0.0, 0.0]);
        assert_eq!(value, 0.0);
    }
}
