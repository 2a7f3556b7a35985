//! Shared test oracles, kept independent of the library's solver path.

/// Brute-force LP oracle for `min c.x  s.t.  A x >= b, x >= 0` by vertex
/// enumeration: every vertex of the feasible polyhedron is the intersection
/// of `n` active hyperplanes drawn from the constraint rows and the axes.
/// Exponential in `n`, fine for the few-variable programs under test.
pub fn brute_force_min(
    objective: &[f64],
    constraints: &[Vec<f64>],
    rhs: &[f64],
) -> Option<(f64, Vec<f64>)> {
    let n = objective.len();
    let m = constraints.len();
    assert_eq!(m, rhs.len());
    if n == 0 {
        return Some((0.0, vec![]));
    }

    // Hyperplane set: rows (a_j . x = b_j) then axes (x_i = 0).
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::with_capacity(m + n);
    for (row, &b) in constraints.iter().zip(rhs) {
        planes.push((row.clone(), b));
    }
    for i in 0..n {
        let mut axis = vec![0.0; n];
        axis[i] = 1.0;
        planes.push((axis, 0.0));
    }

    let mut best: Option<(f64, Vec<f64>)> = None;
    for combo in combinations(planes.len(), n) {
        let a: Vec<Vec<f64>> = combo.iter().map(|&p| planes[p].0.clone()).collect();
        let b: Vec<f64> = combo.iter().map(|&p| planes[p].1).collect();
        let Some(x) = solve_square(&a, &b) else { continue };
        if !is_feasible(&x, constraints, rhs) {
            continue;
        }
        let value: f64 = objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        if best.as_ref().map_or(true, |(bv, _)| value < *bv) {
            best = Some((value, x));
        }
    }
    best
}

fn is_feasible(x: &[f64], constraints: &[Vec<f64>], rhs: &[f64]) -> bool {
    const TOL: f64 = 1e-7;
    if x.iter().any(|&v| v < -TOL || !v.is_finite()) {
        return false;
    }
    constraints.iter().zip(rhs).all(|(row, &b)| {
        let lhs: f64 = row.iter().zip(x).map(|(a, v)| a * v).sum();
        lhs >= b - TOL * b.abs().max(1.0)
    })
}

/// Gaussian elimination with partial pivoting; `None` on singular systems.
fn solve_square(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = m[row][col] / m[col][col];
                if f != 0.0 {
                    for k in col..=n {
                        let delta = f * m[col][k];
                        m[row][k] -= delta;
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| m[i][n] / m[i][i]).collect())
}

/// All `k`-subsets of `0..n`, lexicographic.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut combo: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(combo.clone());
        // Advance.
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if combo[i] != i + n - k {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        combo[i] += 1;
        for j in (i + 1)..k {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod self_tests {
    use super::*;

    #[test]
    fn brute_force_matches_hand_solution() {
        // min x + y s.t. x + 2y >= 2, 3x + y >= 3 => (0.8, 0.6), value 1.4.
        let (value, x) = brute_force_min(
            &[1.0, 1.0],
            &[vec![1.0, 2.0], vec![3.0, 1.0]],
            &[2.0, 3.0],
        )
        .unwrap();
        assert!((value - 1.4).abs() < 1e-9);
        assert!((x[0] - 0.8).abs() < 1e-9 && (x[1] - 0.6).abs() < 1e-9);
    }

    #[test]
    fn combination_count() {
        assert_eq!(combinations(6, 3).len(), 20);
        assert_eq!(combinations(4, 4).len(), 1);
    }
}
