//! Independent reference computations shared by unit and integration tests.

#![allow(dead_code)]

use rand::Rng;
use storage_cfa::lp::{LinearProgram, Relation};

/// Random `vars`-dimensional LP with `rows` inequalities whose feasible set
/// contains the origin and is bounded by one all-positive row.
pub fn random_bounded_lp<R: Rng>(rng: &mut R, vars: usize, rows: usize) -> LinearProgram {
    let objective = (0..vars).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut lp = LinearProgram::new(objective);
    for i in 0..rows {
        let coeffs: Vec<f64> = if i == 0 {
            (0..vars).map(|_| rng.random_range(0.2..1.0)).collect()
        } else {
            (0..vars).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        lp.add(coeffs, Relation::Le, rng.random_range(0.5..10.0));
    }
    lp
}

#[allow(clippy::needless_range_loop)]
/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n {
                        a[r][c] -= f * a[col][c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        combinations(n, k, i + 1, cur, out);
        cur.pop();
    }
}

/// Brute-force optimum over all basic feasible points of an inequality-only
/// LP with `x ≥ 0`. `None` when no vertex is feasible.
pub fn vertex_enumeration_optimum(lp: &LinearProgram) -> Option<f64> {
    let n = lp.num_vars();
    // Every inequality as (row, rhs), nonnegativity included as -x_j <= 0.
    let mut ineqs: Vec<(Vec<f64>, f64)> = lp
        .constraints
        .iter()
        .map(|c| {
            assert_eq!(c.relation, Relation::Le, "oracle handles inequalities only");
            (c.coeffs.clone(), c.rhs)
        })
        .collect();
    for j in 0..n {
        let mut row = vec![0.0; n];
        row[j] = -1.0;
        ineqs.push((row, 0.0));
    }
    let mut subsets = Vec::new();
    combinations(ineqs.len(), n, 0, &mut Vec::new(), &mut subsets);
    let mut best: Option<f64> = None;
    for s in subsets {
        let a = s.iter().map(|&i| ineqs[i].0.clone()).collect();
        let b = s.iter().map(|&i| ineqs[i].1).collect();
        let Some(x) = solve_square(a, b) else { continue };
        let feasible = ineqs.iter().all(|(row, rhs)| {
            let lhs: f64 = row.iter().zip(&x).map(|(a, v)| a * v).sum();
            lhs <= rhs + 1e-9
        });
        if feasible {
            let val: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
            best = Some(best.map_or(val, |b: f64| b.min(val)));
        }
    }
    best
}

/// Pearson statistic of observed `counts` against expected probabilities.
pub fn chi_square_statistic(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

/// Upper critical value of the chi-square distribution at level `alpha`.
pub fn chi_square_critical(df: usize, alpha: f64) -> f64 {
    use statrs::distribution::{ChiSquared, ContinuousCDF};
    ChiSquared::new(df as f64).unwrap().inverse_cdf(1.0 - alpha)
}
