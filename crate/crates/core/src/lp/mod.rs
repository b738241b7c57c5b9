//! Linear programs: a dense simplex solver and the lookahead model builder.

mod lookahead;
mod simplex;

use std::fmt::Write as _;

pub use lookahead::{build_lookahead, LookaheadLayout};
pub use simplex::{solve, INFEASIBILITY_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min objective·x` subject to `constraints`, `x ≥ 0` and `x ≤ upper_bounds` where set.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub upper_bounds: Vec<Option<f64>>,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            constraints: Vec::new(),
            upper_bounds: vec![None; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        debug_assert_eq!(coeffs.len(), self.num_vars());
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    /// Checks row lengths and finiteness.
    pub fn validate(&self) -> Result<(), String> {
        let n = self.num_vars();
        if self.upper_bounds.len() != n {
            return Err(format!("{} upper bounds for {n} variables", self.upper_bounds.len()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(format!("row {i} has {} coefficients, expected {n}", c.coeffs.len()));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(format!("row {i} has non-finite entries"));
            }
        }
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err("objective has non-finite entries".into());
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().fold(0.0_f64, |w, &v| w.max(-v));
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (v, ub) in x.iter().zip(&self.upper_bounds) {
            if let Some(u) = ub {
                worst = worst.max(v - u);
            }
        }
        worst
    }

    /// Plain-text fixed-point dump: one line per row, relation and rhs last.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let n = self.num_vars();
        let _ = writeln!(out, "# vars {n} rows {}", self.constraints.len());
        out.push_str("min ");
        for c in &self.objective {
            let _ = write!(out, " {c:>14.6}");
        }
        out.push('\n');
        for c in &self.constraints {
            out.push_str("row ");
            for a in &c.coeffs {
                let _ = write!(out, " {a:>14.6}");
            }
            let rel = match c.relation {
                Relation::Le => "<=",
                Relation::Eq => "==",
            };
            let _ = writeln!(out, " {rel} {:>14.6}", c.rhs);
        }
        out.push_str("ub  ");
        for u in &self.upper_bounds {
            match u {
                Some(u) => {
                    let _ = write!(out, " {u:>14.6}");
                }
                None => {
                    let _ = write!(out, " {:>14}", "inf");
                }
            }
        }
        out.push('\n');
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

impl LpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective_value: f64,
    /// Simplex pivots over both phases.
    pub pivots: usize,
}
