//! Dense two-phase primal simplex.
//!
//! The tableau is kept in row-major order with the right-hand side stored in
//! the last column. Entering variables follow Bland's rule (lowest index with
//! a negative reduced cost) and ratio-test ties go to the lowest basic index,
//! which makes the returned vertex a deterministic function of the input.

use super::{LinearProgram, LpSolution, LpStatus, Relation};

/// Pivot elements smaller than this are treated as zero.
const PIVOT_TOL: f64 = 1e-9;
/// Reduced costs above `-OPT_TOL` count as nonnegative.
const OPT_TOL: f64 = 1e-10;
/// Phase-one optimum above this value means the program is infeasible.
pub const INFEASIBILITY_TOL: f64 = 1e-8;
/// Entries below this magnitude are flushed to zero after each pivot.
const ZERO_TOL: f64 = 1e-13;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum RowSense {
    Le,
    Ge,
    Eq,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `rows` constraint rows followed by one objective row, each `cols + 1` wide.
    data: Vec<f64>,
    basis: Vec<usize>,
    /// Columns allowed to enter the basis.
    eligible: Vec<bool>,
    scratch_idx: Vec<usize>,
    scratch_val: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    #[inline]
    fn width(&self) -> usize {
        self.cols + 1
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width() + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width() + self.cols]
    }

    fn obj_row(&self) -> usize {
        self.rows
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width();
        let inv = 1.0 / self.at(pr, pc);

        // Normalize the pivot row and record its nonzero pattern.
        self.scratch_idx.clear();
        self.scratch_val.clear();
        {
            let row = &mut self.data[pr * w..(pr + 1) * w];
            for (j, v) in row.iter_mut().enumerate() {
                if *v != 0.0 {
                    *v *= inv;
                    if v.abs() < ZERO_TOL {
                        *v = 0.0;
                    } else {
                        self.scratch_idx.push(j);
                        self.scratch_val.push(*v);
                    }
                }
            }
            row[pc] = 1.0;
        }

        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let base = r * w;
            let factor = self.data[base + pc];
            if factor == 0.0 {
                continue;
            }
            for (&j, &pv) in self.scratch_idx.iter().zip(&self.scratch_val) {
                let cell = &mut self.data[base + j];
                *cell -= factor * pv;
                if cell.abs() < ZERO_TOL {
                    *cell = 0.0;
                }
            }
            self.data[base + pc] = 0.0;
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Runs simplex iterations against the current objective row.
    /// Returns `false` when an unbounded ray is found.
    fn optimize(&mut self) -> bool {
        let obj = self.obj_row();
        loop {
            let entering = (0..self.cols).find(|&j| self.eligible[j] && self.at(obj, j) < -OPT_TOL);
            let Some(pc) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            let Some((pr, _)) = leave else {
                return false;
            };
            self.pivot(pr, pc);
        }
    }
}

/// Sparse coefficients, sense and right-hand side of one row.
type Row = (Vec<(usize, f64)>, RowSense, f64);

/// Solves `min c·x` subject to the program's rows, `x ≥ 0` and optional upper bounds.
pub fn solve(lp: &LinearProgram) -> LpSolution {
    let n = lp.num_vars();

    // Gather rows, including upper bounds, with nonnegative right-hand sides.
    let mut rows: Vec<Row> = Vec::with_capacity(lp.constraints.len());
    for c in &lp.constraints {
        let mut coeffs: Vec<(usize, f64)> = c
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(j, v)| (j, *v))
            .collect();
        let mut sense = match c.relation {
            Relation::Le => RowSense::Le,
            Relation::Eq => RowSense::Eq,
        };
        let mut rhs = c.rhs;
        if rhs < 0.0 {
            rhs = -rhs;
            coeffs.iter_mut().for_each(|(_, v)| *v = -*v);
            sense = match sense {
                RowSense::Le => RowSense::Ge,
                other => other,
            };
        }
        rows.push((coeffs, sense, rhs));
    }
    for (j, ub) in lp.upper_bounds.iter().enumerate() {
        if let Some(u) = ub {
            if *u < 0.0 {
                rows.push((vec![(j, -1.0)], RowSense::Ge, -u));
            } else {
                rows.push((vec![(j, 1.0)], RowSense::Le, *u));
            }
        }
    }

    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != RowSense::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != RowSense::Le).count();
    let cols = n + n_slack + n_art;
    let w = cols + 1;

    let mut t = Tableau {
        rows: m,
        cols,
        data: vec![0.0; (m + 1) * w],
        basis: vec![0; m],
        eligible: vec![true; cols],
        scratch_idx: Vec::with_capacity(w),
        scratch_val: Vec::with_capacity(w),
        pivots: 0,
    };

    let mut next_slack = n;
    let mut next_art = n + n_slack;
    let art_start = n + n_slack;
    for (i, (coeffs, sense, rhs)) in rows.iter().enumerate() {
        let base = i * w;
        for &(j, v) in coeffs {
            t.data[base + j] = v;
        }
        t.data[base + cols] = *rhs;
        match sense {
            RowSense::Le => {
                t.data[base + next_slack] = 1.0;
                t.basis[i] = next_slack;
                next_slack += 1;
            }
            RowSense::Ge => {
                t.data[base + next_slack] = -1.0;
                next_slack += 1;
                t.data[base + next_art] = 1.0;
                t.basis[i] = next_art;
                next_art += 1;
            }
            RowSense::Eq => {
                t.data[base + next_art] = 1.0;
                t.basis[i] = next_art;
                next_art += 1;
            }
        }
    }

    // Phase one: minimize the sum of artificials.
    if n_art > 0 {
        let obj = m * w;
        for i in 0..m {
            if t.basis[i] >= art_start {
                for j in 0..=cols {
                    if j < art_start || j == cols {
                        t.data[obj + j] -= t.data[i * w + j];
                    }
                }
            }
        }
        // Artificial columns may enter in phase one only while basic; keep them out.
        for j in art_start..cols {
            t.eligible[j] = false;
        }
        t.optimize();
        let phase1 = -t.data[obj + cols];
        if phase1 > INFEASIBILITY_TOL {
            return LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective_value: f64::NAN,
                pivots: t.pivots,
            };
        }
        // Drive remaining artificials out of the basis.
        for i in 0..m {
            if t.basis[i] >= art_start {
                if let Some(pc) = (0..art_start).find(|&j| t.at(i, j).abs() > PIVOT_TOL) {
                    t.pivot(i, pc);
                } else {
                    // Redundant row: zero it so it never constrains a ratio test.
                    for j in 0..=cols {
                        t.data[i * w + j] = 0.0;
                    }
                }
            }
        }
    }

    // Phase two objective in reduced form.
    let obj = m * w;
    for j in 0..=cols {
        t.data[obj + j] = 0.0;
    }
    for (j, &c) in lp.objective.iter().enumerate() {
        t.data[obj + j] = c;
    }
    for i in 0..m {
        let b = t.basis[i];
        let cb = if b < n { lp.objective[b] } else { 0.0 };
        if cb != 0.0 {
            for j in 0..=cols {
                let v = t.data[i * w + j];
                if v != 0.0 {
                    t.data[obj + j] -= cb * v;
                }
            }
        }
    }

    if !t.optimize() {
        return LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            objective_value: f64::NEG_INFINITY,
            pivots: t.pivots,
        };
    }

    debug_assert!(
        (0..cols).all(|j| !t.eligible[j] || t.at(m, j) >= -1e-8),
        "optimality certificate violated"
    );

    let mut x = vec![0.0; n];
    for i in 0..m {
        let b = t.basis[i];
        if b < n {
            x[b] = t.rhs(i);
        }
    }
    let objective_value = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value,
        pivots: t.pivots,
    }
}
