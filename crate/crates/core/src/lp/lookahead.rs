//! Deterministic lookahead LP issued at period `t`.
//!
//! Block 0 holds the decision taken now and uses the realized storage level
//! and wind. Blocks `1..` hold planned flows for `t' = t+1..=min(t+H, T)`,
//! each linked to its storage variable `R_{t'}`. Storage variables run from
//! `R_{t+1}` to the terminal `R_{end+1}`; no salvage value is attached to it.

use super::{LinearProgram, Relation};
use crate::error::{Error, Result};
use crate::model::{stage_cost_coefficients, ModelParams, State};

const WD: usize = 0;
const RD: usize = 1;
const GD: usize = 2;
const WR: usize = 3;
const GR: usize = 4;
const RG: usize = 5;

/// Variable and row bookkeeping of a lookahead LP.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LookaheadLayout {
    pub t: usize,
    /// Decision blocks, including the current period.
    pub blocks: usize,
}

impl LookaheadLayout {
    pub fn new(t: usize, params: &ModelParams) -> Self {
        LookaheadLayout {
            t,
            blocks: params.lookahead_end(t) - t + 1,
        }
    }

    pub fn num_vars(&self) -> usize {
        7 * self.blocks
    }

    pub fn num_rows(&self) -> usize {
        7 * self.blocks + 1
    }

    /// Index of flow `k` (in `wd, rd, gd, wr, gr, rg` order) of block `b`.
    pub fn flow(&self, b: usize, k: usize) -> usize {
        6 * b + k
    }

    /// Index of the storage level entering block `b + 1`, i.e. `R_{t+b+1}`.
    pub fn storage_after(&self, b: usize) -> usize {
        6 * self.blocks + b
    }

    /// Row index of the wind constraint of block `b`.
    pub fn wind_row(&self, b: usize) -> usize {
        7 * b + 2
    }
}

/// Assembles the lookahead LP; `wind_rhs[i]` bounds wind use at `t' = t+1+i`.
pub fn build_lookahead(state: &State, params: &ModelParams, wind_rhs: &[f64]) -> Result<LinearProgram> {
    let layout = LookaheadLayout::new(state.t, params);
    let expected = layout.blocks - 1;
    if wind_rhs.len() != expected {
        return Err(Error::LengthMismatch {
            what: "wind rhs",
            expected,
            actual: wind_rhs.len(),
        });
    }
    if let Some(bad) = wind_rhs.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "wind rhs entries must be finite and nonnegative, got {bad}"
        )));
    }

    let n = layout.num_vars();
    let mut objective = vec![0.0; n];
    for b in 0..layout.blocks {
        let p = state.t + b;
        let c = stage_cost_coefficients(state.price_market(p), state.price_grid(p), params);
        objective[layout.flow(b, 0)..layout.flow(b, 0) + 6].copy_from_slice(&c);
    }
    let mut lp = LinearProgram::new(objective);
    lp.constraints.reserve(layout.num_rows());

    let (bc, bd) = (params.beta_c, params.beta_d);
    for b in 0..layout.blocks {
        let p = state.t + b;
        let f = |k| layout.flow(b, k);
        // Storage level entering this block: a constant now, a variable later.
        let prev_storage = (b > 0).then(|| layout.storage_after(b - 1));
        let r_now = if b == 0 { state.r } else { 0.0 };
        let wind = if b == 0 { state.wind_now() } else { wind_rhs[b - 1] };

        let row = |entries: &[(usize, f64)]| {
            let mut v = vec![0.0; n];
            for &(j, a) in entries {
                v[j] += a;
            }
            v
        };

        lp.add(row(&[(f(WD), 1.0), (f(RD), bd), (f(GD), 1.0)]), Relation::Le, state.demand(p));

        let mut avail = vec![(f(RD), 1.0), (f(RG), 1.0)];
        if let Some(rp) = prev_storage {
            avail.push((rp, -1.0));
        }
        lp.add(row(&avail), Relation::Le, r_now);

        lp.add(row(&[(f(WR), 1.0), (f(WD), 1.0)]), Relation::Le, wind);

        let mut head = vec![(f(WR), bc), (f(GR), bc), (f(RD), -1.0), (f(RG), -1.0)];
        if let Some(rp) = prev_storage {
            head.push((rp, 1.0));
        }
        lp.add(row(&head), Relation::Le, params.r_max - r_now);

        lp.add(row(&[(f(WR), 1.0), (f(GR), 1.0)]), Relation::Le, params.gamma_c);
        lp.add(row(&[(f(RD), 1.0), (f(RG), 1.0)]), Relation::Le, params.gamma_d);

        // R_{p+1} + rd - βc(wr + gr) + rg - R_p = 0
        let mut link = vec![
            (layout.storage_after(b), 1.0),
            (f(RD), 1.0),
            (f(WR), -bc),
            (f(GR), -bc),
            (f(RG), 1.0),
        ];
        if let Some(rp) = prev_storage {
            link.push((rp, -1.0));
        }
        lp.add(row(&link), Relation::Eq, r_now);
    }
    let mut terminal = vec![0.0; n];
    terminal[layout.storage_after(layout.blocks - 1)] = 1.0;
    lp.add(terminal, Relation::Le, params.r_max);

    debug_assert_eq!(lp.constraints.len(), layout.num_rows());
    Ok(lp)
}
