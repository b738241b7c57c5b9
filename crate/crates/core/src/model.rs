//! Physical storage model: parameters, state, decisions, feasibility,
//! storage transition and stage cost.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::ForecastCurve;

/// Absolute tolerance used by [`check_feasible`].
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Physical and economic constants of the storage system.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Number of periods; decisions are taken at `t = 0..=horizon_t`.
    pub horizon_t: usize,
    /// Lookahead length of the planning model.
    pub lookahead_h: usize,
    /// Storage capacity (MWh).
    pub r_max: f64,
    /// Charge efficiency.
    pub beta_c: f64,
    /// Discharge efficiency.
    pub beta_d: f64,
    /// Maximum charge per period.
    pub gamma_c: f64,
    /// Maximum discharge per period.
    pub gamma_d: f64,
    /// Penalty per unit of unmet demand.
    pub penalty_cp: f64,
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParams(msg.to_string()));
        if !(self.r_max > 0.0) {
            return bad("r_max must be positive");
        }
        if !(self.beta_c > 0.0 && self.beta_c < 1.0) {
            return bad("beta_c must lie in (0, 1)");
        }
        if !(self.beta_d > 0.0 && self.beta_d < 1.0) {
            return bad("beta_d must lie in (0, 1)");
        }
        if !(self.gamma_c >= 0.0) || !(self.gamma_d >= 0.0) {
            return bad("charge and discharge rates must be nonnegative");
        }
        if !(self.penalty_cp >= 0.0) {
            return bad("penalty_cp must be nonnegative");
        }
        if self.lookahead_h < 1 {
            return bad("lookahead_h must be at least 1");
        }
        Ok(())
    }

    /// Last period covered by a lookahead issued at `t`.
    pub fn lookahead_end(&self, t: usize) -> usize {
        (t + self.lookahead_h).min(self.horizon_t)
    }
}

/// Deterministic price and load curves indexed by absolute period `0..=T`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExogenousCurves {
    pub price_market: Vec<f64>,
    pub price_grid: Vec<f64>,
    pub demand: Vec<f64>,
}

impl ExogenousCurves {
    pub fn validate(&self, horizon_t: usize) -> Result<()> {
        for (what, v) in [
            ("price_market", &self.price_market),
            ("price_grid", &self.price_grid),
            ("demand", &self.demand),
        ] {
            if v.len() != horizon_t + 1 {
                return Err(Error::LengthMismatch {
                    what,
                    expected: horizon_t + 1,
                    actual: v.len(),
                });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidState(format!("{what} has non-finite entries")));
            }
        }
        if self.demand.iter().any(|&d| d < 0.0) {
            return Err(Error::InvalidState("demand must be nonnegative".into()));
        }
        Ok(())
    }
}

/// System state at the start of period `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: usize,
    /// Energy in storage.
    pub r: f64,
    /// Rolling wind forecast issued at `t`; `forecast.current()` is the available wind.
    pub forecast: ForecastCurve,
    pub curves: Arc<ExogenousCurves>,
}

impl State {
    /// Wind available now, `E_t = f_{t,t}`.
    pub fn wind_now(&self) -> f64 {
        self.forecast.current()
    }

    pub fn demand(&self, t: usize) -> f64 {
        self.curves.demand[t]
    }

    pub fn price_market(&self, t: usize) -> f64 {
        self.curves.price_market[t]
    }

    pub fn price_grid(&self, t: usize) -> f64 {
        self.curves.price_grid[t]
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        if !(self.r >= 0.0 && self.r <= params.r_max) {
            return Err(Error::InvalidState(format!(
                "storage level {} outside [0, {}]",
                self.r, params.r_max
            )));
        }
        if self.forecast.base_time != self.t {
            return Err(Error::InvalidState(format!(
                "forecast issued at {} used at t={}",
                self.forecast.base_time, self.t
            )));
        }
        if self.forecast.values.iter().any(|&f| !(f >= 0.0)) {
            return Err(Error::InvalidState("forecast values must be nonnegative".into()));
        }
        if self.t > params.horizon_t || self.curves.demand.len() <= params.horizon_t {
            return Err(Error::InvalidState("period outside the horizon".into()));
        }
        Ok(())
    }
}

/// The six nonnegative energy flows chosen at one period.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    /// wind → demand
    pub wd: f64,
    /// storage → demand
    pub rd: f64,
    /// grid → demand
    pub gd: f64,
    /// wind → storage
    pub wr: f64,
    /// grid → storage
    pub gr: f64,
    /// storage → grid
    pub rg: f64,
}

impl Decision {
    pub const FIELDS: [&'static str; 6] = ["wd", "rd", "gd", "wr", "gr", "rg"];

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn to_array(self) -> [f64; 6] {
        [self.wd, self.rd, self.gd, self.wr, self.gr, self.rg]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Decision {
            wd: a[0],
            rd: a[1],
            gd: a[2],
            wr: a[3],
            gr: a[4],
            rg: a[5],
        }
    }

    pub fn scale(self, alpha: f64) -> Self {
        Self::from_array(self.to_array().map(|v| v * alpha))
    }
}

/// One violated inequality and the amount by which it is exceeded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Violation {
    Demand(f64),
    StorageAvailability(f64),
    WindAvailability(f64),
    Headroom(f64),
    ChargeRate(f64),
    DischargeRate(f64),
    Negative(&'static str, f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Demand(e) => write!(f, "demand exceeded by {e:.3e}"),
            Violation::StorageAvailability(e) => write!(f, "storage overdrawn by {e:.3e}"),
            Violation::WindAvailability(e) => write!(f, "wind overdrawn by {e:.3e}"),
            Violation::Headroom(e) => write!(f, "capacity exceeded by {e:.3e}"),
            Violation::ChargeRate(e) => write!(f, "charge rate exceeded by {e:.3e}"),
            Violation::DischargeRate(e) => write!(f, "discharge rate exceeded by {e:.3e}"),
            Violation::Negative(name, v) => write!(f, "flow {name} negative ({v:.3e})"),
        }
    }
}

/// Lists every constraint the decision violates at `state` (empty when feasible).
pub fn check_feasible(state: &State, x: &Decision, params: &ModelParams) -> Vec<Violation> {
    let mut out = Vec::new();
    for (name, v) in Decision::FIELDS.iter().zip(x.to_array()) {
        if v < -FEASIBILITY_TOL {
            out.push(Violation::Negative(name, v));
        }
    }
    let mut check = |lhs: f64, rhs: f64, make: fn(f64) -> Violation| {
        if lhs > rhs + FEASIBILITY_TOL {
            out.push(make(lhs - rhs));
        }
    };
    let r = state.r;
    check(x.wd + params.beta_d * x.rd + x.gd, state.demand(state.t), Violation::Demand);
    check(x.rd + x.rg, r, Violation::StorageAvailability);
    check(x.wr + x.wd, state.wind_now(), Violation::WindAvailability);
    check(
        params.beta_c * (x.wr + x.gr) - x.rd - x.rg,
        params.r_max - r,
        Violation::Headroom,
    );
    check(x.wr + x.gr, params.gamma_c, Violation::ChargeRate);
    check(x.rd + x.rg, params.gamma_d, Violation::DischargeRate);
    out
}

/// Storage level after applying `x` to a device holding `r`.
pub fn transition_storage(r: f64, x: &Decision, params: &ModelParams) -> f64 {
    r - x.rd + params.beta_c * (x.wr + x.gr) - x.rg
}

/// Cost realized at `state.t` under decision `x`; negative values are profit.
pub fn stage_cost(state: &State, x: &Decision, params: &ModelParams) -> f64 {
    stage_cost_at(
        state.demand(state.t),
        state.price_market(state.t),
        state.price_grid(state.t),
        x,
        params,
    )
}

/// Stage cost from raw period data.
pub fn stage_cost_at(
    demand: f64,
    price_market: f64,
    price_grid: f64,
    x: &Decision,
    params: &ModelParams,
) -> f64 {
    let cp = params.penalty_cp;
    cp * demand
        - (cp + price_market) * (x.wd + params.beta_d * x.rd + x.gd)
        - price_grid * (params.beta_d * x.rg - x.gr - x.gd)
}

/// Linear part of the stage cost: coefficients on `(wd, rd, gd, wr, gr, rg)`.
pub(crate) fn stage_cost_coefficients(
    price_market: f64,
    price_grid: f64,
    params: &ModelParams,
) -> [f64; 6] {
    let served = params.penalty_cp + price_market;
    [
        -served,
        -served * params.beta_d,
        -served + price_grid,
        0.0,
        price_grid,
        -price_grid * params.beta_d,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params() -> ModelParams {
        ModelParams {
            horizon_t: 4,
            lookahead_h: 2,
            r_max: 10.0,
            beta_c: 0.9,
            beta_d: 0.9,
            gamma_c: 5.0,
            gamma_d: 5.0,
            penalty_cp: 10.0,
        }
    }

    fn state(r: f64, wind: f64, demand: f64, pm: f64, pg: f64) -> State {
        State {
            t: 0,
            r,
            forecast: ForecastCurve {
                base_time: 0,
                values: vec![wind, wind, wind],
            },
            curves: Arc::new(ExogenousCurves {
                price_market: vec![pm; 5],
                price_grid: vec![pg; 5],
                demand: vec![demand; 5],
            }),
        }
    }

    #[test]
    fn feasible_example_passes() {
        let s = state(5.0, 3.0, 4.0, 0.0, 0.0);
        let x = Decision {
            wd: 2.0,
            rd: 1.0,
            gd: 1.0,
            wr: 1.0,
            gr: 0.0,
            rg: 0.0,
        };
        assert!(check_feasible(&s, &x, &params()).is_empty());
    }

    #[test]
    fn zero_decision_is_feasible() {
        let s = state(0.0, 0.0, 0.0, 1.0, 1.0);
        assert!(check_feasible(&s, &Decision::zero(), &params()).is_empty());
    }

    #[test]
    fn wind_overdraw_is_reported() {
        let s = state(5.0, 3.0, 10.0, 0.0, 0.0);
        let x = Decision {
            wd: 4.0,
            ..Decision::zero()
        };
        let v = check_feasible(&s, &x, &params());
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::WindAvailability(e) if (e - 1.0).abs() < 1e-12));
    }

    #[test]
    fn negative_flow_is_reported() {
        let s = state(5.0, 3.0, 4.0, 0.0, 0.0);
        let x = Decision {
            gr: -0.5,
            ..Decision::zero()
        };
        let v = check_feasible(&s, &x, &params());
        assert!(v.iter().any(|e| matches!(e, Violation::Negative("gr", _))));
    }

    #[test]
    fn tolerance_absorbs_boundary_noise() {
        let s = state(5.0, 3.0, 4.0, 0.0, 0.0);
        let x = Decision {
            wd: 3.0 + 5e-10,
            ..Decision::zero()
        };
        assert!(check_feasible(&s, &x, &params()).is_empty());
    }

    #[test]
    fn transition_examples() {
        let p = params();
        assert_eq!(transition_storage(5.0, &Decision::zero(), &p), 5.0);
        let x = Decision {
            rd: 1.0,
            wr: 2.0,
            gr: 1.0,
            rg: 0.5,
            ..Decision::zero()
        };
        assert_abs_diff_eq!(transition_storage(5.0, &x, &p), 6.2, epsilon = 1e-12);
        let x = Decision {
            wr: 1.0,
            ..Decision::zero()
        };
        assert_abs_diff_eq!(transition_storage(0.0, &x, &p), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn stage_cost_examples() {
        let p = params();
        assert_abs_diff_eq!(
            stage_cost(&state(5.0, 3.0, 4.0, 2.0, 3.0), &Decision::zero(), &p),
            40.0,
            epsilon = 1e-12
        );
        let x = Decision {
            wd: 2.0,
            rd: 1.0,
            gd: 1.0,
            ..Decision::zero()
        };
        assert_abs_diff_eq!(
            stage_cost(&state(5.0, 3.0, 4.0, 2.0, 3.0), &x, &p),
            -3.8,
            epsilon = 1e-12
        );
        let x = Decision {
            rg: 1.0,
            ..Decision::zero()
        };
        assert_abs_diff_eq!(
            stage_cost(&state(5.0, 3.0, 0.0, 2.0, 3.0), &x, &p),
            -2.7,
            epsilon = 1e-12
        );
    }

    #[test]
    fn coefficients_match_stage_cost() {
        let p = params();
        let s = state(5.0, 3.0, 4.0, 2.0, 3.0);
        let x = Decision::from_array([0.3, 0.7, 1.1, 0.2, 0.4, 0.9]);
        let coeffs = stage_cost_coefficients(2.0, 3.0, &p);
        let linear: f64 = coeffs.iter().zip(x.to_array()).map(|(c, v)| c * v).sum();
        assert_abs_diff_eq!(stage_cost(&s, &x, &p), p.penalty_cp * 4.0 + linear, epsilon = 1e-12);
    }

    /// Draws a feasible decision by rejection-free scaling of a random direction.
    fn random_feasible(rng: &mut ChaCha8Rng, s: &State, p: &ModelParams) -> Decision {
        loop {
            let raw: [f64; 6] = std::array::from_fn(|_| rng.random_range(0.0..p.gamma_c.max(1.0)));
            let x = Decision::from_array(raw);
            // Shrink until every constraint holds.
            let mut scale = 1.0;
            for _ in 0..60 {
                let y = x.scale(scale);
                if check_feasible(s, &y, p).is_empty() {
                    return y;
                }
                scale *= 0.8;
            }
        }
    }

    #[test]
    fn transition_stays_in_bounds_for_feasible_pairs() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let r = rng.random_range(0.0..=p.r_max);
            let s = state(r, rng.random_range(0.0..6.0), rng.random_range(0.0..8.0), 1.0, 1.0);
            let x = random_feasible(&mut rng, &s, &p);
            let next = transition_storage(r, &x, &p);
            assert!(next >= -FEASIBILITY_TOL && next <= p.r_max + FEASIBILITY_TOL, "{next}");
        }
    }

    #[test]
    fn stage_cost_is_affine_along_rays() {
        let p = params();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let s = state(5.0, 3.0, rng.random_range(0.0..8.0), rng.random_range(0.0..50.0), rng.random_range(0.0..50.0));
            let x = Decision::from_array(std::array::from_fn(|_| rng.random_range(0.0..5.0)));
            let c0 = stage_cost(&s, &x.scale(0.0), &p);
            let c1 = stage_cost(&s, &x.scale(1.0), &p);
            let c2 = stage_cost(&s, &x.scale(2.0), &p);
            assert_abs_diff_eq!(c2 - c1, c1 - c0, epsilon = 1e-9 * (1.0 + c2.abs()));
        }
    }

    #[test]
    fn params_validation() {
        let mut p = params();
        assert!(p.validate().is_ok());
        p.beta_c = 1.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.r_max = 0.0;
        assert!(p.validate().is_err());
        let mut p = params();
        p.lookahead_h = 0;
        assert!(p.validate().is_err());
    }
}
