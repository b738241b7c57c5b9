//! Lookahead policies: the raw-forecast benchmark and three parameterized
//! modifications of the lookahead wind bound.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::ForecastCurve;
use crate::lp::{self, LinearProgram, LookaheadLayout, LpStatus};
use crate::model::{Decision, ModelParams, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyFamily {
    /// Raw forecasts, no parameters.
    Benchmark,
    /// `θ · f`
    Const,
    /// `θ_τ · f` with one parameter per lookahead offset `τ = 1..=H`.
    Lkup,
    /// `θ₁ · exp(θ₂ τ) · f`
    Exp,
}

impl PolicyFamily {
    pub fn name(self) -> &'static str {
        match self {
            PolicyFamily::Benchmark => "benchmark",
            PolicyFamily::Const => "const",
            PolicyFamily::Lkup => "lkup",
            PolicyFamily::Exp => "exp",
        }
    }

    /// Parameter dimension for a lookahead of length `h`.
    pub fn dimension(self, h: usize) -> usize {
        match self {
            PolicyFamily::Benchmark => 0,
            PolicyFamily::Const => 1,
            PolicyFamily::Lkup => h,
            PolicyFamily::Exp => 2,
        }
    }

    /// Parameters that reproduce the benchmark.
    pub fn neutral_theta(self, h: usize) -> Vec<f64> {
        match self {
            PolicyFamily::Exp => vec![1.0, 0.0],
            other => vec![1.0; other.dimension(h)],
        }
    }
}

impl fmt::Display for PolicyFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "benchmark" | "d-la" => Ok(PolicyFamily::Benchmark),
            "const" | "constant" => Ok(PolicyFamily::Const),
            "lkup" | "lookup" => Ok(PolicyFamily::Lkup),
            "exp" | "exponential" => Ok(PolicyFamily::Exp),
            other => Err(Error::InvalidArgument(format!("unknown policy family `{other}`"))),
        }
    }
}

/// A policy family together with its parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub family: PolicyFamily,
    #[serde(default)]
    pub theta: Vec<f64>,
}

impl PolicySpec {
    pub fn benchmark() -> Self {
        PolicySpec {
            family: PolicyFamily::Benchmark,
            theta: Vec::new(),
        }
    }

    pub fn constant(theta: f64) -> Self {
        PolicySpec {
            family: PolicyFamily::Const,
            theta: vec![theta],
        }
    }

    pub fn lookup(theta: Vec<f64>) -> Self {
        PolicySpec {
            family: PolicyFamily::Lkup,
            theta,
        }
    }

    pub fn exponential(scale: f64, rate: f64) -> Self {
        PolicySpec {
            family: PolicyFamily::Exp,
            theta: vec![scale, rate],
        }
    }

    pub fn neutral(family: PolicyFamily, h: usize) -> Self {
        PolicySpec {
            family,
            theta: family.neutral_theta(h),
        }
    }

    pub fn with_theta(&self, theta: Vec<f64>) -> Self {
        PolicySpec {
            family: self.family,
            theta,
        }
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        let expected = self.family.dimension(params.lookahead_h);
        if self.theta.len() != expected {
            return Err(Error::PolicyDimension {
                family: self.family.name(),
                expected,
                actual: self.theta.len(),
            });
        }
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("policy parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("policy spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Modified lookahead wind bounds for `t' = t+1..=min(t+H, T)`, clamped at zero.
pub fn wind_rhs(spec: &PolicySpec, curve: &ForecastCurve, params: &ModelParams) -> Result<Vec<f64>> {
    spec.validate(params)?;
    let th = &spec.theta;
    Ok(curve
        .lookahead()
        .iter()
        .enumerate()
        .map(|(i, &f)| {
            let tau = i + 1;
            let b = match spec.family {
                PolicyFamily::Benchmark => f,
                PolicyFamily::Const => th[0] * f,
                PolicyFamily::Lkup => th[tau - 1] * f,
                PolicyFamily::Exp => f * th[0] * (th[1] * tau as f64).exp(),
            };
            b.max(0.0)
        })
        .collect())
}

/// The lookahead LP the policy solves at `state`.
pub fn lookahead_lp(spec: &PolicySpec, state: &State, params: &ModelParams) -> Result<LinearProgram> {
    let rhs = wind_rhs(spec, &state.forecast, params)?;
    lp::build_lookahead(state, params, &rhs)
}

/// Solves the policy's lookahead and keeps the current-period flows.
/// Also returns the lookahead objective, constant penalty terms included.
pub fn decide(spec: &PolicySpec, state: &State, params: &ModelParams) -> Result<(Decision, f64)> {
    let program = lookahead_lp(spec, state, params)?;
    let sol = lp::solve(&program);
    if sol.status != LpStatus::Optimal {
        return Err(Error::LpFailure {
            t: state.t,
            status: sol.status.as_str(),
        });
    }
    let layout = LookaheadLayout::new(state.t, params);
    // Flush round-off below zero; larger negatives are left for the feasibility check.
    let flows: [f64; 6] = std::array::from_fn(|k| {
        let v = sol.x[layout.flow(0, k)];
        if v < 0.0 && v > -lp::INFEASIBILITY_TOL {
            0.0
        } else {
            v
        }
    });
    let constant: f64 = (state.t..state.t + layout.blocks)
        .map(|p| params.penalty_cp * state.demand(p))
        .sum();
    Ok((Decision::from_array(flows), sol.objective_value + constant))
}
