//! Base-model simulation: roll a policy forward over one sampled forecast
//! path and average total costs over many paths.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forecast::{evolve, sample_noise_path};
use crate::model::{check_feasible, stage_cost, transition_storage, Decision, FEASIBILITY_TOL};
use crate::policy::{decide, PolicySpec};
use crate::scenario::Scenario;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodRecord {
    pub t: usize,
    /// Storage level at the start of the period.
    pub r: f64,
    /// Wind available in the period.
    pub wind: f64,
    pub decision: Decision,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub seed: u64,
    pub records: Vec<PeriodRecord>,
    pub total_cost: f64,
    /// Digest of the forecast noise driving this path.
    pub noise_digest: String,
}

impl Trajectory {
    /// One row per period: `t, R, wd, rd, gd, wr, gr, rg, cost`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "R", "wd", "rd", "gd", "wr", "gr", "rg", "cost"])?;
        for rec in &self.records {
            let d = rec.decision;
            let mut row = vec![rec.t.to_string(), rec.r.to_string()];
            row.extend(d.to_array().iter().map(f64::to_string));
            row.push(rec.cost.to_string());
            w.write_record(&row)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }
}

/// Simulates `spec` over the forecast path identified by `seed`.
pub fn rollout(spec: &PolicySpec, scenario: &Scenario, seed: u64) -> Result<Trajectory> {
    let params = &scenario.params;
    spec.validate(params)?;
    let noise = sample_noise_path(&scenario.forecast, seed);
    let mut state = scenario.initial_state();
    let mut records = Vec::with_capacity(params.horizon_t + 1);
    let mut total = 0.0;
    for t in 0..=params.horizon_t {
        let (x, _) = decide(spec, &state, params)?;
        let violations = check_feasible(&state, &x, params);
        if !violations.is_empty() {
            let text: Vec<String> = violations.iter().map(ToString::to_string).collect();
            return Err(Error::InfeasibleDecision {
                t,
                violations: text.join("; "),
            });
        }
        let cost = stage_cost(&state, &x, params);
        total += cost;
        records.push(PeriodRecord {
            t,
            r: state.r,
            wind: state.wind_now(),
            decision: x,
            cost,
        });
        if t == params.horizon_t {
            break;
        }
        let next = transition_storage(state.r, &x, params);
        if next < -FEASIBILITY_TOL || next > params.r_max + FEASIBILITY_TOL {
            return Err(Error::InfeasibleDecision {
                t,
                violations: format!("storage left [0, r_max]: {next}"),
            });
        }
        state.r = next.clamp(0.0, params.r_max);
        state.forecast = evolve(&state.forecast, &scenario.forecast, &noise.steps[t])?;
        state.t = t + 1;
    }
    Ok(Trajectory {
        seed,
        records,
        total_cost: total,
        noise_digest: noise.digest(),
    })
}

/// Total cost of each path `seed_base..seed_base + n_paths`, in seed order.
pub fn path_costs(spec: &PolicySpec, scenario: &Scenario, n_paths: usize, seed_base: u64) -> Result<Vec<f64>> {
    (0..n_paths as u64)
        .into_par_iter()
        .map(|i| rollout(spec, scenario, seed_base + i).map(|tr| tr.total_cost))
        .collect()
}

/// Sample mean and its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

impl Estimate {
    /// Aggregates in slice order so the result is independent of scheduling.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = samples.iter().map(|c| (c - mean) * (c - mean)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, stderr, n_paths: n }
    }
}

/// Estimates the expected total cost of `spec` on a fixed seed list.
///
/// Different policies evaluated with the same `seed_base` see identical
/// forecast paths. Without forecast noise every path coincides, so a single
/// rollout is used.
pub fn estimate_objective(spec: &PolicySpec, scenario: &Scenario, n_paths: usize, seed_base: u64) -> Result<Estimate> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument("n_paths must be at least 1".into()));
    }
    if scenario.forecast.rho_e == 0.0 {
        let cost = rollout(spec, scenario, seed_base)?.total_cost;
        return Ok(Estimate {
            mean: cost,
            stderr: 0.0,
            n_paths,
        });
    }
    let costs = path_costs(spec, scenario, n_paths, seed_base)?;
    Ok(Estimate::from_samples(&costs))
}

/// Relative change of a policy's mean cost against the benchmark's; negative is better.
pub fn improvement(policy_mean: f64, benchmark_mean: f64) -> Result<f64> {
    if benchmark_mean == 0.0 || !benchmark_mean.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "benchmark mean must be finite and nonzero, got {benchmark_mean}"
        )));
    }
    Ok((policy_mean - benchmark_mean) / benchmark_mean.abs())
}
