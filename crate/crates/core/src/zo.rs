//! Zeroth-order stochastic search on Gaussian-smoothed objectives.
//!
//! [`gradient_estimate`] forms two-point difference quotients along random
//! Gaussian directions, evaluating both points of every pair on the same
//! noise path. [`sang_run`] averages those estimates exponentially and moves
//! the parameters against the running average, then returns the iterate at a
//! randomly sampled index.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Path seeds drawn by the optimizer always have this bit set, so they never
/// collide with evaluation seed ranges below `2^63`.
pub const TUNING_SEED_BIT: u64 = 1 << 63;

/// Floor applied to the RMSProp accumulator before taking its square root.
pub const RMS_FLOOR: f64 = 1e-12;

/// An objective that can be evaluated at any parameter vector on the noise
/// path identified by a seed.
pub trait Oracle: Sync {
    fn eval(&self, theta: &[f64], seed: u64) -> Result<f64>;
}

impl<F> Oracle for F
where
    F: Fn(&[f64], u64) -> Result<f64> + Sync,
{
    fn eval(&self, theta: &[f64], seed: u64) -> Result<f64> {
        self(theta, seed)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum StepsizeRule {
    /// Constant `β = δ / (L₀² d)`.
    Corollary,
    /// `β_k = b / √ḡ_k` with `ḡ_k = (1-γ) ḡ_{k-1} + γ ‖G^k‖²`.
    Rmsprop { b: f64, gamma: f64 },
}

impl Default for StepsizeRule {
    fn default() -> Self {
        StepsizeRule::Rmsprop { b: 1.0, gamma: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SangConfig {
    pub dim_d: usize,
    pub iters_n: usize,
    pub delta: f64,
    pub lip_l0: f64,
    pub alpha_scale_a: f64,
    pub batch_m: usize,
    pub stepsize_rule: StepsizeRule,
    pub theta0: Vec<f64>,
    pub seed: u64,
    /// Evaluate the two points of each pair on different noise paths.
    pub independent_omega: bool,
}

impl Default for SangConfig {
    fn default() -> Self {
        SangConfig {
            dim_d: 1,
            iters_n: 100,
            delta: 1.0,
            lip_l0: 1.0,
            alpha_scale_a: 1.0,
            batch_m: 1,
            stepsize_rule: StepsizeRule::default(),
            theta0: vec![0.0],
            seed: 0,
            independent_omega: false,
        }
    }
}

impl SangConfig {
    /// Defaults around a starting point; the dimension follows `theta0`.
    pub fn new(theta0: Vec<f64>) -> Self {
        SangConfig {
            dim_d: theta0.len(),
            theta0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.dim_d == 0 {
            return bad("dim_d must be at least 1".into());
        }
        if self.theta0.len() != self.dim_d {
            return Err(Error::LengthMismatch {
                what: "theta0",
                expected: self.dim_d,
                actual: self.theta0.len(),
            });
        }
        if self.theta0.iter().any(|v| !v.is_finite()) {
            return bad("theta0 must be finite".into());
        }
        if self.iters_n == 0 {
            return bad("iters_n must be at least 1".into());
        }
        if self.batch_m == 0 {
            return bad("batch_m must be at least 1".into());
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad(format!("delta must be positive, got {}", self.delta));
        }
        if !(self.lip_l0 > 0.0 && self.lip_l0.is_finite()) {
            return bad(format!("lip_l0 must be positive, got {}", self.lip_l0));
        }
        if !(self.alpha_scale_a > 0.0 && self.alpha_scale_a.is_finite()) {
            return bad(format!("alpha_scale_a must be positive, got {}", self.alpha_scale_a));
        }
        if let StepsizeRule::Rmsprop { b, gamma } = self.stepsize_rule {
            if !(b > 0.0 && b.is_finite()) {
                return bad(format!("rmsprop b must be positive, got {b}"));
            }
            if !(gamma > 0.0 && gamma < 1.0) {
                return bad(format!("rmsprop gamma must lie in (0, 1), got {gamma}"));
            }
        }
        Ok(())
    }

    /// Oracle evaluations consumed by a full run.
    pub fn evaluation_budget(&self) -> usize {
        2 * self.iters_n * self.batch_m
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Schedule {
    pub alpha: f64,
    pub eta: f64,
    pub beta: f64,
}

/// Averaging weight, smoothing radius and the constant stepsize at iteration `k`.
pub fn schedule(config: &SangConfig, k: usize) -> Schedule {
    debug_assert!(k >= 1 && k <= config.iters_n);
    let d = config.dim_d as f64;
    let n = config.iters_n as f64;
    let l0 = config.lip_l0;
    let raw = config.alpha_scale_a / (config.delta * (d + 4.0) * n).sqrt();
    Schedule {
        alpha: raw.min(1.0),
        eta: config.delta / (l0 * d.sqrt()),
        beta: config.delta / (l0 * l0 * d),
    }
}

/// One RMSProp update; returns `(β, new accumulator)`.
pub fn rmsprop_step(accumulator: f64, grad_norm_sq: f64, b: f64, gamma: f64) -> (f64, f64) {
    let acc = (1.0 - gamma) * accumulator + gamma * grad_norm_sq;
    (b / acc.max(RMS_FLOOR).sqrt(), acc)
}

/// Draws `R ∈ 1..=N` with probability proportional to `α_k β_k`.
pub fn sample_output_index<R: Rng + ?Sized>(alphas: &[f64], betas: &[f64], rng: &mut R) -> Result<usize> {
    if alphas.len() != betas.len() {
        return Err(Error::LengthMismatch {
            what: "betas",
            expected: alphas.len(),
            actual: betas.len(),
        });
    }
    if alphas.is_empty() {
        return Err(Error::InvalidArgument("output index needs at least one weight".into()));
    }
    let weights: Vec<f64> = alphas.iter().zip(betas).map(|(a, b)| a * b).collect();
    if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidArgument(format!("output weights must be positive, got {w}")));
    }
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return Ok(i + 1);
        }
    }
    Ok(weights.len())
}

/// Mini-batch two-point gradient estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSample {
    pub grad: Vec<f64>,
    /// Mean of the objective at the unperturbed point over the batch.
    pub base_mean: f64,
    pub evaluations: usize,
}

struct Draw {
    v: Vec<f64>,
    seed: u64,
    seed_perturbed: u64,
}

/// Averages `m` difference quotients `(F(θ+ηv, ω) - F(θ, ω)) / η · v`.
///
/// Directions and path seeds are drawn from `rng` up front, so the result
/// does not depend on how the evaluations are scheduled.
pub fn gradient_estimate<O, R>(
    oracle: &O,
    theta: &[f64],
    eta: f64,
    m: usize,
    independent_omega: bool,
    rng: &mut R,
) -> Result<GradientSample>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    if !(eta > 0.0) || m == 0 {
        return Err(Error::InvalidArgument(format!(
            "gradient estimate needs eta > 0 and m >= 1, got eta={eta}, m={m}"
        )));
    }
    let d = theta.len();
    let draws: Vec<Draw> = (0..m)
        .map(|_| {
            let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let seed = rng.random::<u64>() | TUNING_SEED_BIT;
            let seed_perturbed = if independent_omega {
                rng.random::<u64>() | TUNING_SEED_BIT
            } else {
                seed
            };
            Draw { v, seed, seed_perturbed }
        })
        .collect();

    let pairs: Vec<(f64, f64)> = draws
        .par_iter()
        .map(|dr| {
            let shifted: Vec<f64> = theta.iter().zip(&dr.v).map(|(t, v)| t + eta * v).collect();
            let hi = oracle.eval(&shifted, dr.seed_perturbed)?;
            let lo = oracle.eval(theta, dr.seed)?;
            Ok((hi, lo))
        })
        .collect::<Result<_>>()?;

    let mut grad = vec![0.0; d];
    let mut base = 0.0;
    for (dr, (hi, lo)) in draws.iter().zip(&pairs) {
        let q = (hi - lo) / eta;
        for (g, v) in grad.iter_mut().zip(&dr.v) {
            *g += q * v;
        }
        base += lo;
    }
    let mf = m as f64;
    grad.iter_mut().for_each(|g| *g /= mf);
    Ok(GradientSample {
        grad,
        base_mean: base / mf,
        evaluations: 2 * m,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub evals_cumulative: usize,
    pub alpha: f64,
    pub beta: f64,
    pub eta: f64,
    pub gbar_norm_sq: f64,
    /// Batch mean of the objective at `θ^k`, reused from the gradient pairs.
    pub mean_cost: f64,
    pub theta: Vec<f64>,
}

/// Mutable optimizer state between iterations.
#[derive(Clone, Debug)]
pub struct SangState {
    /// Current iterate `θ^k`.
    pub theta: Vec<f64>,
    /// Averaged gradient `Ḡ^k`.
    pub g_bar: Vec<f64>,
    /// RMSProp accumulator `ḡ_k`, unset before the first estimate.
    pub rms_accumulator: Option<f64>,
    pub history: Vec<IterationRecord>,
    rng: ChaCha8Rng,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SangResult {
    pub theta_r: Vec<f64>,
    /// Sampled output index, 1-based.
    pub r: usize,
    pub history: Vec<IterationRecord>,
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

impl SangState {
    pub fn new(config: &SangConfig) -> Result<Self> {
        config.validate()?;
        Ok(SangState {
            theta: config.theta0.clone(),
            g_bar: vec![0.0; config.dim_d],
            rms_accumulator: None,
            history: Vec::with_capacity(config.iters_n),
            rng: ChaCha8Rng::seed_from_u64(config.seed),
        })
    }

    /// Stepsize applied at the next update. Under RMSProp this is the value
    /// implied by the latest accumulator, since `G^k` is evaluated at the
    /// point the step produces.
    fn current_beta(&self, config: &SangConfig, sched: &Schedule) -> Option<f64> {
        match config.stepsize_rule {
            StepsizeRule::Corollary => Some(sched.beta),
            StepsizeRule::Rmsprop { b, .. } => self.rms_accumulator.map(|acc| b / acc.max(RMS_FLOOR).sqrt()),
        }
    }

    /// Runs iteration `k = history.len() + 1`.
    pub fn step<O: Oracle + ?Sized>(&mut self, config: &SangConfig, oracle: &O) -> Result<&IterationRecord> {
        let k = self.history.len() + 1;
        if k > config.iters_n {
            return Err(Error::InvalidArgument(format!("iteration budget {} exhausted", config.iters_n)));
        }
        let sched = schedule(config, k);
        let alpha = sched.alpha;
        // Before the first estimate Ḡ is zero, so the stepsize has no effect on θ.
        let beta_used = self.current_beta(config, &sched).unwrap_or(0.0);

        let prev = self.theta.clone();
        for (t, g) in self.theta.iter_mut().zip(&self.g_bar) {
            let y = *t - beta_used * g;
            *t = (1.0 - alpha) * *t + alpha * y;
        }
        for ((new, old), g) in self.theta.iter().zip(&prev).zip(&self.g_bar) {
            let expected = -alpha * beta_used * g;
            let tol = 1e-9 * (1.0 + old.abs() + new.abs());
            assert!(
                ((new - old) - expected).abs() <= tol,
                "update identity violated at iteration {k}"
            );
        }

        let sample = gradient_estimate(
            oracle,
            &self.theta,
            sched.eta,
            config.batch_m,
            config.independent_omega,
            &mut self.rng,
        )?;
        for (gb, g) in self.g_bar.iter_mut().zip(&sample.grad) {
            *gb = (1.0 - alpha) * *gb + alpha * g;
        }

        let beta = match config.stepsize_rule {
            StepsizeRule::Corollary => sched.beta,
            StepsizeRule::Rmsprop { b, gamma } => {
                let g2 = norm_sq(&sample.grad);
                let (next_beta, acc) = rmsprop_step(self.rms_accumulator.unwrap_or(g2), g2, b, gamma);
                self.rms_accumulator = Some(acc);
                if k == 1 {
                    next_beta
                } else {
                    beta_used
                }
            }
        };

        let evals_before = self.history.last().map_or(0, |r| r.evals_cumulative);
        self.history.push(IterationRecord {
            k,
            evals_cumulative: evals_before + sample.evaluations,
            alpha,
            beta,
            eta: sched.eta,
            gbar_norm_sq: norm_sq(&self.g_bar),
            mean_cost: sample.base_mean,
            theta: self.theta.clone(),
        });
        Ok(self.history.last().expect("just pushed"))
    }

    /// Samples the output index over the recorded iterations.
    pub fn finish(mut self) -> Result<SangResult> {
        let alphas: Vec<f64> = self.history.iter().map(|r| r.alpha).collect();
        let betas: Vec<f64> = self.history.iter().map(|r| r.beta).collect();
        let r = sample_output_index(&alphas, &betas, &mut self.rng)?;
        Ok(SangResult {
            theta_r: self.history[r - 1].theta.clone(),
            r,
            history: self.history,
        })
    }
}

/// Runs the full iteration budget and samples the returned iterate.
pub fn sang_run<O: Oracle + ?Sized>(config: &SangConfig, oracle: &O) -> Result<SangResult> {
    let mut state = SangState::new(config)?;
    for _ in 0..config.iters_n {
        state.step(config, oracle)?;
    }
    state.finish()
}

/// Writes `k, evals_cumulative, alpha, beta, eta, gbar_norm_sq, mean_cost`.
pub fn write_history_csv<W: Write>(history: &[IterationRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "evals_cumulative", "alpha", "beta", "eta", "gbar_norm_sq", "mean_cost"])?;
    for r in history {
        w.write_record([
            r.k.to_string(),
            r.evals_cumulative.to_string(),
            r.alpha.to_string(),
            r.beta.to_string(),
            r.eta.to_string(),
            r.gbar_norm_sq.to_string(),
            r.mean_cost.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::Csv(e.into()))?;
    Ok(())
}

/// Monte Carlo estimate of the smoothed function and its gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct SmoothedEstimate {
    pub value: f64,
    pub value_stderr: f64,
    pub grad: Vec<f64>,
    pub grad_stderr: Vec<f64>,
}

/// Estimates `E_v[F(θ+ηv)]` and `E_v[(F(θ+ηv) - F(θ))/η · v]` from `n_mc` draws.
pub fn smoothed_reference<F, R>(f: F, theta: &[f64], eta: f64, n_mc: usize, rng: &mut R) -> Result<SmoothedEstimate>
where
    F: Fn(&[f64]) -> f64,
    R: Rng + ?Sized,
{
    if n_mc == 0 || !(eta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "smoothed reference needs n_mc >= 1 and eta > 0, got n_mc={n_mc}, eta={eta}"
        )));
    }
    let d = theta.len();
    let f0 = f(theta);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut g_sum = vec![0.0; d];
    let mut g_sq = vec![0.0; d];
    let mut point = vec![0.0; d];
    let mut v = vec![0.0; d];
    for _ in 0..n_mc {
        for (vi, (p, t)) in v.iter_mut().zip(point.iter_mut().zip(theta)) {
            *vi = rng.sample(StandardNormal);
            *p = t + eta * *vi;
        }
        let fv = f(&point);
        sum += fv;
        sum_sq += fv * fv;
        let q = (fv - f0) / eta;
        for i in 0..d {
            let gi = q * v[i];
            g_sum[i] += gi;
            g_sq[i] += gi * gi;
        }
    }
    let n = n_mc as f64;
    let se = |s: f64, ss: f64| {
        if n_mc > 1 {
            let mean = s / n;
            ((ss - n * mean * mean).max(0.0) / (n - 1.0) / n).sqrt()
        } else {
            0.0
        }
    };
    Ok(SmoothedEstimate {
        value: sum / n,
        value_stderr: se(sum, sum_sq),
        grad: g_sum.iter().map(|g| g / n).collect(),
        grad_stderr: g_sum.iter().zip(&g_sq).map(|(&s, &ss)| se(s, ss)).collect(),
    })
}

/// Largest observed ratio `|F(θ+u, ω) - F(θ, ω)| / ‖u‖` over `samples`
/// random directions of length `radius`, each pair on a shared path.
pub fn estimate_lipschitz<O: Oracle + ?Sized>(
    oracle: &O,
    theta: &[f64],
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if !(radius > 0.0) || samples == 0 {
        return Err(Error::InvalidArgument(format!(
            "Lipschitz estimate needs radius > 0 and samples >= 1, got radius={radius}, samples={samples}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draws: Vec<(Vec<f64>, u64)> = (0..samples)
        .map(|_| {
            let v: Vec<f64> = (0..theta.len()).map(|_| rng.sample(StandardNormal)).collect();
            let norm = norm_sq(&v).sqrt().max(f64::MIN_POSITIVE);
            let u = v.iter().map(|x| x * radius / norm).collect();
            (u, rng.random::<u64>() | TUNING_SEED_BIT)
        })
        .collect();
    let ratios: Vec<f64> = draws
        .par_iter()
        .map(|(u, s)| {
            let shifted: Vec<f64> = theta.iter().zip(u).map(|(t, x)| t + x).collect();
            Ok((oracle.eval(&shifted, *s)? - oracle.eval(theta, *s)?).abs() / radius)
        })
        .collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(0.0, f64::max))
}
