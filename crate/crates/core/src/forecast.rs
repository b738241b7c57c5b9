//! Rolling wind forecasts evolved by additive martingale increments.
//!
//! A forecast issued at `t` covers `[t, min(t+H, T)]`. Each period the
//! shared entries receive an increment `ρ·f·z` with `z ~ N(0,1)`, and the
//! newly revealed far entry starts from the initial curve value.
//! Values are clamped at zero after each update.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    /// Relative noise level: the increment standard deviation is `rho_e · f`.
    pub rho_e: f64,
    /// `f_{0,t'}` for `t' = 0..=T`.
    pub initial_curve: Vec<f64>,
    pub horizon_h: usize,
    pub horizon_t: usize,
}

impl ForecastConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho_e >= 0.0) || !self.rho_e.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rho_e must be a finite nonnegative number, got {}",
                self.rho_e
            )));
        }
        if self.initial_curve.len() != self.horizon_t + 1 {
            return Err(Error::LengthMismatch {
                what: "initial wind curve",
                expected: self.horizon_t + 1,
                actual: self.initial_curve.len(),
            });
        }
        if self.initial_curve.iter().any(|&f| !(f >= 0.0) || !f.is_finite()) {
            return Err(Error::InvalidArgument(
                "initial wind curve must be finite and nonnegative".into(),
            ));
        }
        if self.horizon_h < 1 {
            return Err(Error::InvalidArgument("horizon_h must be at least 1".into()));
        }
        Ok(())
    }

    /// Last period covered by a forecast issued at `t`.
    pub fn window_end(&self, t: usize) -> usize {
        (t + self.horizon_h).min(self.horizon_t)
    }

    /// Number of increments needed to move a forecast from `t` to `t + 1`.
    pub fn noise_len(&self, t: usize) -> usize {
        self.window_end(t + 1) - t
    }
}

/// Forecast `f_{t,t'}` for `t'` in `[base_time, window end]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastCurve {
    pub base_time: usize,
    pub values: Vec<f64>,
}

impl ForecastCurve {
    /// The forecast issued at `t = 0`.
    pub fn initial(config: &ForecastConfig) -> Self {
        let end = config.window_end(0);
        ForecastCurve {
            base_time: 0,
            values: config.initial_curve[..=end].to_vec(),
        }
    }

    /// Forecast for absolute period `t_prime`, if inside the window.
    pub fn at(&self, t_prime: usize) -> Option<f64> {
        t_prime
            .checked_sub(self.base_time)
            .and_then(|i| self.values.get(i).copied())
    }

    /// The wind available now, `f_{t,t}`.
    pub fn current(&self) -> f64 {
        self.values[0]
    }

    pub fn window_end(&self) -> usize {
        self.base_time + self.values.len() - 1
    }

    /// Forecasts for `t' = t+1..=window end`.
    pub fn lookahead(&self) -> &[f64] {
        &self.values[1..]
    }
}

fn evolve_raw(curve: &ForecastCurve, config: &ForecastConfig, noise: &[f64]) -> Result<Vec<f64>> {
    let t = curve.base_time;
    if t >= config.horizon_t {
        return Err(Error::InvalidArgument(format!(
            "cannot evolve a forecast issued at the final period {t}"
        )));
    }
    let expected = config.noise_len(t);
    if noise.len() != expected {
        return Err(Error::LengthMismatch {
            what: "forecast noise",
            expected,
            actual: noise.len(),
        });
    }
    let prev_end = curve.window_end();
    Ok(noise
        .iter()
        .enumerate()
        .map(|(i, z)| {
            let t_prime = t + 1 + i;
            let prev = if t_prime <= prev_end {
                curve.values[t_prime - t]
            } else {
                config.initial_curve[t_prime]
            };
            prev + config.rho_e * prev * z
        })
        .collect())
}

/// Advances a forecast by one period using standard normal draws `noise`.
pub fn evolve(curve: &ForecastCurve, config: &ForecastConfig, noise: &[f64]) -> Result<ForecastCurve> {
    let values = evolve_raw(curve, config, noise)?
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    Ok(ForecastCurve {
        base_time: curve.base_time + 1,
        values,
    })
}

/// Standard normal draws for one sample path, one vector per transition.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisePath {
    pub seed: u64,
    pub steps: Vec<Vec<f64>>,
}

impl NoisePath {
    /// Hex SHA-256 of the draws, used to confirm common random numbers.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for step in &self.steps {
            h.update((step.len() as u64).to_le_bytes());
            for z in step {
                h.update(z.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Deterministic noise for the path identified by `seed`.
pub fn sample_noise_path(config: &ForecastConfig, seed: u64) -> NoisePath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (0..config.horizon_t)
        .map(|t| {
            (0..config.noise_len(t))
                .map(|_| StandardNormal.sample(&mut rng))
                .collect()
        })
        .collect();
    NoisePath { seed, steps }
}

/// Reads a one-column numeric file. Blank lines and `#` comments are skipped.
pub fn load_curve(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_curve(&text).map_err(|message| Error::Parse {
        path: path.to_path_buf(),
        message,
    })
}

pub(crate) fn parse_curve(text: &str) -> std::result::Result<Vec<f64>, String> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let line = line.split('#').next().unwrap_or("").trim();
            (!line.is_empty()).then_some((i, line))
        })
        .map(|(i, line)| {
            line.parse::<f64>()
                .map_err(|e| format!("line {}: `{line}`: {e}", i + 1))
        })
        .collect()
}
