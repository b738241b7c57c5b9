//! Problem instances: physical parameters, forecast model, price and load
//! curves, and the initial storage level.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecast::{ForecastConfig, ForecastCurve};
use crate::model::{ExogenousCurves, ModelParams, State};

const PEAK_START: usize = 17;
const PEAK_END: usize = 19;
const PEAK_PREMIUM: f64 = 450.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: ModelParams,
    pub forecast: ForecastConfig,
    pub curves: Arc<ExogenousCurves>,
    /// Storage level at `t = 0`.
    pub r0: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::synthetic(72, 23)
    }
}

impl Scenario {
    /// Hourly diurnal instance with `t` periods and lookahead `h`.
    ///
    /// Wind peaks overnight while demand peaks mid-morning, and prices carry a
    /// scarcity premium over hours 17..=19 of each day, so storage decisions
    /// hinge on how much overnight wind the forecast promises.
    pub fn synthetic(t: usize, h: usize) -> Self {
        let hour = |i: usize| 2.0 * PI * i as f64 / 24.0;
        let demand: Vec<f64> = (0..=t).map(|i| 50.0 + 20.0 * hour(i).sin()).collect();
        let price: Vec<f64> = (0..=t)
            .map(|i| {
                let base = 30.0 + 15.0 * (2.0 * PI * (i as f64 - 6.0) / 24.0).sin();
                if (PEAK_START..=PEAK_END).contains(&(i % 24)) {
                    base + PEAK_PREMIUM
                } else {
                    base
                }
            })
            .collect();
        let wind: Vec<f64> = (0..=t).map(|i| 60.0 - 40.0 * hour(i).sin()).collect();
        Scenario {
            params: ModelParams {
                horizon_t: t,
                lookahead_h: h,
                r_max: 300.0,
                beta_c: 0.9,
                beta_d: 0.9,
                gamma_c: 75.0,
                gamma_d: 75.0,
                penalty_cp: 200.0,
            },
            forecast: ForecastConfig {
                rho_e: 0.0,
                initial_curve: wind,
                horizon_h: h,
                horizon_t: t,
            },
            curves: Arc::new(ExogenousCurves {
                price_market: price.clone(),
                price_grid: price,
                demand,
            }),
            r0: 150.0,
        }
    }

    pub fn with_rho(mut self, rho_e: f64) -> Self {
        self.forecast.rho_e = rho_e;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.forecast.validate()?;
        self.curves.validate(self.params.horizon_t)?;
        if self.forecast.horizon_t != self.params.horizon_t
            || self.forecast.horizon_h != self.params.lookahead_h
        {
            return Err(Error::Config(
                "forecast horizons disagree with model parameters".into(),
            ));
        }
        if !(self.r0 >= 0.0 && self.r0 <= self.params.r_max) {
            return Err(Error::Config(format!(
                "initial storage {} outside [0, {}]",
                self.r0, self.params.r_max
            )));
        }
        Ok(())
    }

    pub fn initial_state(&self) -> State {
        State {
            t: 0,
            r: self.r0,
            forecast: ForecastCurve::initial(&self.forecast),
            curves: Arc::clone(&self.curves),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Scenario = serde_json::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}
