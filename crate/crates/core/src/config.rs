//! Network configuration and its JSON schema.
//!
//! Every field has a default, so `{}` is a valid configuration file and
//! describes the reference deployment: 4 square cells over 1 km², 5 users per
//! cell, 200-symbol coherence blocks with 5 pilots, 200 mW pilot and data
//! budgets, a 20 MHz band with a 5 dB noise figure, 3GPP LTE pathloss with
//! 7 dB shadowing and 21 scatterers per link.
//!
//! ```json
//! {
//!   "cells": 4,
//!   "users_per_cell": 5,
//!   "antennas": 100,
//!   "coherence_symbols": 200,
//!   "pilot_symbols": 5,
//!   "bandwidth_hz": 2.0e7,
//!   "noise_figure_db": 5.0,
//!   "noise_power_dbm": null,
//!   "pathloss": { "intercept_db": -148.1, "slope_db_per_decade": 37.6,
//!                 "reference_distance_m": 1000.0, "min_distance_m": 35.0 },
//!   "shadow_std_db": 7.0,
//!   "area_side_m": 1000.0,
//!   "pilot_power_mw": 200.0,
//!   "max_power_mw": 200.0,
//!   "scatterers": 21,
//!   "correlation": {
//!     "bs": { "local_scattering": { "angular_spread_deg": 10.0, "antenna_spacing": 0.5 } },
//!     "scatterer_correlation": 0.5
//!   }
//! }
//! ```
//!
//! `pilot_power_mw` and `max_power_mw` accept either a scalar applied to all
//! users or a `cells × users_per_cell` nested array.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thermal noise density at 290 K.
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// Distance-dependent pathloss `intercept - slope·log10(d / reference)` in dB.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathlossParams {
    pub intercept_db: f64,
    pub slope_db_per_decade: f64,
    pub reference_distance_m: f64,
    pub min_distance_m: f64,
}

impl Default for PathlossParams {
    fn default() -> Self {
        Self {
            intercept_db: -148.1,
            slope_db_per_decade: 37.6,
            reference_distance_m: 1000.0,
            min_distance_m: 35.0,
        }
    }
}

/// BS-side spatial correlation model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BsCorrelation {
    /// Uniform linear array with Gaussian angular spread around the user's
    /// geometric angle.
    LocalScattering {
        #[serde(default = "default_angular_spread")]
        angular_spread_deg: f64,
        /// Element spacing in wavelengths.
        #[serde(default = "default_antenna_spacing")]
        antenna_spacing: f64,
    },
    /// `R = I_M`, the limit of an infinitely wide angular spread.
    Uncorrelated,
}

fn default_angular_spread() -> f64 {
    10.0
}

fn default_antenna_spacing() -> f64 {
    0.5
}

impl Default for BsCorrelation {
    fn default() -> Self {
        BsCorrelation::LocalScattering {
            angular_spread_deg: default_angular_spread(),
            antenna_spacing: default_antenna_spacing(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationModel {
    pub bs: BsCorrelation,
    /// Coefficient `r` of the exponential scatterer correlation `r^|i-j|`.
    pub scatterer_correlation: f64,
}

impl Default for CorrelationModel {
    fn default() -> Self {
        Self {
            bs: BsCorrelation::default(),
            scatterer_correlation: 0.5,
        }
    }
}

/// A power level given either uniformly or per user.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerUser {
    Uniform(f64),
    PerUser(Vec<Vec<f64>>),
}

impl PerUser {
    pub fn get(&self, cell: usize, user: usize) -> f64 {
        match self {
            PerUser::Uniform(v) => *v,
            PerUser::PerUser(rows) => rows[cell][user],
        }
    }

    /// Flattened in cell-major order.
    pub fn flatten(&self, cells: usize, users: usize) -> Vec<f64> {
        (0..cells)
            .flat_map(|l| (0..users).map(move |k| (l, k)))
            .map(|(l, k)| self.get(l, k))
            .collect()
    }

    fn validate(&self, name: &str, cells: usize, users: usize) -> Result<()> {
        if let PerUser::PerUser(rows) = self {
            if rows.len() != cells || rows.iter().any(|r| r.len() != users) {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be a scalar or a {cells}x{users} array"
                )));
            }
        }
        for l in 0..cells {
            for k in 0..users {
                let v = self.get(l, k);
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidConfig(format!(
                        "{name}[{l}][{k}] = {v} must be strictly positive"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    pub cells: usize,
    pub users_per_cell: usize,
    pub antennas: usize,
    pub coherence_symbols: usize,
    pub pilot_symbols: usize,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Overrides the noise power derived from bandwidth and noise figure.
    pub noise_power_dbm: Option<f64>,
    pub pathloss: PathlossParams,
    pub shadow_std_db: f64,
    pub area_side_m: f64,
    pub pilot_power_mw: PerUser,
    pub max_power_mw: PerUser,
    pub scatterers: usize,
    pub correlation: CorrelationModel,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            cells: 4,
            users_per_cell: 5,
            antennas: 100,
            coherence_symbols: 200,
            pilot_symbols: 5,
            bandwidth_hz: 20e6,
            noise_figure_db: 5.0,
            noise_power_dbm: None,
            pathloss: PathlossParams::default(),
            shadow_std_db: 7.0,
            area_side_m: 1000.0,
            pilot_power_mw: PerUser::Uniform(200.0),
            max_power_mw: PerUser::Uniform(200.0),
            scatterers: 21,
            correlation: CorrelationModel::default(),
        }
    }
}

impl NetworkConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let config: NetworkConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_json_pretty(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn with_antennas(mut self, antennas: usize) -> Self {
        self.antennas = antennas;
        self
    }

    pub fn total_users(&self) -> usize {
        self.cells * self.users_per_cell
    }

    pub fn noise_power_dbm(&self) -> f64 {
        self.noise_power_dbm.unwrap_or_else(|| {
            THERMAL_NOISE_DBM_PER_HZ + linear_to_db(self.bandwidth_hz) + self.noise_figure_db
        })
    }

    /// Noise variance `sigma^2` in mW.
    pub fn noise_variance(&self) -> f64 {
        db_to_linear(self.noise_power_dbm())
    }

    /// Fraction of the coherence block carrying data, `1 - tau_p/tau_c`.
    pub fn prelog(&self) -> f64 {
        1.0 - self.pilot_symbols as f64 / self.coherence_symbols as f64
    }

    pub fn pilot_powers(&self) -> Vec<f64> {
        self.pilot_power_mw.flatten(self.cells, self.users_per_cell)
    }

    pub fn max_powers(&self) -> Vec<f64> {
        self.max_power_mw.flatten(self.cells, self.users_per_cell)
    }

    /// Number of cells along each side of the square grid.
    pub fn grid_columns(&self) -> usize {
        (self.cells as f64).sqrt().ceil() as usize
    }

    pub fn cell_side_m(&self) -> f64 {
        self.area_side_m / self.grid_columns() as f64
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.cells == 0 || self.users_per_cell == 0 || self.antennas == 0 || self.scatterers == 0
        {
            return bad("cells, users_per_cell, antennas and scatterers must be at least 1".into());
        }
        if self.pilot_symbols == 0 || self.pilot_symbols >= self.coherence_symbols {
            return bad(format!(
                "need 0 < pilot_symbols ({}) < coherence_symbols ({})",
                self.pilot_symbols, self.coherence_symbols
            ));
        }
        if self.pilot_symbols < self.users_per_cell {
            return Err(Error::InsufficientPilots {
                needed: self.users_per_cell,
                available: self.pilot_symbols,
            });
        }
        if !(self.noise_variance().is_finite() && self.noise_variance() > 0.0) {
            return bad("noise variance must be strictly positive".into());
        }
        if !(self.shadow_std_db >= 0.0) {
            return bad("shadow_std_db must be non-negative".into());
        }
        let pl = &self.pathloss;
        if !(pl.min_distance_m > 0.0 && pl.reference_distance_m > 0.0) {
            return bad("pathloss distances must be strictly positive".into());
        }
        if !(self.area_side_m > 0.0) {
            return bad("area_side_m must be strictly positive".into());
        }
        let half_diagonal = self.cell_side_m() / std::f64::consts::SQRT_2;
        if pl.min_distance_m >= half_diagonal {
            return bad(format!(
                "min_distance_m ({}) must be below the cell half-diagonal ({half_diagonal:.1} m)",
                pl.min_distance_m
            ));
        }
        if let BsCorrelation::LocalScattering {
            angular_spread_deg,
            antenna_spacing,
        } = self.correlation.bs
        {
            if !(angular_spread_deg > 0.0 && angular_spread_deg.is_finite()) {
                return bad("angular_spread_deg must be positive and finite".into());
            }
            if !(antenna_spacing > 0.0) {
                return bad("antenna_spacing must be positive".into());
            }
        }
        if !self.correlation.scatterer_correlation.is_finite() {
            return bad("scatterer_correlation must be finite".into());
        }
        self.pilot_power_mw
            .validate("pilot_power_mw", self.cells, self.users_per_cell)?;
        self.max_power_mw
            .validate("max_power_mw", self.cells, self.users_per_cell)?;
        Ok(())
    }
}
