//! Batch experiments over many drops.
//!
//! Drops run in parallel but every result is collected by drop index, and
//! all randomness is derived from the master seed by counter, so outputs are
//! identical for any thread count.

mod power_sweep;
mod se_validation;

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::power::{Algorithm, SinrTransform, DEFAULT_EPSILON};
use crate::scenario::{drop_seed, Scenario};

pub use power_sweep::{run_power_sweep, AlgorithmOutcome, DropOutcome, PowerSweep, SweepSummary};
pub use se_validation::{run_se_validation, AntennaValidation, SeSample, SeValidation};

pub const DEFAULT_DROPS: usize = 200;

/// Note attached to power-sweep reports.
pub const REPRODUCIBILITY_NOTE: &str = "Absolute powers and percentages depend on the \
BS correlation model, which is a local-scattering substitute; only orderings and trends \
are expected to match published figures.";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub config: NetworkConfig,
    /// Antenna counts for SE validation.
    pub antennas: Vec<usize>,
    /// SE targets for power sweeps.
    pub xi: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    pub drops: usize,
    /// Monte-Carlo trials per drop; zero skips Monte-Carlo.
    pub mc_trials: usize,
    pub master_seed: u64,
    pub epsilon: f64,
    pub transform: SinrTransform,
}

impl ExperimentSpec {
    pub fn new(config: NetworkConfig) -> Self {
        Self {
            antennas: vec![config.antennas],
            config,
            xi: vec![1.5, 1.75, 2.0],
            algorithms: vec![Algorithm::MaxPower, Algorithm::SoftRemoval],
            drops: DEFAULT_DROPS,
            mc_trials: 0,
            master_seed: 0,
            epsilon: DEFAULT_EPSILON,
            transform: SinrTransform::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        if self.drops == 0 {
            return Err(Error::InvalidConfig("need at least one drop".into()));
        }
        if self.antennas.is_empty() || self.antennas.contains(&0) {
            return Err(Error::InvalidConfig(
                "antenna list must be non-empty and positive".into(),
            ));
        }
        if self.xi.is_empty() || self.xi.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidConfig(
                "xi list must be non-empty and positive".into(),
            ));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig(
                "algorithm list must be non-empty".into(),
            ));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn drop_seed(&self, index: usize) -> u64 {
        drop_seed(self.master_seed, index)
    }

    /// Runs `f` on every drop at `config`, in parallel, returning results in
    /// drop order. Errors carry the drop index.
    pub(crate) fn map_drops<T, F>(&self, config: &NetworkConfig, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &Scenario) -> Result<T> + Sync,
    {
        (0..self.drops)
            .into_par_iter()
            .map(|drop| {
                Scenario::new(config, self.drop_seed(drop))
                    .and_then(|scenario| f(drop, &scenario))
                    .map_err(|e| Error::Drop {
                        drop,
                        source: Box::new(e),
                    })
            })
            .collect()
    }
}

/// Empirical CDF: ascending values with fractions `1/n, 2/n, ..., 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfSeries {
    pub label: String,
    pub values: Vec<f64>,
    pub fractions: Vec<f64>,
}

impl CdfSeries {
    pub fn from_samples(label: impl Into<String>, samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidConfig("CDF needs at least one sample".into()));
        }
        if samples.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidConfig("CDF samples must not be NaN".into()));
        }
        let mut values = samples.to_vec();
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let fractions = (1..=values.len()).map(|i| i as f64 / n).collect();
        Ok(Self {
            label: label.into(),
            values,
            fractions,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Smallest sample whose cumulative fraction reaches `q`.
    pub fn quantile(&self, q: f64) -> f64 {
        let idx = self.fractions.partition_point(|&f| f < q - 1e-12);
        self.values[idx.min(self.values.len() - 1)]
    }

    /// Fraction of samples `≤ x`.
    pub fn evaluate(&self, x: f64) -> f64 {
        let count = self.values.partition_point(|&v| v <= x);
        count as f64 / self.values.len() as f64
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut writer = csv::Writer::from_path(path)?;
        writer.write_record(["value", "cum_fraction"])?;
        for (v, f) in self.values.iter().zip(&self.fractions) {
            writer.write_record([v.to_string(), f.to_string()])?;
        }
        writer.flush()?;
        Ok(())
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub(crate) fn format_xi(xi: f64) -> String {
    format!("{xi}")
}
