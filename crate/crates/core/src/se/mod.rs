//! Uplink ergodic spectral efficiency with MR combining.

pub mod closed_form;
pub mod monte_carlo;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use closed_form::{closed_form_sinr, SinrCoefficients, SinrTerms, UserCoefficients};
pub use monte_carlo::{monte_carlo_moments, monte_carlo_sinr, MonteCarloMoments, UserMoments};

/// Per-user SE `prelog · log2(1 + SINR)` in b/s/Hz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralEfficiencyReport {
    pub se: Vec<f64>,
    pub sinr: Vec<f64>,
    /// `1 - τ_p/τ_c`.
    pub prelog: f64,
}

impl SpectralEfficiencyReport {
    pub fn mean(&self) -> f64 {
        self.se.iter().sum::<f64>() / self.se.len() as f64
    }
}

pub fn prelog(coherence_symbols: usize, pilot_symbols: usize) -> f64 {
    1.0 - pilot_symbols as f64 / coherence_symbols as f64
}

pub fn se_from_sinr(sinr: f64, prelog: f64) -> f64 {
    prelog * (1.0 + sinr).log2()
}

pub fn spectral_efficiency(
    sinr: &[f64],
    coherence_symbols: usize,
    pilot_symbols: usize,
) -> Result<SpectralEfficiencyReport> {
    if pilot_symbols == 0 || pilot_symbols >= coherence_symbols {
        return Err(Error::InvalidConfig(format!(
            "need 0 < pilot_symbols ({pilot_symbols}) < coherence_symbols ({coherence_symbols})"
        )));
    }
    if let Some(bad) = sinr.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::InvalidConfig(format!(
            "SINR must be non-negative, got {bad}"
        )));
    }
    let prelog = prelog(coherence_symbols, pilot_symbols);
    Ok(SpectralEfficiencyReport {
        se: sinr.iter().map(|&s| se_from_sinr(s, prelog)).collect(),
        sinr: sinr.to_vec(),
        prelog,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let r = spectral_efficiency(&[1.0, 0.0, 3.0], 200, 5).unwrap();
        assert_eq!(r.prelog, 0.975);
        assert!((r.se[0] - 0.975).abs() < 1e-15);
        assert_eq!(r.se[1], 0.0);
        assert!((r.se[2] - 1.95).abs() < 1e-15);
    }

    #[test]
    fn rejects_negative_sinr() {
        assert!(spectral_efficiency(&[-0.1], 200, 5).is_err());
        assert!(spectral_efficiency(&[f64::NAN], 200, 5).is_err());
        assert!(spectral_efficiency(&[1.0], 5, 5).is_err());
    }
}
