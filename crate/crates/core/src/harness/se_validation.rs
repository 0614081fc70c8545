use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_json, CdfSeries, ExperimentSpec};
use crate::error::{Error, Result};
use crate::se::se_from_sinr;

/// Full-power SINR and SE of one user in one drop.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeSample {
    pub drop: usize,
    pub drop_seed: u64,
    pub cell: usize,
    pub user: usize,
    pub sinr_cf: f64,
    pub sinr_mc: Option<f64>,
    pub se_cf: f64,
    pub se_mc: Option<f64>,
    /// `|sinr_cf - sinr_mc| / sinr_mc`.
    pub rel_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AntennaValidation {
    pub antennas: usize,
    pub samples: Vec<SeSample>,
    pub cdf_closed_form: CdfSeries,
    pub cdf_monte_carlo: Option<CdfSeries>,
    pub cdf_rel_err: Option<CdfSeries>,
}

impl AntennaValidation {
    pub fn mean_se_closed_form(&self) -> f64 {
        self.cdf_closed_form.mean()
    }

    /// Fraction of users whose relative SINR error is at most `tolerance`.
    pub fn fraction_within(&self, tolerance: f64) -> Option<f64> {
        self.cdf_rel_err.as_ref().map(|c| c.evaluate(tolerance))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeValidation {
    pub spec: ExperimentSpec,
    pub results: Vec<AntennaValidation>,
}

#[derive(Serialize)]
struct Summary<'a> {
    spec: &'a ExperimentSpec,
    antennas: Vec<AntennaSummary>,
}

#[derive(Serialize)]
struct AntennaSummary {
    antennas: usize,
    samples: usize,
    mean_se_cf: f64,
    mean_se_mc: Option<f64>,
    rel_err_p95: Option<f64>,
    fraction_within_3pct: Option<f64>,
}

impl SeValidation {
    pub fn for_antennas(&self, antennas: usize) -> Option<&AntennaValidation> {
        self.results.iter().find(|r| r.antennas == antennas)
    }

    /// Violated invariants: non-finite SINRs or SEs.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for result in &self.results {
            for s in &result.samples {
                let values = [Some(s.sinr_cf), s.sinr_mc, Some(s.se_cf), s.se_mc];
                if values
                    .iter()
                    .flatten()
                    .any(|v| !(v.is_finite() && *v >= 0.0))
                {
                    out.push(format!(
                        "M={} drop {} cell {} user {}: non-finite or negative SINR/SE",
                        result.antennas, s.drop, s.cell, s.user
                    ));
                }
            }
        }
        out
    }

    /// Writes `se_m{M}.csv` per antenna count, CDF files and `se_validation.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        for result in &self.results {
            let m = result.antennas;
            let mut writer = csv::Writer::from_path(dir.join(format!("se_m{m}.csv")))?;
            writer.write_record([
                "drop",
                "drop_seed",
                "cell",
                "user",
                "sinr_cf",
                "sinr_mc",
                "se_cf",
                "se_mc",
                "rel_err",
            ])?;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for s in &result.samples {
                writer.write_record([
                    s.drop.to_string(),
                    s.drop_seed.to_string(),
                    s.cell.to_string(),
                    s.user.to_string(),
                    s.sinr_cf.to_string(),
                    opt(s.sinr_mc),
                    s.se_cf.to_string(),
                    opt(s.se_mc),
                    opt(s.rel_err),
                ])?;
            }
            writer.flush()?;
            result
                .cdf_closed_form
                .write_csv(dir.join(format!("se_cdf_cf_m{m}.csv")))?;
            if let Some(cdf) = &result.cdf_monte_carlo {
                cdf.write_csv(dir.join(format!("se_cdf_mc_m{m}.csv")))?;
            }
            if let Some(cdf) = &result.cdf_rel_err {
                cdf.write_csv(dir.join(format!("rel_err_cdf_m{m}.csv")))?;
            }
        }
        let summary = Summary {
            spec: &self.spec,
            antennas: self
                .results
                .iter()
                .map(|r| AntennaSummary {
                    antennas: r.antennas,
                    samples: r.samples.len(),
                    mean_se_cf: r.mean_se_closed_form(),
                    mean_se_mc: r.cdf_monte_carlo.as_ref().map(CdfSeries::mean),
                    rel_err_p95: r.cdf_rel_err.as_ref().map(|c| c.quantile(0.95)),
                    fraction_within_3pct: r.fraction_within(0.03),
                })
                .collect(),
        };
        write_json(&dir.join("se_validation.json"), &summary)
    }
}

/// Full-power SE per user for every antenna count and drop, by closed form
/// and, when `mc_trials > 0`, by Monte-Carlo.
pub fn run_se_validation(spec: &ExperimentSpec) -> Result<SeValidation> {
    spec.validate()?;
    let prelog = spec.config.prelog();
    let k = spec.config.users_per_cell;
    let mut results = Vec::with_capacity(spec.antennas.len());
    for &m in &spec.antennas {
        let config = spec.config.clone().with_antennas(m);
        let per_drop = spec.map_drops(&config, |drop, scenario| {
            let cf = scenario.full_power_sinr()?;
            let mc = if spec.mc_trials > 0 {
                Some(
                    scenario
                        .monte_carlo(spec.mc_trials)?
                        .sinr(&config.max_powers(), &scenario.plan)?,
                )
            } else {
                None
            };
            Ok((0..cf.len())
                .map(|u| {
                    let sinr_mc = mc.as_ref().map(|v| v[u]);
                    SeSample {
                        drop,
                        drop_seed: scenario.drop_seed,
                        cell: u / k,
                        user: u % k,
                        sinr_cf: cf[u],
                        sinr_mc,
                        se_cf: se_from_sinr(cf[u], prelog),
                        se_mc: sinr_mc.map(|s| se_from_sinr(s.max(0.0), prelog)),
                        rel_err: sinr_mc.map(|s| (cf[u] - s).abs() / s.abs()),
                    }
                })
                .collect::<Vec<_>>())
        })?;
        let samples: Vec<SeSample> = per_drop.into_iter().flatten().collect();
        let se_cf: Vec<f64> = samples.iter().map(|s| s.se_cf).collect();
        let cdf_closed_form = CdfSeries::from_samples(format!("closed-form M={m}"), &se_cf)?;
        let (cdf_monte_carlo, cdf_rel_err) = if spec.mc_trials > 0 {
            let se_mc: Vec<f64> = samples.iter().filter_map(|s| s.se_mc).collect();
            let rel: Vec<f64> = samples.iter().filter_map(|s| s.rel_err).collect();
            (
                Some(CdfSeries::from_samples(
                    format!("Monte-Carlo M={m}"),
                    &se_mc,
                )?),
                Some(CdfSeries::from_samples(
                    format!("relative error M={m}"),
                    &rel,
                )?),
            )
        } else {
            (None, None)
        };
        results.push(AntennaValidation {
            antennas: m,
            samples,
            cdf_closed_form,
            cdf_monte_carlo,
            cdf_rel_err,
        });
    }
    if results.is_empty() {
        return Err(Error::InvalidConfig("no antenna counts".into()));
    }
    Ok(SeValidation {
        spec: spec.clone(),
        results,
    })
}
