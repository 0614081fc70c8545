use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{format_xi, write_json, CdfSeries, ExperimentSpec, REPRODUCIBILITY_NOTE};
use crate::error::{Error, Result};
use crate::power::{
    satisfied_probability, Algorithm, PowerAllocation, SatisfiedProbability, SolverOptions,
};

/// Relative slack on the non-increasing total power check.
const MONOTONE_TOLERANCE: f64 = 1e-12;

/// One algorithm's result on one drop and target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmOutcome {
    pub algorithm: Algorithm,
    pub p: Vec<f64>,
    pub sinr: Vec<f64>,
    pub satisfied: Vec<bool>,
    pub iterations: usize,
    pub converged: bool,
    pub total_power: f64,
    /// `P_tot(n) ≤ P_tot(n-1)` at every step.
    pub monotone: bool,
    /// Every iterate stayed in `[0, P_max]`.
    pub within_box: bool,
}

impl AlgorithmOutcome {
    fn from_allocation(alloc: &PowerAllocation, p_max: &[f64]) -> Self {
        let monotone = alloc
            .total_power_trace
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + MONOTONE_TOLERANCE));
        let within_box = alloc
            .p
            .iter()
            .zip(p_max)
            .all(|(&p, &cap)| (0.0..=cap).contains(&p));
        Self {
            algorithm: alloc.algorithm,
            p: alloc.p.clone(),
            sinr: alloc.sinr.clone(),
            satisfied: alloc.satisfied.clone(),
            iterations: alloc.iterations,
            converged: alloc.converged,
            total_power: alloc.total_power(),
            monotone,
            within_box,
        }
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }

    fn as_allocation(&self) -> PowerAllocation {
        PowerAllocation {
            algorithm: self.algorithm,
            p: self.p.clone(),
            sinr: self.sinr.clone(),
            satisfied: self.satisfied.clone(),
            total_power_trace: Vec::new(),
            power_trace: Vec::new(),
            iterations: self.iterations,
            converged: self.converged,
            fixed_point_residual: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DropOutcome {
    pub drop: usize,
    pub drop_seed: u64,
    pub xi: f64,
    /// Algorithm 1 converged and satisfied every user.
    pub feasible: bool,
    pub outcomes: Vec<AlgorithmOutcome>,
}

impl DropOutcome {
    pub fn outcome(&self, algorithm: Algorithm) -> Option<&AlgorithmOutcome> {
        self.outcomes.iter().find(|o| o.algorithm == algorithm)
    }
}

/// Aggregates for one `(xi, algorithm)` pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub xi: f64,
    pub algorithm: Algorithm,
    pub drops: usize,
    pub feasible_drops: usize,
    pub nonconverged: usize,
    /// Over converged runs.
    pub satisfied: Option<SatisfiedProbability>,
    pub mean_power_feasible: Option<f64>,
    pub mean_power_infeasible: Option<f64>,
    pub cdf_feasible: Option<CdfSeries>,
    pub cdf_infeasible: Option<CdfSeries>,
}

/// Algorithm 1 vs Algorithm 2 on infeasible drops at one target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CongestionSummary {
    pub xi: f64,
    pub congested_drops: usize,
    /// Fraction of congested drops where Algorithm 1 uses at least as much
    /// total power as Algorithm 2.
    pub alg1_ge_alg2_fraction: Option<f64>,
    pub mean_total_alg1: Option<f64>,
    pub mean_total_alg2: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerSweep {
    pub spec: ExperimentSpec,
    /// Drop-major, then by target.
    pub drops: Vec<DropOutcome>,
    pub summaries: Vec<SweepSummary>,
    pub congestion: Vec<CongestionSummary>,
    pub note: String,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn cdf(label: String, values: &[f64]) -> Result<Option<CdfSeries>> {
    if values.is_empty() {
        Ok(None)
    } else {
        CdfSeries::from_samples(label, values).map(Some)
    }
}

impl PowerSweep {
    pub fn summary(&self, xi: f64, algorithm: Algorithm) -> Option<&SweepSummary> {
        self.summaries
            .iter()
            .find(|s| s.xi == xi && s.algorithm == algorithm)
    }

    pub fn congestion(&self, xi: f64) -> Option<&CongestionSummary> {
        self.congestion.iter().find(|c| c.xi == xi)
    }

    pub fn outcomes_at(&self, xi: f64) -> impl Iterator<Item = &DropOutcome> {
        self.drops.iter().filter(move |d| d.xi == xi)
    }

    /// Box violations, non-finite powers, and non-monotone Algorithm 1 runs
    /// on feasible drops.
    pub fn invariant_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for d in &self.drops {
            for o in &d.outcomes {
                let tag = format!("xi={} alg={} drop {}", d.xi, o.algorithm.number(), d.drop);
                if !o.within_box || o.p.iter().any(|p| !p.is_finite()) {
                    out.push(format!("{tag}: power outside [0, P_max]"));
                }
                if d.feasible && o.algorithm == Algorithm::MaxPower && !o.monotone {
                    out.push(format!("{tag}: total power increased during iteration"));
                }
            }
        }
        out
    }

    /// Writes allocations, power CDFs, satisfied and congestion tables and
    /// `sweep.json`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let k = self.spec.config.users_per_cell;

        let mut writer = csv::Writer::from_path(dir.join("allocations.csv"))?;
        writer.write_record([
            "xi",
            "algorithm",
            "drop",
            "drop_seed",
            "cell",
            "user",
            "power_mw",
            "sinr",
            "satisfied",
            "feasible_drop",
            "converged",
            "iterations",
        ])?;
        for d in &self.drops {
            for o in &d.outcomes {
                if !self.spec.algorithms.contains(&o.algorithm) {
                    continue;
                }
                for (u, (&p, &s)) in o.p.iter().zip(&o.sinr).enumerate() {
                    writer.write_record([
                        format_xi(d.xi),
                        o.algorithm.number().to_string(),
                        d.drop.to_string(),
                        d.drop_seed.to_string(),
                        (u / k).to_string(),
                        (u % k).to_string(),
                        p.to_string(),
                        s.to_string(),
                        o.satisfied[u].to_string(),
                        d.feasible.to_string(),
                        o.converged.to_string(),
                        o.iterations.to_string(),
                    ])?;
                }
            }
        }
        writer.flush()?;

        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut writer = csv::Writer::from_path(dir.join("satisfied.csv"))?;
        writer.write_record([
            "xi",
            "algorithm",
            "drops",
            "feasible_drops",
            "nonconverged",
            "per_user",
            "per_drop",
            "mean_power_feasible_mw",
            "mean_power_infeasible_mw",
        ])?;
        for s in &self.summaries {
            writer.write_record([
                format_xi(s.xi),
                s.algorithm.number().to_string(),
                s.drops.to_string(),
                s.feasible_drops.to_string(),
                s.nonconverged.to_string(),
                opt(s.satisfied.map(|p| p.per_user)),
                opt(s.satisfied.map(|p| p.per_drop)),
                opt(s.mean_power_feasible),
                opt(s.mean_power_infeasible),
            ])?;
            let stem = format!(
                "power_cdf_xi{}_alg{}",
                format_xi(s.xi),
                s.algorithm.number()
            );
            if let Some(c) = &s.cdf_feasible {
                c.write_csv(dir.join(format!("{stem}_feasible.csv")))?;
            }
            if let Some(c) = &s.cdf_infeasible {
                c.write_csv(dir.join(format!("{stem}_infeasible.csv")))?;
            }
        }
        writer.flush()?;

        let mut writer = csv::Writer::from_path(dir.join("congestion.csv"))?;
        writer.write_record([
            "xi",
            "congested_drops",
            "alg1_ge_alg2_fraction",
            "mean_total_alg1_mw",
            "mean_total_alg2_mw",
        ])?;
        for c in &self.congestion {
            writer.write_record([
                format_xi(c.xi),
                c.congested_drops.to_string(),
                opt(c.alg1_ge_alg2_fraction),
                opt(c.mean_total_alg1),
                opt(c.mean_total_alg2),
            ])?;
        }
        writer.flush()?;

        #[derive(Serialize)]
        struct Metadata<'a> {
            spec: &'a ExperimentSpec,
            note: &'a str,
            summaries: Vec<SummaryRow>,
            congestion: &'a [CongestionSummary],
        }
        #[derive(Serialize)]
        struct SummaryRow {
            xi: f64,
            algorithm: u8,
            drops: usize,
            feasible_drops: usize,
            nonconverged: usize,
            satisfied: Option<SatisfiedProbability>,
            mean_power_feasible_mw: Option<f64>,
            mean_power_infeasible_mw: Option<f64>,
        }
        let metadata = Metadata {
            spec: &self.spec,
            note: &self.note,
            summaries: self
                .summaries
                .iter()
                .map(|s| SummaryRow {
                    xi: s.xi,
                    algorithm: s.algorithm.number(),
                    drops: s.drops,
                    feasible_drops: s.feasible_drops,
                    nonconverged: s.nonconverged,
                    satisfied: s.satisfied,
                    mean_power_feasible_mw: s.mean_power_feasible,
                    mean_power_infeasible_mw: s.mean_power_infeasible,
                })
                .collect(),
            congestion: &self.congestion,
        };
        write_json(&dir.join("sweep.json"), &metadata)
    }
}

/// Solves every drop at every target with the requested algorithms.
/// Algorithm 1 always runs, since it decides whether a drop is feasible.
pub fn run_power_sweep(spec: &ExperimentSpec) -> Result<PowerSweep> {
    spec.validate()?;
    let options = SolverOptions {
        epsilon: spec.epsilon,
        record_powers: false,
        ..SolverOptions::default()
    };
    let p_max = spec.config.max_powers();
    let mut algorithms = spec.algorithms.clone();
    if !algorithms.contains(&Algorithm::MaxPower) {
        algorithms.insert(0, Algorithm::MaxPower);
    }
    algorithms.sort();
    algorithms.dedup();

    let per_drop = spec.map_drops(&spec.config, |drop, scenario| {
        spec.xi
            .iter()
            .map(|&xi| {
                let targets = scenario.targets(xi, spec.transform)?;
                let outcomes = algorithms
                    .iter()
                    .map(|&a| {
                        scenario
                            .optimize(&targets, a, options)
                            .map(|alloc| AlgorithmOutcome::from_allocation(&alloc, &p_max))
                    })
                    .collect::<Result<Vec<_>>>()?;
                let reference = &outcomes[0];
                Ok(DropOutcome {
                    drop,
                    drop_seed: scenario.drop_seed,
                    xi,
                    feasible: reference.converged && reference.all_satisfied(),
                    outcomes,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let drops: Vec<DropOutcome> = per_drop.into_iter().flatten().collect();

    let mut summaries = Vec::new();
    let mut congestion = Vec::new();
    for &xi in &spec.xi {
        let at_xi: Vec<&DropOutcome> = drops.iter().filter(|d| d.xi == xi).collect();
        for &algorithm in &spec.algorithms {
            let runs: Vec<(&DropOutcome, &AlgorithmOutcome)> = at_xi
                .iter()
                .map(|d| (*d, d.outcome(algorithm).expect("algorithm was run")))
                .collect();
            let converged: Vec<_> = runs.iter().filter(|(_, o)| o.converged).collect();
            let allocations: Vec<PowerAllocation> =
                converged.iter().map(|(_, o)| o.as_allocation()).collect();
            let satisfied = if allocations.is_empty() {
                None
            } else {
                Some(satisfied_probability(&allocations)?)
            };
            let powers = |feasible: bool| -> Vec<f64> {
                converged
                    .iter()
                    .filter(|(d, _)| d.feasible == feasible)
                    .flat_map(|(_, o)| o.p.iter().copied())
                    .collect()
            };
            let (feasible_p, infeasible_p) = (powers(true), powers(false));
            let label = |kind: &str| format!("xi={xi} alg={} {kind}", algorithm.number());
            summaries.push(SweepSummary {
                xi,
                algorithm,
                drops: runs.len(),
                feasible_drops: runs.iter().filter(|(d, _)| d.feasible).count(),
                nonconverged: runs.len() - converged.len(),
                satisfied,
                mean_power_feasible: mean(&feasible_p),
                mean_power_infeasible: mean(&infeasible_p),
                cdf_feasible: cdf(label("feasible"), &feasible_p)?,
                cdf_infeasible: cdf(label("infeasible"), &infeasible_p)?,
            });
        }

        let pairs: Vec<(f64, f64)> = at_xi
            .iter()
            .filter(|d| !d.feasible)
            .filter_map(|d| {
                let a1 = d.outcome(Algorithm::MaxPower)?;
                let a2 = d.outcome(Algorithm::SoftRemoval)?;
                (a1.converged && a2.converged).then_some((a1.total_power, a2.total_power))
            })
            .collect();
        let congested = at_xi.iter().filter(|d| !d.feasible).count();
        let ordered = pairs.iter().filter(|(a, b)| a >= b).count();
        let totals1: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let totals2: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        congestion.push(CongestionSummary {
            xi,
            congested_drops: congested,
            alg1_ge_alg2_fraction: (!pairs.is_empty()).then(|| ordered as f64 / pairs.len() as f64),
            mean_total_alg1: mean(&totals1),
            mean_total_alg2: mean(&totals2),
        });
    }

    if drops.is_empty() {
        return Err(Error::InvalidConfig("sweep produced no drops".into()));
    }
    Ok(PowerSweep {
        spec: spec.clone(),
        drops,
        summaries,
        congestion,
        note: REPRODUCIBILITY_NOTE.to_string(),
    })
}
