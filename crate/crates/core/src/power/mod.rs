//! Total uplink power minimization under per-user SE targets.
//!
//! A target SE `ξ_u` becomes the SINR target `ν_u = 2^{ξ_u τ_c/(τ_c - τ_p)} - 1`,
//! and each constraint `SINR_u(p) ≥ ν_u` reads `p_u ≥ I_u(p)` with
//!
//! ```text
//! I_u(p) = ν_u (NI_u(p) + CI_u(p) + NO_u) / (z_u |tr(RΨR)|²)
//! ```
//!
//! `I` is a standard interference function (positive, monotone, scalable),
//! so iterating it from `P_max` decreases monotonically to the smallest
//! feasible power vector whenever one exists. Two update rules handle users
//! whose requirement cannot be met within budget:
//!
//! * [`Algorithm::MaxPower`]: `p_u ← min(I_u(p), P_max,u)`;
//! * [`Algorithm::SoftRemoval`]: `p_u ← I_u(p)` if `I_u(p) ≤ P_max,u`,
//!   otherwise `P_max,u² / I_u(p)`.
//!
//! All users update synchronously from the previous iterate.

pub mod feasibility;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::se::closed_form::{check_powers, SinrCoefficients};

pub use feasibility::{
    brute_force_minimum, check_feasibility_and_optimality, is_fixed_point, minimal_power_solution,
    BruteForceResult, OptimalityReport,
};

/// Relative slack when deciding whether a SINR target is met.
pub const SATISFIED_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

/// How an SE target maps to an SINR target.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinrTransform {
    /// `2^{ξ τ_c/(τ_c - τ_p)} - 1`.
    #[default]
    CoherenceRatio,
    /// `2^{ξ/(1 - τ_p/τ_c)} - 1`, the inverse of the SE prelog.
    InversePrelog,
}

/// Per-user SE requirements and the SINR targets they imply.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QosTargets {
    /// Required SE in b/s/Hz.
    pub xi: Vec<f64>,
    /// SINR targets.
    pub nu: Vec<f64>,
}

impl QosTargets {
    pub fn from_se(
        xi: Vec<f64>,
        coherence_symbols: usize,
        pilot_symbols: usize,
        transform: SinrTransform,
    ) -> Result<Self> {
        if pilot_symbols >= coherence_symbols {
            return Err(Error::InvalidConfig(
                "pilot_symbols must be below coherence_symbols".into(),
            ));
        }
        if let Some(bad) = xi.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidConfig(format!(
                "SE targets must be positive and finite, got {bad}"
            )));
        }
        let (tc, tp) = (coherence_symbols as f64, pilot_symbols as f64);
        let nu = xi
            .iter()
            .map(|&x| {
                let exponent = match transform {
                    SinrTransform::CoherenceRatio => x * tc / (tc - tp),
                    SinrTransform::InversePrelog => x / (1.0 - tp / tc),
                };
                exponent.exp2() - 1.0
            })
            .collect();
        Ok(Self { xi, nu })
    }

    /// The same target `xi` for `users` users.
    pub fn uniform(
        xi: f64,
        users: usize,
        coherence_symbols: usize,
        pilot_symbols: usize,
    ) -> Result<Self> {
        Self::from_se(
            vec![xi; users],
            coherence_symbols,
            pilot_symbols,
            SinrTransform::default(),
        )
    }

    /// Targets given directly as SINRs; `xi` is filled with the equivalent SE.
    pub fn from_sinr(nu: Vec<f64>, coherence_symbols: usize, pilot_symbols: usize) -> Self {
        let (tc, tp) = (coherence_symbols as f64, pilot_symbols as f64);
        let xi = nu
            .iter()
            .map(|&n| (1.0 + n).log2() * (tc - tp) / tc)
            .collect();
        Self { xi, nu }
    }

    pub fn len(&self) -> usize {
        self.nu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nu.is_empty()
    }
}

/// `I(p)` for fixed coefficients and targets.
#[derive(Clone, Copy, Debug)]
pub struct InterferenceFunction<'a> {
    coefficients: &'a SinrCoefficients,
    nu: &'a [f64],
}

impl<'a> InterferenceFunction<'a> {
    pub fn new(coefficients: &'a SinrCoefficients, targets: &'a QosTargets) -> Result<Self> {
        if targets.len() != coefficients.total_users() {
            return Err(Error::Dimension(format!(
                "{} targets for {} users",
                targets.len(),
                coefficients.total_users()
            )));
        }
        Ok(Self {
            coefficients,
            nu: &targets.nu,
        })
    }

    pub fn users(&self) -> usize {
        self.nu.len()
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<Vec<f64>> {
        check_powers(p, self.coefficients.users_per_cell, self.users())?;
        let mut out = vec![0.0; self.users()];
        self.evaluate_into(p, &mut out);
        Ok(out)
    }

    /// Unchecked hot-path evaluation.
    pub fn evaluate_into(&self, p: &[f64], out: &mut [f64]) {
        for (u, slot) in out.iter_mut().enumerate() {
            *slot =
                self.nu[u] * self.coefficients.denominator(u, p) / self.coefficients.users[u].gain;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    /// Unsatisfied users transmit at full power.
    MaxPower,
    /// Unsatisfied users back off to `P_max² / I(p)`.
    SoftRemoval,
}

impl Algorithm {
    pub fn number(self) -> u8 {
        match self {
            Algorithm::MaxPower => 1,
            Algorithm::SoftRemoval => 2,
        }
    }

    pub fn from_number(n: u8) -> Option<Self> {
        match n {
            1 => Some(Algorithm::MaxPower),
            2 => Some(Algorithm::SoftRemoval),
            _ => None,
        }
    }

    /// New power of a user whose interference function evaluates to
    /// `interference`.
    #[inline]
    pub fn update(self, interference: f64, p_max: f64) -> f64 {
        if interference <= p_max {
            interference
        } else {
            match self {
                Algorithm::MaxPower => p_max,
                Algorithm::SoftRemoval => p_max * p_max / interference,
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Stop once `|P_tot(n) - P_tot(n-1)| / P_tot(n-1) ≤ epsilon`.
    pub epsilon: f64,
    pub max_iterations: usize,
    /// Keep every iterate in [`PowerAllocation::power_trace`]; the total
    /// power trace is always kept.
    pub record_powers: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            record_powers: true,
        }
    }
}

impl SolverOptions {
    pub fn with_epsilon(epsilon: f64) -> Self {
        Self {
            epsilon,
            ..Self::default()
        }
    }
}

/// Output of a power-control run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub algorithm: Algorithm,
    /// Final powers in mW, cell-major.
    pub p: Vec<f64>,
    pub sinr: Vec<f64>,
    /// Whether each user's SINR meets its target (within `SATISFIED_TOLERANCE`).
    pub satisfied: Vec<bool>,
    /// `P_tot(0..=iterations)`.
    pub total_power_trace: Vec<f64>,
    /// `p(0..=iterations)`; empty unless requested.
    pub power_trace: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    /// `max_u |p_u - update(p)_u| / p_u` at the output.
    pub fixed_point_residual: f64,
}

impl PowerAllocation {
    pub fn total_power(&self) -> f64 {
        self.p.iter().sum()
    }

    pub fn all_satisfied(&self) -> bool {
        self.satisfied.iter().all(|&s| s)
    }

    pub fn satisfied_count(&self) -> usize {
        self.satisfied.iter().filter(|&&s| s).count()
    }
}

pub fn meets_target(sinr: f64, nu: f64) -> bool {
    sinr >= nu * (1.0 - SATISFIED_TOLERANCE)
}

/// Runs `algorithm` from `p(0) = P_max`.
pub fn solve(
    coefficients: &SinrCoefficients,
    targets: &QosTargets,
    p_max: &[f64],
    algorithm: Algorithm,
    options: SolverOptions,
) -> Result<PowerAllocation> {
    let interference = InterferenceFunction::new(coefficients, targets)?;
    let users = interference.users();
    if p_max.len() != users || p_max.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidConfig(
            "need one strictly positive power budget per user".into(),
        ));
    }
    if !(options.epsilon > 0.0) {
        return Err(Error::InvalidConfig("epsilon must be positive".into()));
    }

    let mut p = p_max.to_vec();
    let mut buffer = vec![0.0; users];
    let mut total_power_trace = vec![p.iter().sum::<f64>()];
    let mut power_trace = Vec::new();
    if options.record_powers {
        power_trace.push(p.clone());
    }
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations {
        interference.evaluate_into(&p, &mut buffer);
        for ((slot, &i), &cap) in p.iter_mut().zip(&buffer).zip(p_max) {
            *slot = algorithm.update(i, cap);
        }
        iterations += 1;
        let previous = *total_power_trace.last().expect("trace starts non-empty");
        let total: f64 = p.iter().sum();
        total_power_trace.push(total);
        if options.record_powers {
            power_trace.push(p.clone());
        }
        if (total - previous).abs() / previous <= options.epsilon {
            converged = true;
            break;
        }
    }

    interference.evaluate_into(&p, &mut buffer);
    let fixed_point_residual = p
        .iter()
        .zip(&buffer)
        .zip(p_max)
        .map(|((&pu, &i), &cap)| (pu - algorithm.update(i, cap)).abs() / pu)
        .fold(0.0, f64::max);
    let sinr: Vec<f64> = (0..users).map(|u| coefficients.sinr_of(u, &p)).collect();
    let satisfied = sinr
        .iter()
        .zip(&targets.nu)
        .map(|(&s, &nu)| meets_target(s, nu))
        .collect();

    Ok(PowerAllocation {
        algorithm,
        p,
        sinr,
        satisfied,
        total_power_trace,
        power_trace,
        iterations,
        converged,
        fixed_point_residual,
    })
}

pub fn algorithm1_solve(
    coefficients: &SinrCoefficients,
    targets: &QosTargets,
    p_max: &[f64],
    options: SolverOptions,
) -> Result<PowerAllocation> {
    solve(coefficients, targets, p_max, Algorithm::MaxPower, options)
}

pub fn algorithm2_solve(
    coefficients: &SinrCoefficients,
    targets: &QosTargets,
    p_max: &[f64],
    options: SolverOptions,
) -> Result<PowerAllocation> {
    solve(
        coefficients,
        targets,
        p_max,
        Algorithm::SoftRemoval,
        options,
    )
}

/// Fraction of satisfied users and of drops where everyone is satisfied.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SatisfiedProbability {
    pub per_user: f64,
    pub per_drop: f64,
    pub drops: usize,
    pub users: usize,
}

pub fn satisfied_probability(allocations: &[PowerAllocation]) -> Result<SatisfiedProbability> {
    if allocations.is_empty() {
        return Err(Error::InvalidConfig(
            "satisfied probability needs at least one solved drop".into(),
        ));
    }
    let users: usize = allocations.iter().map(|a| a.satisfied.len()).sum();
    let satisfied: usize = allocations
        .iter()
        .map(PowerAllocation::satisfied_count)
        .sum();
    let full = allocations.iter().filter(|a| a.all_satisfied()).count();
    Ok(SatisfiedProbability {
        per_user: satisfied as f64 / users as f64,
        per_drop: full as f64 / allocations.len() as f64,
        drops: allocations.len(),
        users,
    })
}
