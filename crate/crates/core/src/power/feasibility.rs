//! Feasibility and optimality checks for a power allocation.
//!
//! With `D = diag(ν_u / gain_u)` and `W_uj` the interference weight of user
//! `j`'s power on user `u`, the constraints read `(I - D W) p ≥ D n`. The
//! minimal feasible point solves `(I - D W) p = D n` and exists exactly when
//! that solution is strictly positive; every feasible vector dominates it.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{meets_target, Algorithm, QosTargets, SATISFIED_TOLERANCE};
use crate::error::{Error, Result};
use crate::se::closed_form::{check_powers, SinrCoefficients};

/// Largest network the brute-force search accepts.
pub const BRUTE_FORCE_MAX_USERS: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub sinr: Vec<f64>,
    pub targets: Vec<f64>,
    pub constraint_met: Vec<bool>,
    pub within_budget: bool,
    /// All constraints met and within budget.
    pub feasible: bool,
    /// `|p_u - I_u(p)| ≤ tolerance · p_u`.
    pub tight: Vec<bool>,
    pub max_relative_gap: f64,
    /// Feasible and `p = I(p)` everywhere.
    pub optimal: bool,
    /// Solution of `(I - D W) p = D n`, if strictly positive.
    pub minimal_solution: Option<Vec<f64>>,
    /// The minimal solution exists and fits the budget.
    pub problem_feasible: bool,
    pub tolerance: f64,
}

/// Minimal power vector meeting every target, ignoring the budget.
pub fn minimal_power_solution(
    coefficients: &SinrCoefficients,
    targets: &QosTargets,
) -> Result<Option<Vec<f64>>> {
    let n = coefficients.total_users();
    if targets.len() != n {
        return Err(Error::Dimension(format!(
            "{} targets for {n} users",
            targets.len()
        )));
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for (u, c) in coefficients.users.iter().enumerate() {
        let scale = targets.nu[u] / c.gain;
        for j in 0..n {
            a[(u, j)] -= scale * c.weight(j);
        }
        b[u] = scale * c.noise;
    }
    let solution = match a.lu().solve(&b) {
        Some(x) => x,
        None => return Ok(None),
    };
    if solution.iter().all(|&x| x > 0.0 && x.is_finite()) {
        Ok(Some(solution.iter().copied().collect()))
    } else {
        Ok(None)
    }
}

/// Checks constraints, budget and fixed-point tightness of `p`.
pub fn check_feasibility_and_optimality(
    coefficients: &SinrCoefficients,
    targets: &QosTargets,
    p: &[f64],
    p_max: &[f64],
    tolerance: f64,
) -> Result<OptimalityReport> {
    let n = coefficients.total_users();
    check_powers(p, coefficients.users_per_cell, n)?;
    if p_max.len() != n {
        return Err(Error::Dimension(format!(
            "{} budgets for {n} users",
            p_max.len()
        )));
    }
    let interference = super::InterferenceFunction::new(coefficients, targets)?;
    let mut i_p = vec![0.0; n];
    interference.evaluate_into(p, &mut i_p);

    let sinr: Vec<f64> = (0..n).map(|u| coefficients.sinr_of(u, p)).collect();
    let constraint_met: Vec<bool> = sinr
        .iter()
        .zip(&targets.nu)
        .map(|(&s, &nu)| meets_target(s, nu))
        .collect();
    let within_budget = p
        .iter()
        .zip(p_max)
        .all(|(&pu, &cap)| pu <= cap * (1.0 + SATISFIED_TOLERANCE));
    let feasible = within_budget && constraint_met.iter().all(|&c| c);
    let gaps: Vec<f64> = p
        .iter()
        .zip(&i_p)
        .map(|(&pu, &iu)| (pu - iu).abs() / pu.max(f64::MIN_POSITIVE))
        .collect();
    let tight: Vec<bool> = gaps.iter().map(|&g| g <= tolerance).collect();
    let max_relative_gap = gaps.iter().copied().fold(0.0, f64::max);
    let optimal = feasible && tight.iter().all(|&t| t);

    let minimal_solution = minimal_power_solution(coefficients, targets)?;
    let problem_feasible = minimal_solution.as_ref().is_some_and(|x| {
        x.iter()
            .zip(p_max)
            .all(|(&xu, &cap)| xu <= cap * (1.0 + SATISFIED_TOLERANCE))
    });

    Ok(OptimalityReport {
        sinr,
        targets: targets.nu.clone(),
        constraint_met,
        within_budget,
        feasible,
        tight,
        max_relative_gap,
        optimal,
        minimal_solution,
        problem_feasible,
        tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BruteForceResult {
    pub powers: Vec<f64>,
    pub total: f64,
    /// Grid spacing of the last refinement level, per user.
    pub resolution: Vec<f64>,
    pub evaluations: usize,
}

fn grid_feasible(coefficients: &SinrCoefficients, nu: &[f64], p: &[f64]) -> bool {
    (0..p.len())
        .all(|u| p[u] * coefficients.users[u].gain >= nu[u] * coefficients.denominator(u, p))
}

/// Smallest-total feasible point on a grid over `[0, P_max]`, refined around
/// the incumbent `levels` times. Feasible points dominate the optimum, so each
/// refinement searches below the incumbent.
pub fn brute_force_minimum(
    coefficients: &SinrCoefficients,
    targets: &QosTargets,
    p_max: &[f64],
    points_per_axis: usize,
    levels: usize,
) -> Result<Option<BruteForceResult>> {
    let n = coefficients.total_users();
    if n > BRUTE_FORCE_MAX_USERS {
        return Err(Error::InvalidConfig(format!(
            "brute force is limited to {BRUTE_FORCE_MAX_USERS} users, got {n}"
        )));
    }
    if targets.len() != n || p_max.len() != n {
        return Err(Error::Dimension(
            "targets and budgets must match the user count".into(),
        ));
    }
    if points_per_axis < 2 {
        return Err(Error::InvalidConfig(
            "need at least two grid points per axis".into(),
        ));
    }

    let mut lo = vec![0.0; n];
    let mut hi = p_max.to_vec();
    let mut best: Option<Vec<f64>> = None;
    let mut resolution = vec![0.0; n];
    let mut evaluations = 0;
    let mut index = vec![0usize; n];
    let mut point = vec![0.0; n];

    for _ in 0..=levels {
        let step: Vec<f64> = lo
            .iter()
            .zip(&hi)
            .map(|(l, h)| (h - l) / (points_per_axis - 1) as f64)
            .collect();
        index.iter_mut().for_each(|i| *i = 0);
        let mut level_best: Option<(f64, Vec<f64>)> = None;
        loop {
            for u in 0..n {
                point[u] = lo[u] + step[u] * index[u] as f64;
            }
            evaluations += 1;
            let total: f64 = point.iter().sum();
            let better = level_best.as_ref().is_none_or(|(t, _)| total < *t);
            if better && grid_feasible(coefficients, &targets.nu, &point) {
                level_best = Some((total, point.clone()));
            }
            // odometer increment
            let mut axis = 0;
            while axis < n {
                index[axis] += 1;
                if index[axis] < points_per_axis {
                    break;
                }
                index[axis] = 0;
                axis += 1;
            }
            if axis == n {
                break;
            }
        }
        let Some((_, incumbent)) = level_best else {
            break;
        };
        resolution = step.clone();
        for u in 0..n {
            hi[u] = incumbent[u];
            lo[u] = (incumbent[u] - 3.0 * step[u]).max(0.0);
        }
        best = Some(incumbent);
    }

    Ok(best.map(|powers| BruteForceResult {
        total: powers.iter().sum(),
        powers,
        resolution,
        evaluations,
    }))
}

/// Whether `algorithm`'s update leaves `p` unchanged within `tolerance`.
pub fn is_fixed_point(
    coefficients: &SinrCoefficients,
    targets: &QosTargets,
    p: &[f64],
    p_max: &[f64],
    algorithm: Algorithm,
    tolerance: f64,
) -> Result<bool> {
    let interference = super::InterferenceFunction::new(coefficients, targets)?;
    let i_p = interference.evaluate(p)?;
    Ok(p.iter()
        .zip(&i_p)
        .zip(p_max)
        .all(|((&pu, &iu), &cap)| (pu - algorithm.update(iu, cap)).abs() <= tolerance * pu))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::power::{solve, SolverOptions};
    use crate::se::closed_form::UserCoefficients;

    /// Two users with symmetric coupling `c` and unit gains.
    pub(crate) fn toy(c: f64, noise: f64) -> SinrCoefficients {
        let user = |u: usize| {
            let mut ni = vec![0.0; 2];
            ni[1 - u] = c;
            UserCoefficients {
                gain: 1.0,
                ni,
                ci: vec![0.0; 2],
                noise,
                m: vec![0.0; 2],
                z: vec![0.0; 2],
            }
        };
        SinrCoefficients {
            cells: 2,
            users_per_cell: 1,
            users: vec![user(0), user(1)],
        }
    }

    #[test]
    fn minimal_solution_matches_hand_calculation() {
        // p = nu (c p + n)  =>  p = nu n / (1 - nu c)
        let coeffs = toy(0.1, 1.0);
        let targets = QosTargets::from_sinr(vec![2.0, 2.0], 200, 5);
        let p = minimal_power_solution(&coeffs, &targets).unwrap().unwrap();
        assert!((p[0] - 2.5).abs() < 1e-12 && (p[1] - 2.5).abs() < 1e-12);
        // nu c >= 1 has no positive solution
        let hard = QosTargets::from_sinr(vec![20.0, 20.0], 200, 5);
        assert!(minimal_power_solution(&coeffs, &hard).unwrap().is_none());
    }

    #[test]
    fn solver_reaches_checked_optimum() {
        let coeffs = toy(0.1, 1.0);
        let targets = QosTargets::from_sinr(vec![2.0, 2.0], 200, 5);
        let p_max = [10.0, 10.0];
        let alloc = solve(
            &coeffs,
            &targets,
            &p_max,
            Algorithm::MaxPower,
            SolverOptions::with_epsilon(1e-13),
        )
        .unwrap();
        let report =
            check_feasibility_and_optimality(&coeffs, &targets, &alloc.p, &p_max, 1e-6).unwrap();
        assert!(report.feasible && report.optimal && report.problem_feasible);
        assert!((alloc.p[0] - 2.5).abs() < 1e-9);
        assert!(is_fixed_point(
            &coeffs,
            &targets,
            &alloc.p,
            &p_max,
            Algorithm::MaxPower,
            1e-9
        )
        .unwrap());
    }

    #[test]
    fn brute_force_brackets_optimum() {
        let coeffs = toy(0.3, 0.5);
        let targets = QosTargets::from_sinr(vec![1.0, 1.5], 200, 5);
        let p_max = [5.0, 5.0];
        let exact = minimal_power_solution(&coeffs, &targets).unwrap().unwrap();
        let grid = brute_force_minimum(&coeffs, &targets, &p_max, 41, 8)
            .unwrap()
            .unwrap();
        for u in 0..2 {
            assert!(grid.powers[u] >= exact[u] - 1e-12);
            assert!(grid.powers[u] - exact[u] <= 2.0 * grid.resolution[u] + 1e-9);
        }
        assert!(grid.resolution[0] < 1e-4);
    }

    #[test]
    fn infeasible_budget_is_reported() {
        let coeffs = toy(0.1, 1.0);
        let targets = QosTargets::from_sinr(vec![2.0, 2.0], 200, 5);
        let report =
            check_feasibility_and_optimality(&coeffs, &targets, &[1.0, 1.0], &[1.0, 1.0], 1e-6)
                .unwrap();
        assert!(!report.feasible && !report.problem_feasible);
        assert!(brute_force_minimum(&coeffs, &targets, &[1.0, 1.0], 11, 2)
            .unwrap()
            .is_none());
    }
}
