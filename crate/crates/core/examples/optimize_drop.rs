//! Power control on one drop with both algorithms, plus the optimality check.

use mimo_dscat::power::{
    check_feasibility_and_optimality, Algorithm, SinrTransform, SolverOptions,
};
use mimo_dscat::{NetworkConfig, Scenario};

fn main() -> mimo_dscat::Result<()> {
    let config = NetworkConfig::default();
    let scenario = Scenario::new(&config, 5)?;
    let p_max = config.max_powers();

    for xi in [0.5, 1.5] {
        let targets = scenario.targets(xi, SinrTransform::CoherenceRatio)?;
        println!("xi = {xi} b/s/Hz (SINR target {:.3})", targets.nu[0]);
        for algorithm in [Algorithm::MaxPower, Algorithm::SoftRemoval] {
            let alloc = scenario.optimize(&targets, algorithm, SolverOptions::default())?;
            let report = check_feasibility_and_optimality(
                &scenario.coefficients,
                &targets,
                &alloc.p,
                &p_max,
                1e-3,
            )?;
            println!(
                "  algorithm {}: {} iterations, total {:.2} mW, {}/{} satisfied, problem feasible: {}",
                algorithm.number(),
                alloc.iterations,
                alloc.total_power(),
                alloc.satisfied_count(),
                alloc.p.len(),
                report.problem_feasible
            );
        }
    }
    Ok(())
}
