//! Full-power SE of one drop by closed form and by Monte-Carlo.

use mimo_dscat::se::se_from_sinr;
use mimo_dscat::{NetworkConfig, Scenario};

fn main() -> mimo_dscat::Result<()> {
    let config = NetworkConfig::default().with_antennas(50);
    let scenario = Scenario::new(&config, 11)?;
    let closed = scenario.full_power_sinr()?;
    let trials = 2_000;
    let mc = scenario
        .monte_carlo(trials)?
        .sinr(&config.max_powers(), &scenario.plan)?;

    let prelog = config.prelog();
    println!("cell user  SE closed  SE Monte-Carlo  rel. SINR error");
    for (u, (c, m)) in closed.iter().zip(&mc).enumerate() {
        println!(
            "{:>4} {:>4}  {:>9.3}  {:>14.3}  {:>8.2}%",
            u / config.users_per_cell,
            u % config.users_per_cell,
            se_from_sinr(*c, prelog),
            se_from_sinr(*m, prelog),
            100.0 * (c - m).abs() / m
        );
    }
    println!("Monte-Carlo used {trials} trials");
    Ok(())
}
