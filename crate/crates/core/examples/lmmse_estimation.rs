//! LMMSE channel estimation under pilot contamination: estimate quality of
//! every user in cell 0 at its own base station.

use mimo_dscat::linalg::trace;
use mimo_dscat::{NetworkConfig, Scenario};

fn main() -> mimo_dscat::Result<()> {
    let config = NetworkConfig::default().with_antennas(64);
    let scenario = Scenario::new(&config, 3)?;

    println!("user  pilot  sharers  normalized MSE");
    for user in 0..config.users_per_cell {
        let u = scenario.stats.user_index(0, user);
        let link = scenario.stats.link_flat(0, u);
        let est = scenario
            .estimation
            .estimate_covariance(&scenario.stats, &scenario.plan, 0, u);
        let power = trace(&link.covariance()).re;
        let nmse = (power - trace(&est).re) / power;
        println!(
            "{:>4}  {:>5}  {:>7}  {:.4}",
            user,
            scenario.plan.pilot_of(u),
            scenario.plan.reuse_set(u).len() - 1,
            nmse
        );
    }
    Ok(())
}
