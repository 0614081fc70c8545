//! A small power-control sweep over SE targets, written under the system
//! temporary directory.

use mimo_dscat::harness::{run_power_sweep, ExperimentSpec};
use mimo_dscat::NetworkConfig;

fn main() -> mimo_dscat::Result<()> {
    let mut spec = ExperimentSpec::new(NetworkConfig::default().with_antennas(50));
    spec.drops = 20;
    spec.master_seed = 1;
    spec.xi = vec![0.5, 1.0, 1.5];
    let sweep = run_power_sweep(&spec)?;
    for s in &sweep.summaries {
        let satisfied = s.satisfied.map_or(f64::NAN, |p| p.per_user);
        println!(
            "xi={:<4} algorithm {}  feasible drops {:>2}/{}  satisfied users {:.3}",
            s.xi,
            s.algorithm.number(),
            s.feasible_drops,
            s.drops,
            satisfied
        );
    }
    let out = std::env::temp_dir().join("mimo-dscat-sweep-example");
    sweep.write(&out)?;
    println!("outputs in {}", out.display());
    println!("{}", sweep.note);
    Ok(())
}
