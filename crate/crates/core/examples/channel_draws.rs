//! Drops a network, builds link statistics and checks a few channel draws
//! against the covariance `β d R`.

use mimo_dscat::channel::{build_channel_statistics, LinkSampler};
use mimo_dscat::geometry::drop_network;
use mimo_dscat::linalg::{CMatrix, C64};
use mimo_dscat::rng::rng_from_seed;
use mimo_dscat::NetworkConfig;

fn main() -> mimo_dscat::Result<()> {
    let config = NetworkConfig::default().with_antennas(16);
    let geometry = drop_network(&config, 42);
    let stats = build_channel_statistics(&geometry, &config)?;

    println!("cell  user  distance[m]  beta[dB]  d");
    for user in 0..config.users_per_cell {
        let link = stats.link(0, 0, user);
        println!(
            "{:>4}  {:>4}  {:>11.1}  {:>8.1}  {:.3}",
            0,
            user,
            link.distance_m,
            10.0 * link.beta.log10(),
            link.d
        );
    }

    let link = stats.link(0, 0, 0);
    let sampler = LinkSampler::new(link)?;
    let mut rng = rng_from_seed(7);
    let draws = 20_000;
    let mut cov = CMatrix::zeros(config.antennas, config.antennas);
    for _ in 0..draws {
        let h = sampler.sample(&mut rng).h;
        cov += &h * h.adjoint();
    }
    cov /= C64::new(draws as f64, 0.0);
    let target = link.covariance();
    let err = (cov - &target).norm() / target.norm();
    println!("relative covariance error after {draws} draws: {err:.4}");
    Ok(())
}
