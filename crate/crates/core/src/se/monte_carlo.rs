//! Monte-Carlo evaluation of the use-and-then-forget SINR with MR combining.
//!
//! With `v_u = ĥ_u` at the serving base station, the bound needs
//! `E{v_u^H h_u}`, `E{|v_u^H h_j|²}` for every user `j` and `E{||v_u||²}`.
//! Each trial redraws every channel and the pilot noise, re-estimates, and
//! accumulates those inner products. The SINR is then assembled from the
//! averaged moments:
//!
//! ```text
//! SINR_u = p_u |E{v^H h_u}|² / (Σ_j p_j E{|v^H h_j|²} - p_u |E{v^H h_u}|² + σ² E{||v||²})
//! ```
//!
//! Trials are processed in fixed-size chunks with per-chunk seeds and reduced
//! in chunk order, so results do not depend on the thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::closed_form::{check_powers, SinrTerms};
use crate::channel::{ChannelStatistics, NetworkSampler};
use crate::error::{Error, Result};
use crate::estimation::{accumulate_pilot_signal, draw_pilot_noise, EstimationContext};
use crate::linalg::{CVector, C64};
use crate::pilot::PilotPlan;
use crate::rng::{derive_seed, rng_from_seed, Stream};

pub const TRIALS_PER_CHUNK: usize = 250;

/// Sample moments for one user's MR combiner.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UserMoments {
    /// `E{v^H h_u}`; stored as `[re, im]`.
    pub signal_mean: [f64; 2],
    /// `E{|v^H h_j|²}` for every user `j`.
    pub second_moments: Vec<f64>,
    /// `E{||v||²}`.
    pub combiner_power: f64,
}

impl UserMoments {
    pub fn signal_mean(&self) -> C64 {
        C64::new(self.signal_mean[0], self.signal_mean[1])
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonteCarloMoments {
    pub trials: usize,
    pub users_per_cell: usize,
    pub noise_variance: f64,
    pub users: Vec<UserMoments>,
}

impl MonteCarloMoments {
    /// SINR terms at powers `p`. Interferers outside the reuse set are
    /// reported as `ni`, pilot-sharing users (minus the desired signal) as `ci`.
    pub fn terms(&self, p: &[f64], plan: &PilotPlan) -> Result<Vec<SinrTerms>> {
        check_powers(p, self.users_per_cell, self.users.len())?;
        Ok(self
            .users
            .iter()
            .enumerate()
            .map(|(u, mom)| {
                let desired = mom.signal_mean().norm_sqr();
                let (mut ni, mut ci) = (0.0, 0.0);
                for (j, &second) in mom.second_moments.iter().enumerate() {
                    if plan.shares_pilot(u, j) {
                        ci += p[j] * second;
                    } else {
                        ni += p[j] * second;
                    }
                }
                SinrTerms {
                    signal: p[u] * desired,
                    ni,
                    ci: ci - p[u] * desired,
                    no: self.noise_variance * mom.combiner_power,
                }
            })
            .collect())
    }

    pub fn sinr(&self, p: &[f64], plan: &PilotPlan) -> Result<Vec<f64>> {
        Ok(self.terms(p, plan)?.iter().map(SinrTerms::sinr).collect())
    }
}

#[derive(Clone)]
struct Accumulator {
    signal: Vec<C64>,
    second: Vec<f64>,
    combiner: Vec<f64>,
    trials: usize,
}

impl Accumulator {
    fn new(users: usize) -> Self {
        Self {
            signal: vec![C64::new(0.0, 0.0); users],
            second: vec![0.0; users * users],
            combiner: vec![0.0; users],
            trials: 0,
        }
    }

    fn merge(mut self, other: &Accumulator) -> Self {
        self.signal
            .iter_mut()
            .zip(&other.signal)
            .for_each(|(a, b)| *a += b);
        self.second
            .iter_mut()
            .zip(&other.second)
            .for_each(|(a, b)| *a += b);
        self.combiner
            .iter_mut()
            .zip(&other.combiner)
            .for_each(|(a, b)| *a += b);
        self.trials += other.trials;
        self
    }
}

fn run_chunk(
    stats: &ChannelStatistics,
    ctx: &EstimationContext,
    plan: &PilotPlan,
    sampler: &NetworkSampler,
    trials: usize,
    seed: u64,
) -> Accumulator {
    let users = stats.total_users();
    let m = stats.antennas;
    let mut rng = rng_from_seed(seed);
    let mut acc = Accumulator::new(users);
    let mut channels = vec![CVector::zeros(m); stats.cells * users];
    let mut scratch = CVector::zeros(m);
    let mut v = CVector::zeros(m);

    for _ in 0..trials {
        sampler.sample_vectors_into(&mut rng, &mut scratch, &mut channels);
        let mut y = draw_pilot_noise(ctx, &mut rng);
        accumulate_pilot_signal(&channels, plan, ctx, &mut y);

        for u in 0..users {
            let bs = u / stats.users_per_cell;
            let obs = &y[bs * ctx.pilots + plan.pilot_of(u)];
            ctx.estimate_into(stats, plan, bs, u, obs, &mut scratch, &mut v);
            acc.combiner[u] += v.norm_squared();
            for j in 0..users {
                let inner = v.dotc(&channels[bs * users + j]);
                acc.second[u * users + j] += inner.norm_sqr();
                if j == u {
                    acc.signal[u] += inner;
                }
            }
        }
    }
    acc.trials = trials;
    acc
}

/// Estimates the MR combiner moments of every user from `trials`
/// independent channel and pilot-noise draws.
pub fn monte_carlo_moments(
    stats: &ChannelStatistics,
    ctx: &EstimationContext,
    plan: &PilotPlan,
    trials: usize,
    seed: u64,
) -> Result<MonteCarloMoments> {
    if trials == 0 {
        return Err(Error::InvalidConfig(
            "Monte-Carlo needs at least one trial".into(),
        ));
    }
    let users = stats.total_users();
    let sampler = NetworkSampler::new(stats)?;
    let chunks = trials.div_ceil(TRIALS_PER_CHUNK);
    let partials: Vec<Accumulator> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let n = TRIALS_PER_CHUNK.min(trials - c * TRIALS_PER_CHUNK);
            let seed = derive_seed(seed, Stream::MonteCarlo, c as u64);
            run_chunk(stats, ctx, plan, &sampler, n, seed)
        })
        .collect();
    let total = partials
        .iter()
        .fold(Accumulator::new(users), |acc, part| acc.merge(part));

    let n = total.trials as f64;
    let moments = (0..users)
        .map(|u| {
            let mean = total.signal[u] / n;
            UserMoments {
                signal_mean: [mean.re, mean.im],
                second_moments: total.second[u * users..(u + 1) * users]
                    .iter()
                    .map(|s| s / n)
                    .collect(),
                combiner_power: total.combiner[u] / n,
            }
        })
        .collect();
    Ok(MonteCarloMoments {
        trials: total.trials,
        users_per_cell: stats.users_per_cell,
        noise_variance: ctx.noise_variance,
        users: moments,
    })
}

/// Monte-Carlo SINR terms at data powers `p`, with pilot powers `p_hat`.
pub fn monte_carlo_sinr(
    stats: &ChannelStatistics,
    plan: &PilotPlan,
    pilot_symbols: usize,
    noise_variance: f64,
    p: &[f64],
    p_hat: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Vec<SinrTerms>> {
    let ctx = EstimationContext::with_pilot_powers(
        stats,
        plan,
        pilot_symbols,
        noise_variance,
        p_hat.to_vec(),
    )?;
    monte_carlo_moments(stats, &ctx, plan, trials, seed)?.terms(p, plan)
}
