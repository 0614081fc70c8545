//! Processed pilot observations and LMMSE channel estimation under pilot
//! contamination.
//!
//! Base station `l` correlates its received pilot block with pilot `t` and
//! obtains
//!
//! ```text
//! y = Σ_{j ∈ P_t} sqrt(p̂_j) τ_p h_j + n,      n ~ CN(0, σ² τ_p I_M)
//! ```
//!
//! The LMMSE estimate of `h_u` (with `u ∈ P_t`) is
//! `ĥ_u = sqrt(p̂_u) β_u d_u R_u Ψ y` where
//! `Ψ = (Σ_{j ∈ P_t} a_j R_j + σ² I)^{-1}` and `a_j = τ_p p̂_j β_j d_j`.
//! Since `E{y y^H} = τ_p Ψ^{-1}`, `Ψ` only depends on the base station and
//! the pilot, so it is factored once per such pair.

use rand::Rng;
use serde::Serialize;

use crate::channel::{complex_normal, ChannelStatistics};
use crate::config::NetworkConfig;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, HpdFactor, C64};
use crate::pilot::PilotPlan;

#[derive(Clone, Debug)]
pub struct EstimationContext {
    pub cells: usize,
    pub users_per_cell: usize,
    pub pilots: usize,
    pub antennas: usize,
    pub pilot_symbols: usize,
    pub noise_variance: f64,
    pub pilot_powers: Vec<f64>,
    /// `a[bs][u] = τ_p p̂_u β_u d_u`, flattened `bs * LK + u`.
    a: Vec<f64>,
    /// Cholesky factor of `Ψ^{-1}`, `[bs][pilot]`.
    psi_inv_factor: Vec<HpdFactor>,
    /// Explicit `Ψ`, `[bs][pilot]`.
    psi: Vec<CMatrix>,
}

impl EstimationContext {
    pub fn new(
        stats: &ChannelStatistics,
        plan: &PilotPlan,
        config: &NetworkConfig,
    ) -> Result<Self> {
        Self::with_pilot_powers(
            stats,
            plan,
            config.pilot_symbols,
            config.noise_variance(),
            config.pilot_powers(),
        )
    }

    pub fn with_pilot_powers(
        stats: &ChannelStatistics,
        plan: &PilotPlan,
        pilot_symbols: usize,
        noise_variance: f64,
        pilot_powers: Vec<f64>,
    ) -> Result<Self> {
        let users = stats.total_users();
        if plan.total_users() != users || pilot_powers.len() != users {
            return Err(Error::Dimension(
                "pilot plan, pilot powers and statistics disagree on user count".into(),
            ));
        }
        if !(noise_variance > 0.0) {
            return Err(Error::InvalidConfig(
                "noise variance must be positive".into(),
            ));
        }
        let m = stats.antennas;
        let tau_p = pilot_symbols as f64;

        let mut a = Vec::with_capacity(stats.cells * users);
        for bs in 0..stats.cells {
            for u in 0..users {
                let link = stats.link_flat(bs, u);
                a.push(tau_p * pilot_powers[u] * link.beta * link.d);
            }
        }

        let groups = plan.groups();
        let mut psi_inv_factor = Vec::with_capacity(stats.cells * plan.pilots);
        let mut psi = Vec::with_capacity(stats.cells * plan.pilots);
        for bs in 0..stats.cells {
            for (t, group) in groups.iter().enumerate() {
                let mut cov = CMatrix::identity(m, m) * C64::new(noise_variance, 0.0);
                for &j in group {
                    cov += &stats.link_flat(bs, j).r * C64::new(a[bs * users + j], 0.0);
                }
                let factor =
                    HpdFactor::new(&cov, &format!("pilot covariance at BS {bs}, pilot {t}"))?;
                psi.push(factor.inverse());
                psi_inv_factor.push(factor);
            }
        }

        Ok(Self {
            cells: stats.cells,
            users_per_cell: stats.users_per_cell,
            pilots: plan.pilots,
            antennas: m,
            pilot_symbols,
            noise_variance,
            pilot_powers,
            a,
            psi_inv_factor,
            psi,
        })
    }

    pub fn total_users(&self) -> usize {
        self.cells * self.users_per_cell
    }

    pub fn a(&self, bs: usize, u: usize) -> f64 {
        self.a[bs * self.total_users() + u]
    }

    /// `Ψ` at base station `bs` for pilot `pilot`.
    pub fn psi(&self, bs: usize, pilot: usize) -> &CMatrix {
        &self.psi[bs * self.pilots + pilot]
    }

    pub fn psi_inverse_factor(&self, bs: usize, pilot: usize) -> &HpdFactor {
        &self.psi_inv_factor[bs * self.pilots + pilot]
    }

    /// Scalar `sqrt(p̂_u) β_u d_u` in front of `R_u Ψ y`.
    pub fn estimator_gain(&self, stats: &ChannelStatistics, bs: usize, u: usize) -> f64 {
        let link = stats.link_flat(bs, u);
        self.pilot_powers[u].sqrt() * link.beta * link.d
    }

    /// LMMSE estimate of the channel from user `u` to `bs`, given the
    /// processed observation `y` of the user's pilot at `bs`.
    pub fn estimate(
        &self,
        stats: &ChannelStatistics,
        plan: &PilotPlan,
        bs: usize,
        u: usize,
        y: &CVector,
    ) -> CVector {
        let psi_y = self.psi_inverse_factor(bs, plan.pilot_of(u)).solve(y);
        let gain = C64::new(self.estimator_gain(stats, bs, u), 0.0);
        (&stats.link_flat(bs, u).r * psi_y) * gain
    }

    /// Same as [`EstimationContext::estimate`], writing into `out` and reusing `scratch`.
    pub fn estimate_into(
        &self,
        stats: &ChannelStatistics,
        plan: &PilotPlan,
        bs: usize,
        u: usize,
        y: &CVector,
        scratch: &mut CVector,
        out: &mut CVector,
    ) {
        scratch.copy_from(y);
        self.psi_inverse_factor(bs, plan.pilot_of(u))
            .solve_mut(scratch);
        let gain = C64::new(self.estimator_gain(stats, bs, u), 0.0);
        out.gemv(gain, &stats.link_flat(bs, u).r, scratch, C64::new(0.0, 0.0));
    }

    /// `E{ĥ ĥ^H} = p̂ β² d² τ_p R Ψ R`.
    pub fn estimate_covariance(
        &self,
        stats: &ChannelStatistics,
        plan: &PilotPlan,
        bs: usize,
        u: usize,
    ) -> CMatrix {
        let link = stats.link_flat(bs, u);
        let psi = self.psi(bs, plan.pilot_of(u));
        let scale = self.pilot_powers[u] * (link.beta * link.d).powi(2) * self.pilot_symbols as f64;
        (&link.r * psi * &link.r) * C64::new(scale, 0.0)
    }

    /// Serializable view for debugging: coefficients and every `Ψ`.
    pub fn debug_dump(&self) -> EstimationDump {
        let to_pairs = |m: &CMatrix| -> Vec<Vec<[f64; 2]>> {
            (0..m.nrows())
                .map(|i| {
                    (0..m.ncols())
                        .map(|j| [m[(i, j)].re, m[(i, j)].im])
                        .collect()
                })
                .collect()
        };
        EstimationDump {
            cells: self.cells,
            users_per_cell: self.users_per_cell,
            pilots: self.pilots,
            antennas: self.antennas,
            pilot_symbols: self.pilot_symbols,
            noise_variance: self.noise_variance,
            a: self
                .a
                .chunks(self.total_users())
                .map(<[f64]>::to_vec)
                .collect(),
            psi: self
                .psi
                .chunks(self.pilots)
                .map(|row| row.iter().map(to_pairs).collect())
                .collect(),
        }
    }
}

/// JSON-friendly snapshot of an [`EstimationContext`]; complex numbers are
/// `[re, im]` pairs.
#[derive(Clone, Debug, Serialize)]
pub struct EstimationDump {
    pub cells: usize,
    pub users_per_cell: usize,
    pub pilots: usize,
    pub antennas: usize,
    pub pilot_symbols: usize,
    pub noise_variance: f64,
    /// `[bs][user]`.
    pub a: Vec<Vec<f64>>,
    /// `[bs][pilot][row][col]`.
    pub psi: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

/// Draws the despread pilot noise `N φ ~ CN(0, σ² τ_p I_M)` for every
/// (base station, pilot) pair, `[bs][pilot]`.
pub fn draw_pilot_noise<R: Rng + ?Sized>(ctx: &EstimationContext, rng: &mut R) -> Vec<CVector> {
    let std = (ctx.noise_variance * ctx.pilot_symbols as f64).sqrt();
    (0..ctx.cells * ctx.pilots)
        .map(|_| CVector::from_fn(ctx.antennas, |_, _| complex_normal(rng) * std))
        .collect()
}

/// Processed pilot observations `[bs][pilot]` from channel vectors ordered
/// `[bs][user]` and despread noise `[bs][pilot]`.
pub fn processed_pilot_signal(
    channels: &[CVector],
    plan: &PilotPlan,
    ctx: &EstimationContext,
    noise: &[CVector],
) -> Vec<CVector> {
    let mut y = noise.to_vec();
    accumulate_pilot_signal(channels, plan, ctx, &mut y);
    y
}

/// Adds the pilot contributions of `channels` onto `y`, which must hold the
/// noise on entry.
pub fn accumulate_pilot_signal(
    channels: &[CVector],
    plan: &PilotPlan,
    ctx: &EstimationContext,
    y: &mut [CVector],
) {
    let users = ctx.total_users();
    let tau_p = ctx.pilot_symbols as f64;
    for bs in 0..ctx.cells {
        for u in 0..users {
            let weight = C64::new(ctx.pilot_powers[u].sqrt() * tau_p, 0.0);
            y[bs * ctx.pilots + plan.pilot_of(u)].axpy(
                weight,
                &channels[bs * users + u],
                C64::new(1.0, 0.0),
            );
        }
    }
}

/// LMMSE estimates `[bs][user]` from processed observations `[bs][pilot]`.
pub fn lmmse_estimate(
    y: &[CVector],
    plan: &PilotPlan,
    stats: &ChannelStatistics,
    ctx: &EstimationContext,
) -> Vec<CVector> {
    let users = ctx.total_users();
    (0..ctx.cells)
        .flat_map(|bs| (0..users).map(move |u| (bs, u)))
        .map(|(bs, u)| ctx.estimate(stats, plan, bs, u, &y[bs * ctx.pilots + plan.pilot_of(u)]))
        .collect()
}
