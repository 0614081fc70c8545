//! Closed-form uplink SINR with MR combining.
//!
//! For user `u` served by base station `l` (all matrices seen at `l`,
//! `Ψ = Ψ_u`, `R = R_u`):
//!
//! ```text
//! SINR_u = p_u z_u |tr(RΨR)|² / (NI_u + CI_u + NO_u)
//!
//! NI_u = Σ_j          p_j m_j tr(RΨR R_j)
//! CI_u = Σ_{j∈P_u\u}  p_j z_j |tr(R_j Ψ R)|²
//!      + Σ_{j∈P_u}    p_j z_j κ_j |tr(R_j Ψ R)|²
//!      + Σ_{j∈P_u}    p_j z_j κ_j tr(R_j Ψ R R_j R Ψ)
//! NO_u = σ² p̂_u β_u² d_u² τ_p tr(RΨR)
//!
//! m_j = β_j d_j p̂_u β_u² d_u² τ_p
//! z_j = p̂_j β_j² d_j² p̂_u β_u² d_u² τ_p²
//! κ_j = tr(R̃_j²) / (d_j S_j)²
//! ```
//!
//! The last two coherent terms come from the fourth moment of the
//! double-scattering channel, `E{|h^H A h|²} = β²(d² + tr(R̃²)/S²)
//! (|tr(A R)|² + tr(A R A^H R))`. Both carry the same `κ_j`, which keeps the
//! expression invariant under `(β, R̃) → (β/c, c R̃)`.
//!
//! Everything except the powers `p` is cached in [`SinrCoefficients`], so the
//! SINR is an affine-over-affine function of `p` that power control can
//! evaluate cheaply.

use serde::{Deserialize, Serialize};

use crate::channel::ChannelStatistics;
use crate::error::{Error, Result};
use crate::estimation::EstimationContext;
use crate::linalg::{matmul, trace_of_product, trace_of_product_adjoint, CMatrix};
use crate::pilot::PilotPlan;

/// Signal, interference and noise parts of one user's SINR at given powers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SinrTerms {
    pub signal: f64,
    /// Non-coherent interference.
    pub ni: f64,
    /// Coherent interference from pilot sharing.
    pub ci: f64,
    /// Noise.
    pub no: f64,
}

impl SinrTerms {
    pub fn interference_plus_noise(&self) -> f64 {
        self.ni + self.ci + self.no
    }

    pub fn sinr(&self) -> f64 {
        self.signal / self.interference_plus_noise()
    }
}

/// Power-independent coefficients of one user's SINR.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UserCoefficients {
    /// `z_u |tr(RΨR)|²`; the numerator is `p_u · gain`.
    pub gain: f64,
    /// Non-coherent interference weight of each user's power.
    pub ni: Vec<f64>,
    /// Coherent interference weight of each user's power (zero outside the
    /// reuse set).
    pub ci: Vec<f64>,
    pub noise: f64,
    pub m: Vec<f64>,
    pub z: Vec<f64>,
}

impl UserCoefficients {
    /// Combined interference weight of user `j`'s power.
    pub fn weight(&self, j: usize) -> f64 {
        self.ni[j] + self.ci[j]
    }
}

/// Cached SINR coefficients for every user of a drop.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SinrCoefficients {
    pub cells: usize,
    pub users_per_cell: usize,
    pub users: Vec<UserCoefficients>,
}

pub(crate) fn check_powers(p: &[f64], users_per_cell: usize, expected: usize) -> Result<()> {
    if p.len() != expected {
        return Err(Error::Dimension(format!(
            "expected {expected} powers, got {}",
            p.len()
        )));
    }
    for (u, &value) in p.iter().enumerate() {
        if !(value >= 0.0) {
            return Err(Error::NegativePower {
                cell: u / users_per_cell,
                user: u % users_per_cell,
                value,
            });
        }
    }
    Ok(())
}

impl SinrCoefficients {
    pub fn compute(
        stats: &ChannelStatistics,
        ctx: &EstimationContext,
        plan: &PilotPlan,
    ) -> Result<Self> {
        let users = stats.total_users();
        if plan.total_users() != users || ctx.total_users() != users {
            return Err(Error::Dimension(
                "scenario parts disagree on user count".into(),
            ));
        }
        let tau_p = ctx.pilot_symbols as f64;
        let sigma2 = ctx.noise_variance;
        let p_hat = &ctx.pilot_powers;

        let coefficients = (0..users)
            .map(|u| {
                let bs = u / stats.users_per_cell;
                let own = stats.link_flat(bs, u);
                let psi = ctx.psi(bs, plan.pilot_of(u));
                let own_factor = p_hat[u] * (own.beta * own.d).powi(2);

                // U = ΨR, RΨR = R U
                let psi_r: CMatrix = matmul(psi, &own.r);
                let r_psi_r: CMatrix = matmul(&own.r, &psi_r);
                let tr_rpr = r_psi_r.diagonal().iter().map(|z| z.re).sum::<f64>();

                let mut m = vec![0.0; users];
                let mut z = vec![0.0; users];
                let mut ni = vec![0.0; users];
                let mut ci = vec![0.0; users];
                for j in 0..users {
                    let link = stats.link_flat(bs, j);
                    m[j] = link.beta * link.d * own_factor * tau_p;
                    z[j] = p_hat[j] * (link.beta * link.d).powi(2) * own_factor * tau_p * tau_p;
                    ni[j] = m[j] * trace_of_product(&r_psi_r, &link.r).re;
                }
                for j in plan.reuse_set(u) {
                    let link = stats.link_flat(bs, j);
                    let kappa =
                        link.r_tilde_square_trace() / (link.d * link.scatterers as f64).powi(2);
                    // tr(R_j Ψ R) and tr(U R_j U^H R_j) = Σ (U R_j)_ab conj((R_j U)_ab)
                    let cross = trace_of_product(&link.r, &psi_r);
                    let u_rj = matmul(&psi_r, &link.r);
                    let fourth = if j == u {
                        trace_of_product_adjoint(&u_rj, &r_psi_r).re
                    } else {
                        trace_of_product_adjoint(&u_rj, &matmul(&link.r, &psi_r)).re
                    };
                    let mean_sq = cross.norm_sqr();
                    let mut weight = z[j] * kappa * (mean_sq + fourth);
                    if j != u {
                        weight += z[j] * mean_sq;
                    }
                    ci[j] = weight;
                }

                UserCoefficients {
                    gain: z[u] * tr_rpr * tr_rpr,
                    noise: sigma2 * own_factor * tau_p * tr_rpr,
                    ni,
                    ci,
                    m,
                    z,
                }
            })
            .collect();

        Ok(Self {
            cells: stats.cells,
            users_per_cell: stats.users_per_cell,
            users: coefficients,
        })
    }

    pub fn total_users(&self) -> usize {
        self.users.len()
    }

    /// Interference plus noise of user `u` at powers `p` (no validation).
    pub fn denominator(&self, u: usize, p: &[f64]) -> f64 {
        let c = &self.users[u];
        c.noise
            + p.iter()
                .enumerate()
                .map(|(j, &pj)| pj * (c.ni[j] + c.ci[j]))
                .sum::<f64>()
    }

    /// SINR of user `u` at powers `p` (no validation).
    pub fn sinr_of(&self, u: usize, p: &[f64]) -> f64 {
        p[u] * self.users[u].gain / self.denominator(u, p)
    }

    pub fn terms(&self, p: &[f64]) -> Result<Vec<SinrTerms>> {
        check_powers(p, self.users_per_cell, self.total_users())?;
        Ok(self
            .users
            .iter()
            .enumerate()
            .map(|(u, c)| SinrTerms {
                signal: p[u] * c.gain,
                ni: p.iter().zip(&c.ni).map(|(a, b)| a * b).sum(),
                ci: p.iter().zip(&c.ci).map(|(a, b)| a * b).sum(),
                no: c.noise,
            })
            .collect())
    }

    pub fn sinr(&self, p: &[f64]) -> Result<Vec<f64>> {
        Ok(self.terms(p)?.iter().map(SinrTerms::sinr).collect())
    }
}

/// Closed-form SINR terms of every user at data powers `p`.
pub fn closed_form_sinr(
    stats: &ChannelStatistics,
    ctx: &EstimationContext,
    plan: &PilotPlan,
    p: &[f64],
) -> Result<Vec<SinrTerms>> {
    check_powers(p, stats.users_per_cell, stats.total_users())?;
    SinrCoefficients::compute(stats, ctx, plan)?.terms(p)
}
