//! Double-scattering channel model.
//!
//! The channel from user `k` of cell `l` to base station `l'` is
//!
//! ```text
//! h = sqrt(β / S) · R^{1/2} · G · R̃^{1/2} · g
//! ```
//!
//! with `G ∈ C^{M×S}` and `g ∈ C^S` i.i.d. `CN(0, 1)`. Its covariance is
//! `β·d·R` with `d = tr(R̃)/S`, but `h` is not Gaussian for finite `S`.

pub mod correlation;
pub mod sampling;

use serde::{Deserialize, Serialize};

use crate::config::{db_to_linear, BsCorrelation, NetworkConfig, PathlossParams};
use crate::error::{Error, Result};
use crate::geometry::Geometry;
use crate::linalg::{ensure_psd, trace, CMatrix};

pub use sampling::{
    complex_normal, sample_channel, ChannelRealization, LinkRealization, LinkSampler,
    NetworkSampler,
};

/// Large-scale fading in dB: pathloss plus shadowing.
pub fn large_scale_fading_db(
    distance_m: f64,
    shadow_db: f64,
    params: &PathlossParams,
) -> Result<f64> {
    if !(distance_m >= params.min_distance_m) {
        return Err(Error::InvalidGeometry {
            distance_m,
            min_distance_m: params.min_distance_m,
        });
    }
    Ok(params.intercept_db
        - params.slope_db_per_decade * (distance_m / params.reference_distance_m).log10()
        + shadow_db)
}

/// Linear large-scale fading coefficient `β`.
pub fn large_scale_fading(distance_m: f64, shadow_db: f64, params: &PathlossParams) -> Result<f64> {
    large_scale_fading_db(distance_m, shadow_db, params).map(db_to_linear)
}

/// Second-order statistics of one (user, base station) link.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinkStatistics {
    pub beta: f64,
    pub scatterers: usize,
    #[serde(skip)]
    pub r: CMatrix,
    #[serde(skip)]
    pub r_tilde: CMatrix,
    /// `tr(R̃) / S`.
    pub d: f64,
    pub distance_m: f64,
    pub angle_rad: f64,
}

impl LinkStatistics {
    /// Validates `β > 0` and that both correlation matrices are Hermitian PSD.
    pub fn new(
        beta: f64,
        r: CMatrix,
        r_tilde: CMatrix,
        distance_m: f64,
        angle_rad: f64,
    ) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "large-scale fading must be positive, got {beta}"
            )));
        }
        ensure_psd(&r, "BS correlation R")?;
        ensure_psd(&r_tilde, "scatterer correlation R~")?;
        Self::from_validated(beta, r, r_tilde, distance_m, angle_rad)
    }

    fn from_validated(
        beta: f64,
        r: CMatrix,
        r_tilde: CMatrix,
        distance_m: f64,
        angle_rad: f64,
    ) -> Result<Self> {
        let scatterers = r_tilde.nrows();
        let d = trace(&r_tilde).re / scatterers as f64;
        if !(d > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tr(R~)/S must be positive, got {d}"
            )));
        }
        Ok(Self {
            beta,
            scatterers,
            r,
            r_tilde,
            d,
            distance_m,
            angle_rad,
        })
    }

    pub fn antennas(&self) -> usize {
        self.r.nrows()
    }

    /// Channel covariance `β·d·R`.
    pub fn covariance(&self) -> CMatrix {
        &self.r * crate::linalg::C64::new(self.beta * self.d, 0.0)
    }

    /// `tr(R̃²) = ||R̃||_F²`.
    pub fn r_tilde_square_trace(&self) -> f64 {
        self.r_tilde.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Statistics of every link in the network, indexed `[bs][cell][user]`.
#[derive(Clone, Debug)]
pub struct ChannelStatistics {
    pub cells: usize,
    pub users_per_cell: usize,
    pub antennas: usize,
    links: Vec<LinkStatistics>,
}

impl ChannelStatistics {
    /// Assembles statistics from per-link values ordered `[bs][cell][user]`.
    pub fn from_links(
        cells: usize,
        users_per_cell: usize,
        links: Vec<LinkStatistics>,
    ) -> Result<Self> {
        if links.len() != cells * cells * users_per_cell || links.is_empty() {
            return Err(Error::Dimension(format!(
                "expected {} links, got {}",
                cells * cells * users_per_cell,
                links.len()
            )));
        }
        let antennas = links[0].antennas();
        if links.iter().any(|l| l.antennas() != antennas) {
            return Err(Error::Dimension("links disagree on antenna count".into()));
        }
        Ok(Self {
            cells,
            users_per_cell,
            antennas,
            links,
        })
    }

    pub fn total_users(&self) -> usize {
        self.cells * self.users_per_cell
    }

    pub fn user_index(&self, cell: usize, user: usize) -> usize {
        cell * self.users_per_cell + user
    }

    /// Link from user `(cell, user)` to base station `bs`.
    pub fn link(&self, bs: usize, cell: usize, user: usize) -> &LinkStatistics {
        &self.links[bs * self.total_users() + self.user_index(cell, user)]
    }

    /// Link from flat user index `u` to base station `bs`.
    pub fn link_flat(&self, bs: usize, u: usize) -> &LinkStatistics {
        &self.links[bs * self.total_users() + u]
    }

    pub fn links(&self) -> &[LinkStatistics] {
        &self.links
    }
}

/// Builds pathloss, shadowing and both correlation matrices for every link
/// of a drop.
pub fn build_channel_statistics(
    geometry: &Geometry,
    config: &NetworkConfig,
) -> Result<ChannelStatistics> {
    let m = config.antennas;
    let r_tilde =
        correlation::exponential(config.scatterers, config.correlation.scatterer_correlation)?;
    let identity = CMatrix::identity(m, m);

    let mut links = Vec::with_capacity(config.cells * config.total_users());
    for bs in 0..config.cells {
        for cell in 0..config.cells {
            for user in 0..config.users_per_cell {
                let distance = geometry.distance(bs, cell, user);
                let angle = geometry.angle(bs, cell, user);
                let beta = large_scale_fading(
                    distance,
                    geometry.shadowing(bs, cell, user),
                    &config.pathloss,
                )?;
                let r = match config.correlation.bs {
                    BsCorrelation::Uncorrelated => identity.clone(),
                    BsCorrelation::LocalScattering {
                        angular_spread_deg,
                        antenna_spacing,
                    } => correlation::local_scattering(
                        m,
                        angle,
                        angular_spread_deg.to_radians(),
                        antenna_spacing,
                    )?,
                };
                links.push(LinkStatistics::from_validated(
                    beta,
                    r,
                    r_tilde.clone(),
                    distance,
                    angle,
                )?);
            }
        }
    }
    ChannelStatistics::from_links(config.cells, config.users_per_cell, links)
}
