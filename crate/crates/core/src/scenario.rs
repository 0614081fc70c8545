//! Everything that depends on one large-scale realization.

use crate::channel::{build_channel_statistics, ChannelStatistics};
use crate::config::NetworkConfig;
use crate::error::Result;
use crate::estimation::EstimationContext;
use crate::geometry::{drop_network, Geometry};
use crate::pilot::{assign_pilots, PilotPlan};
use crate::power::{solve, Algorithm, PowerAllocation, QosTargets, SinrTransform, SolverOptions};
use crate::rng::{derive_seed, Stream};
use crate::se::{
    monte_carlo_moments, spectral_efficiency, MonteCarloMoments, SinrCoefficients,
    SpectralEfficiencyReport,
};

/// A drop with its statistics, estimator and cached SINR coefficients.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub config: NetworkConfig,
    pub drop_seed: u64,
    pub geometry: Geometry,
    pub stats: ChannelStatistics,
    pub plan: PilotPlan,
    pub estimation: EstimationContext,
    pub coefficients: SinrCoefficients,
}

impl Scenario {
    pub fn new(config: &NetworkConfig, drop_seed: u64) -> Result<Self> {
        config.validate()?;
        let geometry = drop_network(config, drop_seed);
        Self::from_geometry(config, drop_seed, geometry)
    }

    /// Drop number `index` of the experiment seeded by `master_seed`.
    pub fn from_master(config: &NetworkConfig, master_seed: u64, index: usize) -> Result<Self> {
        Self::new(config, drop_seed(master_seed, index))
    }

    pub fn from_geometry(
        config: &NetworkConfig,
        drop_seed: u64,
        geometry: Geometry,
    ) -> Result<Self> {
        let stats = build_channel_statistics(&geometry, config)?;
        let plan = assign_pilots(config)?;
        let estimation = EstimationContext::new(&stats, &plan, config)?;
        let coefficients = SinrCoefficients::compute(&stats, &estimation, &plan)?;
        Ok(Self {
            config: config.clone(),
            drop_seed,
            geometry,
            stats,
            plan,
            estimation,
            coefficients,
        })
    }

    pub fn total_users(&self) -> usize {
        self.stats.total_users()
    }

    /// Closed-form SINR with every user at its maximum power.
    pub fn full_power_sinr(&self) -> Result<Vec<f64>> {
        self.coefficients.sinr(&self.config.max_powers())
    }

    pub fn full_power_se(&self) -> Result<SpectralEfficiencyReport> {
        spectral_efficiency(
            &self.full_power_sinr()?,
            self.config.coherence_symbols,
            self.config.pilot_symbols,
        )
    }

    /// Monte-Carlo moments of the MR combiners; seeded from the drop seed.
    pub fn monte_carlo(&self, trials: usize) -> Result<MonteCarloMoments> {
        monte_carlo_moments(
            &self.stats,
            &self.estimation,
            &self.plan,
            trials,
            derive_seed(self.drop_seed, Stream::MonteCarlo, 0),
        )
    }

    pub fn targets(&self, xi: f64, transform: SinrTransform) -> Result<QosTargets> {
        QosTargets::from_se(
            vec![xi; self.total_users()],
            self.config.coherence_symbols,
            self.config.pilot_symbols,
            transform,
        )
    }

    pub fn optimize(
        &self,
        targets: &QosTargets,
        algorithm: Algorithm,
        options: SolverOptions,
    ) -> Result<PowerAllocation> {
        solve(
            &self.coefficients,
            targets,
            &self.config.max_powers(),
            algorithm,
            options,
        )
    }
}

/// Seed of drop `index`. Independent of the antenna count, so sweeps over `M`
/// reuse the same user positions and shadowing.
pub fn drop_seed(master_seed: u64, index: usize) -> u64 {
    derive_seed(master_seed, Stream::Geometry, index as u64)
}
