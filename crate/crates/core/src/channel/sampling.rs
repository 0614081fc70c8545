//! Small-scale fading draws for the double-scattering model.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{ChannelStatistics, LinkStatistics};
use crate::error::Result;
use crate::linalg::{hermitian_sqrt, CMatrix, CVector, C64};
use crate::rng::rng_from_seed;

/// One `CN(0, 1)` draw.
#[inline]
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn fill_complex_normal<R: Rng + ?Sized>(rng: &mut R, out: &mut [C64]) {
    for z in out {
        *z = complex_normal(rng);
    }
}

/// A single link draw with its underlying fading matrices kept, so that
/// `h = sqrt(β/S)·R^{1/2}·G·R̃^{1/2}·g` can be reconstructed.
#[derive(Clone, Debug)]
pub struct LinkRealization {
    pub h: CVector,
    /// `M × S`.
    pub big_g: CMatrix,
    /// Length `S`.
    pub small_g: CVector,
}

/// Precomputed square roots for repeated sampling of one link.
#[derive(Clone, Debug)]
pub struct LinkSampler {
    scale: f64,
    r_sqrt: CMatrix,
    r_tilde_sqrt: CMatrix,
}

impl LinkSampler {
    pub fn new(stats: &LinkStatistics) -> Result<Self> {
        Ok(Self {
            scale: (stats.beta / stats.scatterers as f64).sqrt(),
            r_sqrt: hermitian_sqrt(&stats.r, "BS correlation R")?,
            r_tilde_sqrt: hermitian_sqrt(&stats.r_tilde, "scatterer correlation R~")?,
        })
    }

    pub fn antennas(&self) -> usize {
        self.r_sqrt.nrows()
    }

    pub fn scatterers(&self) -> usize {
        self.r_tilde_sqrt.nrows()
    }

    pub fn r_sqrt(&self) -> &CMatrix {
        &self.r_sqrt
    }

    pub fn r_tilde_sqrt(&self) -> &CMatrix {
        &self.r_tilde_sqrt
    }

    /// Rebuilds `h` from explicit fading draws.
    pub fn compose(&self, big_g: &CMatrix, small_g: &CVector) -> CVector {
        let inner = big_g * (&self.r_tilde_sqrt * small_g);
        (&self.r_sqrt * inner) * C64::new(self.scale, 0.0)
    }

    /// Draws `G` and `g` entry by entry and composes the channel.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LinkRealization {
        let (m, s) = (self.antennas(), self.scatterers());
        let mut big_g = CMatrix::zeros(m, s);
        fill_complex_normal(rng, big_g.as_mut_slice());
        let mut small_g = CVector::zeros(s);
        fill_complex_normal(rng, small_g.as_mut_slice());
        let h = self.compose(&big_g, &small_g);
        LinkRealization { h, big_g, small_g }
    }

    /// Draws only the channel vector, writing it to `out`.
    ///
    /// For fixed `w = R̃^{1/2} g`, the product `G w` of an i.i.d. `CN(0, 1)`
    /// matrix is distributed as `||w|| · n` with `n ~ CN(0, I_M)`, so the
    /// channel law is unchanged while only `M + S` normals are drawn instead
    /// of `M·S + S`.
    pub fn sample_vector_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        scratch: &mut CVector,
        out: &mut CVector,
    ) {
        let mut g = CVector::zeros(self.scatterers());
        fill_complex_normal(rng, g.as_mut_slice());
        let w_norm = (&self.r_tilde_sqrt * g).norm();
        fill_complex_normal(rng, scratch.as_mut_slice());
        let factor = C64::new(self.scale * w_norm, 0.0);
        out.gemv(factor, &self.r_sqrt, scratch, C64::new(0.0, 0.0));
    }

    pub fn sample_vector<R: Rng + ?Sized>(&self, rng: &mut R) -> CVector {
        let m = self.antennas();
        let mut scratch = CVector::zeros(m);
        let mut out = CVector::zeros(m);
        self.sample_vector_into(rng, &mut scratch, &mut out);
        out
    }
}

/// Draws one link realization from a seed.
pub fn sample_channel(stats: &LinkStatistics, seed: u64) -> Result<LinkRealization> {
    let sampler = LinkSampler::new(stats)?;
    Ok(sampler.sample(&mut rng_from_seed(seed)))
}

/// All links of the network in one coherence block, indexed `[bs][cell][user]`.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    pub cells: usize,
    pub users_per_cell: usize,
    pub links: Vec<LinkRealization>,
}

impl ChannelRealization {
    /// Channel from user `(cell, user)` to base station `bs`.
    pub fn h(&self, bs: usize, cell: usize, user: usize) -> &CVector {
        let users = self.cells * self.users_per_cell;
        &self.links[bs * users + cell * self.users_per_cell + user].h
    }
}

/// Samplers for every link of a drop.
#[derive(Clone, Debug)]
pub struct NetworkSampler {
    pub cells: usize,
    pub users_per_cell: usize,
    samplers: Vec<LinkSampler>,
}

impl NetworkSampler {
    pub fn new(stats: &ChannelStatistics) -> Result<Self> {
        let samplers = stats
            .links()
            .iter()
            .map(LinkSampler::new)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            cells: stats.cells,
            users_per_cell: stats.users_per_cell,
            samplers,
        })
    }

    pub fn samplers(&self) -> &[LinkSampler] {
        &self.samplers
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelRealization {
        ChannelRealization {
            cells: self.cells,
            users_per_cell: self.users_per_cell,
            links: self.samplers.iter().map(|s| s.sample(rng)).collect(),
        }
    }

    /// Channel vectors only, `[bs][cell][user]`, written into `out`.
    pub fn sample_vectors_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        scratch: &mut CVector,
        out: &mut [CVector],
    ) {
        for (sampler, h) in self.samplers.iter().zip(out.iter_mut()) {
            sampler.sample_vector_into(rng, scratch, h);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn identity_link(m: usize, s: usize, beta: f64) -> LinkStatistics {
        LinkStatistics::new(
            beta,
            CMatrix::identity(m, m),
            CMatrix::identity(s, s),
            100.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn realization_is_reconstructable() {
        let stats = identity_link(4, 3, 2.0);
        let sampler = LinkSampler::new(&stats).unwrap();
        let real = sampler.sample(&mut rng_from_seed(9));
        let rebuilt = (&real.big_g * &real.small_g) * C64::new((2.0f64 / 3.0).sqrt(), 0.0);
        assert!((rebuilt - &real.h).norm() < 1e-12);
        assert_eq!(real.big_g.shape(), (4, 3));
    }

    #[test]
    fn same_seed_same_draw() {
        let stats = identity_link(4, 3, 1.0);
        let a = sample_channel(&stats, 5).unwrap();
        let b = sample_channel(&stats, 5).unwrap();
        assert_eq!(a.h, b.h);
        assert_eq!(a.big_g, b.big_g);
    }

    #[test]
    fn complex_normal_has_unit_variance() {
        let mut rng = rng_from_seed(1);
        let n = 200_000;
        let (mut power, mut re2, mut mean) = (0.0, 0.0, C64::new(0.0, 0.0));
        for _ in 0..n {
            let z = complex_normal(&mut rng);
            power += z.norm_sqr();
            re2 += z.re * z.re;
            mean += z;
        }
        let n = n as f64;
        assert!((power / n - 1.0).abs() < 0.01);
        assert!((re2 / n - 0.5).abs() < 0.01);
        assert!(mean.norm() / n < 0.01);
    }
}
