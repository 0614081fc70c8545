use mimo_dscat::channel::correlation::{exponential, local_scattering};
use mimo_dscat::channel::{ChannelStatistics, LinkStatistics};
use mimo_dscat::estimation::EstimationContext;
use mimo_dscat::linalg::{CMatrix, C64};
use mimo_dscat::pilot::PilotPlan;
use mimo_dscat::se::{monte_carlo_moments, se_from_sinr, spectral_efficiency, SinrCoefficients};
use mimo_dscat::{NetworkConfig, Scenario};
use proptest::prelude::*;

const NOISE: f64 = 0.3;
const TAU_P: usize = 2;

struct Toy {
    stats: ChannelStatistics,
    plan: PilotPlan,
    ctx: EstimationContext,
}

impl Toy {
    fn coefficients(&self) -> SinrCoefficients {
        SinrCoefficients::compute(&self.stats, &self.ctx, &self.plan).unwrap()
    }
}

fn beta(bs: usize, cell: usize, user: usize) -> f64 {
    (if bs == cell { 1.0 } else { 0.3 }) * (1.0 + 0.4 * user as f64)
}

/// Two cells with two users each and full pilot reuse across cells.
fn toy<F: Fn(usize, usize, usize) -> (CMatrix, CMatrix)>(cov: F) -> Toy {
    let mut links = Vec::new();
    for bs in 0..2 {
        for cell in 0..2 {
            for user in 0..2 {
                let (r, rt) = cov(bs, cell, user);
                links.push(LinkStatistics::new(beta(bs, cell, user), r, rt, 100.0, 0.0).unwrap());
            }
        }
    }
    let stats = ChannelStatistics::from_links(2, 2, links).unwrap();
    let plan = PilotPlan::from_indices(2, 2, TAU_P, vec![vec![0, 1], vec![0, 1]]).unwrap();
    let ctx =
        EstimationContext::with_pilot_powers(&stats, &plan, TAU_P, NOISE, vec![1.0, 0.7, 1.5, 1.2])
            .unwrap();
    Toy { stats, plan, ctx }
}

fn uncorrelated(m: usize, s: usize) -> Toy {
    toy(|_, _, _| (CMatrix::identity(m, m), CMatrix::identity(s, s)))
}

fn correlated(m: usize) -> Toy {
    toy(|bs, cell, user| {
        let angle = 0.2 + 0.8 * cell as f64 - 0.6 * user as f64 + 0.3 * bs as f64;
        let r = local_scattering(m, angle, 10f64.to_radians(), 0.5).unwrap();
        // the second cell's scatterers carry more power, so d != 1
        let rt = exponential(6, 0.5).unwrap() * C64::new(1.0 + cell as f64, 0.0);
        (r, rt)
    })
}

/// SINR with `R = I`, `R̃ = I` evaluated from scalar moments. The combiner is
/// proportional to the processed pilot signal `y`, and for these channels
/// `E{||h||⁴} = β² M (M + 1) (1 + 1/S)`.
fn uncorrelated_oracle(m: usize, s: usize, p: &[f64], p_hat: &[f64]) -> Vec<f64> {
    let (mf, sf, tp) = (m as f64, s as f64, TAU_P as f64);
    let k = 2;
    (0..4)
        .map(|u| {
            let bs = u / k;
            let shares = |j: usize| j % k == u % k;
            let b = |j: usize| beta(bs, j / k, j % k);
            let y_power: f64 = (0..4)
                .filter(|&j| shares(j))
                .map(|j| p_hat[j] * tp * tp * b(j))
                .sum::<f64>()
                + NOISE * tp;
            let signal = p_hat[u] * tp * tp * b(u).powi(2) * mf * mf;
            let mut denominator = NOISE * mf * y_power - p[u] * signal;
            for j in 0..4 {
                denominator += if shares(j) {
                    let fourth = b(j).powi(2) * mf * (mf + 1.0) * (1.0 + 1.0 / sf);
                    p[j] * (p_hat[j] * tp * tp * fourth
                        + b(j) * mf * (y_power - p_hat[j] * tp * tp * b(j)))
                } else {
                    p[j] * b(j) * mf * y_power
                };
            }
            p[u] * signal / denominator
        })
        .collect()
}

#[test]
fn closed_form_matches_scalar_oracle_without_correlation() {
    let p = [0.9, 1.3, 0.5, 2.0];
    for (m, s) in [(4, 1), (8, 21), (32, 5)] {
        let t = uncorrelated(m, s);
        let sinr = t.coefficients().sinr(&p).unwrap();
        let oracle = uncorrelated_oracle(m, s, &p, &t.ctx.pilot_powers);
        for (a, b) in sinr.iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-10 * b, "M={m} S={s}: {a} vs {b}");
        }
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn closed_form_matches_monte_carlo_with_correlation() {
    let t = correlated(8);
    let p = [1.0, 0.6, 1.4, 0.8];
    let cf = t.coefficients().terms(&p).unwrap();
    let mc = monte_carlo_moments(&t.stats, &t.ctx, &t.plan, 200_000, 31)
        .unwrap()
        .terms(&p, &t.plan)
        .unwrap();
    for (a, b) in cf.iter().zip(&mc) {
        assert!(relative(a.signal, b.signal) < 0.01, "{a:?} vs {b:?}");
        // the two sides attribute the non-coherent part of pilot sharers differently
        assert!(relative(a.ni + a.ci, b.ni + b.ci) < 0.03, "{a:?} vs {b:?}");
        assert!(relative(a.no, b.no) < 0.03, "{a:?} vs {b:?}");
        assert!(relative(a.sinr(), b.sinr()) < 0.03, "{a:?} vs {b:?}");
    }
}

#[test]
fn closed_form_matches_monte_carlo_for_single_scatterer() {
    // the heaviest tail the model allows
    let t = uncorrelated(4, 1);
    let p = [1.0; 4];
    let cf = t.coefficients().sinr(&p).unwrap();
    let mc = monte_carlo_moments(&t.stats, &t.ctx, &t.plan, 200_000, 5)
        .unwrap()
        .sinr(&p, &t.plan)
        .unwrap();
    for (a, b) in cf.iter().zip(&mc) {
        assert!(relative(*a, *b) < 0.03, "{a} vs {b}");
    }
}

#[test]
fn closed_form_is_invariant_to_splitting_power_between_stages() {
    let base = correlated(6);
    // same covariance β d R, with power moved from β into R̃
    let links = base
        .stats
        .links()
        .iter()
        .map(|l| {
            LinkStatistics::new(
                l.beta / 2.5,
                l.r.clone(),
                &l.r_tilde * C64::new(2.5, 0.0),
                100.0,
                0.0,
            )
            .unwrap()
        })
        .collect();
    let stats = ChannelStatistics::from_links(2, 2, links).unwrap();
    let ctx = EstimationContext::with_pilot_powers(
        &stats,
        &base.plan,
        TAU_P,
        NOISE,
        base.ctx.pilot_powers.clone(),
    )
    .unwrap();
    let p = [0.4, 1.0, 0.9, 1.6];
    let a = base.coefficients().sinr(&p).unwrap();
    let b = SinrCoefficients::compute(&stats, &ctx, &base.plan)
        .unwrap()
        .sinr(&p)
        .unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert!(relative(*x, *y) < 1e-9);
    }
}

/// `ci(S) = A + B κ(S)` with `κ = 1/S` when `R̃ = I`; the excess over the
/// Gaussian part must scale with `1/S`.
#[test]
fn fourth_moment_correction_scales_inversely_with_scatterers() {
    let ci = |s: usize| {
        let c = uncorrelated(8, s).coefficients();
        c.users[0].ci[2]
    };
    let (c21, c210, c420) = (ci(21), ci(210), ci(420));
    let gaussian = 2.0 * c420 - c210;
    let ratio = (c21 - gaussian) / (c210 - gaussian);
    assert!((ratio - 10.0).abs() < 0.1, "{ratio}");
    assert!(c21 > c210 && c210 > c420);
}

fn scenario(m: usize, seed: u64) -> Scenario {
    Scenario::new(&NetworkConfig::default().with_antennas(m), seed).unwrap()
}

#[test]
fn more_antennas_raise_every_users_sinr() {
    let small = scenario(50, 7);
    let large = scenario(150, 7);
    assert_eq!(small.geometry, large.geometry);
    let a = small.full_power_se().unwrap();
    let b = large.full_power_se().unwrap();
    for (x, y) in a.sinr.iter().zip(&b.sinr) {
        assert!(y > x);
    }
    assert!(b.mean() > a.mean());
}

#[test]
fn monte_carlo_error_shrinks_like_inverse_square_root() {
    let t = correlated(4);
    let p = [1.0; 4];
    let cf = t.coefficients().sinr(&p).unwrap();
    let rms = |trials: usize| {
        let mut acc = 0.0;
        let seeds = 16;
        for seed in 0..seeds {
            let mc = monte_carlo_moments(&t.stats, &t.ctx, &t.plan, trials, 100 + seed)
                .unwrap()
                .sinr(&p, &t.plan)
                .unwrap();
            acc += mc
                .iter()
                .zip(&cf)
                .map(|(a, b)| relative(*a, *b).powi(2))
                .sum::<f64>();
        }
        (acc / (seeds as f64 * 4.0)).sqrt()
    };
    let ratio = rms(100) / rms(10_000);
    // ideal 10; sixteen seeds leave a wide sampling spread
    assert!((5.0..20.0).contains(&ratio), "{ratio}");
}

#[test]
fn silent_user_has_zero_sinr() {
    let c = correlated(6).coefficients();
    let sinr = c.sinr(&[0.0, 1.0, 1.0, 1.0]).unwrap();
    assert_eq!(sinr[0], 0.0);
    assert!(sinr[1..].iter().all(|&s| s > 0.0));
    assert!(c.sinr(&[0.0; 4]).unwrap().iter().all(|&s| s == 0.0));
    assert!(c.sinr(&[1.0, -1.0, 1.0, 1.0]).is_err());
    assert!(c.sinr(&[1.0; 3]).is_err());
}

#[test]
fn spectral_efficiency_uses_the_data_fraction() {
    let r = spectral_efficiency(&[0.0, 1.0, 3.0], 200, 5).unwrap();
    assert_eq!(r.prelog, 0.975);
    assert_eq!(r.se, vec![0.0, 0.975, 1.95]);
    assert!((se_from_sinr(7.0, 0.5) - 1.5).abs() < 1e-15);
    assert!(spectral_efficiency(&[1.0], 5, 5).is_err());
    assert!(spectral_efficiency(&[-0.1], 200, 5).is_err());
}

fn drop_coefficients() -> &'static SinrCoefficients {
    use std::sync::OnceLock;
    static C: OnceLock<SinrCoefficients> = OnceLock::new();
    C.get_or_init(|| scenario(16, 3).coefficients)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sinr_is_monotone_in_powers(
        p in prop::collection::vec(1e-3f64..200.0, 20),
        u in 0usize..20,
        j in 0usize..20,
        factor in 1.01f64..10.0,
    ) {
        let c = drop_coefficients();
        let base = c.sinr(&p).unwrap();
        let mut own = p.clone();
        own[u] *= factor;
        prop_assert!(c.sinr(&own).unwrap()[u] > base[u]);
        if j != u {
            let mut other = p.clone();
            other[j] *= factor;
            prop_assert!(c.sinr(&other).unwrap()[u] < base[u]);
        }
        let doubled: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
        let d = c.sinr(&doubled).unwrap();
        for (a, b) in d.iter().zip(&base) {
            prop_assert!(a > b);
        }
    }
}
