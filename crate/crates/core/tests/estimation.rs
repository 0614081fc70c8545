use mimo_dscat::channel::correlation::{exponential, local_scattering};
use mimo_dscat::channel::{
    complex_normal, ChannelStatistics, LinkSampler, LinkStatistics, NetworkSampler,
};
use mimo_dscat::estimation::{draw_pilot_noise, processed_pilot_signal, EstimationContext};
use mimo_dscat::linalg::{frobenius, min_eigenvalue, CMatrix, CVector, C64};
use mimo_dscat::pilot::{assign_pilots, PilotPlan};
use mimo_dscat::rng::rng_from_seed;
use mimo_dscat::{NetworkConfig, Scenario};

const M: usize = 6;
const TAU_P: usize = 2;
const NOISE: f64 = 0.4;

/// Two cells, two users each, pilot `k` reused by user `k` of both cells.
/// Interfering links are strong enough for contamination to matter and the
/// second cell's scatterer correlation is scaled so that `d != 1`.
fn contaminated() -> (ChannelStatistics, PilotPlan, EstimationContext) {
    let mut links = Vec::new();
    for bs in 0..2 {
        for cell in 0..2 {
            for user in 0..2 {
                let beta = if bs == cell { 1.0 } else { 0.35 } * (1.0 + 0.5 * user as f64);
                let angle = 0.3 + 0.9 * cell as f64 - 0.5 * user as f64 + 0.2 * bs as f64;
                let r = local_scattering(M, angle, 10f64.to_radians(), 0.5).unwrap();
                let rt = exponential(5, 0.5).unwrap() * C64::new(1.0 + 0.6 * cell as f64, 0.0);
                links.push(LinkStatistics::new(beta, r, rt, 100.0, angle).unwrap());
            }
        }
    }
    let stats = ChannelStatistics::from_links(2, 2, links).unwrap();
    let plan = PilotPlan::from_indices(2, 2, TAU_P, vec![vec![0, 1], vec![0, 1]]).unwrap();
    let ctx =
        EstimationContext::with_pilot_powers(&stats, &plan, TAU_P, NOISE, vec![1.0, 0.5, 2.0, 1.0])
            .unwrap();
    (stats, plan, ctx)
}

/// `p̂ τ_p β² d² R (Σ_j τ_p p̂_j β_j d_j R_j + σ² I)^{-1} R`, built from scratch.
fn estimate_covariance_oracle(
    stats: &ChannelStatistics,
    plan: &PilotPlan,
    powers: &[f64],
    bs: usize,
    u: usize,
) -> CMatrix {
    let mut q = CMatrix::identity(M, M) * C64::new(NOISE, 0.0);
    for j in plan.reuse_set(u) {
        let l = stats.link_flat(bs, j);
        q += &l.r * C64::new(TAU_P as f64 * powers[j] * l.beta * l.d, 0.0);
    }
    let psi = q.try_inverse().unwrap();
    let l = stats.link_flat(bs, u);
    (&l.r * psi * &l.r) * C64::new(powers[u] * TAU_P as f64 * (l.beta * l.d).powi(2), 0.0)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn max_diag(m: &CMatrix) -> f64 {
    m.diagonal().iter().map(|z| z.re).fold(0.0, f64::max)
}

#[test]
fn pilot_noise_is_white_with_expected_power() {
    let (_, _, ctx) = contaminated();
    let n = 100_000;
    let mut rng = rng_from_seed(1);
    let mut acc = CMatrix::zeros(M, M);
    for _ in 0..n {
        let noise = draw_pilot_noise(&ctx, &mut rng);
        assert_eq!(noise.len(), 2 * TAU_P);
        acc += &noise[3] * noise[3].adjoint();
    }
    let cov = acc / C64::new(n as f64, 0.0);
    let target = NOISE * TAU_P as f64;
    for i in 0..M {
        for j in 0..M {
            let expected = if i == j { target } else { 0.0 };
            assert!((cov[(i, j)] - C64::new(expected, 0.0)).norm() <= 0.02 * target);
        }
    }
}

#[test]
fn processed_signal_matches_direct_sum() {
    let (stats, plan, ctx) = contaminated();
    let sampler = NetworkSampler::new(&stats).unwrap();
    let mut rng = rng_from_seed(2);
    let real = sampler.sample(&mut rng);
    let noise = draw_pilot_noise(&ctx, &mut rng);
    let channels: Vec<CVector> = (0..2)
        .flat_map(|bs| (0..2).flat_map(move |c| (0..2).map(move |k| (bs, c, k))))
        .map(|(bs, c, k)| real.h(bs, c, k).clone())
        .collect();
    let y = processed_pilot_signal(&channels, &plan, &ctx, &noise);
    for bs in 0..2 {
        for t in 0..TAU_P {
            let mut direct = noise[bs * TAU_P + t].clone();
            for u in plan.users_with_pilot(t) {
                direct += real.h(bs, u / 2, u % 2)
                    * C64::new(ctx.pilot_powers[u].sqrt() * TAU_P as f64, 0.0);
            }
            assert!((&y[bs * TAU_P + t] - direct).norm() < 1e-12);
        }
    }
}

/// Empirical `E{ĥ ĥ^H}`, `E{e e^H}` and `E{e ĥ^H}` for user `u` at base
/// station `bs`, with `e = h - ĥ`.
fn empirical_moments(
    stats: &ChannelStatistics,
    plan: &PilotPlan,
    ctx: &EstimationContext,
    bs: usize,
    u: usize,
    draws: usize,
    seed: u64,
) -> (CMatrix, CMatrix, CMatrix) {
    let group = plan.reuse_set(u);
    let samplers: Vec<LinkSampler> = group
        .iter()
        .map(|&j| LinkSampler::new(stats.link_flat(bs, j)).unwrap())
        .collect();
    let noise_std = (NOISE * TAU_P as f64).sqrt();
    let mut rng = rng_from_seed(seed);
    let (mut hh, mut ee, mut eh) = (
        CMatrix::zeros(M, M),
        CMatrix::zeros(M, M),
        CMatrix::zeros(M, M),
    );
    for _ in 0..draws {
        let mut y = CVector::from_fn(M, |_, _| complex_normal(&mut rng) * noise_std);
        let mut own = CVector::zeros(M);
        for (&j, s) in group.iter().zip(&samplers) {
            let h = s.sample(&mut rng).h;
            y += &h * C64::new(ctx.pilot_powers[j].sqrt() * TAU_P as f64, 0.0);
            if j == u {
                own = h;
            }
        }
        let est = ctx.estimate(stats, plan, bs, u, &y);
        let err = own - &est;
        hh += &est * est.adjoint();
        ee += &err * err.adjoint();
        eh += &err * est.adjoint();
    }
    let n = C64::new(draws as f64, 0.0);
    (hh / n, ee / n, eh / n)
}

#[test]
fn estimate_statistics_match_lmmse_theory() {
    let (stats, plan, ctx) = contaminated();
    let draws = 100_000;
    // serving link, and a contaminating link seen from the other cell
    for (bs, u, seed) in [(0, 0, 10), (0, 2, 11), (1, 3, 12)] {
        let oracle = estimate_covariance_oracle(&stats, &plan, &ctx.pilot_powers, bs, u);
        assert!(
            frobenius(&(ctx.estimate_covariance(&stats, &plan, bs, u) - &oracle))
                < 1e-10 * frobenius(&oracle)
        );

        let (hh, ee, eh) = empirical_moments(&stats, &plan, &ctx, bs, u, draws, seed);
        let scale = max_abs(&oracle);
        let worst = max_abs(&(hh - &oracle));
        assert!(
            worst <= 0.02 * scale,
            "bs {bs} user {u}: {worst} vs {scale}"
        );

        let link = stats.link_flat(bs, u);
        let error_cov = link.covariance() - &oracle;
        assert!(max_abs(&(ee - &error_cov)) <= 0.02 * max_abs(&error_cov));

        let cross_scale = (max_diag(&error_cov) * max_diag(&oracle)).sqrt();
        let bound = 5.0 * 10f64.powf(-2.5) * cross_scale;
        assert!(
            max_abs(&eh) <= bound,
            "orthogonality: {} > {bound}",
            max_abs(&eh)
        );
    }
}

#[test]
fn users_with_identical_statistics_get_parallel_estimates() {
    let r = local_scattering(M, 0.4, 10f64.to_radians(), 0.5).unwrap();
    let links: Vec<_> = (0..4)
        .map(|_| {
            LinkStatistics::new(1.0, r.clone(), exponential(4, 0.5).unwrap(), 100.0, 0.4).unwrap()
        })
        .collect();
    let stats = ChannelStatistics::from_links(2, 1, links).unwrap();
    let plan = PilotPlan::from_indices(2, 1, 1, vec![vec![0], vec![0]]).unwrap();
    let ctx =
        EstimationContext::with_pilot_powers(&stats, &plan, 1, NOISE, vec![1.0, 4.0]).unwrap();
    let mut rng = rng_from_seed(5);
    let y = CVector::from_fn(M, |_, _| complex_normal(&mut rng));
    let a = ctx.estimate(&stats, &plan, 0, 0, &y);
    let b = ctx.estimate(&stats, &plan, 0, 1, &y);
    // only sqrt(p̂) differs between the two users
    assert!((b - &a * C64::new(2.0, 0.0)).norm() < 1e-12 * a.norm());
    let c0 = ctx.estimate_covariance(&stats, &plan, 0, 0);
    let c1 = ctx.estimate_covariance(&stats, &plan, 0, 1);
    assert!(frobenius(&(c1 - &c0 * C64::new(4.0, 0.0))) < 1e-10 * frobenius(&c0));
}

#[test]
fn scenario_psi_inverts_and_estimates_are_dominated() {
    let config = NetworkConfig::default().with_antennas(12);
    let scenario = Scenario::new(&config, 4).unwrap();
    let ctx = &scenario.estimation;
    for bs in 0..config.cells {
        for t in 0..config.pilot_symbols {
            let psi = ctx.psi(bs, t);
            let mut q = CMatrix::identity(12, 12) * C64::new(ctx.noise_variance, 0.0);
            for u in scenario.plan.users_with_pilot(t) {
                q += &scenario.stats.link_flat(bs, u).r * C64::new(ctx.a(bs, u), 0.0);
            }
            let eye = CMatrix::identity(12, 12);
            assert!(frobenius(&(psi * &q - &eye)) < 1e-8);
            let factored = ctx.psi_inverse_factor(bs, t).inverse();
            assert!(frobenius(&(factored - psi)) < 1e-8 * frobenius(psi));
        }
        for u in 0..config.total_users() {
            let link = scenario.stats.link_flat(bs, u);
            let est = ctx.estimate_covariance(&scenario.stats, &scenario.plan, bs, u);
            let gap = link.covariance() - &est;
            assert!(min_eigenvalue(&gap) >= -1e-9 * max_abs(&link.covariance()));
            assert!(min_eigenvalue(&est) >= -1e-9 * max_abs(&est));
        }
    }
}

#[test]
fn reference_layout_reuses_each_pilot_once_per_cell() {
    let config = NetworkConfig::default();
    assert_eq!((config.cells, config.users_per_cell), (4, 5));
    let plan = assign_pilots(&config).unwrap();
    for u in 0..20 {
        let set = plan.reuse_set(u);
        assert_eq!(set.len(), 4);
        assert!(set.contains(&u));
        let mut cells: Vec<usize> = set.iter().map(|v| v / 5).collect();
        cells.dedup();
        assert_eq!(cells, vec![0, 1, 2, 3]);
        assert!(set.iter().all(|&v| v % 5 == u % 5));
    }
    assert!(plan.groups().iter().all(|g| g.len() == 4));
}
