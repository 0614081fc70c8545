//! Spatial correlation models.
//!
//! The BS side uses the local-scattering model for a uniform linear array:
//!
//! ```text
//! [R]_{m,n} = ∫ exp(j 2π Δ (m - n) sin(φ + δ)) f(δ) dδ,   f = N(0, σ_φ²)
//! ```
//!
//! where `φ` is the nominal angle of the user, `Δ` the element spacing in
//! wavelengths and `σ_φ` the angular spread. `R` is Toeplitz and Hermitian, so
//! only the first column is integrated. The scatterer side uses the
//! exponential model `[R̃]_{i,j} = r^|i-j|`.

use std::f64::consts::PI;

use crate::error::Result;
use crate::linalg::{ensure_psd, CMatrix, C64};

/// Gaussian tails beyond this many standard deviations carry < 2e-15 mass.
const TRUNCATION_SIGMAS: f64 = 8.0;
const NODES_PER_PANEL: usize = 16;

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Initial guess near the i-th root, then Newton on P_n.
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut derivative = 1.0;
        for _ in 0..100 {
            let (mut p_n, mut p_prev) = (1.0, 0.0);
            for j in 0..n {
                let jf = j as f64;
                let next = ((2.0 * jf + 1.0) * x * p_n - jf * p_prev) / (jf + 1.0);
                p_prev = p_n;
                p_n = next;
            }
            derivative = n as f64 * (x * p_n - p_prev) / (x * x - 1.0);
            let step = p_n / derivative;
            x -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * derivative * derivative);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// First column `c_k = E{exp(j 2π Δ k sin(φ + δ))}`, k = 0..M-1.
fn local_scattering_column(
    antennas: usize,
    nominal_angle: f64,
    spread_rad: f64,
    spacing: f64,
) -> Vec<C64> {
    let half_width = TRUNCATION_SIGMAS * spread_rad;
    // Bound the phase swing per panel to about one turn.
    let max_phase = 2.0 * PI * spacing * antennas.saturating_sub(1) as f64 * 2.0 * half_width;
    let panels = ((max_phase / (2.0 * PI)).ceil() as usize).max(4);
    let panel_width = 2.0 * half_width / panels as f64;
    let (nodes, weights) = gauss_legendre(NODES_PER_PANEL);
    let norm = 1.0 / (spread_rad * (2.0 * PI).sqrt());

    let mut column = vec![C64::new(0.0, 0.0); antennas];
    for panel in 0..panels {
        let mid = -half_width + (panel as f64 + 0.5) * panel_width;
        for (&x, &w) in nodes.iter().zip(&weights) {
            let delta = mid + 0.5 * panel_width * x;
            let density = norm * (-0.5 * (delta / spread_rad).powi(2)).exp();
            let weight = w * 0.5 * panel_width * density;
            let step = C64::from_polar(1.0, 2.0 * PI * spacing * (nominal_angle + delta).sin());
            let mut phasor = C64::new(weight, 0.0);
            for c in column.iter_mut() {
                *c += phasor;
                phasor *= step;
            }
        }
    }
    column
}

/// Hermitian Toeplitz matrix with first column `column`.
pub fn hermitian_toeplitz(column: &[C64]) -> CMatrix {
    let n = column.len();
    CMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            column[i - j]
        } else {
            column[j - i].conj()
        }
    })
}

/// Scales `m` so that `tr(m) = dim`.
pub fn normalize_trace(m: &mut CMatrix) {
    let tr: f64 = m.diagonal().iter().map(|z| z.re).sum();
    let target = m.nrows() as f64;
    if tr > 0.0 {
        *m *= C64::new(target / tr, 0.0);
    }
}

/// Local-scattering correlation of a ULA, normalized to `tr(R) = M`.
///
/// `nominal_angle` and `angular_spread` are in radians, `spacing` in
/// wavelengths.
pub fn local_scattering(
    antennas: usize,
    nominal_angle: f64,
    angular_spread: f64,
    spacing: f64,
) -> Result<CMatrix> {
    let column = local_scattering_column(antennas, nominal_angle, angular_spread, spacing);
    let mut r = hermitian_toeplitz(&column);
    normalize_trace(&mut r);
    ensure_psd(&r, "local-scattering correlation")?;
    Ok(r)
}

/// Exponential correlation `r^|i-j|` of size `dim`.
pub fn exponential(dim: usize, coefficient: f64) -> Result<CMatrix> {
    let m = CMatrix::from_fn(dim, dim, |i, j| {
        C64::new(coefficient.powi(i.abs_diff(j) as i32), 0.0)
    });
    ensure_psd(&m, "exponential scatterer correlation")?;
    Ok(m)
}
