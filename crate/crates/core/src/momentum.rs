//! Thermodynamic-limit Green's function G(k, ω) = 1/(ω − ε(k, ω)), the
//! spectral function A = −Im G/π, and the dissipationless mode (k*, ω*).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ComplexFrequency, Model, ModelParams};
use crate::quadrature::{integrate, QuadOptions, QuadResult};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Broadening applied at the dissipationless pole, in units of g.
pub const POLE_ETA: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DissipationlessMode {
    pub k_star: f64,
    pub omega_star: f64,
}

/// k* = π − φ folded into (−π, π], ω* = Δ_c − 2g cos k*.
pub fn dissipationless_mode(p: &ModelParams) -> DissipationlessMode {
    let mut k = (PI - p.phi).rem_euclid(2.0 * PI);
    if k > PI {
        k -= 2.0 * PI;
    }
    DissipationlessMode {
        k_star: k,
        omega_star: p.delta_c - 2.0 * p.g * k.cos(),
    }
}

/// ε(k, z) = Δ_c − 2g cos k − iΓ(z)[1 + cos(k + φ)].
pub fn dispersion(model: &Model, k: f64, z: ComplexFrequency) -> Result<Complex64> {
    let p = &model.params;
    let weight = 1.0 + (k + p.phi).cos();
    let bare = p.delta_c - 2.0 * p.g * k.cos();
    if weight == 0.0 {
        return Ok(Complex64::new(bare, 0.0));
    }
    Ok(bare - I * model.gamma_at(z)? * weight)
}

/// G(k, ω) on the real axis; errors exactly at the dissipationless pole.
pub fn momentum_greens(model: &Model, k: f64, omega: f64) -> Result<Complex64> {
    let denom = omega - dispersion(model, k, ComplexFrequency::real(omega))?;
    if denom.norm() < 1e-12 * model.params.g {
        return Err(Error::Pole { k, omega });
    }
    Ok(denom.inv())
}

/// G(k, ω + iη); the pole is broadened by [`POLE_ETA`] when it is hit.
pub fn regularized_greens(model: &Model, k: f64, omega: f64, eta: f64) -> Result<Complex64> {
    let z = ComplexFrequency::shifted(omega, eta);
    let denom = z.value() - dispersion(model, k, z)?;
    if denom.norm() < 1e-12 * model.params.g {
        let z = ComplexFrequency::shifted(omega, eta + POLE_ETA * model.params.g);
        return Ok((z.value() - dispersion(model, k, z)?).inv());
    }
    Ok(denom.inv())
}

/// A(k, ω) = −Im G(k, ω + iη)/π.
pub fn spectral_function(model: &Model, k: f64, omega: f64, eta: f64) -> Result<f64> {
    Ok(-regularized_greens(model, k, omega, eta)?.im / PI)
}

/// Spectral function sampled on a (k, ω) grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralGrid {
    pub k_values: Vec<f64>,
    pub omega_values: Vec<f64>,
    /// `a_values[ik][iw]` = A(k_values[ik], omega_values[iw]).
    pub a_values: Vec<Vec<f64>>,
}

impl SpectralGrid {
    pub fn column(&self, ik: usize) -> &[f64] {
        &self.a_values[ik]
    }

    pub fn min_value(&self) -> f64 {
        self.a_values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Default heatmap axes: 401 momenta over [−π, π], 801 energies over Δ_c ± 3g.
pub fn default_axes(p: &ModelParams) -> (Vec<f64>, Vec<f64>) {
    (
        linspace(-PI, PI, 401),
        linspace(p.delta_c - 3.0 * p.g, p.delta_c + 3.0 * p.g, 801),
    )
}

pub fn spectral_heatmap(model: &Model, k_grid: &[f64], omega_grid: &[f64], eta: f64) -> Result<SpectralGrid> {
    if k_grid.iter().any(|k| !(-PI..=PI).contains(k)) {
        return Err(Error::InvalidParameter {
            name: "k_grid",
            reason: "momenta must lie in [-pi, pi]".into(),
        });
    }
    let a_values = k_grid
        .par_iter()
        .map(|&k| {
            omega_grid
                .iter()
                .map(|&w| spectral_function(model, k, w, eta))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralGrid {
        k_values: k_grid.to_vec(),
        omega_values: omega_grid.to_vec(),
        a_values,
    })
}

/// Quasiparticle peak positions of A(k, ·) in [lo, hi] and their widths.
///
/// Peaks sit where Re(ω − ε(k, ω)) changes sign; the width is |Im ε| there.
pub fn quasiparticle_peaks(model: &Model, k: f64, lo: f64, hi: f64, eta: f64) -> Result<Vec<(f64, f64)>> {
    let f = |w: f64| -> Result<Complex64> { Ok(w - dispersion(model, k, ComplexFrequency::shifted(w, eta))?) };
    let grid = linspace(lo, hi, 4001);
    let mut out = Vec::new();
    let mut prev = f(grid[0])?.re;
    for pair in grid.windows(2) {
        let cur = f(pair[1])?.re;
        if prev == 0.0 || prev.signum() != cur.signum() {
            let (mut a, mut b, mut fa) = (pair[0], pair[1], prev);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                let fm = f(m)?.re;
                if fm == 0.0 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            let root = 0.5 * (a + b);
            out.push((root, f(root)?.im.abs() + eta));
        }
        prev = cur;
    }
    Ok(out)
}

/// Breakpoints resolving every peak: centre plus a geometric ladder of widths.
pub fn peak_breakpoints(peaks: &[(f64, f64)]) -> Vec<f64> {
    let mut pts = Vec::new();
    for &(c, w) in peaks {
        pts.push(c);
        let mut s = w.max(1e-14);
        for _ in 0..12 {
            pts.push(c - s);
            pts.push(c + s);
            s *= 4.0;
        }
    }
    pts
}

/// ∫ A(k, ω) dω over [lo, hi] (either end may be infinite).
pub fn spectral_weight(model: &Model, k: f64, lo: f64, hi: f64, eta: f64, opts: &QuadOptions) -> Result<QuadResult> {
    let p = &model.params;
    let scan_lo = if lo.is_finite() { lo } else { p.delta_c - 12.0 * p.g };
    let scan_hi = if hi.is_finite() { hi } else { p.delta_c + 12.0 * p.g };
    let mut bps = peak_breakpoints(&quasiparticle_peaks(model, k, scan_lo, scan_hi, eta)?);
    bps.push(p.delta_c - 2.0 * p.g * k.cos());
    bps.push(p.delta_b);
    let cell = std::cell::Cell::new(None);
    let r = integrate(
        |w| match spectral_function(model, k, w, eta) {
            Ok(v) => v,
            Err(e) => {
                cell.set(Some(e));
                0.0
            }
        },
        lo,
        hi,
        &bps,
        opts,
    )?;
    match cell.into_inner() {
        Some(e) => Err(e),
        None => Ok(r),
    }
}

/// Indices of strict interior local maxima.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    (1..values.len().saturating_sub(1))
        .filter(|&i| values[i] > values[i - 1] && values[i] >= values[i + 1])
        .collect()
}

/// Full width at half maximum of the peak at `peak`, by linear interpolation.
/// Returns `None` when the half-maximum level is not crossed on both sides.
pub fn fwhm(x: &[f64], y: &[f64], peak: usize) -> Option<f64> {
    let half = 0.5 * y[peak];
    let mut left = None;
    for i in (0..peak).rev() {
        if y[i] <= half {
            let t = (half - y[i]) / (y[i + 1] - y[i]);
            left = Some(x[i] + t * (x[i + 1] - x[i]));
            break;
        }
    }
    let mut right = None;
    for i in peak + 1..y.len() {
        if y[i] <= half {
            let t = (y[i - 1] - half) / (y[i - 1] - y[i]);
            right = Some(x[i - 1] + t * (x[i] - x[i - 1]));
            break;
        }
    }
    Some(right? - left?)
}

/// Local maxima of A(k, ·) on `omega` with their positions.
pub fn spectral_maxima(model: &Model, k: f64, omega: &[f64], eta: f64) -> Result<Vec<f64>> {
    let a = omega
        .iter()
        .map(|&w| spectral_function(model, k, w, eta))
        .collect::<Result<Vec<_>>>()?;
    Ok(local_maxima(&a).into_iter().map(|i| omega[i]).collect())
}
