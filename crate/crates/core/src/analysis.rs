//! Scaling-law fits, current-vs-drive scans and skin-effect diagnostics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::Model;
use crate::transport::{current_nonmarkovian, Direction, LeadConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// I = C·N^p
    PowerLaw,
    /// I = C·e^{−aN}
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: FitModel,
    /// p for a power law, a for an exponential.
    pub parameter: f64,
    pub prefactor: f64,
    /// Coefficient of determination of the log-space fit.
    pub r_squared: f64,
}

/// Least-squares fit of I(N); see [`fit_scaling_ln`] for log-domain input.
pub fn fit_scaling(n_values: &[f64], i_values: &[f64], model: FitModel) -> Result<FitResult> {
    if let Some(bad) = i_values.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::DegenerateFit(format!("non-positive current {bad}")));
    }
    let ln_i: Vec<f64> = i_values.iter().map(|v| v.ln()).collect();
    fit_scaling_ln(n_values, &ln_i, model)
}

/// Same as [`fit_scaling`] but takes ln I, so currents below f64 range fit too.
/// The prefactor is returned as e^{ln C} and may be 0 or ∞.
pub fn fit_scaling_ln(n_values: &[f64], ln_i: &[f64], model: FitModel) -> Result<FitResult> {
    if n_values.len() != ln_i.len() {
        return Err(Error::DegenerateFit(format!("{} sizes for {} currents", n_values.len(), ln_i.len())));
    }
    if n_values.len() < 4 {
        return Err(Error::DegenerateFit(format!("need at least 4 points, got {}", n_values.len())));
    }
    if n_values.windows(2).any(|w| !(w[1] > w[0])) || n_values[0] <= 0.0 {
        return Err(Error::DegenerateFit("sizes must be positive and strictly increasing".into()));
    }
    if ln_i.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("non-positive or non-finite current".into()));
    }
    let x: Vec<f64> = match model {
        FitModel::PowerLaw => n_values.iter().map(|n| n.ln()).collect(),
        FitModel::Exponential => n_values.to_vec(),
    };
    let m = x.len() as f64;
    let xm = x.iter().sum::<f64>() / m;
    let ym = ln_i.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let sxy: f64 = x.iter().zip(ln_i).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let syy: f64 = ln_i.iter().map(|v| (v - ym).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = x.iter().zip(ln_i).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { (1.0 - ss_res / syy).clamp(0.0, 1.0) } else { 1.0 };
    let parameter = match model {
        FitModel::PowerLaw => slope,
        FitModel::Exponential => -slope,
    };
    Ok(FitResult { model, parameter, prefactor: intercept.exp(), r_squared })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NdqptCurve {
    pub mu_d_values: Vec<f64>,
    /// √N·I₊(μ_d)
    pub scaled_current: Vec<f64>,
    pub n_sites: usize,
}

impl NdqptCurve {
    /// μ_d at the largest forward-difference slope of √N·I₊, placed at the
    /// midpoint of that interval.
    pub fn crossover(&self) -> Option<f64> {
        let mut best: Option<(f64, f64)> = None;
        for (mu, s) in self.mu_d_values.windows(2).zip(self.scaled_current.windows(2)) {
            let d = (s[1] - s[0]) / (mu[1] - mu[0]);
            if best.is_none_or(|(bd, _)| d > bd) {
                best = Some((d, 0.5 * (mu[0] + mu[1])));
            }
        }
        best.map(|(_, mu)| mu)
    }
}

pub const MIN_NDQPT_SITES: usize = 64;

/// √N·I₊(μ_d) on a grid of drive potentials, evaluated in parallel.
pub fn ndqpt_scan(model: &Model, lc: &LeadConfig, mu_d_grid: &[f64], n_sites: usize) -> Result<NdqptCurve> {
    if n_sites < MIN_NDQPT_SITES {
        return Err(Error::InvalidParameter { name: "n_sites", reason: format!("scan needs N >= {MIN_NDQPT_SITES}") });
    }
    let model = model.with_params(crate::model::ModelParams { n_sites, ..model.params });
    let root_n = (n_sites as f64).sqrt();
    let scaled = mu_d_grid
        .par_iter()
        .map(|&mu| current_nonmarkovian(&model, lc, mu, Direction::LeftToRight).map(|r| root_n * r.value))
        .collect::<Result<Vec<f64>>>()?;
    Ok(NdqptCurve { mu_d_values: mu_d_grid.to_vec(), scaled_current: scaled, n_sites })
}

/// Mean centre of mass of the right eigenvectors, Σ_j j|ψ_j|² / Σ_j |ψ_j|²
/// averaged over modes, with sites numbered 1..N.
pub fn skin_measure(h: &CMatrix) -> Result<f64> {
    let n = h.nrows();
    if n == 0 || h.ncols() != n {
        return Err(Error::Numerical(format!("skin measure of a {}x{} matrix", n, h.ncols())));
    }
    let e = linalg::eigen(h)?;
    let cond = e.condition();
    if !(cond <= 1e12) {
        return Err(Error::Defective { condition: cond });
    }
    let mut total = 0.0;
    for col in e.vectors.column_iter() {
        let (mut w, mut s) = (0.0, 0.0);
        for (j, v) in col.iter().enumerate() {
            let p = v.norm_sqr();
            w += p;
            s += (j + 1) as f64 * p;
        }
        total += s / w;
    }
    Ok(total / n as f64)
}
