//! Experiment drivers. Each returns a table plus a JSON summary.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde_json::{json, Value};

use nonrecip::analysis::{fit_scaling_ln, ndqpt_scan, FitModel};
use nonrecip::momentum::{linspace, spectral_heatmap};
use nonrecip::transport::{current_markovian_lyapunov, current_markovian_negf_with, current_nonmarkovian_with};
use nonrecip::{scaling_factors, transmission, CurrentResult, Direction, Model, QuadOptions, Result, Table};

use crate::config::{Bath, Experiment, RunConfig, Scan};

pub struct Output {
    pub table: Table,
    pub summary: Value,
    /// Lines for stdout.
    pub report: Vec<String>,
    /// False when a validation check failed.
    pub ok: bool,
}

pub fn run(cfg: &RunConfig) -> Result<Output> {
    match cfg.experiment {
        Experiment::Spectral => spectral(cfg),
        Experiment::ScalingFactors => scaling(cfg),
        Experiment::Transmission => transmission_scan(cfg),
        Experiment::CurrentScan => current_scan(cfg),
        Experiment::Ndqpt => ndqpt(cfg),
        Experiment::MarkovianCompare => markovian_compare(cfg),
        Experiment::Validate => crate::validate::run(cfg),
    }
}

fn omega_grid(cfg: &RunConfig) -> Vec<f64> {
    linspace(cfg.omega_min, cfg.omega_max, cfg.omega_points)
}

fn mu_grid(cfg: &RunConfig) -> Vec<f64> {
    linspace(cfg.mu_min, cfg.mu_max, cfg.mu_points)
}

fn spectral(cfg: &RunConfig) -> Result<Output> {
    let grid = spectral_heatmap(&cfg.model(), &linspace(-PI, PI, cfg.k_points), &omega_grid(cfg), cfg.eta)?;
    let mut table = Table::new(["k", "omega", "A"]);
    for (k, row) in grid.k_values.iter().zip(&grid.a_values) {
        for (w, a) in grid.omega_values.iter().zip(row) {
            table.push(vec![*k, *w, *a]);
        }
    }
    let min = grid.min_value();
    Ok(Output {
        table,
        summary: json!({ "min_A": min }),
        report: vec![format!("{} x {} grid, min A = {min:.3e}", cfg.k_points, cfg.omega_points)],
        ok: true,
    })
}

fn scaling(cfg: &RunConfig) -> Result<Output> {
    let model = cfg.model();
    let rows = omega_grid(cfg)
        .par_iter()
        .map(|&w| scaling_factors(&model, w).map(|f| vec![w, f.f_plus, f.f_minus]))
        .collect::<Result<Vec<_>>>()?;
    let max_plus = rows.iter().map(|r| r[1]).fold(0.0, f64::max);
    let max_minus = rows.iter().map(|r| r[2]).fold(0.0, f64::max);
    let mut table = Table::new(["omega", "f_plus", "f_minus"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Output {
        table,
        summary: json!({ "max_f_plus": max_plus, "max_f_minus": max_minus }),
        report: vec![format!("max f+ = {max_plus:.10}, max f- = {max_minus:.10}")],
        ok: true,
    })
}

fn transmission_scan(cfg: &RunConfig) -> Result<Output> {
    let model = cfg.model();
    let free = Model::non_markovian(cfg.params.reciprocal());
    let rows = omega_grid(cfg)
        .par_iter()
        .map(|&w| -> Result<Vec<f64>> {
            Ok(vec![
                w,
                transmission(&model, w, Direction::LeftToRight)?,
                transmission(&model, w, Direction::RightToLeft)?,
                transmission(&free, w, Direction::LeftToRight)?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(["omega", "tau_plus", "tau_minus", "tau_reciprocal"]);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Output { table, summary: json!({}), report: Vec::new(), ok: true })
}

fn current(model: &Model, cfg: &RunConfig, mu: f64, dir: Direction) -> Result<CurrentResult> {
    let opts = QuadOptions { rtol: cfg.rtol, ..QuadOptions::default() };
    let lc = cfg.leads();
    match cfg.bath {
        Bath::NonMarkovian => current_nonmarkovian_with(model, &lc, mu, dir, &opts),
        Bath::Markovian => current_markovian_negf_with(model, &lc, mu, dir, &opts),
    }
}

/// Runs every (point, direction) pair in parallel; results keep grid order.
fn current_pairs(cfg: &RunConfig, points: &[(usize, f64)]) -> Result<Vec<(CurrentResult, CurrentResult)>> {
    let jobs: Vec<(usize, f64, Direction)> = points
        .iter()
        .flat_map(|&(n, mu)| [(n, mu, Direction::LeftToRight), (n, mu, Direction::RightToLeft)])
        .collect();
    let base = cfg.model();
    let results = jobs
        .par_iter()
        .map(|&(n, mu, dir)| current(&base.with_params(cfg.params.with_sites(n)), cfg, mu, dir))
        .collect::<Result<Vec<_>>>()?;
    Ok(results.chunks(2).map(|c| (c[0], c[1])).collect())
}

fn fit_json(x: &[f64], ln_i: &[f64]) -> Value {
    let mut out = serde_json::Map::new();
    for (name, model) in [("power_law", FitModel::PowerLaw), ("exponential", FitModel::Exponential)] {
        if let Ok(f) = fit_scaling_ln(x, ln_i, model) {
            out.insert(name.into(), json!({ "parameter": f.parameter, "ln_prefactor": f.prefactor.ln(), "r_squared": f.r_squared }));
        }
    }
    Value::Object(out)
}

fn current_scan(cfg: &RunConfig) -> Result<Output> {
    let points: Vec<(usize, f64)> = match cfg.scan {
        Scan::N => cfg.n_values.iter().map(|&n| (n, cfg.mu_d)).collect(),
        Scan::MuD => mu_grid(cfg).into_iter().map(|mu| (cfg.params.n_sites, mu)).collect(),
    };
    let results = current_pairs(cfg, &points)?;
    let first = if cfg.scan == Scan::N { "N" } else { "mu_d" };
    let mut table = Table::new([first, "I_plus", "I_minus", "quadrature_error"]);
    for (&(n, mu), (fwd, rev)) in points.iter().zip(&results) {
        let x = if cfg.scan == Scan::N { n as f64 } else { mu };
        table.push(vec![x, fwd.value, rev.value, fwd.quadrature_error.max(rev.quadrature_error)]);
    }
    let mut summary = json!({});
    let mut report = Vec::new();
    if cfg.scan == Scan::N && points.len() >= 4 {
        let x: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
        let plus: Vec<f64> = results.iter().map(|r| r.0.ln_value).collect();
        let minus: Vec<f64> = results.iter().map(|r| r.1.ln_value).collect();
        summary = json!({ "I_plus": fit_json(&x, &plus), "I_minus": fit_json(&x, &minus) });
        for (label, ln_i) in [("I+", &plus), ("I-", &minus)] {
            if let (Ok(p), Ok(e)) = (fit_scaling_ln(&x, ln_i, FitModel::PowerLaw), fit_scaling_ln(&x, ln_i, FitModel::Exponential)) {
                report.push(format!(
                    "{label}: power law p = {:.4} (R^2 {:.5}); exponential a = {:.5} (R^2 {:.5})",
                    p.parameter, p.r_squared, e.parameter, e.r_squared
                ));
            }
        }
    }
    Ok(Output { table, summary, report, ok: true })
}

fn ndqpt(cfg: &RunConfig) -> Result<Output> {
    let grid = mu_grid(cfg);
    let curve = ndqpt_scan(&cfg.model(), &cfg.leads(), &grid, cfg.params.n_sites)?;
    let mut table = Table::new(["mu_d", "sqrtN_I_plus"]);
    for (mu, s) in curve.mu_d_values.iter().zip(&curve.scaled_current) {
        table.push(vec![*mu, *s]);
    }
    let crossover = curve.crossover();
    Ok(Output {
        table,
        summary: json!({ "crossover": crossover }),
        report: crossover.map(|c| format!("steepest rise of sqrt(N) I+ at mu_d = {c:.4}")).into_iter().collect(),
        ok: true,
    })
}

fn markovian_compare(cfg: &RunConfig) -> Result<Output> {
    let model = Model::markovian_with(cfg.params, cfg.markovian_rate());
    let lc = cfg.leads();
    let points: Vec<(usize, f64)> = match cfg.scan {
        Scan::N => cfg.n_values.iter().map(|&n| (n, cfg.mu_d)).collect(),
        Scan::MuD => mu_grid(cfg).into_iter().map(|mu| (cfg.params.n_sites, mu)).collect(),
    };
    let opts = QuadOptions { rtol: cfg.rtol, ..QuadOptions::default() };
    let rows = points
        .par_iter()
        .map(|&(n, mu)| -> Result<Vec<f64>> {
            let m = model.with_params(cfg.params.with_sites(n));
            let mut row = vec![if cfg.scan == Scan::N { n as f64 } else { mu }];
            let mut worst = 0.0f64;
            for dir in [Direction::LeftToRight, Direction::RightToLeft] {
                let a = current_markovian_lyapunov(&m, &lc, mu, dir)?.value;
                let b = current_markovian_negf_with(&m, &lc, mu, dir, &opts)?.value;
                worst = worst.max(if b > 0.0 { (a - b).abs() / b } else { (a - b).abs() });
                row.extend([a, b]);
            }
            row.push(worst);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let first = if cfg.scan == Scan::N { "N" } else { "mu_d" };
    let mut table = Table::new([first, "I_plus_lyapunov", "I_plus_negf", "I_minus_lyapunov", "I_minus_negf", "max_relative_difference"]);
    let worst = rows.iter().map(|r| r[5]).fold(0.0, f64::max);
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Output {
        table,
        summary: json!({ "max_relative_difference": worst }),
        report: vec![format!("max relative Lyapunov/Green's-function difference {worst:.3e}")],
        ok: true,
    })
}
