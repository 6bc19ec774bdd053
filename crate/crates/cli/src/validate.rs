//! Seeded oracle suite: each check compares a fast path against an
//! independent reference on random inputs.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use nonrecip::greens::{build_matrix, extended_greens_block, GreensRecursion};
use nonrecip::linalg::{self, hermitian_eigenvalues};
use nonrecip::model::flux_hamiltonians;
use nonrecip::momentum::{dispersion, dissipationless_mode};
use nonrecip::transport::{current_markovian_lyapunov, current_markovian_negf, lyapunov_steady_state_with};
use nonrecip::{scaling_factors, CMatrix, Complex64, ComplexFrequency, Direction, LeadConfig, LyapunovMethod, Model, Result, Table};

use crate::config::RunConfig;
use crate::experiments::Output;

struct Check {
    name: &'static str,
    cases: usize,
    max_error: f64,
    tolerance: f64,
}

fn rel_error(a: &CMatrix, b: &CMatrix) -> f64 {
    linalg::max_abs(&(a - b)) / linalg::max_abs(b)
}

fn random_z(rng: &mut ChaCha8Rng, centre: f64) -> ComplexFrequency {
    let z = Complex64::new(centre + rng.random_range(-3.0..3.0), rng.random_range(1e-3..1.0));
    ComplexFrequency::new(z).expect("upper half plane")
}

pub fn run(cfg: &RunConfig) -> Result<Output> {
    let p = cfg.params;
    let model = cfg.model();
    let trials = cfg.trials;
    // Every check draws from its own stream so checks are independent of order.
    let rng = |i: u64| ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i));
    let mut checks = Vec::new();

    let mut r = rng(1);
    let mut worst = 0.0f64;
    for t in 0..trials {
        let h = build_matrix(&model, random_z(&mut r, p.delta_c), t % 2 == 0)?;
        let rec = GreensRecursion::new(&h)?.to_dense()?;
        worst = worst.max(rel_error(&rec, &linalg::inverse(&h.to_dense())?));
    }
    checks.push(Check { name: "recursion_vs_dense_inverse", cases: trials, max_error: worst, tolerance: 1e-9 });

    if !model.is_markovian() {
        let small = model.with_params(p.with_sites(p.n_sites.min(64)));
        let mut r = rng(2);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let z = random_z(&mut r, p.delta_c);
            let ext = extended_greens_block(&small, z, false)?;
            let reduced = GreensRecursion::new(&build_matrix(&small, z, false)?)?.to_dense()?;
            worst = worst.max(rel_error(&ext, &reduced));
        }
        checks.push(Check { name: "auxiliary_sites_integrated_out", cases: trials, max_error: worst, tolerance: 1e-9 });
    }

    let mut r = rng(3);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let f = scaling_factors(&model, p.delta_c + r.random_range(-4.0..4.0))?;
        worst = worst.max(f.f_plus.max(f.f_minus) - 1.0);
    }
    checks.push(Check { name: "scaling_factor_bound", cases: trials, max_error: worst.max(0.0), tolerance: 1e-9 });

    let k_star = dissipationless_mode(&p).k_star;
    let mut r = rng(4);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let z = random_z(&mut r, p.delta_c);
        let scale = model.gamma_at(z)?.norm();
        if scale > 0.0 {
            worst = worst.max(dispersion(&model, k_star, z)?.im.abs() / scale);
        }
    }
    checks.push(Check { name: "lossless_momentum", cases: trials, max_error: worst, tolerance: 1e-12 });

    let frozen = Model::markovian_with(p, cfg.markovian_rate());
    let lc = LeadConfig::from_params(&p);
    if lc.gamma > 0.0 {
        let lyap_model = frozen.with_params(p.with_sites(p.n_sites.min(32)));
        let mut r = rng(5);
        let mut worst = 0.0f64;
        for _ in 0..trials {
            let leads = LeadConfig { mu_left: p.delta_c + r.random_range(-2.0..2.0), mu_right: p.delta_c + r.random_range(-2.0..2.0), ..lc };
            let fast = lyapunov_steady_state_with(&lyap_model, &leads, Some(LyapunovMethod::Eigen))?;
            let exact = lyapunov_steady_state_with(&lyap_model, &leads, Some(LyapunovMethod::Vectorized))?;
            worst = worst.max(rel_error(&fast.c, &exact.c));
        }
        checks.push(Check { name: "lyapunov_vs_vectorized", cases: trials, max_error: worst, tolerance: 1e-9 });

        let negf_model = frozen.with_params(p.with_sites(p.n_sites.min(64)));
        let mut r = rng(6);
        let mut worst = 0.0f64;
        for t in 0..trials {
            let mu = p.delta_c + r.random_range(-2.0..2.0);
            let dir = if t % 2 == 0 { Direction::LeftToRight } else { Direction::RightToLeft };
            let a = current_markovian_lyapunov(&negf_model, &lc, mu, dir)?.value;
            let b = current_markovian_negf(&negf_model, &lc, mu, dir)?.value;
            worst = worst.max((a - b).abs() / b);
        }
        checks.push(Check { name: "lyapunov_vs_greens_function_current", cases: trials, max_error: worst, tolerance: 1e-4 });
    }

    let gauge = p.with_sites(p.n_sites.min(16));
    let mut r = rng(7);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let (flux, transformed) = flux_hamiltonians(&gauge, r.random_range(-PI..PI));
        let a = hermitian_eigenvalues(&flux);
        let b = hermitian_eigenvalues(&transformed);
        worst = a.iter().zip(&b).fold(worst, |m, (x, y)| m.max((x - y).abs()));
    }
    checks.push(Check { name: "flux_gauge_spectrum", cases: trials, max_error: worst, tolerance: 1e-10 });

    let mut table = Table::new(["check", "cases", "max_error", "tolerance", "passed"]);
    let mut report = Vec::new();
    let mut ok = true;
    let mut summary = serde_json::Map::new();
    for (i, c) in checks.iter().enumerate() {
        let passed = c.max_error <= c.tolerance;
        ok &= passed;
        table.push(vec![(i + 1) as f64, c.cases as f64, c.max_error, c.tolerance, if passed { 1.0 } else { 0.0 }]);
        report.push(format!(
            "{} {}: max error {:.3e} over {} cases (tol {:.0e})",
            if passed { "PASS" } else { "FAIL" },
            c.name,
            c.max_error,
            c.cases,
            c.tolerance
        ));
        summary.insert(c.name.into(), json!({ "check": i + 1, "max_error": c.max_error, "tolerance": c.tolerance, "passed": passed }));
    }
    Ok(Output { table, summary: summary.into(), report, ok })
}
