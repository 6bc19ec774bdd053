use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nonrecip::analysis::{fit_scaling_ln, FitModel};
use nonrecip::greens::{build_matrix, greens_dense, scaling_factors};
use nonrecip::momentum::dissipationless_mode;
use nonrecip::transport::{
    current_markovian_lyapunov, current_markovian_negf, current_nonmarkovian, current_nonmarkovian_with, lead_injection,
    lyapunov_residual, lyapunov_steady_state, lyapunov_steady_state_with, markovian_heff, solve_lyapunov, transmission,
    LyapunovMethod,
};
use nonrecip::{integrate, ComplexFrequency, Direction, LeadConfig, Model, ModelParams, QuadOptions};

fn frozen_chain(n: usize) -> (Model, LeadConfig, f64) {
    let p = ModelParams { beta: 10.0, ..ModelParams::default() }.with_sites(n);
    (Model::markovian(p), LeadConfig::from_params(&p), dissipationless_mode(&p).omega_star)
}

#[test]
fn reciprocal_chain_transmits_equally() {
    let p = ModelParams { g_b: 0.0, ..ModelParams::blocking() };
    let model = Model::non_markovian(p);
    for i in 0..=40 {
        let w = -3.0 + 0.15 * i as f64;
        let a = transmission(&model, w, Direction::LeftToRight).unwrap();
        let b = transmission(&model, w, Direction::RightToLeft).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.max(1e-300), "w = {w}");
    }
}

#[test]
fn transmission_matches_dense_corner_elements() {
    let model = Model::non_markovian(ModelParams::blocking());
    for w in [-2.2, -1.0, -0.3, 0.8] {
        let g = greens_dense(&build_matrix(&model, ComplexFrequency::real(w), true).unwrap()).unwrap();
        let n = g.nrows();
        let fwd = transmission(&model, w, Direction::LeftToRight).unwrap();
        let rev = transmission(&model, w, Direction::RightToLeft).unwrap();
        assert!((fwd / g[(n - 1, 0)].norm_sqr() - 1.0).abs() < 1e-10);
        assert!((rev / g[(0, n - 1)].norm_sqr() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn two_site_lyapunov_matches_vectorized_solve() {
    let (model, lc, ws) = frozen_chain(2);
    let lc = lc.driven(Direction::LeftToRight, ws);
    let a = lyapunov_steady_state_with(&model, &lc, Some(LyapunovMethod::Eigen)).unwrap();
    let b = lyapunov_steady_state_with(&model, &lc, Some(LyapunovMethod::Vectorized)).unwrap();
    let diff = (&a.c - &b.c).iter().fold(0.0f64, |m, v| m.max(v.norm()));
    assert!(diff <= 1e-12, "{diff}");
}

#[test]
fn lyapunov_solvers_agree() {
    for n in [3usize, 8, 16, 32] {
        let (model, lc, _) = frozen_chain(n);
        let lc = LeadConfig { mu_left: 0.3, mu_right: -0.4, ..lc };
        let eig = lyapunov_steady_state_with(&model, &lc, Some(LyapunovMethod::Eigen)).unwrap();
        let schur = lyapunov_steady_state_with(&model, &lc, Some(LyapunovMethod::Schur)).unwrap();
        let vec = lyapunov_steady_state_with(&model, &lc, Some(LyapunovMethod::Vectorized)).unwrap();
        for other in [&schur, &vec] {
            let diff = (&eig.c - &other.c).iter().fold(0.0f64, |m, v| m.max(v.norm()));
            assert!(diff <= 1e-11, "N = {n}: {diff}");
        }
        assert!(eig.residual <= 1e-10 * lc.gamma);
    }
}

#[test]
fn vectorized_solver_is_capped() {
    let (model, lc, _) = frozen_chain(33);
    let h = markovian_heff(&model, lc.gamma).unwrap();
    let q = lead_injection(&model.params, &lc.driven(Direction::LeftToRight, 0.0));
    assert!(solve_lyapunov(&h.transpose(), &q, LyapunovMethod::Vectorized).is_err());
}

#[test]
fn correlation_matrix_is_a_valid_fermionic_state() {
    for n in [8usize, 24, 64] {
        let (model, lc, ws) = frozen_chain(n);
        let lc = LeadConfig { mu_left: ws, mu_right: ws + 0.5, ..lc };
        let c = lyapunov_steady_state(&model, &lc).unwrap();
        assert!(c.hermiticity_error() <= 1e-10);
        let (lo, hi) = c.eigenvalue_range();
        assert!(lo >= -1e-9 && hi <= 1.0 + 1e-9, "[{lo}, {hi}]");
        let q = lead_injection(&model.params, &lc);
        let h = markovian_heff(&model, lc.gamma).unwrap();
        assert!(lyapunov_residual(&h.transpose(), &q, &c.c) <= 1e-10 * lc.gamma);
    }
}

/// Full lead filling (μ = +∞) on a two-site chain: γC₂₂ is the bare NEGF
/// integral γ²∫|G₂₁|² dω/2π, evaluated here with the dense 2×2 inverse.
#[test]
fn filled_lead_two_site_current() {
    let (model, lc, _) = frozen_chain(2);
    let lc = LeadConfig { beta: f64::INFINITY, ..lc };
    let lyap = current_markovian_lyapunov(&model, &lc, f64::INFINITY, Direction::LeftToRight).unwrap();
    let g21 = |w: f64| {
        let g = greens_dense(&build_matrix(&model, ComplexFrequency::real(w), true).unwrap()).unwrap();
        g[(1, 0)].norm_sqr()
    };
    let opts = QuadOptions { rtol: 1e-12, atol: 0.0, ..Default::default() };
    let direct = integrate(g21, f64::NEG_INFINITY, f64::INFINITY, &[-1.0, 0.0, 1.0], &opts).unwrap().value;
    let expect = lc.gamma * lc.gamma * direct / (2.0 * PI);
    assert!((lyap.value / expect - 1.0).abs() < 1e-9, "{} vs {expect}", lyap.value);
}

#[test]
fn lyapunov_and_negf_agree_across_drive() {
    for n in [8usize, 33, 64] {
        let (model, lc, _) = frozen_chain(n);
        for mu in [-2.0, -1.0, 0.0, 1.0, 2.0] {
            for dir in [Direction::LeftToRight, Direction::RightToLeft] {
                let a = current_markovian_lyapunov(&model, &lc, mu, dir).unwrap().value;
                let b = current_markovian_negf(&model, &lc, mu, dir).unwrap().value;
                assert!((a / b - 1.0).abs() <= 1e-4, "N = {n}, mu = {mu}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn forward_current_dominates() {
    let p = ModelParams::default();
    let lc = LeadConfig::from_params(&p);
    let ws = dissipationless_mode(&p).omega_star;
    for n in [64usize, 256] {
        let model = Model::non_markovian(p.with_sites(n));
        for mu in [ws - 0.5, ws, ws + 0.3, 1.0] {
            let fwd = current_nonmarkovian(&model, &lc, mu, Direction::LeftToRight).unwrap();
            let rev = current_nonmarkovian(&model, &lc, mu, Direction::RightToLeft).unwrap();
            assert!(fwd.value >= -1e-12 && rev.value >= -1e-12);
            assert!(rev.ln_value <= fwd.ln_value, "N = {n}, mu = {mu}");
        }
    }
}

#[test]
fn tighter_tolerance_stays_within_reported_error() {
    let p = ModelParams::default().with_sites(128);
    let model = Model::non_markovian(p);
    let lc = LeadConfig::from_params(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..4 {
        let mu = rng.random_range(-2.0..1.0);
        let coarse = current_nonmarkovian(&model, &lc, mu, Direction::LeftToRight).unwrap();
        let fine_opts = QuadOptions { rtol: 5e-9, ..Default::default() };
        let fine = current_nonmarkovian_with(&model, &lc, mu, Direction::LeftToRight, &fine_opts).unwrap();
        assert!(coarse.quadrature_error <= 1e-8 * coarse.value + 1e-14);
        assert!((coarse.value - fine.value).abs() <= coarse.quadrature_error.max(1e-15 * coarse.value), "mu = {mu}");
    }
}

#[test]
fn drive_far_below_band_carries_nothing() {
    let p = ModelParams::default().with_sites(64);
    let model = Model::non_markovian(p);
    let lc = LeadConfig::from_params(&p);
    let r = current_nonmarkovian(&model, &lc, -8.0, Direction::LeftToRight).unwrap();
    assert!(r.value.sqrt() * 8.0 <= 1e-12);
}

#[test]
fn sharp_fermi_edge_is_supported() {
    let p = ModelParams { beta: f64::INFINITY, ..ModelParams::default() }.with_sites(64);
    let model = Model::non_markovian(p);
    let lc = LeadConfig::from_params(&p);
    let a = current_nonmarkovian(&model, &lc, -0.8, Direction::LeftToRight).unwrap();
    let b = current_nonmarkovian(&model, &lc, -0.7, Direction::LeftToRight).unwrap();
    assert!(a.value > 0.0 && b.value > a.value);
}

/// Long-chain decay of I₋ is set by the largest f₋ available below the drive:
/// slope of ln I₋ vs N ≈ 2 ln f₋(ω_peak).
#[test]
fn reverse_current_decays_at_the_scaling_factor_rate() {
    let p = ModelParams::default();
    let model = Model::non_markovian(p);
    let lc = LeadConfig::from_params(&p);
    let ws = dissipationless_mode(&p).omega_star;
    for mu in [ws - 0.1, ws + 0.1] {
        let ns = [512.0, 1024.0, 2048.0, 4096.0];
        let ln_i: Vec<f64> = ns
            .iter()
            .map(|&n| current_nonmarkovian(&model.with_params(p.with_sites(n as usize)), &lc, mu, Direction::RightToLeft).unwrap().ln_value)
            .collect();
        let fit = fit_scaling_ln(&ns, &ln_i, FitModel::Exponential).unwrap();
        let f_peak = (0..4000)
            .map(|i| mu - 4.0 + 4.0 * i as f64 / 4000.0)
            .map(|w| scaling_factors(&model, w).unwrap().f_minus)
            .fold(0.0, f64::max);
        let expect = -2.0 * f_peak.ln();
        assert!((fit.parameter / expect - 1.0).abs() <= 0.1, "mu = {mu}: a = {}, 2 ln f- = {expect}", fit.parameter);
    }
}

#[test]
fn markovian_reverse_current_is_exponential() {
    let p = ModelParams::default();
    let model = Model::markovian(p);
    let lc = LeadConfig::from_params(&p);
    let ns = [128.0, 256.0, 512.0, 1024.0, 2048.0, 4096.0];
    let ln_i: Vec<f64> = ns
        .iter()
        .map(|&n| current_markovian_negf(&model.with_params(p.with_sites(n as usize)), &lc, 0.1, Direction::RightToLeft).unwrap().ln_value)
        .collect();
    let fit = fit_scaling_ln(&ns, &ln_i, FitModel::Exponential).unwrap();
    assert!(fit.r_squared >= 0.99 && fit.parameter > 0.0, "{fit:?}");
}

#[test]
fn markovian_current_needs_occupied_drive() {
    let (model, lc, _) = frozen_chain(16);
    let r = current_markovian_negf(&model, &lc, -1e9, Direction::LeftToRight).unwrap();
    assert!(r.value < 1e-300);
    let h = markovian_heff(&model, 0.5).unwrap();
    assert_eq!(h[(0, 0)], Complex64::new(0.0, -0.09 - 0.25));
}
