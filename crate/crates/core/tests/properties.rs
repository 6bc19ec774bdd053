use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use nonrecip::analysis::{fit_scaling, skin_measure, FitModel};
use nonrecip::linalg::hermitian_eigenvalues;
use nonrecip::model::{flux_hamiltonians, gamma_of_z, hoppings, markovian_hoppings};
use nonrecip::momentum::{dissipationless_mode, dispersion, fwhm, linspace, local_maxima, spectral_function};
use nonrecip::transport::markovian_heff;
use nonrecip::{ComplexFrequency, Model, ModelParams, SelfEnergyModel};

fn upper_z() -> impl Strategy<Value = ComplexFrequency> {
    (-5.0..5.0f64, 0.0..2.0f64).prop_map(|(re, im)| ComplexFrequency::new(Complex64::new(re, im)).unwrap())
}

proptest! {
    #[test]
    fn no_coupling_no_dressing(z in upper_z(), phi in -PI..PI) {
        let p = ModelParams { g_b: 0.0, phi, ..ModelParams::default() };
        let s = SelfEnergyModel::from_kappa(&p);
        prop_assert_eq!(gamma_of_z(&p, &s, z).unwrap(), Complex64::new(0.0, 0.0));
        let h = hoppings(&p, &s, z).unwrap();
        prop_assert_eq!(h.t_plus, Complex64::new(-1.0, 0.0));
        prop_assert_eq!(h.t_minus, Complex64::new(-1.0, 0.0));
    }

    #[test]
    fn markovian_path_shares_the_hopping_formula(phi in -PI..PI, c in 0.0..2.0f64) {
        let p = ModelParams { phi, ..ModelParams::default() };
        let z = ComplexFrequency::real(0.3);
        // Σ chosen so that Γ(z) = c at this z.
        let (g_b, delta_b) = (p.g_b, p.delta_b);
        let s = SelfEnergyModel::closed_form(move |w| 2.0 * g_b * g_b / c - Complex64::i() * (delta_b - w));
        let a = markovian_hoppings(&p, c);
        let b = hoppings(&p, &s, z).unwrap();
        prop_assert!((a.t_plus - b.t_plus).norm() <= 1e-13);
        prop_assert!((a.t_minus - b.t_minus).norm() <= 1e-13);
    }

    #[test]
    fn full_turn_in_phase_is_exact(z in upper_z(), phi in -PI..PI) {
        let p = ModelParams { phi, ..ModelParams::default() };
        let q = ModelParams { phi: phi + 2.0 * PI, ..p };
        let s = SelfEnergyModel::from_kappa(&p);
        let a = hoppings(&p, &s, z).unwrap();
        let b = hoppings(&q, &s, z).unwrap();
        prop_assert!((a.t_plus - b.t_plus).norm() <= 1e-14);
        prop_assert!((a.t_minus - b.t_minus).norm() <= 1e-14);
    }

    #[test]
    fn dissipationless_momentum_is_lossless(z in upper_z(), phi in 0.01..(2.0 * PI - 0.01)) {
        let p = ModelParams { phi, ..ModelParams::default() };
        let model = Model::non_markovian(p);
        let mode = dissipationless_mode(&p);
        prop_assert!((1.0 + (mode.k_star + phi).cos()).abs() <= 1e-12);
        let eps = dispersion(&model, mode.k_star, z).unwrap();
        prop_assert!(eps.im.abs() <= 1e-12 * model.gamma_at(z).unwrap().norm().max(1e-300));
        prop_assert!((eps.re - mode.omega_star).abs() <= 1e-12);
    }

    #[test]
    fn flux_gauge_preserves_spectrum(theta in -PI..PI, n in 2usize..9) {
        let p = ModelParams::default().with_sites(n);
        let (a, b) = flux_hamiltonians(&p, theta);
        prop_assert_eq!(a.nrows(), 2 * n - 1);
        prop_assert_eq!(&a, &a.adjoint());
        prop_assert_eq!(&b, &b.adjoint());
        let ea = hermitian_eigenvalues(&a);
        let eb = hermitian_eigenvalues(&b);
        for (x, y) in ea.iter().zip(&eb) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn spectral_function_is_non_negative(k in -PI..PI, w in -6.0..6.0f64) {
        let model = Model::non_markovian(ModelParams::default());
        prop_assert!(spectral_function(&model, k, w, 0.0).unwrap() >= -1e-12);
    }

    #[test]
    fn fit_ignores_overall_scale(scale in 1e-6..1e6f64, p in -2.0..0.0f64, a in 0.0..0.05f64) {
        let n = [16.0f64, 32.0, 64.0, 128.0, 256.0];
        let noisy = |v: f64, i: usize| 1.0 + 0.1 * ((i * 7 % 5) as f64 - 2.0) / v.ln();
        let ip: Vec<f64> = n.iter().enumerate().map(|(i, v)| v.powf(p) * noisy(*v, i)).collect();
        let ie: Vec<f64> = n.iter().enumerate().map(|(i, v)| (-a * v).exp() * noisy(*v, i)).collect();
        for (vals, model) in [(ip, FitModel::PowerLaw), (ie, FitModel::Exponential)] {
            let scaled: Vec<f64> = vals.iter().map(|v| v * scale).collect();
            let f1 = fit_scaling(&n, &vals, model).unwrap();
            let f2 = fit_scaling(&n, &scaled, model).unwrap();
            prop_assert!((f1.parameter - f2.parameter).abs() <= 1e-12);
            prop_assert!((f1.r_squared - f2.r_squared).abs() <= 1e-10);
            prop_assert!((f2.prefactor / f1.prefactor / scale - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn flux_phases_at_reference_angle() {
    let p = ModelParams::default().with_sites(3);
    let theta = 2.0 * PI / 9.0;
    let (flux, gauge) = flux_hamiltonians(&p, theta);
    // Auxiliary site of the first triangle sits after the three chain sites.
    let aux = 3;
    let expect = Complex64::from_polar(p.g_b, 2.0 * PI / 3.0);
    assert!((gauge[(aux, 1)] - expect).norm() < 1e-15);
    assert!((gauge[(0, 1)] - Complex64::new(-p.g, 0.0)).norm() < 1e-15);
    let (a, b) = flux_hamiltonians(&p, 0.0);
    assert_eq!(a, b);
    assert_ne!(flux, gauge);
}

#[test]
fn bath_induced_loss_peaks_at_auxiliary_energy() {
    let p = ModelParams::default();
    let s = SelfEnergyModel::from_kappa(&p);
    let grid = linspace(-3.0, 3.0, 6001);
    let re: Vec<f64> = grid.iter().map(|&w| gamma_of_z(&p, &s, ComplexFrequency::real(w)).unwrap().re).collect();
    assert!(re.iter().all(|v| *v > 0.0));
    let peak = re.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!((grid[peak] - p.delta_b).abs() <= 1e-3);
}

#[test]
fn free_chain_peak_is_a_lorentzian_of_width_two_eta() {
    let p = ModelParams { g_b: 0.0, ..ModelParams::default() };
    let model = Model::non_markovian(p);
    let eta = 1e-2;
    let k = 0.7f64;
    let centre = -2.0 * k.cos();
    let w = linspace(centre - 0.2, centre + 0.2, 40001);
    let a: Vec<f64> = w.iter().map(|&x| spectral_function(&model, k, x, eta).unwrap()).collect();
    let peaks = local_maxima(&a);
    assert_eq!(peaks.len(), 1);
    assert!((w[peaks[0]] - centre).abs() < 1e-5);
    assert!((fwhm(&w, &a, peaks[0]).unwrap() - 2.0 * eta).abs() < 1e-6);
}

#[test]
fn dissipationless_peak_location() {
    let p = ModelParams::default();
    let model = Model::non_markovian(p);
    let mode = dissipationless_mode(&p);
    let w = linspace(p.delta_c - 3.0, p.delta_c + 3.0, 801);
    let a: Vec<f64> = w.iter().map(|&x| spectral_function(&model, mode.k_star, x, 1e-3).unwrap()).collect();
    let top = a.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
    assert!((w[top] - mode.omega_star).abs() <= 6.0 / 800.0);
}

/// Dominant-peak FWHM at ±k*: the +k* mode is lossless (its width is the
/// broadening η alone) while the −k* mode is strongly damped.
#[test]
fn opposite_momenta_have_unequal_linewidths() {
    let p = ModelParams::default();
    let model = Model::non_markovian(p);
    let k = dissipationless_mode(&p).k_star;
    let eta = 1e-3;
    let w = linspace(p.delta_c - 3.0, p.delta_c + 3.0, 60001);
    let width = |k: f64| {
        let a: Vec<f64> = w.iter().map(|&x| spectral_function(&model, k, x, eta).unwrap()).collect();
        let top = a.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).unwrap().0;
        fwhm(&w, &a, top).unwrap()
    };
    let (neg, pos) = (width(-k), width(k));
    assert!((pos - 2.0 * eta).abs() < 1e-4, "FWHM at +k* {pos}");
    assert!(neg >= 3.0 * pos, "FWHM at -k* {neg}, at +k* {pos}");
}

/// Freezing Γ gives the same spectral function as writing the frozen
/// dispersion out by hand.
#[test]
fn markovian_spectral_function_is_frozen_dispersion() {
    let p = ModelParams::default();
    let model = Model::markovian(p);
    let gamma = p.markovian_gamma();
    for k in linspace(-PI, PI, 41) {
        for w in linspace(-3.0, 3.0, 61) {
            let eps = p.delta_c - 2.0 * p.g * k.cos() - Complex64::i() * Complex64::new(gamma, 0.0) * (1.0 + (k + p.phi).cos());
            let expect = -(Complex64::new(w, 0.0) - eps).inv().im / PI;
            assert_eq!(spectral_function(&model, k, w, 0.0).unwrap(), expect);
        }
    }
}

fn hatano_nelson(n: usize, t_plus: Complex64, t_minus: Complex64) -> nalgebra::DMatrix<Complex64> {
    nalgebra::DMatrix::from_fn(n, n, |i, j| {
        if i == j + 1 {
            t_plus
        } else if j == i + 1 {
            t_minus
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

#[test]
fn balanced_hoppings_give_rotated_real_spectrum_and_no_skin() {
    for (phi1, phi2) in [(0.3, 0.3), (1.1, -0.4), (2.5, 0.9)] {
        let n = 24;
        let h = hatano_nelson(n, Complex64::from_polar(1.0, phi1), Complex64::from_polar(1.0, phi2));
        let rot = Complex64::from_polar(1.0, -0.5 * (phi1 + phi2));
        let ev = nonrecip::linalg::eigen(&h).unwrap();
        for l in &ev.values {
            assert!((rot * l).im.abs() <= 1e-10);
        }
        assert!((skin_measure(&h).unwrap() - 12.5).abs() <= 1e-9);
    }
}

#[test]
fn skin_centre_moves_right_with_growing_asymmetry() {
    let n = 40;
    let mut last = f64::NEG_INFINITY;
    for gamma in [0.02, 0.05, 0.09, 0.15, 0.25] {
        let model = Model::markovian_with(ModelParams::default().with_sites(n), gamma);
        let h = model.hoppings(ComplexFrequency::real(0.0)).unwrap();
        assert!(h.t_plus.norm() > h.t_minus.norm());
        let centre = skin_measure(&markovian_heff(&model, 0.0).unwrap()).unwrap();
        assert!(centre > last, "centre {centre} after {last}");
        last = centre;
    }
    assert!(last > 0.7 * n as f64);
}
