//! Transmission through the open chain and steady-state particle currents.
//!
//! Leads are wide-band (self-energy −iγ/2 at sites 1 and N). The bosonic
//! transmission is τ₊ = |G_N1|², τ₋ = |G_1N|². The fermionic currents with
//! the driving lead at μ_d and the other lead empty are
//!
//! ```text
//! I± = γ² ∫ dω/2π n_F(ω; μ_d) |G_N1 or G_1N(ω)|²        (frequency-dependent)
//! I±ᴹ = γ² n(μ_d) ∫ dω/2π |Gᴹ_N1 or Gᴹ_1N(ω)|²          (Markovian, n at Δ_c)
//! ```
//!
//! The Markovian currents are also available from the algebraic Lyapunov
//! equation of the local master equation.
//!
//! Integrands are handled in log form: I = e^L ∫ exp(h(ω) − L) dω with
//! h = ln(integrand) and L its maximum on a probe grid, so that currents far
//! below the f64 range (I₋ for long chains) still come out with a usable
//! logarithm.

use std::cell::Cell;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{build_matrix, ln_corner_element};
use crate::linalg::{self, CMatrix, Lu};
use crate::model::{ComplexFrequency, Model, ModelParams};
use crate::momentum::{dissipationless_mode, linspace};
use crate::quadrature::{integrate, QuadOptions};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Drive at site 1, collect at site N (I₊, τ₊).
    LeftToRight,
    /// Drive at site N, collect at site 1 (I₋, τ₋).
    RightToLeft,
}

impl Direction {
    pub fn is_reverse(self) -> bool {
        self == Direction::RightToLeft
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadConfig {
    /// Chemical potential of the lead at site 1; −∞ for an empty lead.
    pub mu_left: f64,
    pub mu_right: f64,
    /// Inverse temperature; `f64::INFINITY` for a sharp Fermi edge.
    pub beta: f64,
    pub gamma: f64,
}

impl LeadConfig {
    pub fn from_params(p: &ModelParams) -> Self {
        Self {
            mu_left: f64::NEG_INFINITY,
            mu_right: f64::NEG_INFINITY,
            beta: p.beta,
            gamma: p.gamma,
        }
    }

    /// Driving lead at `mu_d`, the other lead empty.
    pub fn driven(self, direction: Direction, mu_d: f64) -> Self {
        match direction {
            Direction::LeftToRight => Self {
                mu_left: mu_d,
                mu_right: f64::NEG_INFINITY,
                ..self
            },
            Direction::RightToLeft => Self {
                mu_left: f64::NEG_INFINITY,
                mu_right: mu_d,
                ..self
            },
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter { name: "gamma", reason: "must be non-negative".into() });
        }
        if !(self.beta > 0.0) {
            return Err(Error::InvalidParameter { name: "beta", reason: "must be positive or infinite".into() });
        }
        Ok(())
    }
}

/// Fermi function n_F(ω) = 1/(e^{β(ω−μ)} + 1), with the β = ∞ and μ = −∞ limits.
pub fn fermi(omega: f64, mu: f64, beta: f64) -> f64 {
    ln_fermi(omega, mu, beta).exp()
}

/// ln n_F(ω), finite far into the empty tail.
pub fn ln_fermi(omega: f64, mu: f64, beta: f64) -> f64 {
    if mu == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if beta.is_infinite() {
        return if omega < mu {
            0.0
        } else if omega == mu {
            -std::f64::consts::LN_2
        } else {
            f64::NEG_INFINITY
        };
    }
    let x = beta * (omega - mu);
    // −ln(1 + e^x)
    if x > 0.0 {
        -x - (-x).exp().ln_1p()
    } else {
        -x.exp().ln_1p()
    }
}

fn with_gamma(model: &Model, gamma: f64) -> Model {
    model.with_params(ModelParams { gamma, ..model.params })
}

/// ln |G_N1(ω)|² (or |G_1N|²) with leads attached.
pub fn ln_transmission(model: &Model, omega: f64, direction: Direction) -> Result<f64> {
    let h = build_matrix(model, ComplexFrequency::real(omega), true)?;
    Ok(2.0 * ln_corner_element(&h, direction.is_reverse())?.re)
}

/// τ± = |[G(ω)]_{N1}|² or |[G(ω)]_{1N}|².
pub fn transmission(model: &Model, omega: f64, direction: Direction) -> Result<f64> {
    if !(model.params.gamma > 0.0) {
        return Err(Error::InvalidParameter { name: "gamma", reason: "transmission needs attached leads (gamma > 0)".into() });
    }
    Ok(ln_transmission(model, omega, direction)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurrentResult {
    /// Particle current in units of g (underflows to 0 when `ln_value` < −745).
    pub value: f64,
    /// ln of the current; −∞ for an exactly vanishing current.
    pub ln_value: f64,
    pub direction: Direction,
    pub quadrature_error: f64,
}

impl CurrentResult {
    fn zero(direction: Direction) -> Self {
        Self { value: 0.0, ln_value: f64::NEG_INFINITY, direction, quadrature_error: 0.0 }
    }
}

/// Integrates exp(h(ω)) over (lo, hi) in log form; returns (ln I, error·e^{−lnI}).
fn log_integral<H>(h: H, lo: f64, hi: f64, probes: &[f64], breakpoints: &[f64], opts: &QuadOptions) -> Result<(f64, f64)>
where
    H: Fn(f64) -> Result<f64>,
{
    let failure = Cell::new(None);
    let eval = |w: f64| -> f64 {
        match h(w) {
            Ok(v) => v,
            Err(e) => {
                failure.set(Some(e));
                f64::NEG_INFINITY
            }
        }
    };
    let scale = probes
        .iter()
        .filter(|w| **w >= lo && **w <= hi)
        .map(|&w| eval(w))
        .fold(f64::NEG_INFINITY, f64::max);
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if scale == f64::NEG_INFINITY {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    let r = integrate(|w| (eval(w) - scale).exp(), lo, hi, breakpoints, opts)?;
    if let Some(e) = failure.take() {
        return Err(e);
    }
    if r.value <= 0.0 {
        return Ok((f64::NEG_INFINITY, r.error));
    }
    Ok((scale + r.value.ln(), r.error / r.value))
}

/// Probe grid and breakpoints covering the broadened band, ω* and μ_d.
fn frequency_layout(p: &ModelParams, mu_d: Option<f64>, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let w = 10.0 * (p.kappa + p.gamma + p.g_b);
    let lo = p.delta_c - 2.0 * p.g - w;
    let hi = p.delta_c + 2.0 * p.g + w;
    let omega_star = dissipationless_mode(p).omega_star;
    let mut probes = linspace(lo, hi, 4001);
    probes.extend(linspace(p.delta_c - 2.5 * p.g, p.delta_c + 2.5 * p.g, 4001));
    let mut bps = vec![lo, hi, p.delta_c - 2.0 * p.g, p.delta_c + 2.0 * p.g, p.delta_b, omega_star];
    let mut s = 0.5;
    while s > 1e-4 {
        bps.push(omega_star - s);
        bps.push(omega_star + s);
        s *= 0.5;
    }
    probes.push(omega_star);
    if let Some(mu) = mu_d {
        probes.push(mu);
        bps.push(mu);
        if beta.is_finite() {
            for k in [-20.0, -5.0, -2.0, -1.0, 1.0, 2.0, 5.0, 20.0] {
                bps.push(mu + k / beta);
            }
        }
    }
    (probes, bps)
}

/// Steady-state current with all bulk baths empty, from the retarded G(ω).
pub fn current_nonmarkovian(model: &Model, lc: &LeadConfig, mu_d: f64, direction: Direction) -> Result<CurrentResult> {
    current_nonmarkovian_with(model, lc, mu_d, direction, &QuadOptions::default())
}

pub fn current_nonmarkovian_with(
    model: &Model,
    lc: &LeadConfig,
    mu_d: f64,
    direction: Direction,
    opts: &QuadOptions,
) -> Result<CurrentResult> {
    lc.validate()?;
    if lc.gamma == 0.0 || mu_d == f64::NEG_INFINITY {
        return Ok(CurrentResult::zero(direction));
    }
    let model = with_gamma(model, lc.gamma);
    let p = &model.params;
    let (probes, bps) = frequency_layout(p, Some(mu_d), lc.beta);
    let upper = if lc.beta.is_infinite() { mu_d } else { f64::INFINITY };
    let prefactor = 2.0 * lc.gamma.ln() - (2.0 * PI).ln();
    let h = |w: f64| -> Result<f64> {
        let lf = ln_fermi(w, mu_d, lc.beta);
        if lf == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(prefactor + lf + ln_transmission(&model, w, direction)?)
    };
    let (ln_value, rel_err) = log_integral(h, f64::NEG_INFINITY, upper, &probes, &bps, opts)?;
    let value = ln_value.exp();
    Ok(CurrentResult { value, ln_value, direction, quadrature_error: rel_err * value })
}

/// Occupation of the local-master-equation lead, n(μ) = 1/(e^{β(Δ_c−μ)} + 1).
pub fn local_occupation(p: &ModelParams, mu: f64, beta: f64) -> f64 {
    fermi(p.delta_c, mu, beta)
}

fn require_markovian(model: &Model) -> Result<()> {
    if model.is_markovian() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "dissipation", reason: "the local-master-equation current needs a Markovian model".into() })
    }
}

/// Markovian current γ² n(μ_d) ∫ dω/2π |Gᴹ(ω)|² over the whole real line.
pub fn current_markovian_negf(model: &Model, lc: &LeadConfig, mu_d: f64, direction: Direction) -> Result<CurrentResult> {
    current_markovian_negf_with(model, lc, mu_d, direction, &QuadOptions::default())
}

pub fn current_markovian_negf_with(
    model: &Model,
    lc: &LeadConfig,
    mu_d: f64,
    direction: Direction,
    opts: &QuadOptions,
) -> Result<CurrentResult> {
    require_markovian(model)?;
    lc.validate()?;
    let ln_n = ln_fermi(model.params.delta_c, mu_d, lc.beta);
    if lc.gamma == 0.0 || ln_n == f64::NEG_INFINITY {
        return Ok(CurrentResult::zero(direction));
    }
    let model = with_gamma(model, lc.gamma);
    let (probes, bps) = frequency_layout(&model.params, None, lc.beta);
    // The occupation is a constant factor; keeping it outside the integrand
    // avoids cancellation when ln n is large.
    let prefactor = 2.0 * lc.gamma.ln() - (2.0 * PI).ln() + ln_n;
    let h = |w: f64| ln_transmission(&model, w, direction);
    let (ln_t, rel_err) = log_integral(h, f64::NEG_INFINITY, f64::INFINITY, &probes, &bps, opts)?;
    let ln_value = prefactor + ln_t;
    let value = ln_value.exp();
    Ok(CurrentResult { value, ln_value, direction, quadrature_error: rel_err * value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum LyapunovMethod {
    /// Diagonalisation of H_eff.
    Eigen,
    /// Bartels–Stewart on the complex Schur form.
    Schur,
    /// Kronecker-vectorised dense solve (small N only).
    Vectorized,
}

/// Largest chain accepted by the vectorised solver (N² × N² dense system).
pub const MAX_VECTORIZED_SITES: usize = 32;

/// Steady-state correlation matrix C_lm = ⟨c_l† c_m⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    pub c: CMatrix,
    pub method: LyapunovMethod,
    /// ‖i Āᴴ C − i C A + Q‖_max of the solved equation.
    pub residual: f64,
}

impl CorrelationMatrix {
    pub fn occupation(&self, site: usize) -> f64 {
        self.c[(site, site)].re
    }

    pub fn hermiticity_error(&self) -> f64 {
        linalg::max_abs(&(&self.c - self.c.adjoint()))
    }

    /// Smallest and largest eigenvalue of the Hermitian part.
    pub fn eigenvalue_range(&self) -> (f64, f64) {
        let herm = (&self.c + self.c.adjoint()) * Complex64::new(0.5, 0.0);
        let ev = linalg::hermitian_eigenvalues(&herm);
        (ev[0], ev[ev.len() - 1])
    }
}

/// Dense H_eff of the local master equation: Markovian hoppings, −iΓ on
/// every site and −iγ/2 at sites 1 and N.
pub fn markovian_heff(model: &Model, gamma: f64) -> Result<CMatrix> {
    require_markovian(model)?;
    let model = with_gamma(model, gamma);
    let m = build_matrix(&model, ComplexFrequency::real(0.0), true)?;
    Ok(-m.to_dense())
}

/// Q_11 = γ n(μ_1), Q_NN = γ n(μ_N).
pub fn lead_injection(p: &ModelParams, lc: &LeadConfig) -> CMatrix {
    let n = p.n_sites;
    let mut q = CMatrix::zeros(n, n);
    q[(0, 0)] += lc.gamma * local_occupation(p, lc.mu_left, lc.beta);
    q[(n - 1, n - 1)] += lc.gamma * local_occupation(p, lc.mu_right, lc.beta);
    q
}

/// Solves 0 = i Aᴴ X − i X A + Q for X.
///
/// For C_lm = ⟨c_l† c_m⟩ and equations of motion dc/dt = −iHc the steady
/// state obeys this with A = Hᵀ.
pub fn solve_lyapunov(a: &CMatrix, q: &CMatrix, method: LyapunovMethod) -> Result<CMatrix> {
    match method {
        LyapunovMethod::Eigen => solve_eigen(a, q),
        LyapunovMethod::Schur => solve_schur(a, q),
        LyapunovMethod::Vectorized => solve_vectorized(a, q),
    }
}

pub fn lyapunov_residual(a: &CMatrix, q: &CMatrix, x: &CMatrix) -> f64 {
    let r = (a.adjoint() * x - x * a) * I + q;
    linalg::max_abs(&r)
}

fn solve_eigen(a: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    let e = linalg::eigen(a)?;
    let cond = e.condition();
    if !(cond <= 1e10) {
        return Err(Error::Defective { condition: cond });
    }
    let v = &e.vectors;
    let w = Lu::new(v.clone())?.inverse();
    // X̃ = Vᴴ X V satisfies Λ̄ X̃ − X̃ Λ = i Vᴴ Q V.
    let qt = v.adjoint() * q * v;
    let n = a.nrows();
    let xt = CMatrix::from_fn(n, n, |i, j| I * qt[(i, j)] / (e.values[i].conj() - e.values[j]));
    Ok(w.adjoint() * xt * w)
}

fn solve_schur(a: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    let (u, t) = linalg::schur(a)?;
    let n = a.nrows();
    // Tᴴ X̃ − X̃ T = i Uᴴ Q U, Tᴴ lower and T upper triangular.
    let rhs = u.adjoint() * q * &u * I;
    let mut x = CMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut s = rhs[(i, j)];
            for k in 0..i {
                s -= t[(k, i)].conj() * x[(k, j)];
            }
            for k in 0..j {
                s += x[(i, k)] * t[(k, j)];
            }
            let d = t[(i, i)].conj() - t[(j, j)];
            if d.norm() < 1e-300 {
                return Err(Error::Numerical("Lyapunov operator is singular (conj(λ_i) = λ_j)".into()));
            }
            x[(i, j)] = s / d;
        }
    }
    Ok(&u * x * u.adjoint())
}

fn solve_vectorized(a: &CMatrix, q: &CMatrix) -> Result<CMatrix> {
    let n = a.nrows();
    if n > MAX_VECTORIZED_SITES {
        return Err(Error::TooLarge { n, max: MAX_VECTORIZED_SITES });
    }
    let ah = a.adjoint();
    let idx = |i: usize, j: usize| i * n + j;
    let mut big = CMatrix::zeros(n * n, n * n);
    for i in 0..n {
        for j in 0..n {
            let row = idx(i, j);
            for k in 0..n {
                big[(row, idx(k, j))] += ah[(i, k)];
                big[(row, idx(i, k))] -= a[(k, j)];
            }
        }
    }
    let rhs: Vec<Complex64> = (0..n * n).map(|r| I * q[(r / n, r % n)]).collect();
    let sol = Lu::new(big)?.solve_vec(&rhs);
    Ok(CMatrix::from_fn(n, n, |i, j| sol[idx(i, j)]))
}

/// Steady state of the Markovian chain with local leads.
///
/// Diagonalisation first; ill-conditioned eigenvectors fall back to the Schur
/// route.
pub fn lyapunov_steady_state(model: &Model, lc: &LeadConfig) -> Result<CorrelationMatrix> {
    lyapunov_steady_state_with(model, lc, None)
}

pub fn lyapunov_steady_state_with(model: &Model, lc: &LeadConfig, method: Option<LyapunovMethod>) -> Result<CorrelationMatrix> {
    lc.validate()?;
    let h = markovian_heff(model, lc.gamma)?;
    let a = h.transpose();
    let q = lead_injection(&model.params, lc);
    let n = a.nrows();
    if linalg::max_abs(&q) == 0.0 {
        return Ok(CorrelationMatrix { c: CMatrix::zeros(n, n), method: method.unwrap_or(LyapunovMethod::Eigen), residual: 0.0 });
    }
    let qmax = linalg::max_abs(&q);
    let (c, used) = match method {
        Some(m) => (solve_lyapunov(&a, &q, m)?, m),
        None => match solve_eigen(&a, &q) {
            Ok(c) if lyapunov_residual(&a, &q, &c) <= 1e-10 * qmax => (c, LyapunovMethod::Eigen),
            Ok(_) | Err(Error::Defective { .. }) => (solve_schur(&a, &q)?, LyapunovMethod::Schur),
            Err(e) => return Err(e),
        },
    };
    let residual = lyapunov_residual(&a, &q, &c);
    Ok(CorrelationMatrix { c, method: used, residual })
}

/// γ C_NN (left to right) or γ C_11 (right to left) from the Lyapunov solution.
pub fn current_markovian_lyapunov(model: &Model, lc: &LeadConfig, mu_d: f64, direction: Direction) -> Result<CurrentResult> {
    let lc = lc.driven(direction, mu_d);
    if lc.gamma == 0.0 {
        return Ok(CurrentResult::zero(direction));
    }
    let c = lyapunov_steady_state(model, &lc)?;
    let n = model.params.n_sites;
    let site = match direction {
        Direction::LeftToRight => n - 1,
        Direction::RightToLeft => 0,
    };
    let value = lc.gamma * c.occupation(site);
    Ok(CurrentResult {
        value,
        ln_value: if value > 0.0 { value.ln() } else { f64::NEG_INFINITY },
        direction,
        quadrature_error: 0.0,
    })
}
