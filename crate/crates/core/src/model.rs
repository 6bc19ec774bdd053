//! Physical parameters, the auxiliary-bath self-energy and the
//! frequency-dependent couplings Γ(z), t±(z), ε(z) derived from them.
//!
//! Energies are measured in units of the chain hopping `g`. Chain sites
//! carry on-site energy `delta_c`; every neighbouring pair of chain sites
//! shares one auxiliary site of energy `delta_b` which in turn leaks into its
//! own bath with self-energy Σ(z). Eliminating the auxiliary sites gives the
//! effective chain with
//!
//! ```text
//! Γ(z)  = 2 g_b² / (i(Δ_b − z) + Σ(z))
//! t±(z) = −g − i e^{∓iφ} Γ(z)/2
//! ε(z)  = Δ_c − iΓ(z)
//! ```
//!
//! The Markovian model freezes Γ(z) to a real constant (g_b²/g by default).

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Couplings and lattice size of the microscopic setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Nearest-neighbour hopping; the unit of energy.
    pub g: f64,
    /// Chain to auxiliary-site coupling.
    pub g_b: f64,
    /// Peierls phase on the auxiliary-to-chain bond.
    pub phi: f64,
    pub delta_c: f64,
    pub delta_b: f64,
    /// Auxiliary-bath width; the constant self-energy is κ/2.
    pub kappa: f64,
    /// Wide-band coupling of the boundary leads.
    pub gamma: f64,
    pub n_sites: usize,
    /// Inverse lead temperature, `f64::INFINITY` for zero temperature.
    pub beta: f64,
}

impl Default for ModelParams {
    /// Parameters shared by the spectral, scaling-factor and current panels.
    fn default() -> Self {
        Self {
            g: 1.0,
            g_b: 0.3,
            phi: 2.0 * PI / 3.0,
            delta_c: 0.0,
            delta_b: -0.5,
            kappa: 0.25,
            gamma: 0.5,
            n_sites: 64,
            beta: 100.0,
        }
    }
}

impl ModelParams {
    /// Weak-coupling regime tuned for unidirectional blocking at ω*.
    pub fn blocking() -> Self {
        let mut p = Self {
            g_b: 0.1,
            kappa: 0.1,
            n_sites: 30,
            ..Self::default()
        };
        p.delta_b = p.dissipationless_frequency();
        p
    }

    /// Same couplings with the auxiliary sites detached (reciprocal chain).
    pub fn reciprocal(&self) -> Self {
        Self { g_b: 0.0, ..*self }
    }

    pub fn with_sites(&self, n_sites: usize) -> Self {
        Self { n_sites, ..*self }
    }

    /// ω* = Δ_c − 2g cos(π − φ).
    pub fn dissipationless_frequency(&self) -> f64 {
        self.delta_c - 2.0 * self.g * (PI - self.phi).cos()
    }

    /// Default Markovian decay rate g_b²/g.
    pub fn markovian_gamma(&self) -> f64 {
        self.g_b * self.g_b / self.g
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, name: &'static str, reason: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::InvalidParameter {
                    name,
                    reason: reason.to_string(),
                })
            }
        }
        check(self.g.is_finite() && self.g > 0.0, "g", "must be positive")?;
        check(self.g_b.is_finite() && self.g_b >= 0.0, "g_b", "must be non-negative")?;
        check(self.gamma.is_finite() && self.gamma >= 0.0, "gamma", "must be non-negative")?;
        check(self.kappa.is_finite() && self.kappa >= 0.0, "kappa", "must be non-negative")?;
        check(self.phi.is_finite(), "phi", "must be finite")?;
        check(self.delta_c.is_finite(), "delta_c", "must be finite")?;
        check(self.delta_b.is_finite(), "delta_b", "must be finite")?;
        check(self.n_sites >= 2, "n_sites", "must be at least 2")?;
        check(self.beta > 0.0 && !self.beta.is_nan(), "beta", "must be positive or infinite")
    }
}

/// Self-energy Σ(z) of the bath attached to each auxiliary site.
#[derive(Clone)]
pub enum SelfEnergyModel {
    /// Σ(z) = value for every z (κ/2 by default).
    Constant(f64),
    /// User-supplied retarded self-energy; must be pure and satisfy Re Σ ≥ 0.
    ClosedForm(Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>),
}

impl SelfEnergyModel {
    /// Σ = κ/2 from the parameter set.
    pub fn from_kappa(p: &ModelParams) -> Self {
        Self::Constant(p.kappa / 2.0)
    }

    pub fn closed_form<F>(f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Self::ClosedForm(Arc::new(f))
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        match self {
            Self::Constant(v) => Complex64::new(*v, 0.0),
            Self::ClosedForm(f) => f(z),
        }
    }
}

impl fmt::Debug for SelfEnergyModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(v) => f.debug_tuple("Constant").field(v).finish(),
            Self::ClosedForm(_) => f.write_str("ClosedForm(..)"),
        }
    }
}

/// Complex energy with non-negative imaginary part (retarded side).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexFrequency(Complex64);

impl ComplexFrequency {
    pub fn new(z: Complex64) -> Result<Self> {
        if !(z.re.is_finite() && z.im.is_finite()) || z.im < 0.0 {
            return Err(Error::InvalidParameter {
                name: "z",
                reason: format!("retarded frequency needs finite z with Im z >= 0, got {z}"),
            });
        }
        Ok(Self(z))
    }

    /// Point on the real axis, Im z = 0 exactly.
    pub fn real(omega: f64) -> Self {
        Self(Complex64::new(omega, 0.0))
    }

    /// ω + iη with η ≥ 0.
    pub fn shifted(omega: f64, eta: f64) -> Self {
        Self(Complex64::new(omega, eta.max(0.0)))
    }

    pub fn value(self) -> Complex64 {
        self.0
    }
}

impl From<f64> for ComplexFrequency {
    fn from(omega: f64) -> Self {
        Self::real(omega)
    }
}

/// Frequency dependence of the dissipation.
#[derive(Debug, Clone)]
pub enum Dissipation {
    /// Γ(z) from the auxiliary-site elimination.
    NonMarkovian(SelfEnergyModel),
    /// Γ frozen to a real constant.
    Markovian { gamma: f64 },
}

/// How the ends of the open chain are dressed by the auxiliary sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EdgeDissipation {
    /// ε(z) = Δ_c − iΓ(z) on every site, the translation-invariant effective model.
    #[default]
    Uniform,
    /// Sites 1 and N couple to a single auxiliary site and carry only −iΓ(z)/2;
    /// this is the exact reduction of the setup with N − 1 auxiliary sites.
    Microscopic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hoppings {
    /// Left-to-right hopping, below the diagonal of H_eff.
    pub t_plus: Complex64,
    /// Right-to-left hopping, above the diagonal of H_eff.
    pub t_minus: Complex64,
}

/// Parameters plus dissipation model: everything needed to evaluate H_eff(z).
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub dissipation: Dissipation,
    pub edges: EdgeDissipation,
}

impl Model {
    /// Frequency-dependent model with Σ = κ/2.
    pub fn non_markovian(params: ModelParams) -> Self {
        Self::with_self_energy(params, SelfEnergyModel::from_kappa(&params))
    }

    pub fn with_self_energy(params: ModelParams, s: SelfEnergyModel) -> Self {
        Self {
            params,
            dissipation: Dissipation::NonMarkovian(s),
            edges: EdgeDissipation::Uniform,
        }
    }

    /// Markovian counterpart with Γ = g_b²/g.
    pub fn markovian(params: ModelParams) -> Self {
        Self::markovian_with(params, params.markovian_gamma())
    }

    pub fn markovian_with(params: ModelParams, gamma: f64) -> Self {
        Self {
            params,
            dissipation: Dissipation::Markovian { gamma },
            edges: EdgeDissipation::Uniform,
        }
    }

    pub fn with_edges(mut self, edges: EdgeDissipation) -> Self {
        self.edges = edges;
        self
    }

    pub fn with_params(&self, params: ModelParams) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }

    pub fn is_markovian(&self) -> bool {
        matches!(self.dissipation, Dissipation::Markovian { .. })
    }

    pub fn self_energy(&self) -> Option<&SelfEnergyModel> {
        match &self.dissipation {
            Dissipation::NonMarkovian(s) => Some(s),
            Dissipation::Markovian { .. } => None,
        }
    }

    pub fn gamma_at(&self, z: ComplexFrequency) -> Result<Complex64> {
        match &self.dissipation {
            Dissipation::NonMarkovian(s) => gamma_of_z(&self.params, s, z),
            Dissipation::Markovian { gamma } => Ok(Complex64::new(*gamma, 0.0)),
        }
    }

    pub fn hoppings(&self, z: ComplexFrequency) -> Result<Hoppings> {
        Ok(hoppings_for_gamma(&self.params, self.gamma_at(z)?))
    }

    /// Bulk on-site energy ε(z) = Δ_c − iΓ(z).
    pub fn onsite(&self, z: ComplexFrequency) -> Result<Complex64> {
        Ok(self.params.delta_c - I * self.gamma_at(z)?)
    }
}

/// Γ(z) = 2 g_b² / (i(Δ_b − z) + Σ(z)).
pub fn gamma_of_z(p: &ModelParams, s: &SelfEnergyModel, z: ComplexFrequency) -> Result<Complex64> {
    if p.g_b == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let z = z.value();
    let denom = I * (p.delta_b - z) + s.eval(z);
    if denom.norm() < 1e-14 * p.g {
        return Err(Error::SingularDenominator { re: z.re, im: z.im });
    }
    Ok(2.0 * p.g_b * p.g_b / denom)
}

/// t±(z) for the given self-energy.
pub fn hoppings(p: &ModelParams, s: &SelfEnergyModel, z: ComplexFrequency) -> Result<Hoppings> {
    Ok(hoppings_for_gamma(p, gamma_of_z(p, s, z)?))
}

/// t±^M for a frozen decay rate.
pub fn markovian_hoppings(p: &ModelParams, gamma_const: f64) -> Hoppings {
    hoppings_for_gamma(p, Complex64::new(gamma_const, 0.0))
}

/// t± = −g − i e^{∓iφ} Γ/2, shared by the frequency-dependent and frozen paths.
pub fn hoppings_for_gamma(p: &ModelParams, gamma: Complex64) -> Hoppings {
    let half = 0.5 * gamma;
    Hoppings {
        t_plus: -p.g - I * Complex64::from_polar(1.0, -p.phi) * half,
        t_minus: -p.g - I * Complex64::from_polar(1.0, p.phi) * half,
    }
}

/// Single-particle matrices of the closed chain-plus-auxiliary setup.
///
/// Sites are ordered as chain sites `0..N` followed by auxiliary sites
/// `N..2N-1`, auxiliary site `j` sitting between chain sites `j` and `j+1`.
/// The first matrix threads a phase θ through every bond of each triangle;
/// the second is its gauge transform with real chain bonds and a single
/// phase 3θ on the auxiliary-to-right-site bond.
pub fn flux_hamiltonians(p: &ModelParams, theta: f64) -> (DMatrix<Complex64>, DMatrix<Complex64>) {
    let n = p.n_sites;
    let dim = 2 * n - 1;
    let mut flux = DMatrix::zeros(dim, dim);
    let mut gauge = DMatrix::zeros(dim, dim);
    let e = |a: f64| Complex64::from_polar(1.0, a);

    for h in [&mut flux, &mut gauge] {
        for j in 0..n {
            h[(j, j)] = Complex64::new(p.delta_c, 0.0);
        }
        for j in 0..n - 1 {
            h[(n + j, n + j)] = Complex64::new(p.delta_b, 0.0);
        }
    }
    for j in 0..n - 1 {
        let b = n + j;
        flux[(j, j + 1)] = -p.g * e(-theta);
        flux[(j + 1, j)] = -p.g * e(theta);
        flux[(j, b)] = p.g_b * e(theta);
        flux[(b, j)] = p.g_b * e(-theta);
        flux[(b, j + 1)] = p.g_b * e(theta);
        flux[(j + 1, b)] = p.g_b * e(-theta);

        let phi = 3.0 * theta;
        gauge[(j, j + 1)] = Complex64::new(-p.g, 0.0);
        gauge[(j + 1, j)] = Complex64::new(-p.g, 0.0);
        gauge[(j, b)] = Complex64::new(p.g_b, 0.0);
        gauge[(b, j)] = Complex64::new(p.g_b, 0.0);
        gauge[(b, j + 1)] = p.g_b * e(phi);
        gauge[(j + 1, b)] = p.g_b * e(-phi);
    }
    (flux, gauge)
}
