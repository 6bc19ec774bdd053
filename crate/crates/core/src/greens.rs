//! Retarded Green's function of the open chain, G(z) = M(z)⁻¹ with
//! M(z) = zI − H_eff(z) − Σ_leads.
//!
//! Three routes to the same object:
//! * [`greens_dense`]: LU inversion of the dense N×N matrix (oracle);
//! * [`greens_element`] / [`GreensRecursion`]: principal-minor recursions
//!   driven by the 2×2 transfer matrix, O(N) per element, kept in log form so
//!   that chains of thousands of sites do not overflow;
//! * [`extended_greens_block`]: dense inversion of the chain plus its
//!   auxiliary sites, keeping the chain block (checks the elimination).

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{ComplexFrequency, Dissipation, EdgeDissipation, Model};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest chain handled by the dense oracle.
pub const MAX_DENSE_SITES: usize = 4096;
/// Largest chain handled by the recursion.
pub const MAX_RECURSION_SITES: usize = 10_000_000;

/// Tridiagonal M(z) in compact form: uniform bulk plus corrections at the ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EffectiveHamiltonian {
    /// Bulk diagonal z − ε(z).
    pub diag: Complex64,
    /// Entry (i, i+1): −t₋(z).
    pub off_upper: Complex64,
    /// Entry (i+1, i): −t₊(z).
    pub off_lower: Complex64,
    /// Added to M(1,1) and M(N,N): +iγ/2 each when leads are attached.
    pub lead_corrections: [Complex64; 2],
    /// Added to M(1,1) and M(N,N) by [`EdgeDissipation::Microscopic`].
    pub edge_corrections: [Complex64; 2],
    pub n_sites: usize,
}

impl EffectiveHamiltonian {
    pub fn t_plus(&self) -> Complex64 {
        -self.off_lower
    }

    pub fn t_minus(&self) -> Complex64 {
        -self.off_upper
    }

    /// Diagonal entry of site `i` (0-based).
    pub fn diag_at(&self, i: usize) -> Complex64 {
        let mut d = self.diag;
        if i == 0 {
            d += self.lead_corrections[0] + self.edge_corrections[0];
        }
        if i + 1 == self.n_sites {
            d += self.lead_corrections[1] + self.edge_corrections[1];
        }
        d
    }

    pub fn to_dense(&self) -> CMatrix {
        let n = self.n_sites;
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag_at(i);
            if i + 1 < n {
                m[(i, i + 1)] = self.off_upper;
                m[(i + 1, i)] = self.off_lower;
            }
        }
        m
    }
}

/// M(z) for the model at frequency `z`; `leads` attaches −iγ/2 at both ends.
pub fn build_matrix(model: &Model, z: ComplexFrequency, leads: bool) -> Result<EffectiveHamiltonian> {
    let p = &model.params;
    let gamma = model.gamma_at(z)?;
    let h = crate::model::hoppings_for_gamma(p, gamma);
    let diag = z.value() - (p.delta_c - I * gamma);
    let lead = if leads { I * (0.5 * p.gamma) } else { ZERO };
    let edge = match model.edges {
        EdgeDissipation::Uniform => ZERO,
        EdgeDissipation::Microscopic => -I * (0.5 * gamma),
    };
    Ok(EffectiveHamiltonian {
        diag,
        off_upper: -h.t_minus,
        off_lower: -h.t_plus,
        lead_corrections: [lead; 2],
        edge_corrections: [edge; 2],
        n_sites: p.n_sites,
    })
}

/// Dense LU inverse of M(z).
pub fn greens_dense(h: &EffectiveHamiltonian) -> Result<CMatrix> {
    if h.n_sites > MAX_DENSE_SITES {
        return Err(Error::TooLarge { n: h.n_sites, max: MAX_DENSE_SITES });
    }
    linalg::inverse(&h.to_dense())
}

fn wrap_phase(mut v: Complex64) -> Complex64 {
    v.im = v.im.rem_euclid(TAU);
    v
}

fn safe_ln(v: Complex64) -> Complex64 {
    if v == ZERO {
        Complex64::new(-745.0, 0.0)
    } else {
        v.ln()
    }
}

/// Ratio recursions for the leading (θ) and trailing (φ) principal minors of M.
///
/// θ_i is the determinant of the leading i×i block (sweep from site 1),
/// φ_i the determinant of the trailing block starting at site i (sweep from
/// site N). Only their complex logarithms are stored.
#[derive(Debug, Clone)]
pub struct GreensRecursion {
    n: usize,
    t_plus: Complex64,
    t_minus: Complex64,
    /// ln θ_i for i = 0..=N.
    ln_theta: Vec<Complex64>,
    /// ln φ_i for i = 1..=N+1, stored at index i − 1.
    ln_phi: Vec<Complex64>,
}

impl GreensRecursion {
    pub fn new(h: &EffectiveHamiltonian) -> Result<Self> {
        let n = h.n_sites;
        check_size(n)?;
        let bc = h.off_upper * h.off_lower;
        let ln_theta = forward_minors(h, bc);

        let mut ln_phi = vec![ZERO; n + 1];
        let mut acc = ZERO;
        let mut s = ZERO;
        for i in (0..n).rev() {
            s = if i + 1 == n { h.diag_at(i) } else { h.diag_at(i) - bc / nonzero(s) };
            acc = wrap_phase(acc + safe_ln(s));
            ln_phi[i] = acc;
        }
        Ok(Self {
            n,
            t_plus: h.t_plus(),
            t_minus: h.t_minus(),
            ln_theta,
            ln_phi,
        })
    }

    fn ln_phi_at(&self, site: usize) -> Complex64 {
        // φ_{N+1} = 1
        if site > self.n {
            ZERO
        } else {
            self.ln_phi[site - 1]
        }
    }

    /// ln [G]_{row,col} with 1-based site labels.
    pub fn ln_element(&self, row: usize, col: usize) -> Result<Complex64> {
        let n = self.n;
        if row == 0 || col == 0 || row > n || col > n {
            return Err(Error::IndexOutOfRange { row, col, n });
        }
        let lo = row.min(col);
        let hi = row.max(col);
        let mut ln = self.ln_theta[lo - 1] + self.ln_phi_at(hi + 1) - self.ln_theta[n];
        if row > col {
            ln += (row - col) as f64 * safe_ln(self.t_plus);
        } else if row < col {
            ln += (col - row) as f64 * safe_ln(self.t_minus);
        }
        Ok(wrap_phase(ln))
    }

    pub fn element(&self, row: usize, col: usize) -> Result<Complex64> {
        Ok(self.ln_element(row, col)?.exp())
    }

    /// Full matrix from the recursion, O(N²).
    pub fn to_dense(&self) -> Result<CMatrix> {
        let n = self.n;
        let mut g = CMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                g[(r, c)] = self.element(r + 1, c + 1)?;
            }
        }
        Ok(g)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_RECURSION_SITES {
        Err(Error::TooLarge { n, max: MAX_RECURSION_SITES })
    } else {
        Ok(())
    }
}

/// Tiny substitute for an exactly vanishing ratio (modified Lentz trick).
fn nonzero(v: Complex64) -> Complex64 {
    if v == ZERO {
        Complex64::new(1e-300, 0.0)
    } else {
        v
    }
}

/// ln θ_i for i = 0..=N.
fn forward_minors(h: &EffectiveHamiltonian, bc: Complex64) -> Vec<Complex64> {
    let n = h.n_sites;
    let mut out = Vec::with_capacity(n + 1);
    out.push(ZERO);
    let mut acc = ZERO;
    let mut r = ZERO;
    for i in 0..n {
        r = if i == 0 { h.diag_at(0) } else { h.diag_at(i) - bc / nonzero(r) };
        acc = wrap_phase(acc + safe_ln(r));
        out.push(acc);
    }
    out
}

/// ln θ_N = ln det M, O(N) without allocation.
fn ln_det(h: &EffectiveHamiltonian) -> Complex64 {
    let bc = h.off_upper * h.off_lower;
    let mut acc = ZERO;
    let mut r = ZERO;
    for i in 0..h.n_sites {
        r = if i == 0 { h.diag_at(0) } else { h.diag_at(i) - bc / nonzero(r) };
        acc += safe_ln(r);
    }
    wrap_phase(acc)
}

/// ln [G]_{N1} (`reverse = false`) or ln [G]_{1N} (`reverse = true`).
pub fn ln_corner_element(h: &EffectiveHamiltonian, reverse: bool) -> Result<Complex64> {
    check_size(h.n_sites)?;
    let hop = if reverse { h.t_minus() } else { h.t_plus() };
    Ok(wrap_phase((h.n_sites - 1) as f64 * safe_ln(hop) - ln_det(h)))
}

/// [G(z)]_{row,col} (1-based sites) through the transfer-matrix recursions.
pub fn greens_element(model: &Model, z: ComplexFrequency, row: usize, col: usize, leads: bool) -> Result<Complex64> {
    let h = build_matrix(model, z, leads)?;
    let n = h.n_sites;
    if row == 0 || col == 0 || row > n || col > n {
        return Err(Error::IndexOutOfRange { row, col, n });
    }
    if (row, col) == (n, 1) {
        return Ok(ln_corner_element(&h, false)?.exp());
    }
    if (row, col) == (1, n) {
        return Ok(ln_corner_element(&h, true)?.exp());
    }
    GreensRecursion::new(&h)?.element(row, col)
}

/// Chain block of the inverse of the chain-plus-auxiliary system.
///
/// For [`EdgeDissipation::Microscopic`] the setup has the N − 1 auxiliary
/// sites of the triangular ladder; for [`EdgeDissipation::Uniform`] two more
/// auxiliary sites are hung on the end sites (each coupled to one chain site)
/// so that every chain site sees two of them. In both cases eliminating the
/// auxiliary sites reproduces [`build_matrix`] exactly.
pub fn extended_greens_block(model: &Model, z: ComplexFrequency, leads: bool) -> Result<CMatrix> {
    let sigma = match &model.dissipation {
        Dissipation::NonMarkovian(s) => s.eval(z.value()),
        Dissipation::Markovian { .. } => {
            return Err(Error::InvalidParameter {
                name: "dissipation",
                reason: "the auxiliary-site construction needs a self-energy model".into(),
            })
        }
    };
    let m = extended_matrix(model, z, sigma, leads);
    let g = linalg::inverse(&m)?;
    let n = model.params.n_sites;
    Ok(g.view((0, 0), (n, n)).into_owned())
}

/// zI − H_ext for the extended setup, chain sites first.
pub fn extended_matrix(model: &Model, z: ComplexFrequency, sigma: Complex64, leads: bool) -> CMatrix {
    let p = &model.params;
    let n = p.n_sites;
    let z = z.value();
    let end_aux = model.edges == EdgeDissipation::Uniform;
    let n_aux = if end_aux { n + 1 } else { n - 1 };
    let dim = n + n_aux;
    let mut m = CMatrix::zeros(dim, dim);
    let aux_diag = z - p.delta_b + I * sigma;
    let gb = Complex64::new(p.g_b, 0.0);
    let gbp = p.g_b * Complex64::from_polar(1.0, p.phi);

    for j in 0..n {
        m[(j, j)] = z - p.delta_c;
        if j + 1 < n {
            m[(j, j + 1)] = Complex64::new(p.g, 0.0);
            m[(j + 1, j)] = Complex64::new(p.g, 0.0);
        }
    }
    if leads {
        m[(0, 0)] += I * (0.5 * p.gamma);
        m[(n - 1, n - 1)] += I * (0.5 * p.gamma);
    }
    // Auxiliary site between chain sites `left` and `left + 1`; either may be absent.
    let mut couple = |slot: usize, left: Option<usize>, right: Option<usize>| {
        let b = n + slot;
        m[(b, b)] = aux_diag;
        if let Some(l) = left {
            m[(l, b)] = -gb;
            m[(b, l)] = -gb;
        }
        if let Some(r) = right {
            m[(b, r)] = -gbp;
            m[(r, b)] = -gbp.conj();
        }
    };
    if end_aux {
        couple(0, None, Some(0));
        for j in 0..n - 1 {
            couple(j + 1, Some(j), Some(j + 1));
        }
        couple(n, Some(n - 1), None);
    } else {
        for j in 0..n - 1 {
            couple(j, Some(j), Some(j + 1));
        }
    }
    m
}

/// T(z) = [[z − ε(z), −t₊t₋], [1, 0]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferMatrix {
    pub t11: Complex64,
    pub t12: Complex64,
    pub t21: Complex64,
    pub t22: Complex64,
}

impl TransferMatrix {
    pub fn determinant(&self) -> Complex64 {
        self.t11 * self.t22 - self.t12 * self.t21
    }

    pub fn trace(&self) -> Complex64 {
        self.t11 + self.t22
    }

    /// Eigenvalues ordered by decreasing magnitude.
    pub fn eigenvalues(&self) -> (Complex64, Complex64) {
        let tr = self.trace();
        let det = self.determinant();
        let disc = (tr * tr - 4.0 * det).sqrt();
        let (a, b) = (tr + disc, tr - disc);
        let big = if a.norm() >= b.norm() { a } else { b } * 0.5;
        let small = if big == ZERO { ZERO } else { det / big };
        if big.norm() >= small.norm() {
            (big, small)
        } else {
            (small, big)
        }
    }
}

pub fn transfer_matrix(model: &Model, z: ComplexFrequency) -> Result<TransferMatrix> {
    let gamma = model.gamma_at(z)?;
    let h = crate::model::hoppings_for_gamma(&model.params, gamma);
    Ok(TransferMatrix {
        t11: z.value() - (model.params.delta_c - I * gamma),
        t12: -h.t_plus * h.t_minus,
        t21: Complex64::new(1.0, 0.0),
        t22: ZERO,
    })
}

/// Spatial decay factors f± = |t±/λ| of the open-chain Green's function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingFactors {
    pub f_plus: f64,
    pub f_minus: f64,
    pub lambda_dominant: Complex64,
    /// Both eigenvalues have the same magnitude (branch point); no dominant one.
    pub degenerate: bool,
}

pub fn scaling_factors(model: &Model, omega: f64) -> Result<ScalingFactors> {
    let z = ComplexFrequency::real(omega);
    let tm = transfer_matrix(model, z)?;
    let (big, small) = tm.eigenvalues();
    let degenerate = (big.norm() - small.norm()).abs() < 1e-10 * big.norm();
    let h = model.hoppings(z)?;
    Ok(ScalingFactors {
        f_plus: (h.t_plus / big).norm(),
        f_minus: (h.t_minus / big).norm(),
        lambda_dominant: big,
        degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelParams;

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn reciprocal_matrix_is_hermitian_tridiagonal() {
        let p = ModelParams { g_b: 0.0, gamma: 0.0, n_sites: 5, ..Default::default() };
        let h = build_matrix(&Model::non_markovian(p), 0.3.into(), true).unwrap();
        let m = h.to_dense();
        assert_eq!(m, m.adjoint());
        assert_eq!(h.diag, Complex64::new(0.3, 0.0));
        assert_eq!(h.off_upper, Complex64::new(1.0, 0.0));
    }

    #[test]
    fn leads_shift_the_end_diagonals() {
        let p = ModelParams { n_sites: 6, ..Default::default() };
        let model = Model::non_markovian(p);
        let bare = build_matrix(&model, 0.1.into(), false).unwrap();
        let led = build_matrix(&model, 0.1.into(), true).unwrap();
        assert_eq!(led.diag_at(0) - bare.diag_at(0), Complex64::new(0.0, 0.25));
        assert_eq!(led.diag_at(5) - bare.diag_at(5), Complex64::new(0.0, 0.25));
        assert_eq!(led.diag_at(2), bare.diag_at(2));
    }

    #[test]
    fn two_site_closed_form() {
        let p = ModelParams { n_sites: 2, ..Default::default() };
        let model = Model::non_markovian(p);
        let z = ComplexFrequency::new(Complex64::new(-0.3, 0.05)).unwrap();
        let h = build_matrix(&model, z, true).unwrap();
        let (d1, d2, a, b) = (h.diag_at(0), h.diag_at(1), h.off_upper, h.off_lower);
        let det = d1 * d2 - a * b;
        let want = [[d2 / det, -a / det], [-b / det, d1 / det]];
        let dense = greens_dense(&h).unwrap();
        let rec = GreensRecursion::new(&h).unwrap();
        for r in 0..2 {
            for c in 0..2 {
                assert!(rel(dense[(r, c)], want[r][c]) < 1e-14);
                assert!(rel(rec.element(r + 1, c + 1).unwrap(), want[r][c]) < 1e-13);
            }
        }
    }

    #[test]
    fn corner_elements_match_full_recursion() {
        let p = ModelParams { n_sites: 40, ..Default::default() };
        let model = Model::non_markovian(p);
        let h = build_matrix(&model, (-0.8).into(), true).unwrap();
        let rec = GreensRecursion::new(&h).unwrap();
        let a = ln_corner_element(&h, false).unwrap().exp();
        assert!(rel(a, rec.element(40, 1).unwrap()) < 1e-12);
        let b = ln_corner_element(&h, true).unwrap().exp();
        assert!(rel(b, rec.element(1, 40).unwrap()) < 1e-12);
    }

    #[test]
    fn out_of_range_index_is_an_error() {
        let model = Model::non_markovian(ModelParams { n_sites: 4, ..Default::default() });
        assert!(greens_element(&model, 0.0.into(), 0, 1, true).is_err());
        assert!(greens_element(&model, 0.0.into(), 5, 1, true).is_err());
    }

    #[test]
    fn long_chain_does_not_overflow() {
        let p = ModelParams { n_sites: 4096, ..Default::default() };
        let model = Model::non_markovian(p);
        let z = ComplexFrequency::new(Complex64::new(3.5, 0.0)).unwrap();
        let h = build_matrix(&model, z, true).unwrap();
        let ln = ln_corner_element(&h, false).unwrap();
        assert!(ln.re.is_finite());
        assert!(ln.re < -700.0, "outside the band the corner element is tiny: {}", ln.re);
    }

    #[test]
    fn transfer_matrix_free_chain() {
        let p = ModelParams { g_b: 0.0, delta_c: 0.2, ..Default::default() };
        let t = transfer_matrix(&Model::non_markovian(p), 0.7.into()).unwrap();
        assert!((t.t11 - Complex64::new(0.5, 0.0)).norm() < 1e-15);
        assert!((t.t12 - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn free_chain_in_band_is_degenerate() {
        let p = ModelParams { g_b: 0.0, ..Default::default() };
        let sf = scaling_factors(&Model::non_markovian(p), 0.4).unwrap();
        assert!(sf.degenerate);
        assert!((sf.f_plus - 1.0).abs() < 1e-12);
        assert!((sf.f_minus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn microscopic_edges_halve_end_dissipation() {
        let p = ModelParams { n_sites: 5, ..Default::default() };
        let z = ComplexFrequency::real(-0.2);
        let u = build_matrix(&Model::non_markovian(p), z, false).unwrap();
        let m = build_matrix(&Model::non_markovian(p).with_edges(EdgeDissipation::Microscopic), z, false).unwrap();
        let gamma = Model::non_markovian(p).gamma_at(z).unwrap();
        assert!((m.diag_at(0) - u.diag_at(0) + I * 0.5 * gamma).norm() < 1e-15);
        assert_eq!(m.diag_at(2), u.diag_at(2));
    }
}
