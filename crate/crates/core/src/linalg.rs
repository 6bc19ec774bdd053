//! Dense complex linear algebra used by the oracle paths.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Pivots smaller than this are treated as an exact singularity.
pub const PIVOT_FLOOR: f64 = 1e-300;

/// LU factorisation with partial (row) pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: CMatrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn new(mut a: CMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::Numerical(format!("LU of non-square {}x{} matrix", n, a.ncols())));
        }
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut piv, mut best) = (k, a[(k, k)].norm());
            for r in k + 1..n {
                let v = a[(r, k)].norm();
                if v > best {
                    piv = r;
                    best = v;
                }
            }
            if !(best >= PIVOT_FLOOR) {
                return Err(Error::SingularMatrix { pivot: best, column: k });
            }
            if piv != k {
                a.swap_rows(k, piv);
                perm.swap(k, piv);
            }
            let inv = a[(k, k)].inv();
            for r in k + 1..n {
                let f = a[(r, k)] * inv;
                if f == Complex64::new(0.0, 0.0) {
                    continue;
                }
                a[(r, k)] = f;
                for c in k + 1..n {
                    let u = a[(k, c)];
                    a[(r, c)] -= f * u;
                }
            }
        }
        Ok(Self { lu: a, perm })
    }

    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.nrows();
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu[(i, j)] * x[j];
            }
            x[i] = s / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> CMatrix {
        let n = self.lu.nrows();
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        for c in 0..n {
            e.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
            e[c] = Complex64::new(1.0, 0.0);
            let col = self.solve_vec(&e);
            for (r, v) in col.into_iter().enumerate() {
                inv[(r, c)] = v;
            }
        }
        inv
    }
}

pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    Ok(Lu::new(a.clone())?.inverse())
}

/// max_ij |A_ij|
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.norm()))
}

/// ‖A·X − I‖_max
pub fn inverse_residual(a: &CMatrix, x: &CMatrix) -> f64 {
    let n = a.nrows();
    max_abs(&(a * x - CMatrix::identity(n, n)))
}

/// Sorted eigenvalues of a Hermitian matrix.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(a.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// Right eigenpairs of a general complex matrix.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<Complex64>,
    /// Columns are unit-norm right eigenvectors.
    pub vectors: CMatrix,
}

impl Eigen {
    /// 2-norm condition number of the eigenvector matrix.
    pub fn condition(&self) -> f64 {
        condition_number(&self.vectors)
    }
}

/// Complex Schur decomposition A = Q T Qᴴ, T upper triangular.
pub fn schur(a: &CMatrix) -> Result<(CMatrix, CMatrix)> {
    let n = a.nrows();
    let s = Schur::try_new(a.clone(), f64::EPSILON, 200 * n.max(1))
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    Ok(s.unpack())
}

/// Eigen-decomposition via the Schur form and triangular back-substitution.
pub fn eigen(a: &CMatrix) -> Result<Eigen> {
    let n = a.nrows();
    let (q, t) = schur(a)?;
    let scale = max_abs(&t).max(f64::MIN_POSITIVE);
    let small = f64::EPSILON * scale;
    let mut y = CMatrix::zeros(n, n);
    for k in 0..n {
        let lk = t[(k, k)];
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut s = Complex64::new(0.0, 0.0);
            for j in i + 1..=k {
                s += t[(i, j)] * y[(j, k)];
            }
            let mut d = t[(i, i)] - lk;
            if d.norm() < small {
                d = Complex64::new(small, 0.0);
            }
            y[(i, k)] = -s / d;
        }
    }
    let mut vectors = q * y;
    for mut col in vectors.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= Complex64::new(nrm, 0.0);
        }
    }
    Ok(Eigen {
        values: (0..n).map(|k| t[(k, k)]).collect(),
        vectors,
    })
}

pub fn condition_number(a: &CMatrix) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn column(a: &CMatrix, c: usize) -> DVector<Complex64> {
    a.column(c).into_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn lu_inverts_small_matrix() {
        let a = CMatrix::from_row_slice(3, 3, &[c(0.0, 1.0), c(2.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(3.0, -1.0), c(4.0, 0.0), c(1.0, 1.0), c(0.5, 0.0)]);
        let inv = inverse(&a).unwrap();
        assert!(inverse_residual(&a, &inv) < 1e-14);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = CMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(2.0, 0.0), c(2.0, 0.0), c(4.0, 0.0)]);
        assert!(matches!(inverse(&a), Err(Error::SingularMatrix { column: 1, .. })));
    }

    #[test]
    fn eigen_pairs_satisfy_definition() {
        let a = CMatrix::from_fn(5, 5, |i, j| c((i as f64 - j as f64).sin() + if i == j { 1.0 } else { 0.0 }, (i * j) as f64 * 0.1));
        let e = eigen(&a).unwrap();
        for k in 0..5 {
            let v = column(&e.vectors, k);
            let r = &a * &v - &v * e.values[k];
            assert!(r.norm() < 1e-11, "residual {}", r.norm());
        }
        assert!(e.condition().is_finite());
    }
}
