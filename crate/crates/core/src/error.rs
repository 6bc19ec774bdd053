use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    /// |i(Δ_b − z) + Σ(z)| fell below 1e-14·g.
    #[error("singular auxiliary-site denominator at z = {re}{im:+}i")]
    SingularDenominator { re: f64, im: f64 },

    #[error("singular matrix: pivot magnitude {pivot:e} at column {column}")]
    SingularMatrix { pivot: f64, column: usize },

    #[error("pole of the momentum-space Green's function at k = {k}, omega = {omega}")]
    Pole { k: f64, omega: f64 },

    #[error("index ({row}, {col}) outside a {n}-site chain")]
    IndexOutOfRange { row: usize, col: usize, n: usize },

    #[error("chain length {n} exceeds the supported maximum {max}")]
    TooLarge { n: usize, max: usize },

    #[error("quadrature did not converge on [{a}, {b}] (depth {depth}, error estimate {error:e})")]
    Quadrature {
        a: f64,
        b: f64,
        depth: usize,
        error: f64,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("eigenvector matrix is ill-conditioned (condition number {condition:e})")]
    Defective { condition: f64 },

    #[error("{0}")]
    Numerical(String),
}
