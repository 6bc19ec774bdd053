//! Green's functions, transmission and steady-state currents of a
//! Hatano–Nelson chain whose nonreciprocity comes from a structured bath.
//!
//! Each chain bond j → j+1 is bridged by a lossy auxiliary mode. Integrating
//! those modes out gives frequency-dependent hoppings t±(z) and an on-site
//! loss −iΓ(z). The crate evaluates the resulting retarded Green's function in
//! real space (tridiagonal recursion, with dense inversion as a check) and in
//! momentum space, and integrates it into lead-to-lead currents.
//!
//! Units: g = 1 unless set otherwise; all energies are in units of g.

pub mod analysis;
pub mod error;
pub mod greens;
pub mod linalg;
pub mod model;
pub mod momentum;
pub mod output;
pub mod quadrature;
pub mod transport;

pub use analysis::{fit_scaling, fit_scaling_ln, ndqpt_scan, skin_measure, FitModel, FitResult, NdqptCurve};
pub use error::{Error, Result};
pub use greens::{
    build_matrix, greens_dense, greens_element, scaling_factors, transfer_matrix, EffectiveHamiltonian, GreensRecursion,
    ScalingFactors, TransferMatrix,
};
pub use linalg::CMatrix;
pub use model::{ComplexFrequency, Dissipation, EdgeDissipation, Hoppings, Model, ModelParams, SelfEnergyModel};
pub use momentum::{dissipationless_mode, spectral_function, spectral_heatmap, DissipationlessMode, SpectralGrid};
pub use output::{format_sci, Table};
pub use quadrature::{integrate, QuadOptions, QuadResult};
pub use transport::{
    current_markovian_lyapunov, current_markovian_negf, current_nonmarkovian, lyapunov_steady_state, transmission,
    CorrelationMatrix, CurrentResult, Direction, LeadConfig, LyapunovMethod,
};

pub use num_complex::Complex64;
