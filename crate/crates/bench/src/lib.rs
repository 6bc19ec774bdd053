//! Fixtures shared by the criterion benches.

use nonrecip::{ComplexFrequency, Model, ModelParams};

/// Frequency-dependent chain with the default bath parameters and `n` sites.
pub fn chain(n: usize) -> Model {
    Model::non_markovian(ModelParams::default().with_sites(n))
}

/// Markovian chain used for the Lyapunov benches.
pub fn markovian_chain(n: usize) -> Model {
    Model::markovian(ModelParams::default().with_sites(n))
}

/// A fixed off-axis frequency inside the band.
pub fn probe_frequency() -> ComplexFrequency {
    ComplexFrequency::shifted(-0.7, 0.05)
}
