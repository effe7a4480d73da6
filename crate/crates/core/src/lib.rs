//! Mean-square H2 optimal output feedback for discrete-time plants whose
//! control input passes through a quasi-colored FIR multiplicative noise.
//!
//! The pipeline is
//! [`model`] (plant, noise, structural checks) →
//! [`spectrum`] (spectral factor and shared realization) →
//! [`synthesis`] (augmented plant, MARE, controller) →
//! [`analysis`] (mean-square stability and exact cost) →
//! [`sim`] (seeded Monte-Carlo over sampled channels).

pub mod analysis;
pub mod error;
pub mod linalg;
pub mod model;
pub mod riccati;
pub mod sim;
pub mod spectrum;
pub mod synthesis;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use model::{AssumptionReport, NoiseModel, Plant, StateSpace};
pub use spectrum::{LaurentSpectrum, SpectralModel};
