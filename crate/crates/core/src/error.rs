use nalgebra::Complex;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Inputs violate a documented precondition (probability simplex, symmetry, ...).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A structural property required by the construction does not hold
    /// (zero channel, rank deficiency, degenerate factor).
    #[error("structural error: {0}")]
    Structural(String),

    /// The noise spectrum vanishes on the unit circle, so no strictly
    /// minimum-phase factor exists.
    #[error("spectral factorization failed: spectrum has a zero on the unit circle at theta = {frequency:.6} rad")]
    Factorization { frequency: f64 },

    #[error("system is unstable: eigenvalues {}", fmt_eigs(.eigenvalues))]
    Unstable { eigenvalues: Vec<Complex<f64>> },

    /// The problem is well posed but admits no mean-square stabilizing controller.
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

fn fmt_eigs(eigs: &[Complex<f64>]) -> String {
    let parts: Vec<String> = eigs
        .iter()
        .map(|z| {
            if z.im.abs() < 1e-12 {
                format!("{:.6}", z.re)
            } else {
                format!("{:.6}{:+.6}i", z.re, z.im)
            }
        })
        .collect();
    format!("[{}]", parts.join(", "))
}
