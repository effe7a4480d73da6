//! Second-order description of the noise: autocorrelation, spectral density,
//! minimum-phase spectral factor and the shared realization of `[H Phi]`.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{col, poly_from_roots, poly_roots, Mat};
use crate::model::{NoiseModel, StateSpace};

/// Number of frequency samples used to check nonnegativity of a spectrum.
pub const GRID_POINTS: usize = 1024;
/// Roots closer than this to the unit circle make the factorization fail.
pub const CIRCLE_TOL: f64 = 1e-6;
/// Tolerance for pairing a root with its reciprocal.
pub const PAIR_TOL: f64 = 1e-6;

/// Autocorrelation `r(0..=horizon)` of the zero-mean part of the noise.
/// Negative lags follow from `r(-l) = r(l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentSpectrum {
    pub r: Vec<f64>,
}

impl LaurentSpectrum {
    pub fn new(r: Vec<f64>) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::Validation("empty autocorrelation".into()));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("autocorrelation must be finite".into()));
        }
        if r[0] < 0.0 {
            return Err(Error::Validation(format!("r(0) = {} is negative", r[0])));
        }
        Ok(Self { r })
    }

    /// `S(e^{j theta}) = r(0) + 2 sum_l r(l) cos(l theta)`.
    pub fn eval(&self, theta: f64) -> f64 {
        self.r[0]
            + 2.0
                * self.r[1..]
                    .iter()
                    .enumerate()
                    .map(|(l, v)| v * ((l + 1) as f64 * theta).cos())
                    .sum::<f64>()
    }

    /// Spectrum sampled at `GRID_POINTS` equispaced frequencies on `[0, 2 pi)`.
    pub fn on_grid(&self) -> Vec<(f64, f64)> {
        (0..GRID_POINTS)
            .map(|k| {
                let theta = 2.0 * PI * k as f64 / GRID_POINTS as f64;
                (theta, self.eval(theta))
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.r.iter().all(|&v| v == 0.0)
    }
}

pub fn autocorrelation(noise: &NoiseModel) -> LaurentSpectrum {
    let beta = noise.beta();
    let tau = noise.horizon();
    let r = (0..=tau)
        .map(|lag| (0..=tau - lag).map(|i| beta[(i, i + lag)]).sum())
        .collect();
    LaurentSpectrum { r }
}

/// Coefficients `phi[0..=horizon]` of the minimum-phase factor
/// `Phi(z) = sum_i phi[i] z^-i` with `Phi(z) Phi(1/z) = S(z)` and `phi[0] > 0`.
///
/// An identically zero spectrum (deterministic channel) factors as `Phi = 0`.
pub fn spectral_factorize(spec: &LaurentSpectrum) -> Result<Vec<f64>> {
    let r = &spec.r;
    let len = r.len();
    let r0 = r[0];
    let scale = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(vec![0.0; len]);
    }
    if let Some((theta, value)) = spec
        .on_grid()
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .filter(|(_, v)| *v < -1e-9 * scale.max(1.0))
    {
        return Err(Error::Validation(format!(
            "spectrum is negative ({value:e}) at theta = {theta:.6}"
        )));
    }
    if r0 <= 0.0 {
        return Err(Error::Validation("r(0) must be positive for a nonzero spectrum".into()));
    }

    let degree = r.iter().rposition(|v| v.abs() > 1e-14 * r0).unwrap_or(0);
    let mut phi = vec![0.0; len];
    if degree == 0 {
        phi[0] = r0.sqrt();
        return Ok(phi);
    }

    // z^d S(z), ascending powers
    let coeffs: Vec<f64> = (0..=2 * degree)
        .map(|k| r[(k as isize - degree as isize).unsigned_abs()])
        .collect();
    let roots = poly_roots(&coeffs)?;
    if let Some(z) = roots.iter().find(|z| (z.norm() - 1.0).abs() < CIRCLE_TOL) {
        return Err(Error::Factorization {
            frequency: z.arg().abs(),
        });
    }
    let inside: Vec<Complex<f64>> = roots.iter().copied().filter(|z| z.norm() < 1.0).collect();
    let outside: Vec<Complex<f64>> = roots.iter().copied().filter(|z| z.norm() > 1.0).collect();
    if inside.len() != degree || outside.len() != degree {
        return Err(Error::Numerical(format!(
            "spectrum roots do not split evenly ({} inside, {} outside)",
            inside.len(),
            outside.len()
        )));
    }
    let mut used = vec![false; degree];
    for z in &inside {
        let partner = outside
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (z * w - 1.0).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match partner {
            Some((k, err)) if err < PAIR_TOL => used[k] = true,
            _ => {
                return Err(Error::Numerical(format!("root {z} has no reciprocal partner")));
            }
        }
    }

    // prod (z - rho) in ascending powers of z is, reversed, the factor in z^-1
    let monic: Vec<f64> = poly_from_roots(&inside).into_iter().rev().collect();
    let energy: f64 = monic.iter().map(|v| v * v).sum();
    let gain = (r0 / energy).sqrt();
    let mut core: Vec<f64> = monic.iter().map(|v| v * gain).collect();
    refine(&mut core, &r[..=degree]);

    phi[..=degree].copy_from_slice(&core);
    let max_mod = factor_roots(&phi)?.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max_mod >= 1.0 - 1e-9 {
        return Err(Error::Numerical(format!(
            "spectral factor is not minimum phase (root modulus {max_mod})"
        )));
    }
    Ok(phi)
}

/// Newton steps on `phi * rev(phi) = r`; a step is kept only if it lowers the residual.
fn refine(phi: &mut [f64], r: &[f64]) {
    let d = phi.len();
    let residual = |p: &[f64]| -> Vec<f64> {
        (0..d)
            .map(|lag| (0..d - lag).map(|j| p[j] * p[j + lag]).sum::<f64>() - r[lag])
            .collect()
    };
    let norm = |v: &[f64]| v.iter().map(|x| x.abs()).fold(0.0, f64::max);
    for _ in 0..3 {
        let f = residual(phi);
        let jac = Mat::from_fn(d, d, |lag, j| {
            let up = if j + lag < d { phi[j + lag] } else { 0.0 };
            let down = if j >= lag { phi[j - lag] } else { 0.0 };
            up + down
        });
        let Some(step) = jac.lu().solve(&col(&f)) else {
            return;
        };
        let cand: Vec<f64> = phi.iter().zip(step.iter()).map(|(p, s)| p - s).collect();
        if norm(&residual(&cand)) < norm(&f) {
            phi.copy_from_slice(&cand);
        } else {
            return;
        }
    }
}

/// Roots of `z^d Phi(z)` after dropping trailing zero coefficients.
pub fn factor_roots(phi: &[f64]) -> Result<Vec<Complex<f64>>> {
    let Some(last) = phi.iter().rposition(|&v| v != 0.0) else {
        return Ok(Vec::new());
    };
    // z^d Phi(z) = phi0 z^d + phi1 z^(d-1) + ... ; ascending order is the reverse
    let asc: Vec<f64> = phi[..=last].iter().rev().copied().collect();
    poly_roots(&asc)
}

/// Full-convolution of `phi` with its reversal, restricted to lags `0..len`.
pub fn autocorrelation_of(phi: &[f64]) -> Vec<f64> {
    let d = phi.len();
    (0..d)
        .map(|lag| (0..d - lag).map(|j| phi[j] * phi[j + lag]).sum())
        .collect()
}

/// Mean polynomial `H` and spectral factor `Phi` realized on one shared
/// observable-companion state.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    pub h: Vec<f64>,
    pub phi: Vec<f64>,
    pub ahat: Mat,
    pub bhat1: Mat,
    pub bhat2: Mat,
    pub chat: Mat,
    pub dhat1: f64,
    pub dhat2: f64,
}

impl SpectralModel {
    pub fn from_noise(noise: &NoiseModel) -> Result<Self> {
        let phi = spectral_factorize(&autocorrelation(noise))?;
        shared_realization(noise.mu(), &phi)
    }

    pub fn horizon(&self) -> usize {
        self.h.len() - 1
    }

    pub fn phi_is_zero(&self) -> bool {
        self.phi.iter().all(|&v| v == 0.0)
    }

    pub fn h_system(&self) -> StateSpace {
        StateSpace {
            a: self.ahat.clone(),
            b: self.bhat1.clone(),
            c: self.chat.clone(),
            d: Mat::from_element(1, 1, self.dhat1),
        }
    }

    pub fn phi_system(&self) -> StateSpace {
        StateSpace {
            a: self.ahat.clone(),
            b: self.bhat2.clone(),
            c: self.chat.clone(),
            d: Mat::from_element(1, 1, self.dhat2),
        }
    }
}

pub fn shared_realization(h: &[f64], phi: &[f64]) -> Result<SpectralModel> {
    if h.len() != phi.len() || h.is_empty() {
        return Err(Error::Dimension(format!(
            "mean polynomial has {} coefficients, factor has {}",
            h.len(),
            phi.len()
        )));
    }
    let tau = h.len() - 1;
    let ahat = Mat::from_fn(tau, tau, |i, j| if j == i + 1 { 1.0 } else { 0.0 });
    let mut chat = Mat::zeros(1, tau);
    if tau > 0 {
        chat[(0, 0)] = 1.0;
    }
    let model = SpectralModel {
        h: h.to_vec(),
        phi: phi.to_vec(),
        ahat,
        bhat1: col(&h[1..]),
        bhat2: col(&phi[1..]),
        chat,
        dhat1: h[0],
        dhat2: phi[0],
    };
    for (sys, want) in [(model.h_system(), h), (model.phi_system(), phi)] {
        let got = sys.impulse_response(tau + 1);
        if got
            .iter()
            .zip(want)
            .any(|(g, w)| (g[(0, 0)] - w).abs() > 1e-12 * (1.0 + w.abs()))
        {
            return Err(Error::Numerical(
                "shared realization does not reproduce its coefficients".into(),
            ));
        }
    }
    Ok(model)
}
