//! Plants, quasi-colored multiplicative noise, channel constructors and the
//! structural checks a problem must pass before synthesis.

use std::f64::consts::PI;

use nalgebra::Complex;

use crate::error::{Error, Result};
use crate::linalg::{
    block, column_rank, eigenvalues, mat_pow, max_abs, min_singular_ratio, poly_eval, poly_roots, to_complex, CMat,
    Mat, TOL_RANK,
};

/// Band around |lambda| = 1 inside which a mode is classified as on the unit circle.
pub const UNIT_CIRCLE_BAND: f64 = 1e-9;
/// Smallest eigenvalue allowed for a covariance matrix.
pub const PSD_TOL: f64 = -1e-10;

/// Discrete-time plant
///
/// ```text
/// x(k+1) = A x(k) + B1 w(k) + B2 ud(k)
/// z(k)   = C1 x(k) + D ud(k)
/// y(k)   = C2 x(k)
/// ```
///
/// with scalar disturbance `w` and scalar corrupted control `ud`.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub a: Mat,
    pub b1: Mat,
    pub b2: Mat,
    pub c1: Mat,
    pub c2: Mat,
    pub d: Mat,
}

impl Plant {
    pub fn new(a: Mat, b1: Mat, b2: Mat, c1: Mat, c2: Mat, d: Mat) -> Result<Self> {
        let n = a.nrows();
        let check = |name: &str, m: &Mat, rows: usize, cols: usize| -> Result<()> {
            if m.shape() != (rows, cols) {
                return Err(Error::Dimension(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            Ok(())
        };
        if n == 0 {
            return Err(Error::Dimension("plant has no states".into()));
        }
        check("A", &a, n, n)?;
        check("B1", &b1, n, 1)?;
        check("B2", &b2, n, 1)?;
        let p = c1.nrows();
        let q = c2.nrows();
        check("C1", &c1, p, n)?;
        check("C2", &c2, q, n)?;
        check("D", &d, p, 1)?;
        if p == 0 || q == 0 {
            return Err(Error::Dimension(
                "plant needs at least one controlled and one measured output".into(),
            ));
        }
        Ok(Self { a, b1, b2, c1, c2, d })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn p(&self) -> usize {
        self.c1.nrows()
    }

    pub fn q(&self) -> usize {
        self.c2.nrows()
    }
}

/// Generic LTI realization `(A, B, C, D)`; also used for controllers.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
    pub d: Mat,
}

impl StateSpace {
    pub fn new(a: Mat, b: Mat, c: Mat, d: Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || b.nrows() != n || c.ncols() != n || d.nrows() != c.nrows() || d.ncols() != b.ncols() {
            return Err(Error::Dimension(format!(
                "inconsistent realization: A {:?}, B {:?}, C {:?}, D {:?}",
                a.shape(),
                b.shape(),
                c.shape(),
                d.shape()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    /// Static gain with no states.
    pub fn static_gain(d: Mat) -> Self {
        let (ny, nu) = d.shape();
        Self {
            a: Mat::zeros(0, 0),
            b: Mat::zeros(0, nu),
            c: Mat::zeros(ny, 0),
            d,
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.c.nrows()
    }

    /// First `len` Markov parameters `D, CB, CAB, ...`.
    pub fn impulse_response(&self, len: usize) -> Vec<Mat> {
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return out;
        }
        out.push(self.d.clone());
        let mut ak_b = self.b.clone();
        for _ in 1..len {
            out.push(&self.c * &ak_b);
            ak_b = &self.a * ak_b;
        }
        out
    }
}

/// Second-order description of an FIR multiplicative noise: per-lag means
/// `mu[i]` and the covariance `beta[(i, j)]` between gains that share a
/// source instant.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    mu: Vec<f64>,
    beta: Mat,
}

impl NoiseModel {
    pub fn new(mu: Vec<f64>, beta: Mat) -> Result<Self> {
        let len = mu.len();
        if len == 0 {
            return Err(Error::Validation("noise model needs at least one lag".into()));
        }
        if beta.shape() != (len, len) {
            return Err(Error::Dimension(format!(
                "beta is {}x{}, expected {len}x{len}",
                beta.nrows(),
                beta.ncols()
            )));
        }
        if mu.iter().chain(beta.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Validation("noise moments must be finite".into()));
        }
        let scale = max_abs(&beta).max(1.0);
        for i in 0..len {
            for j in 0..i {
                if (beta[(i, j)] - beta[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::Validation(format!("beta is not symmetric at ({i}, {j})")));
                }
            }
        }
        let beta = crate::linalg::symmetrize(&beta);
        for i in 0..len {
            if beta[(i, i)] < PSD_TOL {
                return Err(Error::Validation(format!(
                    "beta[{i},{i}] = {} is negative",
                    beta[(i, i)]
                )));
            }
        }
        let min_eig = beta.clone().symmetric_eigen().eigenvalues.min();
        if min_eig < PSD_TOL * scale {
            return Err(Error::Validation(format!(
                "beta is not positive semidefinite (smallest eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { mu, beta })
    }

    /// Memory length (number of samples a packet can be delayed).
    pub fn horizon(&self) -> usize {
        self.mu.len() - 1
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn beta(&self) -> &Mat {
        &self.beta
    }
}

/// Channel where packet `u(l)` is delivered after `i` samples with
/// probability `probs[i]` and weighted by `weights[i]` at the receiver.
pub fn delay_channel_noise(weights: &[f64], probs: &[f64]) -> Result<NoiseModel> {
    if weights.len() != probs.len() || probs.is_empty() {
        return Err(Error::Dimension(format!(
            "{} weights for {} delay probabilities",
            weights.len(),
            probs.len()
        )));
    }
    for (i, &p) in probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Validation(format!(
                "delay probability p[{i}] = {p} outside [0, 1]"
            )));
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Validation(format!(
            "delay probabilities sum to {total}, not 1 (last index {})",
            probs.len() - 1
        )));
    }
    if let Some(i) = weights.iter().position(|w| !w.is_finite()) {
        return Err(Error::Validation(format!("weight alpha[{i}] is not finite")));
    }
    let len = probs.len();
    let mu: Vec<f64> = weights.iter().zip(probs).map(|(a, p)| a * p).collect();
    let beta = Mat::from_fn(len, len, |i, j| {
        let diag = if i == j {
            weights[i] * weights[i] * probs[i]
        } else {
            0.0
        };
        diag - mu[i] * mu[j]
    });
    NoiseModel::new(mu, beta)
}

/// Memoryless Bernoulli erasure: the packet survives with probability `1 - e`.
pub fn erasure_channel_noise(e: f64) -> Result<NoiseModel> {
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::Validation(format!("erasure probability {e} outside [0, 1]")));
    }
    NoiseModel::new(vec![1.0 - e], Mat::from_element(1, 1, e * (1.0 - e)))
}

/// Smallest `r >= 1` with `C A^(r-1) B != 0`.
pub fn relative_degree(a: &Mat, b: &Mat, c: &Mat) -> Result<usize> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != n || c.ncols() != n {
        return Err(Error::Dimension("relative degree of an inconsistent triple".into()));
    }
    let cb_scale = c.norm() * b.norm();
    let mut ak_b = b.clone();
    let mut a_scale = 1.0;
    for r in 1..=n {
        let markov = c * &ak_b;
        let scale = (cb_scale * a_scale).max(f64::MIN_POSITIVE);
        if max_abs(&markov) > TOL_RANK * scale {
            return Ok(r);
        }
        ak_b = a * ak_b;
        a_scale *= a.norm().max(1.0);
    }
    Err(Error::Structural(
        "channel has identically zero transfer function".into(),
    ))
}

/// Invariant zeros of the square or tall system `(A, B, C)`.
///
/// Square case: the determinant of the system pencil `[A - zI, B; C, 0]` is
/// a polynomial of degree at most `n`; it is recovered exactly by sampling on
/// a circle and its roots are the finite zeros. Missing top-degree terms
/// correspond to zeros at infinity and are dropped. Tall systems are squared
/// down with two fixed projections; zeros common to both that also drop the
/// rank of the full pencil are kept.
pub fn transmission_zeros(a: &Mat, b: &Mat, c: &Mat) -> Result<Vec<Complex<f64>>> {
    let m = b.ncols();
    let q = c.nrows();
    if q < m {
        return Err(Error::Structural(format!(
            "{q} outputs for {m} inputs: system is not left invertible"
        )));
    }
    if q == m {
        return square_zeros(a, b, c);
    }
    let proj = |seed: f64| Mat::from_fn(m, q, |i, j| ((i * q + j) as f64 * seed + 0.3).sin());
    let z1 = square_zeros(a, b, &(proj(1.618_033_988_7) * c))?;
    let z2 = square_zeros(a, b, &(proj(2.6) * c))?;
    let n = a.nrows();
    let zeros = z1
        .into_iter()
        .filter(|z| z2.iter().any(|w| (z - w).norm() < 1e-6 * z.norm().max(1.0)))
        .filter(|z| {
            let pencil = system_pencil(a, b, c, *z);
            // pencil is (n+q) x (n+m); full column rank is n+m
            let sv = pencil.svd(false, false).singular_values;
            let scale = sv.max().max(f64::MIN_POSITIVE);
            sv.iter().filter(|&&s| s > 1e-7 * scale).count() < n + m
        })
        .collect();
    Ok(zeros)
}

fn system_pencil(a: &Mat, b: &Mat, c: &Mat, z: Complex<f64>) -> CMat {
    let n = a.nrows();
    let m = b.ncols();
    let q = c.nrows();
    let top = to_complex(a) - CMat::identity(n, n) * z;
    let mut out = CMat::zeros(n + q, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(&top);
    out.view_mut((0, n), (n, m)).copy_from(&to_complex(b));
    out.view_mut((n, 0), (q, n)).copy_from(&to_complex(c));
    out
}

fn square_zeros(a: &Mat, b: &Mat, c: &Mat) -> Result<Vec<Complex<f64>>> {
    let n = a.nrows();
    let samples = n + 1;
    let radius = a.norm().max(1.0);
    let values: Vec<Complex<f64>> = (0..samples)
        .map(|k| {
            let z = Complex::from_polar(radius, 2.0 * PI * k as f64 / samples as f64);
            system_pencil(a, b, c, z).determinant()
        })
        .collect();
    // scaled coefficients s_j = c_j radius^j via inverse DFT
    let scaled: Vec<f64> = (0..samples)
        .map(|j| {
            let sum: Complex<f64> = values
                .iter()
                .enumerate()
                .map(|(k, v)| v * Complex::from_polar(1.0, -2.0 * PI * (j * k) as f64 / samples as f64))
                .sum();
            sum.re / samples as f64
        })
        .collect();
    let peak = scaled.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Err(Error::Structural(
            "system pencil is singular for every z (not left invertible)".into(),
        ));
    }
    let degree = scaled.iter().rposition(|v| v.abs() > TOL_RANK * peak).unwrap_or(0);
    let coeffs: Vec<f64> = scaled[..=degree]
        .iter()
        .enumerate()
        .map(|(j, s)| s / radius.powi(j as i32))
        .collect();
    poly_roots(&coeffs)
}

/// Outcome of the structural checks on a plant and mean channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub stabilizable_ab2: bool,
    pub no_unit_circle_unobservable_ac1: bool,
    pub detectable_ac2: bool,
    pub no_unit_circle_unstabilizable: bool,
    pub h_nonzero_at_unstable_poles: bool,
    pub gy_minimum_phase: bool,
    pub c2_psi_full_column_rank: bool,
    /// Input delay from `w` to `y`.
    pub r1: Option<usize>,
    /// Input delay from `ud` to `y`.
    pub r2: Option<usize>,
    pub unstable_poles: Vec<Complex<f64>>,
    pub zeros: Vec<Complex<f64>>,
    /// Numeric margin behind each check, keyed by check name.
    pub margins: Vec<(String, f64)>,
    /// Decisions that fell inside the tolerance band.
    pub ambiguous: Vec<String>,
}

impl AssumptionReport {
    pub fn pass(&self) -> bool {
        self.stabilizable_ab2
            && self.no_unit_circle_unobservable_ac1
            && self.detectable_ac2
            && self.no_unit_circle_unstabilizable
            && self.h_nonzero_at_unstable_poles
            && self.gy_minimum_phase
            && self.c2_psi_full_column_rank
    }

    /// Only the checks needed for the Riccati part of the design
    /// (the observer additionally needs minimum phase and left invertibility).
    pub fn pass_state_feedback(&self) -> bool {
        self.stabilizable_ab2 && self.no_unit_circle_unobservable_ac1 && self.h_nonzero_at_unstable_poles
    }

    pub fn failures(&self) -> Vec<&'static str> {
        let checks = [
            (self.stabilizable_ab2, "stabilizability of (A, B2)"),
            (
                self.no_unit_circle_unobservable_ac1,
                "unit-circle observability of (A, C1)",
            ),
            (self.detectable_ac2, "detectability of (A, C2)"),
            (
                self.no_unit_circle_unstabilizable,
                "unit-circle stabilizability of (A, [B1 B2])",
            ),
            (
                self.h_nonzero_at_unstable_poles,
                "mean channel nonzero at unstable poles",
            ),
            (self.gy_minimum_phase, "minimum phase of (w, ud) -> y"),
            (self.c2_psi_full_column_rank, "full column rank of C2 Psi"),
        ];
        checks.iter().filter(|(ok, _)| !ok).map(|(_, name)| *name).collect()
    }
}

fn band_flag(ratio: f64) -> bool {
    ratio > 0.01 * TOL_RANK && ratio < 100.0 * TOL_RANK
}

/// Run every structural check on `plant` with mean channel coefficients `h`
/// (`h[i]` multiplies `z^-i`).
pub fn validate_assumptions(plant: &Plant, h: &[f64]) -> Result<AssumptionReport> {
    let n = plant.n();
    let eigs = eigenvalues(&plant.a)?;
    let mut margins = Vec::new();
    let mut ambiguous = Vec::new();

    for z in &eigs {
        if (z.norm() - 1.0).abs() <= UNIT_CIRCLE_BAND {
            ambiguous.push(format!("eigenvalue {z} lies on the unit circle"));
        }
    }
    let unstable_or_marginal: Vec<Complex<f64>> = eigs
        .iter()
        .copied()
        .filter(|z| z.norm() >= 1.0 - UNIT_CIRCLE_BAND)
        .collect();
    let on_circle: Vec<Complex<f64>> = eigs
        .iter()
        .copied()
        .filter(|z| (z.norm() - 1.0).abs() <= UNIT_CIRCLE_BAND)
        .collect();
    let unstable_poles: Vec<Complex<f64>> = eigs
        .iter()
        .copied()
        .filter(|z| z.norm() > 1.0 + UNIT_CIRCLE_BAND)
        .collect();

    let ac = to_complex(&plant.a);
    let shifted = |z: Complex<f64>| CMat::identity(n, n) * z - &ac;

    let mut pbh = |name: &str, modes: &[Complex<f64>], other: &Mat, wide: bool| -> bool {
        let mut worst = f64::INFINITY;
        for &z in modes {
            let s = shifted(z);
            let o = to_complex(other);
            let m = if wide {
                let mut m = CMat::zeros(n, n + o.ncols());
                m.view_mut((0, 0), (n, n)).copy_from(&s);
                m.view_mut((0, n), (n, o.ncols())).copy_from(&o);
                m
            } else {
                let mut m = CMat::zeros(n + o.nrows(), n);
                m.view_mut((0, 0), (n, n)).copy_from(&s);
                m.view_mut((n, 0), (o.nrows(), n)).copy_from(&o);
                m
            };
            let ratio = min_singular_ratio(&m);
            if band_flag(ratio) {
                ambiguous.push(format!("{name}: rank test at {z} within tolerance band ({ratio:e})"));
            }
            worst = worst.min(ratio);
        }
        margins.push((name.to_string(), if worst.is_finite() { worst } else { 1.0 }));
        worst > TOL_RANK
    };

    let stabilizable_ab2 = pbh("stabilizable_AB2", &unstable_or_marginal, &plant.b2, true);
    let no_unit_circle_unobservable_ac1 = pbh("no_unit_circle_unobservable_AC1", &on_circle, &plant.c1, false);
    let detectable_ac2 = pbh("detectable_AC2", &unstable_or_marginal, &plant.c2, false);
    let b12 = block(&[&[&plant.b1, &plant.b2]]);
    let no_unit_circle_unstabilizable = pbh("no_unit_circle_unstabilizable", &on_circle, &b12, true);

    let mut h_margin = f64::INFINITY;
    for &z in &unstable_or_marginal {
        let zi = z.inv();
        let value = poly_eval(h, zi).norm();
        let scale: f64 = h
            .iter()
            .enumerate()
            .map(|(i, c)| c.abs() * zi.norm().powi(i as i32))
            .sum();
        let ratio = if scale > 0.0 { value / scale } else { 0.0 };
        if band_flag(ratio) {
            ambiguous.push(format!("mean channel at {z} within tolerance band ({ratio:e})"));
        }
        h_margin = h_margin.min(ratio);
    }
    margins.push((
        "H_nonzero_at_unstable_poles".into(),
        if h_margin.is_finite() { h_margin } else { 1.0 },
    ));
    let h_nonzero_at_unstable_poles = h_margin > TOL_RANK;

    let r1 = relative_degree(&plant.a, &plant.b1, &plant.c2).ok();
    let r2 = relative_degree(&plant.a, &plant.b2, &plant.c2).ok();

    let (gy_minimum_phase, zeros) = match transmission_zeros(&plant.a, &b12, &plant.c2) {
        Ok(zeros) => {
            let max_mod = zeros.iter().map(|z| z.norm()).fold(0.0, f64::max);
            for z in &zeros {
                if (z.norm() - 1.0).abs() <= UNIT_CIRCLE_BAND {
                    ambiguous.push(format!("zero {z} lies on the unit circle"));
                }
            }
            margins.push(("Gy_minimum_phase".into(), 1.0 - max_mod));
            (max_mod <= 1.0 + UNIT_CIRCLE_BAND, zeros)
        }
        Err(_) => {
            margins.push(("Gy_minimum_phase".into(), f64::NEG_INFINITY));
            (false, Vec::new())
        }
    };

    let c2_psi_full_column_rank = match (r1, r2) {
        (Some(r1), Some(r2)) => {
            let psi = block(&[&[
                &(mat_pow(&plant.a, r1 - 1) * &plant.b1),
                &(mat_pow(&plant.a, r2 - 1) * &plant.b2),
            ]]);
            let c2psi = &plant.c2 * psi;
            let sv = c2psi.clone().svd(false, false).singular_values;
            margins.push((
                "C2Psi_full_column_rank".into(),
                sv.min() / sv.max().max(f64::MIN_POSITIVE),
            ));
            column_rank(&c2psi) == 2
        }
        _ => {
            margins.push(("C2Psi_full_column_rank".into(), 0.0));
            false
        }
    };

    Ok(AssumptionReport {
        stabilizable_ab2,
        no_unit_circle_unobservable_ac1,
        detectable_ac2,
        no_unit_circle_unstabilizable,
        h_nonzero_at_unstable_poles,
        gy_minimum_phase,
        c2_psi_full_column_rank,
        r1,
        r2,
        unstable_poles,
        zeros,
        margins,
        ambiguous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::col;

    fn m(rows: usize, cols: usize, v: &[f64]) -> Mat {
        Mat::from_row_slice(rows, cols, v)
    }

    #[test]
    fn delay_channel_moments() {
        let noise = delay_channel_noise(&[1.0, 0.67, 0.0], &[0.6, 0.3, 0.1]).unwrap();
        let mu = noise.mu();
        assert!((mu[0] - 0.6).abs() < 1e-15);
        assert!((mu[1] - 0.201).abs() < 1e-15);
        assert_eq!(mu[2], 0.0);
        let b = noise.beta();
        assert!((b[(0, 0)] - 0.24).abs() < 1e-15);
        assert!((b[(1, 1)] - 0.094269).abs() < 1e-15);
        assert!((b[(0, 1)] + 0.1206).abs() < 1e-15);
        assert_eq!(b[(2, 2)], 0.0);
    }

    #[test]
    fn identity_channel() {
        let noise = delay_channel_noise(&[1.0], &[1.0]).unwrap();
        assert_eq!(noise.mu(), &[1.0]);
        assert_eq!(noise.beta()[(0, 0)], 0.0);
        assert_eq!(noise.horizon(), 0);
    }

    #[test]
    fn dropped_delays_reduce_to_erasure() {
        let e = 0.3;
        let noise = delay_channel_noise(&[1.0, 0.0, 0.0], &[1.0 - e, 0.2, 0.1]).unwrap();
        assert!((noise.mu()[0] - 0.7).abs() < 1e-15);
        assert_eq!(&noise.mu()[1..], &[0.0, 0.0]);
        let b = noise.beta();
        assert!((b[(0, 0)] - e * (1.0 - e)).abs() < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                if (i, j) != (0, 0) {
                    assert_eq!(b[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn probability_violations_name_the_index() {
        let err = delay_channel_noise(&[1.0, 1.0], &[1.2, -0.2]).unwrap_err();
        assert!(matches!(err, Error::Validation(ref s) if s.contains("p[0]")));
        let err = delay_channel_noise(&[1.0, 1.0], &[0.5, 0.4]).unwrap_err();
        assert!(matches!(err, Error::Validation(ref s) if s.contains("sum")));
    }

    #[test]
    fn erasure_moments() {
        for (e, mu, beta) in [(0.0, 1.0, 0.0), (0.5, 0.5, 0.25), (0.1, 0.9, 0.09)] {
            let noise = erasure_channel_noise(e).unwrap();
            assert!((noise.mu()[0] - mu).abs() < 1e-15);
            assert!((noise.beta()[(0, 0)] - beta).abs() < 1e-15);
        }
        assert!(erasure_channel_noise(1.5).is_err());
        assert!(erasure_channel_noise(-0.1).is_err());
    }

    #[test]
    fn non_psd_beta_rejected() {
        let beta = m(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(NoiseModel::new(vec![0.0, 0.0], beta).is_err());
        let asym = m(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(NoiseModel::new(vec![0.0, 0.0], asym).is_err());
    }

    #[test]
    fn relative_degree_examples() {
        let one = m(1, 1, &[1.0]);
        assert_eq!(relative_degree(&m(1, 1, &[0.0]), &one, &one).unwrap(), 1);
        let a = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let b = col(&[0.0, 1.0]);
        let c = m(1, 2, &[1.0, 0.0]);
        assert_eq!(relative_degree(&a, &b, &c).unwrap(), 2);
        let zero = m(1, 2, &[0.0, 0.0]);
        assert!(matches!(relative_degree(&a, &b, &zero), Err(Error::Structural(_))));
    }

    #[test]
    fn unreachable_unstable_mode() {
        let plant = Plant::new(
            m(1, 1, &[2.0]),
            col(&[1.0]),
            col(&[0.0]),
            m(1, 1, &[1.0]),
            m(1, 1, &[1.0]),
            m(1, 1, &[0.0]),
        )
        .unwrap();
        let report = validate_assumptions(&plant, &[1.0]).unwrap();
        assert!(!report.stabilizable_ab2);
        assert!(!report.pass());
    }

    #[test]
    fn mean_channel_vanishing_at_pole() {
        let plant = Plant::new(
            m(1, 1, &[1.1]),
            col(&[1.0]),
            col(&[1.0]),
            m(1, 1, &[1.0]),
            m(1, 1, &[1.0]),
            m(1, 1, &[0.0]),
        )
        .unwrap();
        // H(z) = 1 - 1.1 z^-1 vanishes at z = 1.1
        let report = validate_assumptions(&plant, &[1.0, -1.1]).unwrap();
        assert!(!report.h_nonzero_at_unstable_poles);
        let report = validate_assumptions(&plant, &[1.0]).unwrap();
        assert!(report.h_nonzero_at_unstable_poles);
    }

    #[test]
    fn square_zeros_match_closed_form() {
        // G(z) = (z - 0.3) / ((z - 0.5)(z - 2)) in controllable form
        let a = m(2, 2, &[0.0, 1.0, -1.0, 2.5]);
        let b = col(&[0.0, 1.0]);
        let c = m(1, 2, &[-0.3, 1.0]);
        let zeros = transmission_zeros(&a, &b, &c).unwrap();
        assert_eq!(zeros.len(), 1);
        assert!((zeros[0].re - 0.3).abs() < 1e-10 && zeros[0].im.abs() < 1e-10);
    }

    #[test]
    fn tall_system_zero_survives_squaring_down() {
        let a = m(2, 2, &[0.0, 1.0, -1.0, 2.5]);
        let b = col(&[0.0, 1.0]);
        // both outputs share the zero at 0.3
        let c = m(2, 2, &[-0.3, 1.0, -0.6, 2.0]);
        let zeros = transmission_zeros(&a, &b, &c).unwrap();
        assert_eq!(zeros.len(), 1);
        assert!((zeros[0].re - 0.3).abs() < 1e-8);
        // independent outputs: no common zero
        let c = m(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(transmission_zeros(&a, &b, &c).unwrap().is_empty());
    }
}
