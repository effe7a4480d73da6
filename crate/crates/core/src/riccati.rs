//! Lyapunov and Riccati engines: discrete Lyapunov solver, H2 norms, and a
//! single solver for the stabilizing DARE and the modified ARE
//!
//! ```text
//! X = A'XA + Q - (A'XB + S)(R + b'Xb + B'XB)^-1 (B'XA + S')
//! ```
//!
//! where the `b'Xb` term is absent for a plain DARE.

use crate::error::{Error, Result};
use crate::linalg::{eigenvalues, max_abs, scalar, spectral_radius, symmetrize, Mat};
use crate::model::StateSpace;

pub const MAX_ITER: usize = 10_000;
pub const DIVERGENCE_BOUND: f64 = 1e12;
const CONVERGENCE_TOL: f64 = 1e-11;
const POLICY_MAX_ITER: usize = 200;

/// Solve `P = A P A' + Q` for stable `A`.
pub fn solve_dlyap(a: &Mat, q: &Mat) -> Result<Mat> {
    let m = a.nrows();
    if a.ncols() != m || q.shape() != (m, m) {
        return Err(Error::Dimension(format!(
            "Lyapunov data A {:?}, Q {:?}",
            a.shape(),
            q.shape()
        )));
    }
    if m == 0 {
        return Ok(Mat::zeros(0, 0));
    }
    let eigs = eigenvalues(a)?;
    if eigs.iter().any(|z| z.norm() >= 1.0) {
        return Err(Error::Unstable { eigenvalues: eigs });
    }
    let symmetric = (q - q.transpose()).amax() <= 1e-14 * max_abs(q).max(f64::MIN_POSITIVE);

    // Smith doubling: P_{k+1} = P_k + A_k P_k A_k', A_{k+1} = A_k^2
    let mut p = q.clone();
    let mut ak = a.clone();
    for _ in 0..64 {
        let step = &ak * &p * ak.transpose();
        p += &step;
        ak = &ak * &ak;
        if max_abs(&step) <= f64::EPSILON * max_abs(&p) && max_abs(&ak) < 1e-3 {
            break;
        }
        if !p.iter().all(|v| v.is_finite()) {
            break;
        }
    }
    if symmetric {
        p = symmetrize(&p);
    }
    if dlyap_residual(a, q, &p) < 1e-10 * (1.0 + max_abs(&p)) {
        return Ok(p);
    }
    let mut p = dlyap_kronecker(a, q)?;
    if symmetric {
        p = symmetrize(&p);
    }
    Ok(p)
}

fn dlyap_residual(a: &Mat, q: &Mat, p: &Mat) -> f64 {
    if !p.iter().all(|v| v.is_finite()) {
        return f64::INFINITY;
    }
    max_abs(&(p - a * p * a.transpose() - q))
}

fn dlyap_kronecker(a: &Mat, q: &Mat) -> Result<Mat> {
    let m = a.nrows();
    let lhs = Mat::identity(m * m, m * m) - a.kronecker(a);
    let rhs = Mat::from_column_slice(m * m, 1, q.as_slice());
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov operator".into()))?;
    Ok(Mat::from_column_slice(m, m, sol.as_slice()))
}

/// Squared H2 norm `tr(C P C') + tr(D'D)` with `P` the controllability Gramian.
pub fn h2_norm_sq(sys: &StateSpace) -> Result<f64> {
    let dd = (sys.d.transpose() * &sys.d).trace();
    if sys.order() == 0 {
        return Ok(dd);
    }
    let gram = solve_dlyap(&sys.a, &(&sys.b * sys.b.transpose()))?;
    Ok((&sys.c * gram * sys.c.transpose()).trace() + dd)
}

/// Riccati data in normalized form. `noise` is the direction `b` of the
/// solution-dependent weight `b'Xb`; `None` gives a plain DARE.
#[derive(Debug, Clone, PartialEq)]
pub struct MareProblem {
    pub a: Mat,
    pub b: Mat,
    pub q: Mat,
    pub s: Mat,
    pub r: f64,
    pub noise: Option<Mat>,
}

/// Plain DARE data; solved by the same engine with the noise term removed.
pub type DareProblem = MareProblem;

impl MareProblem {
    pub fn dare(a: Mat, b: Mat, q: Mat, s: Mat, r: f64) -> Result<Self> {
        Self::new(a, b, q, s, r, None)
    }

    pub fn new(a: Mat, b: Mat, q: Mat, s: Mat, r: f64, noise: Option<Mat>) -> Result<Self> {
        let m = a.nrows();
        let ok = a.ncols() == m
            && b.shape() == (m, 1)
            && q.shape() == (m, m)
            && s.shape() == (m, 1)
            && noise.as_ref().is_none_or(|v| v.shape() == (m, 1));
        if !ok {
            return Err(Error::Dimension("inconsistent Riccati data".into()));
        }
        if r.is_nan() || r < 0.0 {
            return Err(Error::Validation(format!("control weight R = {r} must be nonnegative")));
        }
        let scale = max_abs(&q).max(f64::MIN_POSITIVE);
        if (&q - q.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Validation("state weight Q is not symmetric".into()));
        }
        let q = symmetrize(&q);
        Ok(Self { a, b, q, s, r, noise })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn noise_weight(&self, x: &Mat) -> f64 {
        self.noise.as_ref().map_or(0.0, |v| scalar(&(v.transpose() * x * v)))
    }

    /// Gain minimizing the one-step cost-to-go for value `x`.
    pub fn gain(&self, x: &Mat) -> Result<Mat> {
        self.gain_with(x, &self.q)
    }

    fn gain_with(&self, x: &Mat, q: &Mat) -> Result<Mat> {
        let inner = self.r + self.noise_weight(x) + scalar(&(self.b.transpose() * x * &self.b));
        let numer = self.b.transpose() * x * &self.a + self.s.transpose();
        let scale = self.r.abs() + max_abs(x) * (1.0 + max_abs(&self.b).powi(2)) + max_abs(q);
        let tiny = 1e-14 * scale.max(f64::MIN_POSITIVE);
        if inner < -tiny {
            return Err(Error::Numerical(format!("Riccati inner term {inner:e} is negative")));
        }
        if inner <= tiny {
            if max_abs(&numer) <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Ok(Mat::zeros(1, self.dim()));
            }
            return Err(Error::Numerical("Riccati inner term is singular".into()));
        }
        Ok(-numer / inner)
    }

    /// Right-hand side of the Riccati equation at `x` and the associated gain.
    pub fn riccati_map(&self, x: &Mat) -> Result<(Mat, Mat)> {
        self.map_with(x, &self.q)
    }

    fn map_with(&self, x: &Mat, q: &Mat) -> Result<(Mat, Mat)> {
        let f = self.gain_with(x, q)?;
        let inner = self.r + self.noise_weight(x) + scalar(&(self.b.transpose() * x * &self.b));
        // A'XA + Q - F' inner F, written through the gain
        let rhs = self.a.transpose() * x * &self.a + q - f.transpose() * &f * inner;
        Ok((symmetrize(&rhs), f))
    }

    /// Scaled residual `|X - RHS(X)| / (1 + |X|)`.
    pub fn residual(&self, x: &Mat) -> Result<f64> {
        let (rhs, _) = self.riccati_map(x)?;
        Ok(max_abs(&(x - rhs)) / (1.0 + max_abs(x)))
    }

    /// Evaluate a fixed gain: returns its cost matrix when the closed loop
    /// `A + BF` with multiplicative noise along `b` is mean-square stable.
    pub fn evaluate_policy(&self, f: &Mat) -> Result<Option<PolicyValue>> {
        let acl = &self.a + &self.b * f;
        let radius = spectral_radius(&acl)?;
        if radius >= 1.0 {
            return Ok(None);
        }
        let qf = &self.q + &self.s * f + f.transpose() * self.s.transpose() + f.transpose() * f * self.r;
        let at = acl.transpose();
        let x0 = solve_dlyap(&at, &symmetrize(&qf))?;
        let (x, loop_gain) = match &self.noise {
            None => (x0, 0.0),
            Some(v) => {
                let y = solve_dlyap(&at, &(f.transpose() * f))?;
                let loop_gain = scalar(&(v.transpose() * &y * v));
                if loop_gain >= 1.0 {
                    return Ok(None);
                }
                let s = scalar(&(v.transpose() * &x0 * v)) / (1.0 - loop_gain);
                (x0 + y * s, loop_gain)
            }
        };
        Ok(Some(PolicyValue {
            x: symmetrize(&x),
            radius,
            loop_gain,
        }))
    }

    /// Iterates of plain value iteration from `X = 0`.
    pub fn value_iteration(&self, steps: usize) -> Result<Vec<Mat>> {
        let mut x = Mat::zeros(self.dim(), self.dim());
        let mut out = vec![x.clone()];
        for _ in 0..steps {
            x = self.riccati_map(&x)?.0;
            out.push(x.clone());
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyValue {
    pub x: Mat,
    /// Spectral radius of `A + BF`.
    pub radius: f64,
    /// Squared H2 gain of the noise loop; mean-square stable iff below 1.
    pub loop_gain: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MareSolution {
    pub x: Mat,
    pub f: Mat,
    pub iterations: usize,
    pub residual: f64,
    pub stabilizing: bool,
    /// Spectral radius of `A + BF`.
    pub closed_loop_radius: f64,
    /// Noise loop gain of the optimal policy (0 for a DARE).
    pub loop_gain: f64,
}

/// Largest solution of the (modified) Riccati equation.
///
/// A stabilizing gain is first found by value iteration on the equation with
/// `Q` slightly inflated, checking every few steps whether the current gain
/// is already mean-square stabilizing. Policy iteration from that gain then
/// converges monotonically to the largest solution. Failure to find a
/// stabilizing gain within `MAX_ITER` steps or before the iterate exceeds
/// `DIVERGENCE_BOUND` is returned as `stabilizing = false`, not as an error.
pub fn solve_mare(problem: &MareProblem) -> Result<MareSolution> {
    let m = problem.dim();
    let mut iterations = 0;

    let mut policy = match problem.evaluate_policy(&problem.gain(&Mat::zeros(m, m))?)? {
        Some(value) => Some((problem.gain(&Mat::zeros(m, m))?, value)),
        None => None,
    };

    if policy.is_none() {
        let eps = 1e-6 * max_abs(&problem.q).max(problem.r).max(1.0);
        let q_reg = &problem.q + Mat::identity(m, m) * eps;
        let mut x = Mat::zeros(m, m);
        while iterations < MAX_ITER {
            let (next, f) = problem.map_with(&x, &q_reg)?;
            iterations += 1;
            let delta = max_abs(&(&next - &x));
            x = next;
            if !x.iter().all(|v| v.is_finite()) || max_abs(&x) > DIVERGENCE_BOUND {
                break;
            }
            let converged = delta < CONVERGENCE_TOL * (1.0 + max_abs(&x));
            if iterations % 10 == 0 || converged {
                if let Some(value) = problem.evaluate_policy(&f)? {
                    policy = Some((f, value));
                    break;
                }
            }
            if converged {
                break;
            }
        }
        if policy.is_none() {
            let f = problem.gain(&x).unwrap_or_else(|_| Mat::zeros(1, m));
            let radius = spectral_radius(&(&problem.a + &problem.b * &f)).unwrap_or(f64::INFINITY);
            let residual = problem.residual(&x).unwrap_or(f64::INFINITY);
            return Ok(MareSolution {
                x,
                f,
                iterations,
                residual,
                stabilizing: false,
                closed_loop_radius: radius,
                loop_gain: f64::NAN,
            });
        }
    }

    let (mut f, mut value) = policy.expect("stabilizing policy");
    for _ in 0..POLICY_MAX_ITER {
        iterations += 1;
        let next_f = problem.gain(&value.x)?;
        let Some(next) = problem.evaluate_policy(&next_f)? else {
            // improvement left the stable set only through rounding; keep the last policy
            break;
        };
        let delta = max_abs(&(&next.x - &value.x));
        f = next_f;
        value = next;
        if delta < CONVERGENCE_TOL * (1.0 + max_abs(&value.x)) {
            break;
        }
    }

    let x = value.x;
    let mut f_opt = problem.gain(&x)?;
    let (radius, loop_gain) = match problem.evaluate_policy(&f_opt)? {
        Some(v) => (v.radius, v.loop_gain),
        None => {
            f_opt = f;
            (value.radius, value.loop_gain)
        }
    };
    let residual = problem.residual(&x)?;
    Ok(MareSolution {
        x,
        f: f_opt,
        iterations,
        residual,
        stabilizing: true,
        closed_loop_radius: radius,
        loop_gain,
    })
}

/// Stabilizing DARE solution; an error when none exists.
pub fn solve_dare(problem: &DareProblem) -> Result<(Mat, Mat)> {
    if problem.noise.is_some() {
        return Err(Error::Validation("DARE data must not carry a noise term".into()));
    }
    let sol = solve_mare(problem)?;
    if !sol.stabilizing {
        return Err(Error::Numerical(format!(
            "no stabilizing DARE solution (closed-loop radius {:.6} after {} iterations)",
            sol.closed_loop_radius, sol.iterations
        )));
    }
    Ok((sol.x, sol.f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::col;

    fn s(v: f64) -> Mat {
        Mat::from_element(1, 1, v)
    }

    #[test]
    fn dlyap_examples() {
        let p = solve_dlyap(&Mat::zeros(2, 2), &Mat::identity(2, 2)).unwrap();
        assert_eq!(p, Mat::identity(2, 2));
        let p = solve_dlyap(&s(0.5), &s(1.0)).unwrap();
        assert!((p[(0, 0)] - 4.0 / 3.0).abs() < 1e-14);
        assert!(matches!(solve_dlyap(&s(1.0), &s(1.0)), Err(Error::Unstable { .. })));
    }

    #[test]
    fn h2_examples() {
        let gain = StateSpace::static_gain(s(3.0));
        assert_eq!(h2_norm_sq(&gain).unwrap(), 9.0);
        let delay = StateSpace::new(s(0.0), s(1.0), s(1.0), s(0.0)).unwrap();
        assert_eq!(h2_norm_sq(&delay).unwrap(), 1.0);
        let pole = StateSpace::new(s(0.5), s(1.0), s(1.0), s(0.0)).unwrap();
        assert!((h2_norm_sq(&pole).unwrap() - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_dare_closed_form() {
        let p = MareProblem::dare(s(0.5), s(1.0), s(1.0), s(0.0), 1.0).unwrap();
        let (x, f) = solve_dare(&p).unwrap();
        let expected = (0.25 + (0.0625_f64 + 4.0).sqrt()) / 2.0;
        assert!((x[(0, 0)] - expected).abs() < 1e-12);
        assert!((0.5 + f[(0, 0)]).abs() < 1.0);
    }

    #[test]
    fn zero_dynamics_dare() {
        let q = Mat::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let p = MareProblem::dare(Mat::zeros(2, 2), col(&[1.0, 0.0]), q.clone(), col(&[0.0, 0.0]), 1.0).unwrap();
        let (x, f) = solve_dare(&p).unwrap();
        assert!((x - q).amax() < 1e-14);
        assert_eq!(f, Mat::zeros(1, 2));
    }

    #[test]
    fn stable_plant_without_cost() {
        let a = Mat::from_row_slice(2, 2, &[0.5, 0.2, 0.0, -0.3]);
        let p = MareProblem::dare(a, col(&[0.0, 1.0]), Mat::zeros(2, 2), col(&[0.0, 0.0]), 0.0).unwrap();
        let (x, f) = solve_dare(&p).unwrap();
        assert_eq!(x, Mat::zeros(2, 2));
        assert_eq!(f, Mat::zeros(1, 2));
    }

    fn scalar_erasure(e: f64) -> MareProblem {
        // pure control-power cost, a = 1.1, through an erasure channel
        let mu = 1.0 - e;
        let sigma = (e * (1.0 - e)).sqrt();
        MareProblem::new(s(1.1), s(mu), s(0.0), s(0.0), sigma * sigma + mu * mu, Some(s(sigma))).unwrap()
    }

    #[test]
    fn scalar_erasure_mare() {
        let sol = solve_mare(&scalar_erasure(0.1)).unwrap();
        assert!(sol.stabilizing);
        assert!((sol.x[(0, 0)] - 0.21 / 0.879).abs() < 1e-10);
        assert!(sol.residual < 1e-12);
        assert!(sol.closed_loop_radius < 1.0 && sol.loop_gain < 1.0);
    }

    #[test]
    fn scalar_erasure_beyond_threshold() {
        let sol = solve_mare(&scalar_erasure(0.9)).unwrap();
        assert!(!sol.stabilizing);
    }

    #[test]
    fn value_iteration_is_monotone() {
        let p = scalar_erasure(0.1);
        let mut q = p.clone();
        q.q = s(1.0);
        let xs = q.value_iteration(50).unwrap();
        for w in xs.windows(2) {
            assert!(w[1][(0, 0)] >= w[0][(0, 0)] - 1e-12);
        }
    }
}
