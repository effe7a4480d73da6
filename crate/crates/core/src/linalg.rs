//! Small dense linear-algebra helpers shared by the solver modules.

pub use nalgebra::Complex;
use nalgebra::{DMatrix, DVector, Schur};

use crate::error::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type CMat = DMatrix<Complex<f64>>;

/// Relative rank tolerance used for every zero/rank decision in the crate.
pub const TOL_RANK: f64 = 1e-9;

/// Largest absolute entry, or 0 for an empty matrix.
pub fn max_abs(m: &Mat) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.amax()
    }
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn mat_pow(a: &Mat, k: usize) -> Mat {
    let mut out = Mat::identity(a.nrows(), a.ncols());
    for _ in 0..k {
        out = &out * a;
    }
    out
}

pub fn eigenvalues(a: &Mat) -> Result<Vec<Complex<f64>>> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension(format!(
            "eigenvalues of a non-square {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    let max_iter = 200 * a.nrows().max(10);
    let schur = Schur::try_new(a.clone(), f64::EPSILON, max_iter)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

pub fn spectral_radius(a: &Mat) -> Result<f64> {
    Ok(eigenvalues(a)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Moore-Penrose inverse with singular values below `rel_tol * sigma_max`
/// treated as zero. Returns the inverse and the numerical rank.
pub fn pinv(m: &Mat, rel_tol: f64) -> (Mat, usize) {
    if m.is_empty() {
        return (Mat::zeros(m.ncols(), m.nrows()), 0);
    }
    let svd = m.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let cut = rel_tol * smax;
    let rank = svd.singular_values.iter().filter(|&&s| s > cut).count();
    let u = svd.u.as_ref().expect("svd u");
    let vt = svd.v_t.as_ref().expect("svd v_t");
    let mut out = Mat::zeros(m.ncols(), m.nrows());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > cut {
            out += vt.row(i).transpose() * u.column(i).transpose() / s;
        }
    }
    (out, rank)
}

/// Numerical column rank with singular values compared against
/// `TOL_RANK * max(max-norm, tiny)`.
pub fn column_rank(m: &Mat) -> usize {
    if m.is_empty() {
        return 0;
    }
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let sv = m.clone().svd(false, false).singular_values;
    sv.iter().filter(|&&s| s > TOL_RANK * scale).count()
}

/// Smallest singular value of a complex matrix divided by its max-norm scale.
/// Used for PBH-style rank tests at complex eigenvalues.
pub fn min_singular_ratio(m: &CMat) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    // a tall matrix has min(rows, cols) singular values; a wide one is
    // checked for full row rank by the caller
    sv.min() / scale
}

pub fn to_complex(m: &Mat) -> CMat {
    m.map(|x| Complex::new(x, 0.0))
}

/// Evaluate `sum_k c[k] z^k` (ascending coefficients) by Horner's rule.
pub fn poly_eval(coeffs: &[f64], z: Complex<f64>) -> Complex<f64> {
    coeffs.iter().rev().fold(Complex::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn poly_eval_deriv(coeffs: &[f64], z: Complex<f64>) -> (Complex<f64>, Complex<f64>) {
    let mut p = Complex::new(0.0, 0.0);
    let mut dp = Complex::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of the polynomial with ascending coefficients `coeffs`
/// (the highest coefficient must be nonzero). Companion-matrix eigenvalues
/// followed by a few Newton polishing steps.
pub fn poly_roots(coeffs: &[f64]) -> Result<Vec<Complex<f64>>> {
    let deg = coeffs.len().saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[deg];
    if lead == 0.0 {
        return Err(Error::Numerical("leading polynomial coefficient is zero".into()));
    }
    let mut comp = Mat::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = -coeffs[deg - 1 - j] / lead;
    }
    for i in 1..deg {
        comp[(i, i - 1)] = 1.0;
    }
    let mut roots = eigenvalues(&comp)?;
    for r in roots.iter_mut() {
        for _ in 0..4 {
            let (p, dp) = poly_eval_deriv(coeffs, *r);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            let cand = *r - step;
            // keep the step only if it does not make things worse
            if poly_eval(coeffs, cand).norm() <= p.norm() {
                *r = cand;
            } else {
                break;
            }
        }
    }
    Ok(roots)
}

/// Expand `prod_i (z - roots[i])` into ascending real coefficients.
/// Imaginary parts (which cancel for conjugate-closed root sets) are dropped.
pub fn poly_from_roots(roots: &[Complex<f64>]) -> Vec<f64> {
    let mut c = vec![Complex::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex::new(0.0, 0.0); c.len() + 1];
        for (k, &ck) in c.iter().enumerate() {
            next[k + 1] += ck;
            next[k] -= ck * r;
        }
        c = next;
    }
    c.into_iter().map(|z| z.re).collect()
}

/// Vertically/horizontally stacked block matrix from row-major block rows.
pub fn block(rows: &[&[&Mat]]) -> Mat {
    let nrows: usize = rows.iter().map(|r| r[0].nrows()).sum();
    let ncols: usize = rows[0].iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(nrows, ncols);
    let mut r0 = 0;
    for row in rows {
        let h = row[0].nrows();
        let mut c0 = 0;
        for b in row.iter() {
            debug_assert_eq!(b.nrows(), h, "block row height mismatch");
            out.view_mut((r0, c0), (h, b.ncols())).copy_from(*b);
            c0 += b.ncols();
        }
        debug_assert_eq!(c0, ncols, "block row width mismatch");
        r0 += h;
    }
    out
}

pub fn col(v: &[f64]) -> Mat {
    Mat::from_column_slice(v.len(), 1, v)
}

pub fn vec_of(m: &Mat) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Scalar value of a 1x1 matrix.
pub fn scalar(m: &Mat) -> f64 {
    debug_assert_eq!(m.shape(), (1, 1));
    m[(0, 0)]
}
