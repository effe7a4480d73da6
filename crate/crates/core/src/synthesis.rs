//! Augmented plant, the modified Riccati equation, and the optimal
//! output-feedback controller built from its solution.

use nalgebra::Complex;

use crate::analysis::{close_nominal, ms_stability, StabilityReport};
use crate::error::{Error, Result};
use crate::linalg::{block, column_rank, mat_pow, max_abs, pinv, scalar, symmetrize, Mat, TOL_RANK};
use crate::model::{relative_degree, validate_assumptions, AssumptionReport, NoiseModel, Plant, StateSpace};
use crate::riccati::{self, MareProblem, MareSolution};
use crate::spectrum::SpectralModel;

/// Plant, mean channel and spectral factor merged into one realization of
/// order `n + horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedPlant {
    pub abar: Mat,
    pub bbar1: Mat,
    pub bbar2: Mat,
    pub btilde2: Mat,
    pub cbar1: Mat,
    pub cbar2: Mat,
    pub dbar11: Mat,
    pub dbar12: Mat,
    pub r1: usize,
    pub r2: usize,
    /// `[A^(r1-1) B1, A^(r2-1) B2]`; for a deterministic channel the second
    /// column uses `[B2; 0]` in place of the vanishing noise input.
    pub psibar: Mat,
    pub n: usize,
    pub horizon: usize,
    /// Feedthrough of the spectral factor.
    pub dhat2: f64,
    /// `D'D` of the plant.
    pub dtd: f64,
}

impl AugmentedPlant {
    pub fn dim(&self) -> usize {
        self.abar.nrows()
    }

    /// True when the channel has no random part (`Phi = 0`).
    pub fn deterministic(&self) -> bool {
        self.dhat2 == 0.0 && max_abs(&self.bbar2) == 0.0
    }

    /// `[D Dhat1; gamma]`, the feedthrough of the scaled auxiliary plant.
    pub fn dbar_gamma(&self, gamma: f64) -> Mat {
        let mut d = self.dbar12.clone();
        let last = d.nrows() - 1;
        d[(last, 0)] = gamma;
        d
    }

    /// Riccati data whose largest solution gives the optimal state feedback.
    pub fn mare_problem(&self) -> Result<MareProblem> {
        let q = self.cbar1.transpose() * &self.cbar1;
        let s = self.cbar1.transpose() * &self.dbar12;
        let r = phi1(self, &Mat::zeros(self.dim(), self.dim())) + scalar(&(self.dbar12.transpose() * &self.dbar12));
        let noise = if self.deterministic() {
            None
        } else {
            Some(mat_pow(&self.abar, self.r2 - 1) * &self.bbar2)
        };
        MareProblem::new(self.abar.clone(), self.btilde2.clone(), q, s, r, noise)
    }
}

pub fn build_augmented_plant(plant: &Plant, spectral: &SpectralModel) -> Result<AugmentedPlant> {
    let n = plant.n();
    let p = plant.p();
    let q = plant.q();
    let tau = spectral.horizon();
    let phi_zero = spectral.phi_is_zero();
    if spectral.dhat2 == 0.0 && !phi_zero {
        return Err(Error::Structural("spectral factor has zero feedthrough".into()));
    }
    let zeros = |r: usize, c: usize| Mat::zeros(r, c);
    let b2c = &plant.b2 * &spectral.chat;
    let abar = block(&[&[&plant.a, &b2c], &[&zeros(tau, n), &spectral.ahat]]);
    let bbar1 = block(&[&[&plant.b1], &[&zeros(tau, 1)]]);
    let bbar2 = block(&[&[&(&plant.b2 * spectral.dhat2)], &[&spectral.bhat2]]);
    let btilde2 = block(&[&[&(&plant.b2 * spectral.dhat1)], &[&spectral.bhat1]]);
    let dc = &plant.d * &spectral.chat;
    let cbar1 = block(&[&[&plant.c1, &dc], &[&zeros(1, n), &zeros(1, tau)]]);
    let cbar2 = block(&[&[&plant.c2, &zeros(q, tau)]]);
    let dbar11 = block(&[
        &[&zeros(p, 1), &(&plant.d * spectral.dhat2)],
        &[&zeros(1, 1), &zeros(1, 1)],
    ]);
    let dbar12 = block(&[&[&(&plant.d * spectral.dhat1)], &[&zeros(1, 1)]]);

    let r1_plant = relative_degree(&plant.a, &plant.b1, &plant.c2)?;
    let r2_plant = relative_degree(&plant.a, &plant.b2, &plant.c2)?;
    let r1 = relative_degree(&abar, &bbar1, &cbar2)?;
    if r1 != r1_plant {
        return Err(Error::Structural(format!(
            "augmented disturbance channel has relative degree {r1}, plant has {r1_plant}"
        )));
    }
    let r2 = if phi_zero {
        r2_plant
    } else {
        let r2 = relative_degree(&abar, &bbar2, &cbar2)?;
        if r2 != r2_plant {
            return Err(Error::Structural(format!(
                "augmented noise channel has relative degree {r2}, plant has {r2_plant}"
            )));
        }
        r2
    };
    // a deterministic channel keeps the direction the noise would enter along
    let noise_dir = if phi_zero {
        block(&[&[&plant.b2], &[&zeros(tau, 1)]])
    } else {
        bbar2.clone()
    };
    let psibar = block(&[&[
        &(mat_pow(&abar, r1 - 1) * &bbar1),
        &(mat_pow(&abar, r2 - 1) * &noise_dir),
    ]]);
    Ok(AugmentedPlant {
        abar,
        bbar1,
        bbar2,
        btilde2,
        cbar1,
        cbar2,
        dbar11,
        dbar12,
        r1,
        r2,
        psibar,
        n,
        horizon: tau,
        dhat2: spectral.dhat2,
        dtd: scalar(&(plant.d.transpose() * &plant.d)),
    })
}

/// `b' A'^(r-1) X A^(r-1) b + sum_{j < r-1} b' A'^j C1'C1 A^j b`.
fn delayed_quadratic(aug: &AugmentedPlant, x: &Mat, b: &Mat, r: usize) -> f64 {
    let ctc = aug.cbar1.transpose() * &aug.cbar1;
    let mut ajb = b.clone();
    let mut sum = 0.0;
    for _ in 0..r - 1 {
        sum += scalar(&(ajb.transpose() * &ctc * &ajb));
        ajb = &aug.abar * ajb;
    }
    sum + scalar(&(ajb.transpose() * x * &ajb))
}

pub fn phi0(aug: &AugmentedPlant, x: &Mat) -> f64 {
    delayed_quadratic(aug, x, &aug.bbar1, aug.r1)
}

pub fn phi1(aug: &AugmentedPlant, x: &Mat) -> f64 {
    delayed_quadratic(aug, x, &aug.bbar2, aug.r2) + aug.dhat2 * aug.dhat2 * aug.dtd
}

/// `M(X) = phi1(X) + D12'D12`.
pub fn m_weight(aug: &AugmentedPlant, x: &Mat) -> f64 {
    phi1(aug, x) + scalar(&(aug.dbar12.transpose() * &aug.dbar12))
}

pub fn solve_mare(aug: &AugmentedPlant) -> Result<MareSolution> {
    riccati::solve_mare(&aug.mare_problem()?)
}

pub fn optimal_state_feedback(aug: &AugmentedPlant, x: &Mat) -> Result<Mat> {
    let inner = m_weight(aug, x) + scalar(&(aug.btilde2.transpose() * x * &aug.btilde2));
    let numer = aug.btilde2.transpose() * x * &aug.abar + aug.dbar12.transpose() * &aug.cbar1;
    if inner <= TOL_RANK * (1.0 + max_abs(x)) {
        if max_abs(&numer) <= TOL_RANK * (1.0 + max_abs(x)) {
            return Ok(Mat::zeros(1, aug.dim()));
        }
        return Err(Error::Numerical(format!(
            "state-feedback inner term {inner:e} is singular"
        )));
    }
    Ok(-numer / inner)
}

/// `L = -A Psi (C2 Psi)^+` and `L0 = F Psi (C2 Psi)^+`.
pub fn observer_gains(aug: &AugmentedPlant, f: &Mat) -> Result<(Mat, Mat)> {
    let c2psi = &aug.cbar2 * &aug.psibar;
    let (inv, rank) = pinv(&c2psi, TOL_RANK);
    if rank < aug.psibar.ncols() {
        return Err(Error::Structural(format!(
            "C2 Psi has rank {rank}, expected {}",
            aug.psibar.ncols()
        )));
    }
    let l = -(&aug.abar * &aug.psibar * &inv);
    let l0 = f * &aug.psibar * &inv;
    Ok((l, l0))
}

pub fn assemble_controller(aug: &AugmentedPlant, f: &Mat, l: &Mat, l0: &Mat) -> StateSpace {
    let bt = &aug.btilde2;
    let c2 = &aug.cbar2;
    StateSpace {
        a: &aug.abar + bt * f + l * c2 - bt * l0 * c2,
        b: bt * l0 - l,
        c: f - l0 * c2,
        d: l0.clone(),
    }
}

/// Optimal cost from the plant block `X11` of the Riccati solution.
pub fn optimal_cost(plant: &Plant, x: &Mat) -> Result<f64> {
    let n = plant.n();
    if x.nrows() < n || x.ncols() < n {
        return Err(Error::Dimension("Riccati solution smaller than the plant".into()));
    }
    let r1 = relative_degree(&plant.a, &plant.b1, &plant.c2)?;
    let x11 = x.view((0, 0), (n, n)).into_owned();
    let ctc = plant.c1.transpose() * &plant.c1;
    let mut ajb = plant.b1.clone();
    let mut sum = 0.0;
    for _ in 0..r1 - 1 {
        sum += scalar(&(ajb.transpose() * &ctc * &ajb));
        ajb = &plant.a * ajb;
    }
    Ok(sum + scalar(&(ajb.transpose() * x11 * &ajb)))
}

/// Erasure-channel closed forms: mean-square stabilizability `e < M^-2` and
/// the minimum control power `(M^2 - 1) / (1 - e M^2)` with `M` the product
/// of unstable pole magnitudes.
pub fn erasure_closed_forms(eigenvalues: &[Complex<f64>], e: f64) -> (bool, f64) {
    let m: f64 = eigenvalues.iter().map(|z| z.norm()).filter(|&r| r > 1.0).product();
    let m2 = m * m;
    let stabilizable = e < 1.0 && e * m2 < 1.0;
    let power = if stabilizable {
        (m2 - 1.0) / (1.0 - e * m2)
    } else {
        f64::INFINITY
    };
    (stabilizable, power)
}

/// Weights of the scalarized auxiliary problem; only used to cross-check
/// the observer gains against the explicit Y solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisWeights {
    pub sigma0: f64,
    pub gamma: f64,
    pub lambda0: f64,
    pub lambda1: f64,
}

impl AnalysisWeights {
    pub fn new(sigma0: f64, gamma: f64, lambda0: f64, lambda1: f64) -> Result<Self> {
        if !(sigma0 > 0.0 && gamma > 0.0) {
            return Err(Error::Validation("sigma0 and gamma must be positive".into()));
        }
        if (lambda0 * lambda0 + lambda1 * lambda1 - 1.0).abs() > 1e-12 {
            return Err(Error::Validation("lambda0^2 + lambda1^2 must equal 1".into()));
        }
        Ok(Self {
            sigma0,
            gamma,
            lambda0,
            lambda1,
        })
    }
}

fn y_inputs(aug: &AugmentedPlant, w: &AnalysisWeights) -> [(Mat, usize, f64); 2] {
    [
        (aug.bbar1.clone(), aug.r1, (w.sigma0 * w.lambda0).powi(2)),
        (aug.bbar2.clone(), aug.r2, (w.lambda1 / w.gamma).powi(2)),
    ]
}

/// Closed-form stabilizing solution of the filter Riccati equation.
pub fn explicit_y(aug: &AugmentedPlant, w: &AnalysisWeights) -> Mat {
    let dim = aug.dim();
    let mut y = Mat::zeros(dim, dim);
    for (b, r, weight) in y_inputs(aug, w) {
        let mut aib = b;
        for _ in 0..r {
            y += &aib * aib.transpose() * weight;
            aib = &aug.abar * aib;
        }
    }
    symmetrize(&y)
}

/// Scaled residual of the filter Riccati equation at `y`.
pub fn y_residual(aug: &AugmentedPlant, w: &AnalysisWeights, y: &Mat) -> f64 {
    let a = &aug.abar;
    let c = &aug.cbar2;
    let mut rhs = a * y * a.transpose();
    for (b, _, weight) in y_inputs(aug, w) {
        rhs += &b * b.transpose() * weight;
    }
    let (inv, _) = pinv(&(c * y * c.transpose()), TOL_RANK);
    rhs -= a * y * c.transpose() * inv * c * y * a.transpose();
    max_abs(&(y - rhs)) / (1.0 + max_abs(y))
}

/// Everything produced by the design pipeline.
#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub spectral: SpectralModel,
    pub report: AssumptionReport,
    pub aug: AugmentedPlant,
    pub mare: MareSolution,
    pub f: Mat,
    pub l: Mat,
    pub l0: Mat,
    pub controller: StateSpace,
    pub j_opt: f64,
    /// Exact closed-loop analysis of the returned controller.
    pub stability: StabilityReport,
    /// True when the static full-state law replaced the observer-based one.
    pub static_feedback: bool,
}

/// Full design: factor the noise, check assumptions, solve the MARE and
/// build the controller, then verify it by exact mean-square analysis.
///
/// When the observer cannot be built (rank-deficient `C2 Psi`) but the
/// channel is memoryless and the full state is measured, the optimal gain is
/// applied as the static law `u = F C2^+ y`.
pub fn synthesize(plant: &Plant, noise: &NoiseModel) -> Result<SynthesisResult> {
    let spectral = SpectralModel::from_noise(noise)?;
    let report = validate_assumptions(plant, &spectral.h)?;
    if !report.pass_state_feedback() {
        return Err(Error::Structural(format!(
            "assumptions violated: {}",
            report.failures().join(", ")
        )));
    }
    let aug = build_augmented_plant(plant, &spectral)?;
    let mare = solve_mare(&aug)?;
    if !mare.stabilizing {
        return Err(Error::Infeasible(format!(
            "not mean-square stabilizable (no stabilizing Riccati solution after {} iterations)",
            mare.iterations
        )));
    }
    if mare.residual > 1e-9 {
        return Err(Error::Numerical(format!(
            "Riccati residual {:e} too large",
            mare.residual
        )));
    }
    let f = optimal_state_feedback(&aug, &mare.x)?;

    let observer_ok = report.gy_minimum_phase && column_rank(&(&aug.cbar2 * &aug.psibar)) == aug.psibar.ncols();
    let full_state = aug.horizon == 0 && column_rank(&plant.c2) == plant.n();
    let (l, l0, controller, static_feedback) = if observer_ok {
        let (l, l0) = observer_gains(&aug, &f)?;
        let k = assemble_controller(&aug, &f, &l, &l0);
        (l, l0, k, false)
    } else if full_state {
        let (c2_inv, _) = pinv(&plant.c2, TOL_RANK);
        let dk = &f * c2_inv;
        let l = Mat::zeros(aug.dim(), plant.q());
        (l, dk.clone(), StateSpace::static_gain(dk), true)
    } else {
        let mut failures = report.failures();
        failures.retain(|s| s.contains("minimum phase") || s.contains("C2 Psi"));
        return Err(Error::Structural(format!(
            "observer cannot be built: {}",
            failures.join(", ")
        )));
    };

    let j_opt = optimal_cost(plant, &mare.x)?;
    let closed = close_nominal(plant, &spectral, &controller)?;
    let stability = ms_stability(&closed, &spectral, 1.0)?;
    if !stability.ms_stable {
        return Err(Error::Numerical(format!(
            "designed controller is not mean-square stabilizing (margin {:e})",
            stability.margin
        )));
    }
    Ok(SynthesisResult {
        spectral,
        report,
        aug,
        mare,
        f,
        l,
        l0,
        controller,
        j_opt,
        stability,
        static_feedback,
    })
}
