//! Mean-square stability and exact cost of a closed loop with quasi-colored
//! multiplicative noise, plus an independent second-moment oracle.

use crate::error::{Error, Result};
use crate::linalg::{block, eigenvalues, scalar, spectral_radius, symmetrize, Mat};
use crate::model::{NoiseModel, Plant, StateSpace};
use crate::riccati::h2_norm_sq;
use crate::spectrum::SpectralModel;

/// Verdicts closer than this to the stability boundary are marked marginal.
pub const MARGINAL_BAND: f64 = 1e-8;
/// Largest plant-plus-controller order accepted by [`moment_oracle`].
pub const ORACLE_MAX_STATES: usize = 12;
pub const ORACLE_MAX_HORIZON: usize = 3;

/// Nominal loop with the channel replaced by its mean `H`: inputs `(w, d)`,
/// outputs `(z, u)`, state `[x; x_H; x_K]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalClosedLoop {
    pub sys: StateSpace,
    /// Number of controlled outputs; row `p` of the output map is `u`.
    pub p: usize,
}

impl NominalClosedLoop {
    fn channel(&self, rows: std::ops::Range<usize>, input: usize) -> StateSpace {
        let len = rows.len();
        StateSpace {
            a: self.sys.a.clone(),
            b: self.sys.b.columns(input, 1).into_owned(),
            c: self.sys.c.rows(rows.start, len).into_owned(),
            d: self.sys.d.view((rows.start, input), (len, 1)).into_owned(),
        }
    }

    pub fn g_zw(&self) -> StateSpace {
        self.channel(0..self.p, 0)
    }

    pub fn g_zd(&self) -> StateSpace {
        self.channel(0..self.p, 1)
    }

    pub fn g_uw(&self) -> StateSpace {
        self.channel(self.p..self.p + 1, 0)
    }

    pub fn g_ud(&self) -> StateSpace {
        self.channel(self.p..self.p + 1, 1)
    }
}

pub fn close_nominal(plant: &Plant, spectral: &SpectralModel, controller: &StateSpace) -> Result<NominalClosedLoop> {
    if controller.inputs() != plant.q() || controller.outputs() != 1 {
        return Err(Error::Dimension(format!(
            "controller maps {} inputs to {} outputs, plant needs {} -> 1",
            controller.inputs(),
            controller.outputs(),
            plant.q()
        )));
    }
    let (n, tau, nk, p) = (plant.n(), spectral.horizon(), controller.order(), plant.p());
    let (ak, bk, ck, dk) = (&controller.a, &controller.b, &controller.c, &controller.d);
    let (ah, bh, ch, dh) = (&spectral.ahat, &spectral.bhat1, &spectral.chat, spectral.dhat1);
    let z = |r: usize, c: usize| Mat::zeros(r, c);
    let dkc2 = dk * &plant.c2;

    let a = block(&[
        &[
            &(&plant.a + &plant.b2 * &dkc2 * dh),
            &(&plant.b2 * ch),
            &(&plant.b2 * ck * dh),
        ],
        &[&(bh * &dkc2), ah, &(bh * ck)],
        &[&(bk * &plant.c2), &z(nk, tau), ak],
    ]);
    let b = block(&[
        &[&plant.b1, &plant.b2],
        &[&z(tau, 1), &z(tau, 1)],
        &[&z(nk, 1), &z(nk, 1)],
    ]);
    let c = block(&[
        &[
            &(&plant.c1 + &plant.d * &dkc2 * dh),
            &(&plant.d * ch),
            &(&plant.d * ck * dh),
        ],
        &[&dkc2, &z(1, tau), ck],
    ]);
    let d = block(&[&[&z(p, 1), &plant.d], &[&z(1, 1), &z(1, 1)]]);

    let eigs = eigenvalues(&a)?;
    if eigs.iter().any(|e| e.norm() >= 1.0) {
        let unstable = eigs.into_iter().filter(|e| e.norm() >= 1.0).collect();
        return Err(Error::Unstable { eigenvalues: unstable });
    }
    debug_assert_eq!(a.nrows(), n + tau + nk);
    Ok(NominalClosedLoop {
        sys: StateSpace { a, b, c, d },
        p,
    })
}

/// Series connection `g * phi` of a single-input system with a SISO filter.
pub fn cascade(g: &StateSpace, phi: &StateSpace) -> StateSpace {
    let (ng, nf) = (g.order(), phi.order());
    StateSpace {
        a: block(&[&[&g.a, &(&g.b * &phi.c)], &[&Mat::zeros(nf, ng), &phi.a]]),
        b: block(&[&[&(&g.b * &phi.d)], &[&phi.b]]),
        c: block(&[&[&g.c, &(&g.d * &phi.c)]]),
        d: &g.d * &phi.d,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// `[[s0^2 |Gzw|^2, |Gzd Phi|^2], [s0^2 |Guw|^2, |Gud Phi|^2]]`.
    pub g_hat: [[f64; 2]; 2],
    pub rho: f64,
    pub ms_stable: bool,
    /// Verdict within `MARGINAL_BAND` of the boundary.
    pub marginal: bool,
    pub j_h2: Option<f64>,
    /// `1 - |Gud Phi|^2`.
    pub margin: f64,
    pub sigma0: f64,
}

pub fn ms_stability(closed: &NominalClosedLoop, spectral: &SpectralModel, sigma0: f64) -> Result<StabilityReport> {
    let phi = spectral.phi_system();
    let zw = h2_norm_sq(&closed.g_zw())?;
    let uw = h2_norm_sq(&closed.g_uw())?;
    let zd = h2_norm_sq(&cascade(&closed.g_zd(), &phi))?;
    let ud = h2_norm_sq(&cascade(&closed.g_ud(), &phi))?;
    let s2 = sigma0 * sigma0;
    let g_hat = [[s2 * zw, zd], [s2 * uw, ud]];
    let margin = 1.0 - ud;
    let ms_stable = margin > 0.0;
    Ok(StabilityReport {
        g_hat,
        rho: perron_root(&g_hat),
        ms_stable,
        marginal: margin.abs() < MARGINAL_BAND,
        j_h2: ms_stable.then(|| zw + uw * zd / margin),
        margin,
        sigma0,
    })
}

/// Mean-square analysis of `controller` on `plant` driven through `noise`.
pub fn analyze(plant: &Plant, noise: &NoiseModel, controller: &StateSpace) -> Result<StabilityReport> {
    let spectral = SpectralModel::from_noise(noise)?;
    let closed = close_nominal(plant, &spectral, controller)?;
    ms_stability(&closed, &spectral, 1.0)
}

/// Spectral radius of a nonnegative 2x2 matrix.
pub fn perron_root(g: &[[f64; 2]; 2]) -> f64 {
    let tr = g[0][0] + g[1][1];
    let disc = (g[0][0] - g[1][1]).powi(2) + 4.0 * g[0][1] * g[1][0];
    0.5 * (tr + disc.max(0.0).sqrt())
}

fn certificate_holds(g: &[[f64; 2]; 2], gamma2: f64) -> bool {
    gamma2.is_finite() && gamma2 > 0.0 && g[0][0] + gamma2 * g[1][0] < 1.0 && g[0][1] / gamma2 + g[1][1] < 1.0
}

/// Diagonal scaling `diag(1, gamma^2)` under which both weighted column sums
/// of `g` are below one, returned as `gamma^2`; `None` when `rho(g) >= 1`.
pub fn scaling_certificate(g: &[[f64; 2]; 2]) -> Option<f64> {
    if g.iter().flatten().any(|v| v.is_nan() || *v < 0.0) || perron_root(g) >= 1.0 {
        return None;
    }
    // left Perron vector v: column sums of diag(v) G diag(v)^-1 all equal rho
    let rho = perron_root(g);
    let (v1, v2) = if g[1][0] > 0.0 {
        (g[1][0], rho - g[0][0])
    } else {
        (rho - g[1][1], g[0][1])
    };
    if v1 > 0.0 && v2 > 0.0 {
        let gamma2 = v2 / v1;
        if certificate_holds(g, gamma2) {
            return Some(gamma2);
        }
    }
    // reducible or rounding-limited case: centre of the feasible interval
    let lower = if g[0][1] > 0.0 { g[0][1] / (1.0 - g[1][1]) } else { 0.0 };
    let upper = if g[1][0] > 0.0 {
        (1.0 - g[0][0]) / g[1][0]
    } else {
        f64::INFINITY
    };
    let gamma2 = match (lower > 0.0, upper.is_finite()) {
        (true, true) => (lower * upper).sqrt(),
        (true, false) => 2.0 * lower,
        (false, true) => 0.5 * upper,
        (false, false) => 1.0,
    };
    certificate_holds(g, gamma2).then_some(gamma2)
}

/// `inf_gamma max_j |diag(1, gamma^2) G diag(1, gamma^2)^-1 e_j|_1`, which
/// equals the spectral radius for nonnegative `G`.
pub fn rho_by_scaling(g: &[[f64; 2]; 2]) -> f64 {
    let up = |t: f64| g[0][0] + t.exp() * g[1][0];
    let down = |t: f64| g[0][1] * (-t).exp() + g[1][1];
    let cost = |t: f64| up(t).max(down(t));
    let grid: Vec<f64> = (0..=240).map(|k| -60.0 + 0.5 * k as f64).collect();
    let best = grid
        .iter()
        .copied()
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .expect("grid");
    let (mut lo, mut hi) = (best - 0.5, best + 0.5);
    if up(lo) <= down(lo) && up(hi) >= down(hi) {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if up(mid) < down(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return cost(0.5 * (lo + hi));
    }
    // no crossing: one column sum dominates everywhere and the infimum is
    // approached at the end of the range
    let far = [-700.0, 700.0].map(cost);
    cost(best).min(far[0]).min(far[1])
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentOracle {
    /// Spectral radius of the second-moment map of the lifted state.
    pub rho: f64,
    pub power_z: Option<f64>,
    pub power_u: Option<f64>,
}

/// Exact second-moment analysis of the sampled loop.
///
/// The lifted state is `[x; x_K; u(k-1..k-T); psi]` where `psi[m][j]` holds
/// the zero-mean part of the lag `m + j` gain of the packet sent at `k - m`
/// times `u(k - m)`. The fresh packet at time `k` enters as `E v u(k)`, so
/// `Sigma+ = A Sigma A' + (c' Sigma c) E beta E' + Bw Bw'`.
pub fn moment_oracle(plant: &Plant, noise: &NoiseModel, controller: &StateSpace) -> Result<MomentOracle> {
    let tau = noise.horizon();
    let (n, nk) = (plant.n(), controller.order());
    if n + nk > ORACLE_MAX_STATES || tau > ORACLE_MAX_HORIZON {
        return Err(Error::Dimension(format!(
            "moment oracle limited to {ORACLE_MAX_STATES} plant+controller states and horizon \
             {ORACLE_MAX_HORIZON} (got {} and {tau})",
            n + nk
        )));
    }
    if controller.inputs() != plant.q() || controller.outputs() != 1 {
        return Err(Error::Dimension("controller does not match plant".into()));
    }
    let mu = noise.mu();
    let beta = noise.beta();
    let slot = |m: usize, j: usize| -> usize {
        // psi slots ordered by m = 1..T, j = 0..T-m
        (1..m).map(|mm| tau - mm + 1).sum::<usize>() + j
    };
    let n_psi = tau * (tau + 1) / 2;
    let (ox, ok, ob, op) = (0, n, n + nk, n + nk + tau);
    let dim = op + n_psi;

    let mut c = Mat::zeros(1, dim);
    c.view_mut((0, ox), (1, n)).copy_from(&(&controller.d * &plant.c2));
    c.view_mut((0, ok), (1, nk)).copy_from(&controller.c);

    // mean part of u_d(k) as a row over the lifted state
    let mut ud = &c * mu[0];
    for i in 1..=tau {
        ud[(0, ob + i - 1)] += mu[i];
    }
    for m in 1..=tau {
        ud[(0, op + slot(m, 0))] += 1.0;
    }

    let mut a = Mat::zeros(dim, dim);
    a.view_mut((ox, ox), (n, n)).copy_from(&plant.a);
    let mut x_rows = a.rows_mut(ox, n);
    x_rows += &plant.b2 * &ud;
    a.view_mut((ok, ok), (nk, nk)).copy_from(&controller.a);
    a.view_mut((ok, ox), (nk, n)).copy_from(&(&controller.b * &plant.c2));
    if tau > 0 {
        a.view_mut((ob, 0), (1, dim)).copy_from(&c);
        for i in 1..tau {
            a[(ob + i, ob + i - 1)] = 1.0;
        }
    }
    for m in 2..=tau {
        for j in 0..=tau - m {
            a[(op + slot(m, j), op + slot(m - 1, j + 1))] = 1.0;
        }
    }

    let mut e = Mat::zeros(dim, tau + 1);
    e.view_mut((ox, 0), (n, 1)).copy_from(&plant.b2);
    for j in 0..tau {
        e[(op + slot(1, j), 1 + j)] = 1.0;
    }
    let ebe = &e * beta * e.transpose();
    let mut bw = Mat::zeros(dim, 1);
    bw.view_mut((ox, 0), (n, 1)).copy_from(&plant.b1);

    let map = |s: &Mat| -> Mat { &a * s * a.transpose() + &ebe * scalar(&(&c * s * c.transpose())) };

    let pairs: Vec<(usize, usize)> = (0..dim).flat_map(|i| (i..dim).map(move |j| (i, j))).collect();
    let size = pairs.len();
    let mut op_mat = Mat::zeros(size, size);
    for (col, &(i, j)) in pairs.iter().enumerate() {
        let mut basis = Mat::zeros(dim, dim);
        basis[(i, j)] = 1.0;
        basis[(j, i)] = 1.0;
        let image = map(&basis);
        for (row, &(k, l)) in pairs.iter().enumerate() {
            op_mat[(row, col)] = image[(k, l)];
        }
    }
    let rho = spectral_radius(&op_mat)?;
    if rho >= 1.0 {
        return Ok(MomentOracle {
            rho,
            power_z: None,
            power_u: None,
        });
    }

    let forcing = &bw * bw.transpose();
    let rhs = Mat::from_iterator(size, 1, pairs.iter().map(|&(k, l)| forcing[(k, l)]));
    let lhs = Mat::identity(size, size) - &op_mat;
    let sol = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("moment equation is singular".into()))?;
    let mut sigma = Mat::zeros(dim, dim);
    for (idx, &(i, j)) in pairs.iter().enumerate() {
        sigma[(i, j)] = sol[idx];
        sigma[(j, i)] = sol[idx];
    }
    let sigma = symmetrize(&sigma);
    let power_u = scalar(&(&c * &sigma * c.transpose()));
    let cz = &plant.c1 * block(&[&[&Mat::identity(n, n), &Mat::zeros(n, dim - n)]]) + &plant.d * &ud;
    let dtd = scalar(&(plant.d.transpose() * &plant.d));
    let power_z = (&cz * &sigma * cz.transpose()).trace() + dtd * beta[(0, 0)] * power_u;
    Ok(MomentOracle {
        rho,
        power_z: Some(power_z),
        power_u: Some(power_u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::col;
    use crate::model::{delay_channel_noise, erasure_channel_noise};

    fn m(rows: usize, cols: usize, v: &[f64]) -> Mat {
        Mat::from_row_slice(rows, cols, v)
    }

    fn stable_plant() -> Plant {
        Plant::new(
            m(2, 2, &[0.5, 0.1, 0.0, -0.4]),
            col(&[1.0, 0.5]),
            col(&[0.0, 1.0]),
            m(1, 2, &[1.0, 1.0]),
            m(1, 2, &[1.0, 0.0]),
            m(1, 1, &[0.5]),
        )
        .unwrap()
    }

    #[test]
    fn zero_controller_leaves_open_loop() {
        let plant = stable_plant();
        let noise = delay_channel_noise(&[1.0, 0.5], &[0.7, 0.3]).unwrap();
        let spectral = SpectralModel::from_noise(&noise).unwrap();
        let k = StateSpace::static_gain(Mat::zeros(1, 1));
        let closed = close_nominal(&plant, &spectral, &k).unwrap();
        assert_eq!(h2_norm_sq(&closed.g_uw()).unwrap(), 0.0);
        assert_eq!(h2_norm_sq(&closed.g_ud()).unwrap(), 0.0);
        let open = StateSpace::new(plant.a.clone(), plant.b1.clone(), plant.c1.clone(), Mat::zeros(1, 1)).unwrap();
        let report = ms_stability(&closed, &spectral, 1.0).unwrap();
        assert!(report.ms_stable);
        assert!((report.j_h2.unwrap() - h2_norm_sq(&open).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn unstable_nominal_loop_is_reported() {
        let mut plant = stable_plant();
        plant.a[(0, 0)] = 1.5;
        let spectral = SpectralModel::from_noise(&erasure_channel_noise(0.1).unwrap()).unwrap();
        let k = StateSpace::static_gain(Mat::zeros(1, 1));
        assert!(matches!(
            close_nominal(&plant, &spectral, &k),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn certificates() {
        let diag = [[0.5, 0.0], [0.0, 0.5]];
        let g2 = scaling_certificate(&diag).unwrap();
        assert!(certificate_holds(&diag, g2));
        assert!(scaling_certificate(&[[1.0, 0.0], [0.0, 0.2]]).is_none());
        let g = [[0.3, 0.8], [0.2, 0.4]];
        let g2 = scaling_certificate(&g).unwrap();
        assert!(certificate_holds(&g, g2));
        assert!((rho_by_scaling(&g) - perron_root(&g)).abs() < 1e-12);
    }

    #[test]
    fn deterministic_channel_oracle_is_squared_radius() {
        let plant = stable_plant();
        let noise = delay_channel_noise(&[1.0], &[1.0]).unwrap();
        let k = StateSpace::static_gain(m(1, 1, &[-0.2]));
        let oracle = moment_oracle(&plant, &noise, &k).unwrap();
        let spectral = SpectralModel::from_noise(&noise).unwrap();
        let closed = close_nominal(&plant, &spectral, &k).unwrap();
        let rho = spectral_radius(&closed.sys.a).unwrap();
        assert!((oracle.rho - rho * rho).abs() < 1e-12);
    }
}
