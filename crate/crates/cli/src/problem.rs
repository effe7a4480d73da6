//! JSON problem and controller files.
//!
//! Matrices are flat row-major arrays; their shapes come from the explicit
//! dimension fields and are never inferred from lengths.

use msh2::linalg::Mat;
use msh2::sim::{ChannelSpec, SimConfig};
use msh2::{Error, NoiseModel, Plant, StateSpace};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub plant: PlantSpec,
    pub noise: NoiseSpec,
    #[serde(default)]
    pub sim: Option<SimSpec>,
    #[serde(default)]
    pub sweep: Option<SweepSpec>,
    /// Value written to the `param` column by `analyze` and `simulate`.
    #[serde(default)]
    pub param: f64,
}

/// `x+ = A x + B1 w + B2 ud`, `z = C1 x + D ud`, `y = C2 x`.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct PlantSpec {
    pub n: usize,
    /// Rows of `z`.
    pub p: usize,
    /// Rows of `y`.
    pub q: usize,
    pub a: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub c1: Vec<f64>,
    pub c2: Vec<f64>,
    pub d: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseSpec {
    Delay {
        alpha: Vec<f64>,
        p: Vec<f64>,
    },
    Erasure {
        e: f64,
    },
    /// `beta` is `(T+1) x (T+1)` row-major with `T + 1 = mu.len()`.
    Custom {
        mu: Vec<f64>,
        beta: Vec<f64>,
    },
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimSpec {
    pub runs: usize,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

fn default_horizon() -> usize {
    2000
}

fn default_burn_in() -> usize {
    200
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "parameter", rename_all = "snake_case", deny_unknown_fields)]
pub enum SweepSpec {
    /// Erasure probability.
    E { grid: Vec<f64> },
    /// Delay probabilities `offset + x * slope` with the weights of the delay noise block.
    DelayP {
        grid: Vec<f64>,
        offset: Vec<f64>,
        slope: Vec<f64>,
    },
}

fn matrix(name: &str, rows: usize, cols: usize, data: &[f64]) -> Result<Mat, Error> {
    if data.len() != rows * cols {
        return Err(Error::Dimension(format!(
            "{name} declared {rows}x{cols} but has {} entries",
            data.len()
        )));
    }
    if let Some(i) = data.iter().position(|v| !v.is_finite()) {
        return Err(Error::Validation(format!("{name}[{i}] is not finite")));
    }
    Ok(Mat::from_row_slice(rows, cols, data))
}

fn flat(m: &Mat) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

impl PlantSpec {
    pub fn build(&self) -> Result<Plant, Error> {
        let (n, p, q) = (self.n, self.p, self.q);
        if n == 0 || p == 0 || q == 0 {
            return Err(Error::Dimension("n, p and q must be positive".into()));
        }
        Plant::new(
            matrix("a", n, n, &self.a)?,
            matrix("b1", n, 1, &self.b1)?,
            matrix("b2", n, 1, &self.b2)?,
            matrix("c1", p, n, &self.c1)?,
            matrix("c2", q, n, &self.c2)?,
            matrix("d", p, 1, &self.d)?,
        )
    }
}

impl NoiseSpec {
    pub fn channel(&self) -> Result<ChannelSpec, Error> {
        let spec = match self {
            NoiseSpec::Delay { alpha, p } => ChannelSpec::Delay {
                weights: alpha.clone(),
                probs: p.clone(),
            },
            NoiseSpec::Erasure { e } => ChannelSpec::Erasure { e: *e },
            NoiseSpec::Custom { mu, beta } => {
                let len = mu.len();
                ChannelSpec::Custom(NoiseModel::new(mu.clone(), matrix("beta", len, len, beta)?)?)
            }
        };
        spec.noise_model()?;
        Ok(spec)
    }
}

impl SimSpec {
    pub fn config(&self, channel: ChannelSpec, seed: Option<u64>) -> Result<SimConfig, Error> {
        let cfg = SimConfig {
            horizon: self.horizon,
            runs: self.runs,
            seed: seed.unwrap_or(self.seed),
            burn_in: self.burn_in,
            channel,
            keep_per_run: false,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl SweepSpec {
    pub fn grid(&self, noise: &NoiseSpec) -> Result<Vec<(f64, ChannelSpec)>, Error> {
        match self {
            SweepSpec::E { grid } => Ok(grid.iter().map(|&e| (e, ChannelSpec::Erasure { e })).collect()),
            SweepSpec::DelayP { grid, offset, slope } => {
                let NoiseSpec::Delay { alpha, .. } = noise else {
                    return Err(Error::Validation("delay_p sweep needs a delay noise block".into()));
                };
                if offset.len() != alpha.len() || slope.len() != alpha.len() {
                    return Err(Error::Dimension(format!(
                        "sweep offset/slope need {} entries like alpha",
                        alpha.len()
                    )));
                }
                Ok(grid
                    .iter()
                    .map(|&x| {
                        let probs = offset.iter().zip(slope).map(|(o, s)| o + x * s).collect();
                        (
                            x,
                            ChannelSpec::Delay {
                                weights: alpha.clone(),
                                probs,
                            },
                        )
                    })
                    .collect())
            }
        }
    }
}

/// Controller file written by `synthesize` and read by `analyze`/`simulate`.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct ControllerFile {
    pub order: usize,
    pub inputs: usize,
    pub a_k: Vec<f64>,
    pub b_k: Vec<f64>,
    pub c_k: Vec<f64>,
    pub d_k: Vec<f64>,
    #[serde(flatten)]
    pub design: Option<DesignInfo>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct DesignInfo {
    /// Order of the augmented plant; `F` is `1 x dim`, `L` is `dim x q`, `X` is `dim x dim`.
    pub augmented_dim: usize,
    #[serde(rename = "F")]
    pub f: Vec<f64>,
    #[serde(rename = "L")]
    pub l: Vec<f64>,
    #[serde(rename = "L0")]
    pub l0: Vec<f64>,
    #[serde(rename = "X")]
    pub x: Vec<f64>,
    #[serde(rename = "J_opt")]
    pub j_opt: f64,
    pub static_feedback: bool,
    pub mare_iterations: usize,
    pub mare_residual: f64,
    pub closed_loop_radius: f64,
    pub rho_ghat: f64,
    pub margin: f64,
}

impl ControllerFile {
    pub fn from_design(res: &msh2::synthesis::SynthesisResult) -> Self {
        let k = &res.controller;
        Self {
            order: k.order(),
            inputs: k.inputs(),
            a_k: flat(&k.a),
            b_k: flat(&k.b),
            c_k: flat(&k.c),
            d_k: flat(&k.d),
            design: Some(DesignInfo {
                augmented_dim: res.aug.dim(),
                f: flat(&res.f),
                l: flat(&res.l),
                l0: flat(&res.l0),
                x: flat(&res.mare.x),
                j_opt: res.j_opt,
                static_feedback: res.static_feedback,
                mare_iterations: res.mare.iterations,
                mare_residual: res.mare.residual,
                closed_loop_radius: res.mare.closed_loop_radius,
                rho_ghat: res.stability.rho,
                margin: res.stability.margin,
            }),
        }
    }

    pub fn build(&self) -> Result<StateSpace, Error> {
        let (nk, q) = (self.order, self.inputs);
        StateSpace::new(
            matrix("a_k", nk, nk, &self.a_k)?,
            matrix("b_k", nk, q, &self.b_k)?,
            matrix("c_k", 1, nk, &self.c_k)?,
            matrix("d_k", 1, q, &self.d_k)?,
        )
    }
}
