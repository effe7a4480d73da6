//! Seeded Monte-Carlo simulation of the sampled closed loop.
//!
//! Every run draws from its own ChaCha8 stream keyed by `(seed, run)`, and
//! per-run results are reduced in run order by pairwise summation, so the
//! output does not depend on how runs are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{delay_channel_noise, erasure_channel_noise, NoiseModel, Plant, StateSpace};
use crate::synthesis::synthesize;

pub const DIVERGENCE_GUARD: f64 = 1e12;

/// How channel gains are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelSpec {
    /// Packet delayed by `i` samples with probability `probs[i]`, scaled by `weights[i]`.
    Delay { weights: Vec<f64>, probs: Vec<f64> },
    /// Packet lost with probability `e`.
    Erasure { e: f64 },
    /// Gaussian packets with the given moments.
    Custom(NoiseModel),
}

impl ChannelSpec {
    pub fn noise_model(&self) -> Result<NoiseModel> {
        match self {
            ChannelSpec::Delay { weights, probs } => delay_channel_noise(weights, probs),
            ChannelSpec::Erasure { e } => erasure_channel_noise(*e),
            ChannelSpec::Custom(noise) => Ok(noise.clone()),
        }
    }
}

/// Draws one packet `(w(l, l), w(l+1, l), ..., w(l+T, l))` per source instant.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    kind: SamplerKind,
    len: usize,
}

#[derive(Debug, Clone)]
enum SamplerKind {
    Delay {
        weights: Vec<f64>,
        cumulative: Vec<f64>,
        last: usize,
    },
    Erasure {
        keep: f64,
    },
    Gaussian {
        mean: Vec<f64>,
        factor: Mat,
    },
}

impl ChannelSampler {
    pub fn new(spec: &ChannelSpec) -> Result<Self> {
        let noise = spec.noise_model()?;
        let len = noise.horizon() + 1;
        let kind = match spec {
            ChannelSpec::Delay { weights, probs } => {
                let mut acc = 0.0;
                let cumulative = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
                SamplerKind::Delay {
                    weights: weights.clone(),
                    cumulative,
                    last,
                }
            }
            ChannelSpec::Erasure { e } => SamplerKind::Erasure { keep: 1.0 - e },
            ChannelSpec::Custom(noise) => {
                let eig = noise.beta().clone().symmetric_eigen();
                let roots = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
                let factor = &eig.eigenvectors * Mat::from_diagonal(&roots);
                SamplerKind::Gaussian {
                    mean: noise.mu().to_vec(),
                    factor,
                }
            }
        };
        Ok(Self { kind, len })
    }

    /// Number of gains per packet (`horizon + 1`).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        match &self.kind {
            SamplerKind::Delay {
                weights,
                cumulative,
                last,
            } => {
                out.fill(0.0);
                let u: f64 = rng.random();
                let lag = cumulative.iter().position(|&c| u < c).unwrap_or(*last);
                out[lag] = weights[lag];
            }
            SamplerKind::Erasure { keep } => {
                let u: f64 = rng.random();
                out[0] = if u < *keep { 1.0 } else { 0.0 };
            }
            SamplerKind::Gaussian { mean, factor } => {
                let g: Vec<f64> = (0..mean.len()).map(|_| rng.sample(StandardNormal)).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = mean[i] + (0..g.len()).map(|j| factor[(i, j)] * g[j]).sum::<f64>();
                }
            }
        }
    }
}

fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Packets for source instants `0..horizon` of run 0 for `seed`.
pub fn sample_channel_path(spec: &ChannelSpec, horizon: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sampler = ChannelSampler::new(spec)?;
    let mut rng = run_rng(seed, 0);
    Ok((0..horizon)
        .map(|_| {
            let mut packet = vec![0.0; sampler.len()];
            sampler.draw(&mut rng, &mut packet);
            packet
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub horizon: usize,
    pub runs: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub channel: ChannelSpec,
    pub keep_per_run: bool,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Validation("at least one run is required".into()));
        }
        if self.burn_in >= self.horizon {
            return Err(Error::Validation(format!(
                "burn-in {} must be shorter than the horizon {}",
                self.burn_in, self.horizon
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub mean_power_z: f64,
    pub mean_power_u: f64,
    /// 95% normal-approximation half-width of `mean_power_z`.
    pub ci_halfwidth: f64,
    pub per_run_powers: Option<Vec<f64>>,
    /// Runs stopped by the divergence guard; excluded from the means.
    pub diverged: usize,
    /// Mean power of `z` over the second half of the window divided by the first half.
    pub growth: f64,
}

#[derive(Debug, Clone, Copy)]
struct RunOutcome {
    power_z: f64,
    power_u: f64,
    early: f64,
    late: f64,
    diverged: bool,
}

/// Closed loop flattened to row-major arrays for the inner loop.
struct LoopData {
    dim: usize,
    p: usize,
    /// `[A, 0; B_K C2, A_K]`
    m: Vec<f64>,
    bw: Vec<f64>,
    bd: Vec<f64>,
    /// `u = cu s`
    cu: Vec<f64>,
    /// `z = cz s + D u_d`
    cz: Vec<f64>,
    d: Vec<f64>,
}

impl LoopData {
    fn new(plant: &Plant, k: &StateSpace) -> Result<Self> {
        if k.inputs() != plant.q() || k.outputs() != 1 {
            return Err(Error::Dimension("controller does not match plant".into()));
        }
        let (n, nk) = (plant.n(), k.order());
        let dim = n + nk;
        let mut m = Mat::zeros(dim, dim);
        m.view_mut((0, 0), (n, n)).copy_from(&plant.a);
        m.view_mut((n, 0), (nk, n)).copy_from(&(&k.b * &plant.c2));
        m.view_mut((n, n), (nk, nk)).copy_from(&k.a);
        let mut cu = Mat::zeros(1, dim);
        cu.view_mut((0, 0), (1, n)).copy_from(&(&k.d * &plant.c2));
        cu.view_mut((0, n), (1, nk)).copy_from(&k.c);
        let mut cz = Mat::zeros(plant.p(), dim);
        cz.view_mut((0, 0), (plant.p(), n)).copy_from(&plant.c1);
        let pad = |v: &Mat| {
            let mut out = vec![0.0; dim];
            out[..n].copy_from_slice(v.as_slice());
            out
        };
        let row_major = |a: &Mat| a.transpose().as_slice().to_vec();
        Ok(Self {
            dim,
            p: plant.p(),
            m: row_major(&m),
            bw: pad(&plant.b1),
            bd: pad(&plant.b2),
            cu: cu.as_slice().to_vec(),
            cz: row_major(&cz),
            d: plant.d.as_slice().to_vec(),
        })
    }
}

fn simulate_run(data: &LoopData, sampler: &ChannelSampler, cfg: &SimConfig, run: u64) -> RunOutcome {
    let mut rng = run_rng(cfg.seed, run);
    let dim = data.dim;
    let len = sampler.len();
    let mut s = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    let mut past_u = vec![0.0; len];
    let mut packets = vec![0.0; len * len];
    let window = cfg.horizon - cfg.burn_in;
    let half = cfg.burn_in + window / 2;
    let (mut acc_z, mut acc_u, mut early, mut late) = (0.0, 0.0, 0.0, 0.0);

    for k in 0..cfg.horizon {
        let u: f64 = data.cu.iter().zip(&s).map(|(c, x)| c * x).sum();
        let slot = k % len;
        past_u[slot] = u;
        sampler.draw(&mut rng, &mut packets[slot * len..(slot + 1) * len]);
        let mut ud = 0.0;
        for i in 0..len.min(k + 1) {
            let src = (k - i) % len;
            ud += packets[src * len + i] * past_u[src];
        }
        let w: f64 = rng.sample(StandardNormal);

        if k >= cfg.burn_in {
            let mut pz = 0.0;
            for r in 0..data.p {
                let row = &data.cz[r * dim..(r + 1) * dim];
                let z: f64 = row.iter().zip(&s).map(|(c, x)| c * x).sum::<f64>() + data.d[r] * ud;
                pz += z * z;
            }
            acc_z += pz;
            acc_u += u * u;
            if k < half {
                early += pz;
            } else {
                late += pz;
            }
        }

        let mut blown = false;
        for (i, nx) in next.iter_mut().enumerate() {
            let row = &data.m[i * dim..(i + 1) * dim];
            let v = row.iter().zip(&s).map(|(c, x)| c * x).sum::<f64>() + data.bw[i] * w + data.bd[i] * ud;
            blown |= v.is_nan() || v.abs() > DIVERGENCE_GUARD;
            *nx = v;
        }
        std::mem::swap(&mut s, &mut next);
        if blown {
            return RunOutcome {
                power_z: f64::NAN,
                power_u: f64::NAN,
                early,
                late,
                diverged: true,
            };
        }
    }
    let first = (half - cfg.burn_in).max(1) as f64;
    let second = (cfg.horizon - half).max(1) as f64;
    RunOutcome {
        power_z: acc_z / window as f64,
        power_u: acc_u / window as f64,
        early: early / first,
        late: late / second,
        diverged: false,
    }
}

/// Sum by recursive halving; the split points depend only on the length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 8 {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

pub fn simulate_closed_loop(plant: &Plant, controller: &StateSpace, cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let data = LoopData::new(plant, controller)?;
    let sampler = ChannelSampler::new(&cfg.channel)?;
    let run = |r: usize| simulate_run(&data, &sampler, cfg, r as u64);

    #[cfg(feature = "parallel")]
    let outcomes: Vec<RunOutcome> = {
        use rayon::prelude::*;
        (0..cfg.runs).into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let outcomes: Vec<RunOutcome> = (0..cfg.runs).map(run).collect();

    let ok: Vec<&RunOutcome> = outcomes.iter().filter(|o| !o.diverged).collect();
    let diverged = outcomes.len() - ok.len();
    let count = ok.len();
    let mean = |f: &dyn Fn(&RunOutcome) -> f64| {
        if count == 0 {
            f64::NAN
        } else {
            pairwise_sum(&ok.iter().map(|o| f(o)).collect::<Vec<_>>()) / count as f64
        }
    };
    let mean_z = mean(&|o| o.power_z);
    let mean_u = mean(&|o| o.power_u);
    let ci_halfwidth = if count > 1 {
        let sq: Vec<f64> = ok.iter().map(|o| (o.power_z - mean_z).powi(2)).collect();
        let var = pairwise_sum(&sq) / (count - 1) as f64;
        1.96 * (var / count as f64).sqrt()
    } else {
        0.0
    };
    let growth = mean(&|o| o.late) / mean(&|o| o.early);
    Ok(SimResult {
        mean_power_z: mean_z,
        mean_power_u: mean_u,
        ci_halfwidth,
        per_run_powers: cfg.keep_per_run.then(|| outcomes.iter().map(|o| o.power_z).collect()),
        diverged,
        growth,
    })
}

/// One line of a parameter sweep; failures are recorded, not raised.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub param: f64,
    pub j_theory: Option<f64>,
    pub j_sim: Option<f64>,
    pub ci: Option<f64>,
    pub ms_stable: bool,
    pub rho_ghat: Option<f64>,
    pub margin: Option<f64>,
    pub diverged: usize,
    pub error: Option<String>,
}

/// Design the optimal controller at every grid point and, when `sim` is
/// given, estimate its cost by Monte-Carlo on the same channel.
pub fn sweep(plant: &Plant, grid: &[(f64, ChannelSpec)], sim: Option<&SimConfig>) -> Vec<SweepRow> {
    grid.iter()
        .map(|(param, channel)| {
            let mut row = SweepRow {
                param: *param,
                j_theory: None,
                j_sim: None,
                ci: None,
                ms_stable: false,
                rho_ghat: None,
                margin: None,
                diverged: 0,
                error: None,
            };
            let design = channel.noise_model().and_then(|noise| synthesize(plant, &noise));
            let design = match design {
                Ok(d) => d,
                Err(e) => {
                    row.error = Some(e.to_string());
                    return row;
                }
            };
            row.j_theory = design.stability.j_h2;
            row.ms_stable = design.stability.ms_stable;
            row.rho_ghat = Some(design.stability.rho);
            row.margin = Some(design.stability.margin);
            if let Some(base) = sim {
                let cfg = SimConfig {
                    channel: channel.clone(),
                    ..base.clone()
                };
                match simulate_closed_loop(plant, &design.controller, &cfg) {
                    Ok(res) => {
                        row.diverged = res.diverged;
                        row.j_sim = Some(res.mean_power_z);
                        row.ci = Some(res.ci_halfwidth);
                    }
                    Err(e) => row.error = Some(e.to_string()),
                }
            }
            row
        })
        .collect()
}
