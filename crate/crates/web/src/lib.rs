//! wasm-bindgen bindings for the static demo page in `www/`.
//!
//! Every export returns a JSON string; failures come back as `{"error": ...}`
//! so the page never has to catch exceptions.

use msh2::linalg::{col, Mat};
use msh2::model::{delay_channel_noise, erasure_channel_noise, NoiseModel, Plant};
use msh2::spectrum::{autocorrelation, factor_roots, spectral_factorize};
use msh2::synthesis::synthesize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn finite(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        Value::Null
    }
}

fn error(msg: impl ToString) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

/// Two-state plant with modes `a1`, `a2`, full-state measurement and
/// received control power as cost; the disturbance enters with the control.
fn erasure_plant(a1: f64, a2: f64) -> msh2::Result<Plant> {
    Plant::new(
        Mat::from_row_slice(2, 2, &[a1, 0.0, 1.0, a2]),
        col(&[1.0, 0.0]),
        col(&[1.0, 0.0]),
        Mat::zeros(1, 2),
        Mat::identity(2, 2),
        Mat::from_element(1, 1, 1.0),
    )
}

/// Minimum control power against erasure probability on `steps` points of `[0, 0.95]`.
#[wasm_bindgen]
pub fn erasure_curve(a1: f64, a2: f64, steps: usize) -> String {
    let plant = match erasure_plant(a1, a2) {
        Ok(p) => p,
        Err(e) => return error(e),
    };
    let mahler = a1.abs().max(1.0) * a2.abs().max(1.0);
    let m2 = mahler * mahler;
    let steps = steps.clamp(2, 400);
    let (mut es, mut js, mut exact) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..steps {
        let e = 0.95 * k as f64 / (steps - 1) as f64;
        let j = erasure_channel_noise(e)
            .and_then(|n| synthesize(&plant, &n))
            .map(|r| r.j_opt);
        es.push(e);
        js.push(j.map_or(Value::Null, finite));
        exact.push(if e * m2 < 1.0 {
            finite((m2 - 1.0) / (1.0 - e * m2))
        } else {
            Value::Null
        });
    }
    json!({ "e": es, "j": js, "closed_form": exact, "threshold": 1.0 / m2 }).to_string()
}

/// Three-state plant with weight `eps`, two measurements and unit feedthrough.
fn delay_plant(eps: f64) -> msh2::Result<Plant> {
    Plant::new(
        Mat::from_row_slice(3, 3, &[1.1, 0.0, 0.0, 1.0, 1.2, 0.0, 1.0, 0.0, 0.5]),
        col(&[1.0, 0.5 * eps, 1.0]),
        col(&[1.0, 0.0, 1.0]),
        Mat::from_row_slice(1, 3, &[0.0, eps, 2.0 * eps]),
        Mat::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]),
        Mat::from_element(1, 1, 1.0),
    )
}

/// Optimal cost against the one-step delay probability `p`; the rest of the
/// mass is split between on-time delivery and loss (`loss`).
#[wasm_bindgen]
pub fn delay_sweep(eps: f64, late_weight: f64, loss: f64, steps: usize) -> String {
    let plant = match delay_plant(eps) {
        Ok(p) => p,
        Err(e) => return error(e),
    };
    if !(0.0..1.0).contains(&loss) {
        return error("loss probability must lie in [0, 1)");
    }
    let steps = steps.clamp(2, 200);
    let top = 1.0 - loss;
    let (mut ps, mut js, mut margins) = (Vec::new(), Vec::new(), Vec::new());
    for k in 0..steps {
        let p = top * k as f64 / (steps - 1) as f64;
        let design = delay_channel_noise(&[1.0, late_weight, 0.0], &[(top - p).max(0.0), p, loss])
            .and_then(|n| synthesize(&plant, &n));
        ps.push(p);
        match design {
            Ok(d) => {
                js.push(finite(d.j_opt));
                margins.push(finite(d.stability.margin));
            }
            Err(_) => {
                js.push(Value::Null);
                margins.push(Value::Null);
            }
        }
    }
    json!({ "p": ps, "j": js, "margin": margins }).to_string()
}

/// Minimum-phase factor of the noise spectrum for means `mu` and row-major covariance `beta`.
#[wasm_bindgen]
pub fn spectral_factor(mu: Vec<f64>, beta: Vec<f64>) -> String {
    let len = mu.len();
    if len == 0 || beta.len() != len * len {
        return error(format!("beta needs {} entries", len * len));
    }
    let noise = match NoiseModel::new(mu, Mat::from_row_slice(len, len, &beta)) {
        Ok(n) => n,
        Err(e) => return error(e),
    };
    let spectrum = autocorrelation(&noise);
    let phi = match spectral_factorize(&spectrum) {
        Ok(phi) => phi,
        Err(e) => return error(e),
    };
    let roots: Vec<[f64; 2]> = factor_roots(&phi)
        .unwrap_or_default()
        .iter()
        .map(|z| [z.re, z.im])
        .collect();
    let (theta, s): (Vec<f64>, Vec<f64>) = spectrum.on_grid().into_iter().unzip();
    json!({ "r": spectrum.r, "phi": phi, "roots": roots, "theta": theta, "spectrum": s }).to_string()
}
