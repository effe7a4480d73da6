#![allow(dead_code)]

use msh2::linalg::{col, Mat};
use msh2::model::{delay_channel_noise, NoiseModel, Plant};

pub fn m(rows: usize, cols: usize, v: &[f64]) -> Mat {
    Mat::from_row_slice(rows, cols, v)
}

/// Three-state example plant with one weight parameter `eps`.
pub fn example_plant(eps: f64) -> Plant {
    Plant::new(
        m(3, 3, &[1.1, 0.0, 0.0, 1.0, 1.2, 0.0, 1.0, 0.0, 0.5]),
        col(&[1.0, 0.5 * eps, 1.0]),
        col(&[1.0, 0.0, 1.0]),
        m(1, 3, &[0.0, eps, 2.0 * eps]),
        m(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]),
        m(1, 1, &[1.0]),
    )
    .unwrap()
}

/// Same dynamics with full-state measurement and control power as the cost.
pub fn erasure_plant() -> Plant {
    let mut plant = example_plant(0.0);
    plant.c2 = Mat::identity(3, 3);
    plant
}

pub fn example_delay(p: f64) -> NoiseModel {
    delay_channel_noise(&[1.0, 0.67, 0.0], &[0.9 - p, p, 0.1]).unwrap()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}
