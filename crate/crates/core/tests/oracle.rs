mod common;

use common::rel_err;
use msh2::analysis::{analyze, moment_oracle};
use msh2::linalg::{col, spectral_radius, Mat};
use msh2::model::{delay_channel_noise, NoiseModel, Plant, StateSpace};
use msh2::synthesis::synthesize;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

fn random_plant(rng: &mut ChaCha8Rng) -> Plant {
    let n = rng.random_range(1..=3);
    let q = rng.random_range(1..=2);
    let mut a = uniform(rng, n, n);
    let r = spectral_radius(&a).unwrap().max(1e-3);
    a *= rng.random_range(0.5..1.25) / r;
    Plant::new(
        a,
        uniform(rng, n, 1),
        uniform(rng, n, 1),
        uniform(rng, 1, n),
        uniform(rng, q, n),
        Mat::from_element(1, 1, rng.random_range(0.5..1.5)),
    )
    .unwrap()
}

fn random_noise(rng: &mut ChaCha8Rng) -> NoiseModel {
    // the last slot carries zero weight and stands for a lost packet
    let len = rng.random_range(1..=3);
    let mut weights: Vec<f64> = (0..len).map(|_| rng.random_range(0.3..1.2)).collect();
    let mut probs: Vec<f64> = (0..len).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = probs.iter().sum::<f64>() / rng.random_range(0.8..1.0);
    probs.iter_mut().for_each(|p| *p /= total);
    let lost = 1.0 - probs.iter().sum::<f64>();
    if len < 3 {
        weights.push(0.0);
        probs.push(lost);
    } else {
        probs[len - 1] += lost;
    }
    delay_channel_noise(&weights, &probs).unwrap()
}

#[test]
fn optimal_designs_agree_with_moment_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    let mut tries = 0;
    while checked < 25 {
        tries += 1;
        assert!(tries < 2000, "too few feasible random instances");
        let plant = random_plant(&mut rng);
        let noise = random_noise(&mut rng);
        let Ok(res) = synthesize(&plant, &noise) else { continue };
        let oracle = moment_oracle(&plant, &noise, &res.controller).unwrap();
        assert!(oracle.rho < 1.0);
        assert!(
            rel_err(oracle.power_z.unwrap(), res.j_opt) < 1e-6,
            "{} vs {}",
            oracle.power_z.unwrap(),
            res.j_opt
        );
        checked += 1;
    }
}

#[test]
fn stability_verdicts_agree_with_moment_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut stable, mut unstable) = (0, 0);
    for _ in 0..400 {
        let plant = random_plant(&mut rng);
        let noise = random_noise(&mut rng);
        let nk = rng.random_range(0..=2);
        let k = StateSpace::new(
            uniform(&mut rng, nk, nk) * 0.6,
            uniform(&mut rng, nk, plant.q()),
            uniform(&mut rng, 1, nk),
            uniform(&mut rng, 1, plant.q()),
        )
        .unwrap();
        let oracle = moment_oracle(&plant, &noise, &k).unwrap();
        match analyze(&plant, &noise, &k) {
            Ok(report) if !report.marginal => {
                assert_eq!(report.ms_stable, oracle.rho < 1.0, "rho = {}", oracle.rho);
                if report.ms_stable {
                    stable += 1;
                    assert!(rel_err(report.j_h2.unwrap(), oracle.power_z.unwrap()) < 1e-6);
                } else {
                    unstable += 1;
                }
            }
            Ok(_) => {}
            // nominal loop unstable: the mean dynamics already diverge
            Err(_) => {
                assert!(oracle.rho >= 1.0 - 1e-9);
                unstable += 1;
            }
        }
    }
    assert!(stable >= 20 && unstable >= 20, "{stable} / {unstable}");
}

#[test]
fn deterministic_gain_channel_has_no_noise_loop() {
    let plant = Plant::new(
        Mat::from_element(1, 1, 1.5),
        col(&[1.0]),
        col(&[1.0]),
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, 1.0),
        Mat::from_element(1, 1, 0.0),
    )
    .unwrap();
    let noise = NoiseModel::new(vec![0.5], Mat::zeros(1, 1)).unwrap();
    let k = StateSpace::static_gain(Mat::from_element(1, 1, -2.0));
    let oracle = moment_oracle(&plant, &noise, &k).unwrap();
    // x+ = (1.5 - 1) x + w
    assert!((oracle.rho - 0.25).abs() < 1e-14);
    assert!(rel_err(oracle.power_z.unwrap(), 1.0 / 0.75) < 1e-12);
}
