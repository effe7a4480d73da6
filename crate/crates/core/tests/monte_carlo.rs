mod common;

use common::{erasure_plant, example_plant, rel_err};
use msh2::analysis::{analyze, close_nominal};
use msh2::linalg::Mat;
use msh2::model::{erasure_channel_noise, Plant, StateSpace};
use msh2::riccati::h2_norm_sq;
use msh2::sim::{sample_channel_path, simulate_closed_loop, ChannelSpec, SimConfig};
use msh2::synthesis::synthesize;
use msh2::SpectralModel;

fn cfg(channel: ChannelSpec, runs: usize, horizon: usize, seed: u64) -> SimConfig {
    SimConfig {
        horizon,
        runs,
        seed,
        burn_in: horizon / 10,
        channel,
        keep_per_run: false,
    }
}

#[test]
fn sampled_packet_moments_match_noise_model() {
    let spec = ChannelSpec::Delay {
        weights: vec![1.0, 0.67, 0.5],
        probs: vec![0.5, 0.3, 0.2],
    };
    let noise = spec.noise_model().unwrap();
    let draws = 1_000_000;
    let path = sample_channel_path(&spec, draws, 3).unwrap();
    let len = 3;
    let mut mean = vec![0.0; len];
    let mut second = Mat::zeros(len, len);
    for packet in &path {
        for i in 0..len {
            mean[i] += packet[i];
            for j in 0..len {
                second[(i, j)] += packet[i] * packet[j];
            }
        }
    }
    let count = draws as f64;
    for i in 0..len {
        let m = mean[i] / count;
        let sd = noise.beta()[(i, i)].sqrt();
        assert!((m - noise.mu()[i]).abs() < 3.0 * sd / count.sqrt(), "mean {i}");
        for j in 0..len {
            let cov = second[(i, j)] / count - m * mean[j] / count;
            // fourth moments are bounded by max |alpha|^4 = 1
            assert!((cov - noise.beta()[(i, j)]).abs() < 3.0 / count.sqrt(), "cov {i}{j}");
        }
    }
}

#[test]
fn gaussian_packets_match_noise_model() {
    let noise = msh2::NoiseModel::new(vec![0.7, 0.2], Mat::from_row_slice(2, 2, &[0.04, 0.01, 0.01, 0.02])).unwrap();
    let path = sample_channel_path(&ChannelSpec::Custom(noise.clone()), 400_000, 9).unwrap();
    let count = path.len() as f64;
    let m0 = path.iter().map(|p| p[0]).sum::<f64>() / count;
    let m1 = path.iter().map(|p| p[1]).sum::<f64>() / count;
    let c01 = path.iter().map(|p| (p[0] - m0) * (p[1] - m1)).sum::<f64>() / count;
    assert!((m0 - 0.7).abs() < 3.0 * 0.2 / count.sqrt());
    assert!((m1 - 0.2).abs() < 3.0 * 0.15 / count.sqrt());
    assert!((c01 - 0.01).abs() < 3.0 * 0.03 / count.sqrt());
}

#[test]
fn open_loop_stable_plant_power_is_h2_norm() {
    let plant = Plant::new(
        Mat::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.3]),
        Mat::from_row_slice(2, 1, &[1.0, 0.5]),
        Mat::from_row_slice(2, 1, &[1.0, 0.0]),
        Mat::from_row_slice(1, 2, &[1.0, -1.0]),
        Mat::from_row_slice(1, 2, &[0.0, 1.0]),
        Mat::from_element(1, 1, 1.0),
    )
    .unwrap();
    let k = StateSpace::static_gain(Mat::zeros(1, 1));
    let res = simulate_closed_loop(&plant, &k, &cfg(ChannelSpec::Erasure { e: 0.0 }, 400, 1000, 1)).unwrap();
    let spectral = SpectralModel::from_noise(&erasure_channel_noise(0.0).unwrap()).unwrap();
    let closed = close_nominal(&plant, &spectral, &k).unwrap();
    let truth = h2_norm_sq(&closed.g_zw()).unwrap();
    assert!(
        (res.mean_power_z - truth).abs() < res.ci_halfwidth,
        "{} vs {truth} +- {}",
        res.mean_power_z,
        res.ci_halfwidth
    );
    assert_eq!(res.diverged, 0);
}

#[test]
fn example_design_cost_is_reproduced_by_simulation() {
    let plant = example_plant(0.8);
    let spec = ChannelSpec::Delay {
        weights: vec![1.0, 0.67, 0.0],
        probs: vec![0.6, 0.3, 0.1],
    };
    let design = synthesize(&plant, &spec.noise_model().unwrap()).unwrap();
    let res = simulate_closed_loop(&plant, &design.controller, &cfg(spec, 1000, 2000, 4)).unwrap();
    assert_eq!(res.diverged, 0);
    assert!(
        rel_err(res.mean_power_z, design.j_opt) < 0.02,
        "{} vs {}",
        res.mean_power_z,
        design.j_opt
    );
    assert!((res.mean_power_z - design.j_opt).abs() < 1.5 * res.ci_halfwidth + 1e-3 * design.j_opt);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let plant = example_plant(0.8);
    let spec = ChannelSpec::Delay {
        weights: vec![1.0, 0.67, 0.0],
        probs: vec![0.6, 0.3, 0.1],
    };
    let design = synthesize(&plant, &spec.noise_model().unwrap()).unwrap();
    let config = SimConfig {
        keep_per_run: true,
        ..cfg(spec, 64, 300, 17)
    };
    let on = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_closed_loop(&plant, &design.controller, &config).unwrap())
    };
    let (one, many) = (on(1), on(8));
    assert_eq!(one.mean_power_z.to_bits(), many.mean_power_z.to_bits());
    assert_eq!(one.ci_halfwidth.to_bits(), many.ci_halfwidth.to_bits());
    assert_eq!(one.per_run_powers, many.per_run_powers);
    let again = on(3);
    assert_eq!(one.per_run_powers, again.per_run_powers);
}

#[test]
fn different_seeds_give_different_paths() {
    let spec = ChannelSpec::Erasure { e: 0.5 };
    assert_ne!(
        sample_channel_path(&spec, 64, 1).unwrap(),
        sample_channel_path(&spec, 64, 2).unwrap()
    );
}

#[test]
fn controller_designed_for_mild_loss_fails_under_heavy_loss() {
    let plant = erasure_plant();
    let design = synthesize(&plant, &erasure_channel_noise(0.1).unwrap()).unwrap();
    let heavy = erasure_channel_noise(0.8).unwrap();
    // the nominal loop may already be unstable, which analysis reports as an error
    assert!(analyze(&plant, &heavy, &design.controller).map_or(true, |r| !r.ms_stable));
    let res = simulate_closed_loop(
        &plant,
        &design.controller,
        &cfg(ChannelSpec::Erasure { e: 0.8 }, 50, 4000, 5),
    )
    .unwrap();
    assert!(
        res.diverged > 0 || res.growth > 10.0,
        "growth {} diverged {}",
        res.growth,
        res.diverged
    );
}
