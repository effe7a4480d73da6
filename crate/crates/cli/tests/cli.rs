use std::path::PathBuf;
use std::process::Command;

use msh2_cli::{cmd_analyze, cmd_simulate, cmd_sweep, cmd_synthesize, cmd_validate, parse_controller, CSV_HEADER};
use serde_json::Value;

fn problem(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name)
}

fn bytes(name: &str) -> Vec<u8> {
    std::fs::read(problem(name)).unwrap()
}

fn edit(name: &str, f: impl FnOnce(&mut Value)) -> Vec<u8> {
    let mut v: Value = serde_json::from_slice(&bytes(name)).unwrap();
    f(&mut v);
    serde_json::to_vec(&v).unwrap()
}

fn msh2(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_msh2")).args(args).output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

#[test]
fn validate_example_passes() {
    let out = cmd_validate(&bytes("delay_example.json"), false).unwrap();
    assert_eq!(out.code, 0);
    assert!(out.text.contains("verdict: pass"));
    let json: Value = serde_json::from_str(&cmd_validate(&bytes("delay_example.json"), true).unwrap().text).unwrap();
    assert_eq!(json["pass"], true);
    assert_eq!(json["r1"], 1);
}

#[test]
fn validate_zeroed_b2_fails_stabilizability() {
    let file = edit("delay_example.json", |v| {
        v["plant"]["b2"] = serde_json::json!([0.0, 0.0, 0.0])
    });
    let out = cmd_validate(&file, true).unwrap();
    assert_ne!(out.code, 0);
    let json: Value = serde_json::from_str(&out.text).unwrap();
    assert_eq!(json["stabilizable_ab2"], false);
}

#[test]
fn malformed_dimensions_exit_2() {
    let file = edit("delay_example.json", |v| v["plant"]["n"] = serde_json::json!(4));
    assert_eq!(cmd_validate(&file, false).unwrap_err().code, 2);
    let path = std::env::temp_dir().join("msh2_malformed.json");
    std::fs::write(&path, &file).unwrap();
    let (code, _, err) = msh2(&["validate", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("declared"), "{err}");
}

#[test]
fn unknown_fields_are_rejected() {
    let file = edit("delay_example.json", |v| v["noise"]["extra"] = serde_json::json!(1));
    assert_eq!(cmd_validate(&file, false).unwrap_err().code, 2);
}

#[test]
fn synthesize_example_gives_order_five_controller() {
    let out = cmd_synthesize(&bytes("delay_example.json"), true).unwrap();
    let k = parse_controller(out.artifact.as_deref().unwrap().as_bytes()).unwrap();
    assert_eq!(k.order, 5);
    let j = k.design.unwrap().j_opt;
    assert!((j - 7.7897430396379).abs() < 1e-9 * j);
}

#[test]
fn synthesize_infeasible_erasure_exits_3() {
    let err = cmd_synthesize(&bytes("erasure_infeasible.json"), false).unwrap_err();
    assert_eq!(err.code, 3);
    assert!(err.message.contains("not mean-square stabilizable"));
    let (code, _, stderr) = msh2(&["synthesize", problem("erasure_infeasible.json").to_str().unwrap()]);
    assert_eq!(code, 3);
    assert!(stderr.contains("not mean-square stabilizable"));
}

#[test]
fn perfect_channel_matches_classical_cost() {
    // the minimum control power for a perfect channel is M^2 - 1
    let file = edit("erasure_state_feedback.json", |v| {
        v["noise"]["e"] = serde_json::json!(0.0)
    });
    let out = cmd_synthesize(&file, true).unwrap();
    let info = parse_controller(out.artifact.unwrap().as_bytes())
        .unwrap()
        .design
        .unwrap();
    assert!((info.j_opt - (1.32f64.powi(2) - 1.0)).abs() < 1e-9);
    let out = cmd_synthesize(&bytes("perfect_channel.json"), true).unwrap();
    let info = parse_controller(out.artifact.unwrap().as_bytes())
        .unwrap()
        .design
        .unwrap();
    assert!(info.j_opt.abs() < 1e-9);
}

#[test]
fn analyze_reports_single_row() {
    let k = cmd_synthesize(&bytes("delay_example.json"), true)
        .unwrap()
        .artifact
        .unwrap();
    let out = cmd_analyze(&bytes("delay_example.json"), Some(k.as_bytes())).unwrap();
    let lines: Vec<&str> = out.text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    let cells: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(cells.len(), 7);
    assert_eq!(cells[1], "7.78974303964e0");
    assert_eq!(cells[4], "1");
    assert_eq!(out.text, cmd_analyze(&bytes("delay_example.json"), None).unwrap().text);
}

#[test]
fn simulate_is_reproducible() {
    let file = edit("delay_example.json", |v| {
        v["sim"] = serde_json::json!({"runs": 50, "horizon": 400, "seed": 3, "burn_in": 40})
    });
    let a = cmd_simulate(&file, None, None).unwrap().text;
    assert_eq!(a, cmd_simulate(&file, None, None).unwrap().text);
    assert_ne!(a, cmd_simulate(&file, None, Some(4)).unwrap().text);
}

#[test]
fn simulate_without_sim_block_is_input_error() {
    let file = edit("delay_example.json", |v| {
        v.as_object_mut().unwrap().remove("sim").map(drop).unwrap()
    });
    assert_eq!(cmd_simulate(&file, None, None).unwrap_err().code, 2);
}

#[test]
fn sweep_over_delay_grid_has_ten_rows() {
    let file = edit("delay_example.json", |v| {
        v.as_object_mut().unwrap().remove("sim").map(drop).unwrap()
    });
    let out = cmd_sweep(&file, None).unwrap();
    let lines: Vec<&str> = out.text.lines().collect();
    assert_eq!(lines.len(), 11);
    assert!(lines[1..].iter().all(|l| l.split(',').nth(4) == Some("1")));
    assert!(out.notes.is_empty());
}

#[test]
fn sweep_records_infeasible_points_as_nan() {
    let out = cmd_sweep(&bytes("erasure_state_feedback.json"), None).unwrap();
    let last = out.text.lines().last().unwrap();
    assert!(last.starts_with("7.00000000000e-1,nan,"));
    assert_eq!(out.notes.len(), 2);
}

#[test]
fn out_flag_writes_controller_json() {
    let path = std::env::temp_dir().join("msh2_controller.json");
    let (code, stdout, _) = msh2(&[
        "synthesize",
        problem("delay_example.json").to_str().unwrap(),
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("controller order: 5"));
    let k = parse_controller(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(k.a_k.len(), 25);
    let (code, stdout, _) = msh2(&[
        "analyze",
        problem("delay_example.json").to_str().unwrap(),
        "--controller",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with(CSV_HEADER));
}
