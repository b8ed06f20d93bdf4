use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn hybridplan(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hybridplan"))
        .current_dir(dir)
        .env_remove("HYBRIDPLAN_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_maze(dir: &Path) {
    let out = hybridplan(dir, &["gen-maze", "--seed", "3", "--train", "60", "--val", "5", "--test", "20"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_maze_writes_every_split() {
    let dir = tempfile::tempdir().unwrap();
    small_maze(dir.path());
    let text = fs::read_to_string(dir.path().join("maze.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 85);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["domain"], "maze");
    }
}

#[test]
fn generation_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    small_maze(a.path());
    small_maze(b.path());
    assert_eq!(fs::read(a.path().join("maze.jsonl")).unwrap(), fs::read(b.path().join("maze.jsonl")).unwrap());
}

#[test]
fn out_of_range_x_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    small_maze(dir.path());
    let out = hybridplan(dir.path(), &["plan", "--problems", "maze.jsonl", "--x", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = hybridplan(dir.path(), &["gen-maze", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn malformed_problems_are_data_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.jsonl"), "{\"domain\": \"maze\", \"id\": 1}\n").unwrap();
    let out = hybridplan(dir.path(), &["eval", "--problems", "bad.jsonl"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn sweep_emits_one_row_per_budget_plus_default() {
    let dir = tempfile::tempdir().unwrap();
    small_maze(dir.path());
    let out = hybridplan(
        dir.path(),
        &["sweep", "--problems", "maze.jsonl", "--planner", "system2", "--budgets", "5,10,15", "--out", "s.csv", "--plot", "p.json"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "planner,budget,avg_se,validity,optimality,n");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("astar,default,"));
    let plot: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("p.json")).unwrap()).unwrap();
    assert!(plot.is_array());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    small_maze(dir.path());
    fs::write(dir.path().join("cfg.toml"), "problems = \"maze.jsonl\"\nplanner = \"system2\"\nx = 3.0\n").unwrap();
    let bad = hybridplan(dir.path(), &["eval", "--config", "cfg.toml"]);
    assert_eq!(bad.status.code(), Some(2));
    let good = hybridplan(dir.path(), &["eval", "--config", "cfg.toml", "--x", "0.5"]);
    assert!(good.status.success(), "{}", String::from_utf8_lossy(&good.stderr));
    assert!(String::from_utf8_lossy(&good.stdout).starts_with("planner,budget"));
}

#[test]
fn pipeline_builds_emits_and_plans() {
    let dir = tempfile::tempdir().unwrap();
    small_maze(dir.path());
    let steps: [&[&str]; 3] = [
        &["build-controller-data", "--problems", "maze.jsonl"],
        &["emit-datasets", "--problems", "maze.jsonl", "--controller", "controller.jsonl"],
        &["plan", "--problems", "maze.jsonl", "--calibration", "calibration.json"],
    ];
    for args in steps {
        let out = hybridplan(dir.path(), args);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["datasets/manifest.json", "datasets/sys1.jsonl", "datasets/sys2.jsonl", "datasets/controller.jsonl"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let runs = fs::read_to_string(dir.path().join("runs.jsonl")).unwrap();
    assert_eq!(runs.lines().count(), 20);
}

#[test]
fn out_dir_env_redirects_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hybridplan"))
        .current_dir(dir.path())
        .env("HYBRIDPLAN_OUT_DIR", "results")
        .args(["gen-blocks", "--seed", "2", "--train", "10", "--val", "2", "--test", "3"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("results/blocks.jsonl").exists());
}
