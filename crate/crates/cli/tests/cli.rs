use std::path::Path;
use std::process::{Command, Output};

fn uav_aoi(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uav-aoi"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn usage_and_config_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&uav_aoi(&["frobnicate"], dir.path())), 1);
    assert_eq!(code(&uav_aoi(&["eval", "--policy", "sarsa"], dir.path())), 1);
    assert_eq!(code(&uav_aoi(&["generate", "--lambda", "1,x"], dir.path())), 1);
    assert_eq!(code(&uav_aoi(&["sweep", "--lambda", "-5"], dir.path())), 1);

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[grid]\ncells_per_side = 5\n").unwrap();
    let o = uav_aoi(&["generate", "--config", bad.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 1);
    let missing = dir.path().join("nope.toml");
    assert_eq!(code(&uav_aoi(&["generate", "--config", missing.to_str().unwrap()], dir.path())), 1);
    assert!(!dir.path().join("scenario.json").exists());
}

#[test]
fn runtime_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    // nothing to plot or re-cluster yet
    assert_eq!(code(&uav_aoi(&["plot"], dir.path())), 2);
    assert_eq!(code(&uav_aoi(&["cluster"], dir.path())), 2);
    // no checkpoint to evaluate
    assert_eq!(code(&uav_aoi(&["eval", "--policy", "dqn"], dir.path())), 2);
}

#[test]
fn help_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let o = uav_aoi(&["--help"], dir.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for cmd in ["generate", "cluster", "train", "eval", "sweep", "plot"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn pipeline_generate_train_eval() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |o: Output| assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    ok(uav_aoi(&["generate", "--seed", "3"], d));
    let first = std::fs::read(d.join("scenario.json")).unwrap();
    ok(uav_aoi(&["cluster", "--seed", "3"], d));
    assert_eq!(std::fs::read(d.join("scenario.json")).unwrap(), first);

    ok(uav_aoi(&["train", "--seed", "5", "--lambda", "0,100", "--episodes", "5"], d));
    assert!(d.join("checkpoints/dqn_l0_s5.ckpt").exists());
    assert!(d.join("checkpoints/dqn_l100_s5.ckpt").exists());
    assert!(d.join("metrics/train_dqn_l100_s5.csv").exists());

    for policy in ["ga", "nn", "rw"] {
        ok(uav_aoi(&["eval", "--policy", policy, "--episodes", "4"], d));
        assert!(d.join(format!("logs/{policy}_ep0.jsonl")).exists());
    }
    let checkpoint = d.join("checkpoints/dqn_l100_s5.ckpt");
    let o = uav_aoi(
        &[
            "eval",
            "--policy",
            "dqn",
            "--lambda",
            "100",
            "--seed",
            "9",
            "--episodes",
            "4",
            "--checkpoint",
            checkpoint.to_str().unwrap(),
        ],
        d,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().contains("ergodic age"));
    let row = std::fs::read_to_string(d.join("eval_dqn_l100_s1.csv")).unwrap();
    assert!(row.lines().nth(1).unwrap().contains(",9,"), "eval seed recorded: {row}");
}
