use std::process::Command;

fn stochdd() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stochdd"))
}

const TINY: &str = "\
[geometry]
n1 = 17
n2 = 5

[stochastic]
d = 3
p = 2
paper_level_full = 3
paper_level_coarse = 2
eta_level = 3
r = 2

[pdf]
points = [[24.0, 15.0], [210.0, 45.0]]
samples = 200

[run]
mc_samples = 100
";

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[stochastic]\np = 0\n[run]\nworkers = 0\n").unwrap();
    let out = stochdd().args(["kl", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("p must be positive") && err.contains("workers"), "{err}");

    std::fs::write(&cfg, "[stochastic]\nunknown = 1\n").unwrap();
    let out = stochdd().args(["kl", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bench_and_compare_from_the_command_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(&cfg, TINY).unwrap();
    let out_dir = dir.path().join("out");
    let status = stochdd()
        .args(["bench", "--seed", "7", "--workers", "2", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .status()
        .unwrap();
    assert!(status.success());
    let manifest = std::fs::read_to_string(out_dir.join("adapt/manifest.csv")).unwrap();
    assert!(manifest.lines().last().unwrap().starts_with("total,"));
    let status = stochdd()
        .args(["compare", "--region", "1", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_dir)
        .arg("--a")
        .arg(out_dir.join("full"))
        .arg("--b")
        .arg(out_dir.join("full"))
        .status()
        .unwrap();
    assert!(status.success());
    let metrics = std::fs::read_to_string(out_dir.join("compare/metrics.csv")).unwrap();
    assert_eq!(metrics, "metric,region,value\nmean_rel_l2,D1,0.0000000000000000e0\nstd_rel_l2,D1,0.0000000000000000e0\n");
}
