use std::path::Path;
use std::process::Command;

fn cies(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cies"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    std::fs::write(
        &path,
        r#"
instances = 5
bootstrap_resamples = 200

[dataset]
source = "synthetic"
n_rows = 150

[[models]]
kind = "cart"
"#,
    )
    .unwrap();
    path
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cies(&["run", "--no-such-flag"], dir.path()).0, 1);
    assert_eq!(cies(&["frobnicate"], dir.path()).0, 1);
    assert_eq!(cies(&["run", "--scheme", "cubic"], dir.path()).0, 1);
    assert_eq!(cies(&["run", "--explainer", "oracle"], dir.path()).0, 1);
    assert_eq!(cies(&["run", "--neighbors", "0"], dir.path()).0, 1);
    assert_eq!(cies(&["--help"], dir.path()).0, 0);
}

#[test]
fn data_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = cies(
        &["run", "--data", "missing.csv", "--target", "y"],
        dir.path(),
    );
    assert_eq!(code, 2, "{err}");
    std::fs::write(dir.path().join("bad.csv"), "a,y\n1,0\n2,1\n3,2\n").unwrap();
    let (code, _, err) = cies(&["run", "--data", "bad.csv", "--target", "y"], dir.path());
    assert_eq!(code, 2);
    assert!(err.contains("exactly two"), "{err}");
}

#[test]
fn run_twice_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    assert_eq!(
        cies(&["run", "--config", cfg, "--out", "a"], dir.path()).0,
        0
    );
    assert_eq!(
        cies(&["run", "--config", cfg, "--out", "b"], dir.path()).0,
        0
    );
    for f in ["report.json", "instances.csv"] {
        let a = std::fs::read(dir.path().join("a").join(f)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs");
    }
}

#[test]
fn synth_then_run_then_stats() {
    let dir = tempfile::tempdir().unwrap();
    let (code, _, err) = cies(
        &["synth", "--out", "d.csv", "--rows", "120", "--seed", "3"],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = cies(
        &[
            "run",
            "--data",
            "d.csv",
            "--target",
            "target",
            "--models",
            "cart",
            "--instances",
            "6",
            "--scheme",
            "all",
            "--out",
            "o",
        ],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("cart"));
    let table = std::fs::read_to_string(dir.path().join("o/instances.csv")).unwrap();
    assert!(table.lines().next().unwrap().contains("cies_uniform"));
    let (code, out, err) = cies(
        &[
            "stats",
            "o/instances.csv",
            "--a",
            "cies_harmonic",
            "--b",
            "baseline",
        ],
        dir.path(),
    );
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("\"spearman\""));
    let (code, _, _) = cies(&["stats", "o/instances.csv", "--a", "nope"], dir.path());
    assert_eq!(code, 2);
}

#[test]
fn analysis_subcommands_write_their_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let cfg = cfg.to_str().unwrap();
    let cases: [(&str, &[&str]); 4] = [
        ("sweep", &["sweep.json", "sweep_plot.csv"]),
        ("verify", &["verify.json", "bound_pairs.csv"]),
        ("schemes", &["schemes.json", "schemes.csv"]),
        ("confound", &["confound.json", "confound_scatter.csv"]),
    ];
    for (cmd, files) in cases {
        let (code, _, err) = cies(&[cmd, "--config", cfg, "--out", cmd], dir.path());
        assert_eq!(code, 0, "{cmd}: {err}");
        for f in files {
            assert!(dir.path().join(cmd).join(f).exists(), "{cmd}/{f}");
        }
    }
}
