use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn trunckern(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trunckern"))
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

const SMALL: &str = "name = small\nkernel.s = 0.5\ngrid.L = 2\ngrid.n = 65\ntime.T = 0.25\nmetrics.R = 0.25\n\
                     problem.initial = rough_seeded\nout.dir = out\n";

fn config(dir: &Path, text: &str) -> String {
    let p = dir.join("c.cfg");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn run_writes_the_report_next_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let o = trunckern(&["run", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    for f in ["metrics.csv", "manifest.txt", "small.snapshots.txt"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let first = fs::read(out.join("metrics.csv")).unwrap();
    let elsewhere = dir.path().join("again");
    assert_eq!(
        code(&trunckern(&["run", &cfg, "--out", elsewhere.to_str().unwrap()])),
        0
    );
    assert_eq!(fs::read(elsewhere.join("metrics.csv")).unwrap(), first);
}

#[test]
fn validate_echoes_the_canonical_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = trunckern(&["validate", &config(dir.path(), SMALL)]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("problem.initial = rough_seeded(0)\n"));
    assert!(text.contains("time.cfl_fraction = 0.9\n"));
    assert!(text.lines().last().unwrap().starts_with("digest = "));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let drift = format!(
        "{}op.drift_Lambda = 1\n",
        SMALL.replace("kernel.s = 0.5", "kernel.s = 0.25")
    );
    for text in [
        format!("{SMALL}bogus = 1\n"),
        drift.clone(),
        SMALL.replace("name = small\n", ""),
    ] {
        let o = trunckern(&["validate", &config(dir.path(), &text)]);
        assert_eq!(code(&o), 2, "{text}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error: "));
    }
    let o = trunckern(&["run", &config(dir.path(), &drift)]);
    assert!(String::from_utf8_lossy(&o.stderr).contains("drift requires s ≥ 1/2"));
    assert_eq!(code(&trunckern(&["run", "/nonexistent/c.cfg"])), 2);
    let cfg = config(dir.path(), SMALL);
    assert_eq!(code(&trunckern(&["sweep", &cfg, "--rho", "0.25,0.5"])), 2);
    assert_eq!(code(&trunckern(&["oracle", "nonsense"])), 2);
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace(
        "kernel.s = 0.5",
        "kernel.s = 0.5\nkernel.family = user\nkernel.asymmetry = 0.5",
    );
    let o = trunckern(&["run", &config(dir.path(), &text)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("evolution stage"));
}

#[test]
fn unwritable_output_exits_with_1() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let o = trunckern(&[
        "run",
        &config(dir.path(), SMALL),
        "--out",
        blocker.join("sub").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
}

#[test]
fn sweep_adds_one_row_per_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), SMALL);
    let out = dir.path().join("sweep");
    let o = trunckern(&[
        "sweep",
        &cfg,
        "--rho",
        "0.5,0.25,0.125,0",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let rhos: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(rhos, ["0.5", "0.25", "0.125", "0"]);
    let last = csv.lines().last().unwrap();
    assert!(last.ends_with(",0"), "{last}");
    assert_eq!(fs::read_dir(&out).unwrap().count(), 6);
}

#[test]
fn thread_cap_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_trunckern"))
        .args(["oracle", "harnack_constant"])
        .env("TRUNCKERN_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let o = Command::new(env!("CARGO_BIN_EXE_trunckern"))
        .args(["oracle", "harnack_constant"])
        .env("TRUNCKERN_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .starts_with("PASS harnack_constant"));
}
