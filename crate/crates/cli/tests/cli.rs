use std::path::Path;
use std::process::{Command, Output};

fn heatbath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatbath"))
        .args(args)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn body(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn validate_accepts_a_clean_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "ok.toml",
        "[run]\nkind = \"sim-gle\"\n[physics]\nm = 0.01\n",
    );
    let out = heatbath(&["validate", &cfg]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains(": ok"));
}

#[test]
fn validate_lists_every_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "[run]\nseed = -4\nbogus = 1\n[physics]\nm = -1.0\nnbar = 7\n[extra]\nx = 1\n",
    );
    let out = heatbath(&["validate", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stdout);
    for key in ["run.seed", "run.bogus", "physics.m", "physics.nbar", "extra"] {
        assert!(text.contains(key), "missing {key} in {text}");
    }
}

#[test]
fn syntax_errors_exit_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "broken.toml", "[run]\nseed = = 3\n");
    let out = heatbath(&["kappa", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn missing_config_exits_with_io_code() {
    let out = heatbath(&["kappa", "--config", "/nonexistent/heatbath.toml"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn kappa_writes_the_example_friction() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("k");
    let out = heatbath(&["kappa", "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let rows = body(&out_dir.join("kappa.csv"));
    assert_eq!(rows.len(), 3);
    let target = 2.0 * std::f64::consts::PI.powi(2);
    for row in rows {
        for v in &row[1..] {
            assert!((v - target).abs() < 1e-12);
        }
    }
}

#[test]
fn kernel_eval_matches_sinc() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("k");
    let cfg = write(dir.path(), "k.toml", "[kernel]\ntau_max = 5.0\ntau_step = 0.25\n");
    let out = heatbath(&["kernel-eval", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success());
    let rows = body(&out_dir.join("kernel.csv"));
    assert_eq!(rows.len(), 21);
    for row in rows {
        let tau: f64 = row[0];
        let exact = 4.0 * std::f64::consts::PI * if tau == 0.0 { 1.0 } else { tau.sin() / tau };
        // upper triangle of a 3x3 matrix
        assert_eq!(row.len(), 7);
        for v in &row[1..] {
            assert!((v - exact).abs() < 1e-12);
        }
    }
}

#[test]
fn stiff_scaling_is_rejected_outside_langevin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.toml",
        "[physics]\nscaling = \"stiff\"\nchi = 0.5\ndelta = 1.0\n",
    );
    let out = heatbath(&[
        "sim-gle",
        "--config",
        &cfg,
        "--out",
        dir.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn resolved_config_revalidates_and_reproduces() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[run]\npaths = 16\n[physics]\nm = 0.0625\n[numerics]\nsteps = 100\nrecord_every = 10\nt_ref = 0.1\n",
    );
    let first = dir.path().join("first");
    assert!(heatbath(&[
        "sim-langevin",
        "--config",
        &cfg,
        "--out",
        first.to_str().unwrap(),
        "--seed",
        "9"
    ])
    .status
    .success());
    let echoed = first.join("config.toml");
    let v = heatbath(&["validate", echoed.to_str().unwrap()]);
    assert!(v.status.success(), "{}", String::from_utf8_lossy(&v.stdout));

    let second = dir.path().join("second");
    assert!(heatbath(&[
        "sim-langevin",
        "--config",
        echoed.to_str().unwrap(),
        "--out",
        second.to_str().unwrap()
    ])
    .status
    .success());
    for name in ["langevin_final.csv", "langevin_autocorr_x.csv"] {
        assert_eq!(
            std::fs::read(first.join(name)).unwrap(),
            std::fs::read(second.join(name)).unwrap(),
            "{name}"
        );
    }
    let a = std::fs::read_to_string(&echoed).unwrap();
    let b = std::fs::read_to_string(second.join("config.toml")).unwrap();
    assert_eq!(a.replace("first", "second"), b);
}

#[test]
fn timestamp_only_with_flag() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(heatbath(&["kappa", "--out", a.to_str().unwrap()]).status.success());
    assert!(heatbath(&["kappa", "--out", b.to_str().unwrap(), "--timestamp"])
        .status
        .success());
    let plain = std::fs::read_to_string(a.join("kappa.csv")).unwrap();
    let stamped = std::fs::read_to_string(b.join("kappa.csv")).unwrap();
    assert!(!plain.contains("created_unix"));
    assert!(stamped.contains("# created_unix="));
}
