use std::path::Path;
use std::process::{Command, Output};

fn fracheat(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracheat"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn column(csv: &str, idx: usize) -> Vec<f64> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&fracheat(d, &["nonsense"])), 2);
    assert_eq!(code(&fracheat(d, &["verify", "--bogus", "1"])), 2);
    assert_eq!(code(&fracheat(d, &["verify", "--tol"])), 2);
    assert_eq!(
        code(&fracheat(d, &["forward", "--demo", "bump", "--dx", "-0.5"])),
        2
    );
    assert_eq!(
        code(&fracheat(d, &["forward", "--demo", "bump", "--dx", "0"])),
        2
    );
    assert_eq!(code(&fracheat(d, &["flux"])), 2);
    assert_eq!(code(&fracheat(d, &["flux", "--demo", "nope"])), 2);
    assert_eq!(
        code(&fracheat(
            d,
            &["reconstruct", "--demo", "bump", "--x", "1.5"]
        )),
        2
    );
    assert_eq!(
        code(&fracheat(d, &["forward", "--demo", "bump", "--n", "1"])),
        2
    );

    std::fs::write(d.join("bad.cfg"), "T: 2\n").unwrap();
    assert_eq!(code(&fracheat(d, &["verify", "--config", "bad.cfg"])), 2);
    assert_eq!(
        code(&fracheat(d, &["verify", "--config", "missing.cfg"])),
        2
    );
}

#[test]
fn zero_tolerance_fails_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracheat(
        dir.path(),
        &[
            "verify", "--tol", "0", "--out", "v.csv", "--report", "v.txt",
        ],
    );
    assert_eq!(code(&o), 1);
    let report = std::fs::read_to_string(dir.path().join("v.txt")).unwrap();
    let mut lines = report.lines();
    assert!(lines.next().unwrap().starts_with("# fracheat verify "));
    let checks: Vec<&str> = lines.collect();
    assert!(!checks.is_empty());
    assert!(checks
        .iter()
        .all(|l| l.starts_with("FAIL ") && l.split(' ').count() == 4));
    let data = std::fs::read_to_string(dir.path().join("v.csv")).unwrap();
    assert!(data.starts_with("check,residual,tolerance,pass\n"));
    assert!(!data.contains('\r'));
}

#[test]
fn verify_passes_with_default_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracheat(dir.path(), &["verify", "--report", "v.txt"]);
    assert_eq!(code(&o), 0);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn forward_demo_is_flat_then_rises() {
    let dir = tempfile::tempdir().unwrap();
    let o = fracheat(
        dir.path(),
        &[
            "forward", "--demo", "bump", "--x0", "1", "--T", "2", "--n", "201",
        ],
    );
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("t,g\n"));
    let g = column(&csv, 1);
    assert_eq!(g.len(), 201);
    assert_eq!(g[0], 0.0);
    assert!(g[200] > g[100] && g[100] > 0.0);
}

#[test]
fn reconstruction_at_the_sensor_returns_the_data() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.cfg"), "# sensor data\nT = 2\nn = 201\nx0 = 1\n").unwrap();
    let g = fracheat(
        d,
        &[
            "forward", "--config", "run.cfg", "--demo", "bump", "--out", "g.csv",
        ],
    );
    assert_eq!(code(&g), 0);
    let r = fracheat(
        d,
        &[
            "reconstruct",
            "--config",
            "run.cfg",
            "--input",
            "g.csv",
            "--T",
            "2",
        ],
    );
    // Grid settings conflict with an input file.
    assert_eq!(code(&r), 2);
    // Spline derivatives of sampled data are flat at zero only to about 1e-8.
    let strict = fracheat(
        d,
        &["reconstruct", "--input", "g.csv", "--x", "1", "--N", "2"],
    );
    assert_eq!(code(&strict), 1);
    let r = fracheat(
        d,
        &[
            "reconstruct",
            "--input",
            "g.csv",
            "--x",
            "1",
            "--N",
            "2",
            "--membership_tol",
            "1e-6",
            "--out",
            "u.csv",
            "--report",
            "r.txt",
        ],
    );
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    let data = column(&std::fs::read_to_string(d.join("g.csv")).unwrap(), 1);
    let u = std::fs::read_to_string(d.join("u.csv")).unwrap();
    assert!(u.starts_with("x,t,u\n"));
    assert_eq!(column(&u, 2), data);
}

#[test]
fn flux_from_file_carries_provenance_and_checks_flatness() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(
        code(&fracheat(
            d,
            &["forward", "--demo", "bump", "--n", "201", "--out", "g.csv"]
        )),
        0
    );
    let o = fracheat(d, &["flux", "--input", "g.csv"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("t,flux,provenance\n"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",spline-numeric")));

    let mut rows = String::from("t,g\n");
    for i in 0..21 {
        rows.push_str(&format!("{},{}\n", i as f64 * 0.1, 1.0 + i as f64));
    }
    std::fs::write(d.join("hot.csv"), rows).unwrap();
    assert_eq!(code(&fracheat(d, &["flux", "--input", "hot.csv"])), 1);
}

#[test]
fn holmgren_outcomes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&fracheat(d, &["holmgren", "--demo", "zero"])), 1);
    let o = fracheat(
        d,
        &[
            "holmgren", "--gamma1", "1", "--gamma2", "1", "--C", "1", "--x0", "0.5",
        ],
    );
    assert_eq!(code(&o), 0);
    let report = String::from_utf8(o.stderr).unwrap();
    assert!(report.contains("radius 6.324555e-1"), "{report}");
    assert!(report.contains("covers_origin true"));
    assert_eq!(code(&fracheat(d, &["holmgren", "--gamma1", "1"])), 2);
}

#[test]
fn serial_and_parallel_runs_agree() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_fracheat"))
            .args([
                "reconstruct",
                "--demo",
                "psi",
                "--n",
                "201",
                "--x",
                "0.5,0.9",
                "--N",
                "6",
            ])
            .env("FRACHEAT_THREADS", threads)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    let serial = run("0");
    let parallel = run("4");
    assert_eq!(code(&serial), 0);
    assert_eq!(serial.stdout, parallel.stdout);
    assert_eq!(code(&run("many")), 2);
}
