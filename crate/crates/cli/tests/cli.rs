use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn fkobs(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fkobs"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn verify_small_catalog_passes_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let o = fkobs(dir.path(), &["verify", "--cap", "4"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("skipped"), "{text}");
    for check in [
        "check_vertex_relation",
        "check_argument_lines",
        "check_boundary_modulus",
        "check_measure_proportionality",
        "check_massive_stencils",
    ] {
        let doc: serde_json::Value = serde_json::from_str(&read(dir.path(), &format!("{check}.json"))).unwrap();
        assert_eq!(doc["data"]["passed"], true, "{check}");
        assert_eq!(doc["provenance"]["command"], "verify");
    }
    assert!(dir.path().join("verify.run.json").exists());
}

#[test]
fn injected_fault_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = fkobs(dir.path(), &["verify", "--cap", "4", "--inject-fault"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("check_vertex_relation"), "{}", stderr(&o));
    let r = fkobs(dir.path(), &["report"]);
    assert_eq!(code(&r), 1);
}

#[test]
fn rate_refuses_supercritical_and_conflicting_flags() {
    let dir = tempfile::tempdir().unwrap();
    let o = fkobs(dir.path(), &["rate", "--beta", "0.5"]);
    assert_eq!(code(&o), 2);
    let o = fkobs(dir.path(), &["rate", "--beta", "0.3", "--p", "0.4"]);
    assert_eq!(code(&o), 2);
    let o = fkobs(dir.path(), &["rate", "--p", "0.4", "--direction", "2,1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = read(dir.path(), "rate.csv");
    assert!(csv.lines().any(|l| l.starts_with("beta,a1,a2")), "{csv}");
}

#[test]
fn green_rejects_small_radius() {
    let dir = tempfile::tempdir().unwrap();
    let o = fkobs(dir.path(), &["green", "--mass", "0.9", "--radius", "10"]);
    assert_eq!(code(&o), 2);
    let o = fkobs(
        dir.path(),
        &["green", "--mass", "0.5", "--radius", "60", "--n", "1,2,5", "--no-field"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(!dir.path().join("green_field.csv").exists());
    let series = read(dir.path(), "green_series.csv");
    assert_eq!(series.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

#[test]
fn sample_is_reproducible_and_thread_independent() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "sample",
        "--p",
        "0.4",
        "--box-size",
        "20",
        "--ns",
        "2..5",
        "--sweeps",
        "400",
        "--no-fit",
    ];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let o = fkobs(&a, &args);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut one = args.to_vec();
    one.extend(["--workers", "1"]);
    let o = fkobs(&b, &one);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(read(&a, "sample_estimates.csv"), read(&b, "sample_estimates.csv"));
    let o = fkobs(&b, &[&args[..], &["--seed", "7"]].concat());
    assert_eq!(code(&o), 0);
    assert_ne!(read(&a, "sample_estimates.csv"), read(&b, "sample_estimates.csv"));
}

#[test]
fn sample_above_self_dual_point_skips_fit() {
    let dir = tempfile::tempdir().unwrap();
    let o = fkobs(
        dir.path(),
        &[
            "sample",
            "--p",
            "0.7",
            "--box-size",
            "20",
            "--ns",
            "2..5",
            "--sweeps",
            "200",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stderr(&o).contains("rate fitting skipped"));
    let fit: serde_json::Value = serde_json::from_str(&read(dir.path(), "sample_fit.json")).unwrap();
    assert!(fit["data"]["skipped"].is_string());
}

#[test]
fn config_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        "# small run\np = 0.3\nsweeps = 200\nbox-size = 20\nns = 2..4\nno_fit = true\n",
    )
    .unwrap();
    let cfg = cfg.to_str().unwrap();
    let o = fkobs(dir.path(), &["sample", "--config", cfg]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let head = read(dir.path(), "sample_estimates.csv");
    assert!(head.contains(" p=0.3 "), "{head}");
    assert!(head.contains(" sweeps=200 "), "{head}");

    let o = fkobs(
        dir.path(),
        &["sample", "--config", cfg, "--beta", "0.3", "--sweeps", "100"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let head = read(dir.path(), "sample_estimates.csv");
    assert!(head.contains("beta=0.3 ") && !head.contains(" p=0.3"), "{head}");
    assert!(head.contains(" sweeps=100 "), "{head}");

    fs::write(dir.path().join("bad.cfg"), "bogus = 1\n").unwrap();
    let o = fkobs(
        dir.path(),
        &["sample", "--config", dir.path().join("bad.cfg").to_str().unwrap()],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bogus"));
}

#[test]
fn strip_writes_ratios() {
    let dir = tempfile::tempdir().unwrap();
    let o = fkobs(
        dir.path(),
        &[
            "strip",
            "--p",
            "0.45",
            "--heights",
            "1..3",
            "--halfwidth",
            "8",
            "--exact-halfwidth",
            "4",
            "--sweeps",
            "400",
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let ratios = read(dir.path(), "strip_ratios.csv");
    assert_eq!(ratios.lines().filter(|l| !l.starts_with('#')).count(), 3);
    assert!(dir.path().join("strip_manifest.json").exists());
}
