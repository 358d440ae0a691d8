use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ebcm::io::{
    read_alpha_scan, read_fits, read_records, read_switch_summary, summary_path, Sidecar,
};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn ebcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebcm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    ebcm(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sweep_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run("sweep", &fixture("small.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(golden("sweep_small.csv")).unwrap()
    );
    assert_eq!(read_records(&out).unwrap().len(), 6 * 3 * 2);
}

#[test]
fn default_sweep_writes_480_rows_and_a_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("default.toml");
    std::fs::write(&config, "").unwrap();
    let out = dir.path().join("sweep.csv");
    let o = run("sweep", &config, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read_records(&out).unwrap().len(), 480);
    let meta =
        Sidecar::from_json(&std::fs::read_to_string(Sidecar::path_for(&out)).unwrap()).unwrap();
    assert_eq!(meta.command, "sweep");
    assert_eq!(meta.master_seed, meta.config.master_seed);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    assert_eq!(
        run("sweep", &fixture("small.toml"), &a, &["--threads", "1"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run("sweep", &fixture("small.toml"), &b, &["--threads", "4"])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn sidecar_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let again = dir.path().join("again.csv");
    assert_eq!(
        run("sweep", &fixture("small.toml"), &first, &["--seed", "99"])
            .status
            .code(),
        Some(0)
    );
    let o = run("sweep", &Sidecar::path_for(&first), &again, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&again).unwrap()
    );
    assert_ne!(
        std::fs::read(&first).unwrap(),
        std::fs::read(golden("sweep_small.csv")).unwrap()
    );
}

#[test]
fn config_errors_exit_2_and_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    let o = run("sweep", &fixture("bad_alpha.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha"));
    assert!(!out.exists());

    let o = run("alpha-scan", &fixture("empty_alpha_grid.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("alpha_grid"));

    let o = run("switch-compare", &fixture("three_points.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("phi0_grid"));

    let typo = dir.path().join("typo.toml");
    std::fs::write(&typo, "photons_per_sett = 10\n").unwrap();
    let o = run("sweep", &typo, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("photons_per_sett"));
}

#[test]
fn io_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        "sweep",
        &dir.path().join("missing.toml"),
        &dir.path().join("x.csv"),
        &[],
    );
    assert_eq!(o.status.code(), Some(3));
    let o = run(
        "sweep",
        &fixture("small.toml"),
        &dir.path().join("no/such/dir/x.csv"),
        &[],
    );
    assert_eq!(o.status.code(), Some(3));
    let bogus = dir.path().join("bogus.csv");
    std::fs::write(&bogus, "not,a,records,file\n").unwrap();
    let o = ebcm(&[
        "fit",
        "--input",
        bogus.to_str().unwrap(),
        "--out",
        dir.path().join("f.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn switch_compare_writes_fringes_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("switch.csv");
    let o = run("switch-compare", &fixture("small.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(read_records(&out).unwrap().len(), 2 * 6 * 2);
    let summary = read_switch_summary(&summary_path(&out)).unwrap();
    assert_eq!(summary.len(), 2);
    assert!(summary.iter().all(|r| r.fit_ok && r.shift.is_some()));
    assert_eq!(
        std::fs::read(summary_path(&out)).unwrap(),
        std::fs::read(golden("switch_small.summary.csv")).unwrap()
    );
}

#[test]
fn fit_reads_records_and_writes_fits() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fit.csv");
    let o = ebcm(&[
        "fit",
        "--input",
        golden("sweep_small.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fits = read_fits(&out).unwrap();
    assert_eq!(fits.len(), 5);
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(golden("fit_small.csv")).unwrap()
    );
}

#[test]
fn fit_on_three_points_is_a_precondition_error() {
    let dir = tempfile::tempdir().unwrap();
    let records = dir.path().join("three.csv");
    assert_eq!(
        run("sweep", &fixture("three_points.toml"), &records, &[])
            .status
            .code(),
        Some(0)
    );
    let o = ebcm(&[
        "fit",
        "--input",
        records.to_str().unwrap(),
        "--out",
        dir.path().join("f.csv").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("6"));
}

#[test]
fn alpha_scan_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan.csv");
    let o = run("alpha-scan", &fixture("small.toml"), &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_alpha_scan(&out).unwrap();
    assert_eq!(rows.len(), 5 * 2 + 2);
    assert_eq!(rows.iter().filter(|r| r.model == "qm").count(), 2);
    assert!(rows
        .iter()
        .all(|r| r.dof == 6 && (r.reduced_chi2 - r.chi2 / 6.0).abs() < 1e-12));
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(Sidecar::path_for(&out)).unwrap()).unwrap();
    assert_eq!(meta["details"]["replicas"], 20);
    assert_eq!(
        meta["details"]["prediction_seeds"]
            .as_array()
            .unwrap()
            .len(),
        6
    );
}
