use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn dib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dib"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn circuits() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("circuits")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn xor_smoke_run_writes_all_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("xor");
    let spec = circuits().join("xor2.circ");
    let t = Instant::now();
    let o = dib(&["circuit", "--spec", s(&spec), "--out", s(&out), "--steps", "100", "--K", "4", "--B", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(t.elapsed().as_secs() < 60);
    for f in ["config.toml", "log.csv", "measure.csv", "plane.csv", "alloc.csv", "subsets.csv", "circuit.circ"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let mut r = csv::Reader::from_path(out.join("plane.csv")).unwrap();
    let h: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        h,
        ["beta", "total_bits", "gap_bits", "predictive_bits", "accuracy", "ch0_bits", "ch1_bits"]
    );
    assert_eq!(r.records().count(), 100);
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("train_steps = 100"), "{stdout}");
}

#[test]
fn invalid_spec_is_a_usage_error() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.circ");
    std::fs::write(&bad, "circuit v1\ninputs 2\ng1 = NAND x1 x9\noutput g1\n").unwrap();
    let o = dib(&["circuit", "--spec", s(&bad), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.circ"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(dib(&["circuit", "--bogus"]).status.code(), Some(2));
}

#[test]
fn non_empty_output_needs_force() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    std::fs::create_dir(&out).unwrap();
    std::fs::write(out.join("keep.txt"), "x").unwrap();
    let spec = circuits().join("xor2.circ");
    let args = ["circuit", "--spec", s(&spec), "--out", s(&out), "--steps", "20", "--K", "4", "--B", "1"];
    let o = dib(&args);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.join("keep.txt").exists());
    let mut forced = args.to_vec();
    forced.push("--force");
    assert!(dib(&forced).status.success());
    assert!(!out.join("keep.txt").exists());
}

#[test]
fn measure_only_reproduces_measurements() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pt");
    let spec = circuits().join("passthrough3.circ");
    let o = dib(&["circuit", "--spec", s(&spec), "--out", s(&out), "--steps", "60", "--K", "16", "--B", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let before = std::fs::read(out.join("measure.csv")).unwrap();
    let plane = std::fs::read(out.join("plane.csv")).unwrap();
    std::fs::remove_file(out.join("measure.csv")).unwrap();
    let o = dib(&["circuit", "--measure-only", s(&out), "--K", "16", "--B", "2", "--serial"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(std::fs::read(out.join("measure.csv")).unwrap(), before);
    assert_eq!(std::fs::read(out.join("plane.csv")).unwrap(), plane);

    let o = dib(&["report", s(&out)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("total"));
}

#[test]
fn measure_only_reports_missing_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pt");
    let spec = circuits().join("xor2.circ");
    assert!(dib(&["circuit", "--spec", s(&spec), "--out", s(&out), "--steps", "30", "--K", "4", "--B", "1"])
        .status
        .success());
    std::fs::remove_file(out.join("ckpt").join("3.dibckpt")).unwrap();
    let o = dib(&["circuit", "--measure-only", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains('3'));
}

#[test]
fn mi_bench_csv_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("bench.csv");
    let o = dib(&["mi-bench", "--out", s(&out), "--quick", "--K", "32", "--B", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut r = csv::Reader::from_path(&out).unwrap();
    let h: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        h,
        ["H_bits", "d", "K", "B", "lower_bits", "lower_std", "upper_bits", "upper_std", "mc_bits", "mc_stderr"]
    );
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|x| &x[2] == "32" && &x[3] == "2"));
    // A second run refuses to overwrite.
    let o = dib(&["mi-bench", "--out", s(&out), "--quick", "--K", "32", "--B", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn glass_quick_synthetic_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("g.cfg");
    std::fs::write(&cfg, "synth_n = 200\ncheckpoints = 5\nmax_pool = 64\n").unwrap();
    let out = tmp.path().join("g");
    let o = dib(&["glass", "--quick", "--config", s(&cfg), "--steps", "3", "--out", s(&out), "--K", "16", "--B", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["plane.csv", "alloc.csv", "norm.json", "split.txt", "baseline.json", "source.toml"] {
        assert!(out.join(f).is_file(), "missing {f}");
    }
    let alloc = std::fs::read_to_string(out.join("alloc.csv")).unwrap();
    assert!(alloc.lines().next().unwrap().starts_with("total_bits,G_A(0.5000)"));
}
