use std::path::PathBuf;
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn rhomix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rhomix")).args(args).env_remove("RHOMIX_THREADS").output().expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

fn number(v: &serde_json::Value, key: &str) -> f64 {
    v[key].as_f64().unwrap_or_else(|| panic!("missing {key} in {v}"))
}

#[test]
fn three_state_pair_has_the_closed_form_value() {
    let v = json(&rhomix(&["maxcorr", "--pair", data("three_state.json").to_str().unwrap()]));
    assert!((number(&v, "rho") - 5.0 / 6.0).abs() < 1e-14);
}

#[test]
fn product_pair_is_uncorrelated() {
    let v = json(&rhomix(&["maxcorr", "--pair", data("product.json").to_str().unwrap()]));
    assert!(number(&v, "rho").abs() < 1e-12);
}

#[test]
fn simple_bound_of_two_halves() {
    let v = json(&rhomix(&["tensor-bound", "simple", "--eps", "0.5,0.5"]));
    assert!((number(&v, "bound") - 7f64.sqrt() / 4.0).abs() < 1e-15);
}

#[test]
fn blocks_of_a_system() {
    let sys = data("spins.json");
    let v = json(&rhomix(&["maxcorr", "--system", sys.to_str().unwrap(), "--x", "0", "--y", "1,2"]));
    let rho = number(&v, "rho");
    assert!(rho > 0.0 && rho < 1.0);
    let s = json(&rhomix(&["subjective", "--system", sys.to_str().unwrap(), "--x", "0", "--y", "2"]));
    assert!(number(&s, "subjective_rho") >= 0.0);
}

#[test]
fn exit_codes() {
    assert_eq!(rhomix(&["no-such-command"]).status.code(), Some(64));
    assert_eq!(rhomix(&[]).status.code(), Some(64));
    assert_eq!(rhomix(&["--help"]).status.code(), Some(0));
    assert_eq!(rhomix(&["--version"]).status.code(), Some(0));
    let missing = rhomix(&["maxcorr", "--pair", "/nonexistent/pair.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("cannot read"));
    let bad_eps = rhomix(&["tensor-bound", "simple", "--eps", "1.5"]);
    assert_eq!(bad_eps.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad_eps.stderr).contains("[0, 1]"));
    assert_eq!(rhomix(&["--tol", "-1", "tensor-bound", "zz", "--eps", "0.1"]).status.code(), Some(2));
}

#[test]
fn invalid_joint_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, r#"{"joint": [[0.5, 0.6], [0.1, 0.1]]}"#).unwrap();
    let out = rhomix(&["maxcorr", "--pair", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    let dry = rhomix(&["--dry-run", "maxcorr", "--pair", path.to_str().unwrap()]);
    assert_eq!(dry.status.code(), Some(2));
}

#[test]
fn dry_run_validates_without_computing() {
    let v = json(&rhomix(&["--dry-run", "maxcorr", "--pair", data("product.json").to_str().unwrap()]));
    assert_eq!(v["dry_run"], true);
    assert_eq!(v["valid"], true);
    assert_eq!(v["command"], "maxcorr");
    let v = json(&rhomix(&["--dry-run", "clt", "--model", "ising", "--ell", "64", "--replicas", "100000"]));
    assert_eq!(v["command"], "clt");
    let v = json(&rhomix(&["--dry-run", "verify-all"]));
    assert_eq!(v["valid"], true);
}

#[test]
fn output_file_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = rhomix(&[
            "--seed", "7", "--threads", threads, "-o", path.to_str().unwrap(),
            "tensor-bound", "sweep", "--instances", "40",
        ]);
        assert!(out.status.success());
        std::fs::read(path).unwrap()
    };
    let a = run("a.json", "1");
    assert_eq!(a, run("b.json", "1"));
    assert_eq!(a, run("c.json", "3"));
}

#[test]
fn csv_cloud_carries_the_figure_header() {
    let out = rhomix(&["--format", "csv", "--seed", "3", "chogosov", "--eps", "0.5", "sample", "--n", "50"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# figure: fig-mu cloud"));
    assert_eq!(lines.next(), Some("p,q,branch"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 50);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        let (p, q): (f64, f64) = (cols[0].parse().unwrap(), cols[1].parse().unwrap());
        assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
        assert!(["lower", "interior", "upper"].contains(&cols[2]));
    }
}

#[test]
fn threads_from_the_environment() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_rhomix"))
            .args(["--seed", "1", "tensor-bound", "sweep", "--instances", "30"])
            .env("RHOMIX_THREADS", threads)
            .output()
            .unwrap()
    };
    let one = run("1");
    assert!(one.status.success());
    assert_eq!(one.stdout, run("2").stdout);
    assert_eq!(run("0").status.code(), Some(64));
}

#[test]
fn floats_round_trip() {
    let out = rhomix(&["tensor-bound", "zz", "--eps", "0.1,0.2,0.3"]);
    let v = json(&out);
    let printed = number(&v, "bound");
    let direct = (0.1f64.asin() + 0.2f64.asin() + 0.3f64.asin()).sin();
    assert!((printed - direct).abs() < 1e-15);
}

#[test]
fn verify_all_prints_a_table() {
    let out = rhomix(&["verify-all", "--only", "1,4,13"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("criterion")).count(), 3);
    assert!(text.contains("3/3 criteria passed"));
    assert_eq!(rhomix(&["verify-all", "--only", "99"]).status.code(), Some(2));
}

#[test]
fn gap_of_a_small_spin_system() {
    let v = json(&rhomix(&["glauber-gap", "--system", data("spins.json").to_str().unwrap()]));
    assert_eq!(v["sound"], true);
    assert!(number(&v, "gap") >= number(&v["bounds"], "bound_m") - 1e-12);
}

#[test]
fn kernel_bounds_and_inverse() {
    let v = json(&rhomix(&["tensor-bound", "lattice", "--kernel", data("kernel.json").to_str().unwrap()]));
    let zn = number(&v["zn"], "value");
    assert!(zn > 0.0 && zn <= 1.0);
    let out = rhomix(&["--format", "csv", "conv-inverse", "--kernel", data("conv.json").to_str().unwrap()]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // 1 + b = 1 / (1 − a) for a = (z + 1/z)/4 has b(0) = 2/√3 − 1.
    let origin: f64 = text.lines().nth(2).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!((origin - (2.0 / 3f64.sqrt() - 1.0)).abs() < 1e-12);
}

#[test]
fn snapshot_is_a_bitmap() {
    let out = rhomix(&["ising", "-T", "1.5", "--side", "6", "snapshot", "--sweeps", "5"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "P1");
    assert_eq!(lines[2], "6 6");
    assert_eq!(lines.len(), 9);
}
