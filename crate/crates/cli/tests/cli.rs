use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn qtrap(command: &str, config: &Path, workers: Option<&str>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_qtrap"));
    cmd.arg(command).arg(config);
    match workers {
        Some(w) => cmd.env("QTRAP_WORKERS", w),
        None => cmd.env_remove("QTRAP_WORKERS"),
    };
    let out = cmd.output().expect("binary runs");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(|v| v.parse::<f64>().unwrap()).collect())
        .collect();
    (header, rows)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn keys(v: &Value) -> Vec<&str> {
    let mut k: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    k.sort_unstable();
    k
}

const DIRAC_SCAN: &str = r#"
command = "jtilde-scan"
output = "out/dirac"

[measure]
type = "dirac"
"#;

#[test]
fn jtilde_scan_on_dirac() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "scan.toml", DIRAC_SCAN);
    let run = qtrap("jtilde-scan", &cfg, None);
    assert_eq!(run.code, 0, "{}", run.stderr);

    let (header, rows) = read_csv(&dir.path().join("out/dirac.csv"));
    assert_eq!(header, ["r", "one_minus_r", "Jtilde_true", "Jtilde_noIm"]);
    assert_eq!(rows.len(), 7);
    for row in &rows {
        assert!((row[0] + row[1] - 1.0).abs() < 1e-15);
        assert!((row[2] - (1.0 - row[0] * row[0])).abs() < 1e-9);
        assert!(row[3] >= row[2]);
    }
    let fits = read_json(&dir.path().join("out/dirac.json"));
    let true_slope = fits["alpha_true"]["exponent"].as_f64().unwrap();
    let no_im_slope = fits["alpha_noIm"]["exponent"].as_f64().unwrap();
    assert!((true_slope - 1.0).abs() < 0.02, "{true_slope}");
    assert!((no_im_slope - 0.5).abs() < 0.05, "{no_im_slope}");
}

#[test]
fn floats_carry_seventeen_significant_digits() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "scan.toml", DIRAC_SCAN);
    assert_eq!(qtrap("jtilde-scan", &cfg, None).code, 0);
    let text = fs::read_to_string(dir.path().join("out/dirac.csv")).unwrap();
    let first = text.lines().nth(1).unwrap();
    for field in first.split(',') {
        let mantissa = field.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
        assert_eq!(mantissa.len(), 17, "{field}");
    }
}

#[test]
fn manifest_echoes_config_and_checksums() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "scan.toml", DIRAC_SCAN);
    assert_eq!(qtrap("jtilde-scan", &cfg, None).code, 0);
    let manifest = read_json(&dir.path().join("out/dirac.manifest.json"));
    assert_eq!(manifest["config"]["command"], "jtilde-scan");
    assert_eq!(manifest["config"]["params"]["mesh"], 8192);
    assert_eq!(manifest["config"]["params"]["k_min"], 4);
    assert_eq!(manifest["config"]["measure"]["type"], "dirac");
    let artifacts = manifest["artifacts"].as_array().unwrap();
    assert_eq!(artifacts.len(), 2);
    for a in artifacts {
        let bytes = fs::read(dir.path().join("out").join(a["file"].as_str().unwrap())).unwrap();
        let digest: String = Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect();
        assert_eq!(a["sha256"].as_str().unwrap(), digest);
    }
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical_for_any_worker_count() {
    let text = r#"
output = "out/table"
[params]
p_values = [0.3333333333333333, 0.95, 0.2]
k_min = 4
k_max = 8
"#;
    let mut snapshots = Vec::new();
    for workers in [None, Some("1"), Some("3")] {
        let dir = TempDir::new().unwrap();
        let cfg = write_config(&dir, "table.toml", text);
        let run = qtrap("bernoulli-table", &cfg, workers);
        assert_eq!(run.code, 0, "{}", run.stderr);
        snapshots.push(snapshot(&dir.path().join("out")));
    }
    assert_eq!(snapshots[0].len(), 2);
    assert!(snapshots.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn bernoulli_table_columns_and_ordering() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "table.toml", "command = \"bernoulli-table\"\noutput = \"t\"\n");
    let run = qtrap("bernoulli-table", &cfg, None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = read_csv(&dir.path().join("t.csv"));
    assert_eq!(header, ["p", "alpha_analytical", "alpha_noIm", "alpha_withIm"]);
    assert_eq!(rows.len(), 2);
    assert!((rows[0][0] - 1.0 / 3.0).abs() < 1e-16);
    assert!((rows[0][1] - 2.05e-2).abs() < 1e-3);
    assert!((rows[1][1] - 1.96e-1).abs() < 1e-3);
    for row in &rows {
        assert!(0.0 < row[1] && row[1] <= row[2] && row[2] <= row[3], "{row:?}");
    }
}

#[test]
fn exponent_refits_scan_output() {
    let dir = TempDir::new().unwrap();
    let scan = write_config(&dir, "scan.toml", DIRAC_SCAN);
    assert_eq!(qtrap("jtilde-scan", &scan, None).code, 0);
    let cfg = write_config(
        &dir,
        "fit.toml",
        r#"
output = "out/fit"
[params]
input = "out/dirac.csv"
x_column = "one_minus_r"
y_column = "Jtilde_true"
"#,
    );
    let run = qtrap("exponent", &cfg, None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let fit = read_json(&dir.path().join("out/fit.json"));
    assert_eq!(keys(&fit), ["exponent", "intercept", "residual", "window"]);
    assert_eq!(fit["window"], serde_json::json!([0, 7]));
    let scan_fit = read_json(&dir.path().join("out/dirac.json"));
    let a = fit["exponent"].as_f64().unwrap();
    let b = scan_fit["alpha_true"]["exponent"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-9);
}

#[test]
fn exponent_on_two_column_csv_with_window() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("t,J\n");
    for k in 0..8 {
        let t = 2f64.powi(k);
        text.push_str(&format!("{t},{}\n", 3.0 * t.powf(-0.25)));
    }
    fs::write(dir.path().join("walk.csv"), text).unwrap();
    let cfg = write_config(&dir, "fit.toml", "output = \"fit\"\n[params]\ninput = \"walk.csv\"\nwindow = [2, 6]\n");
    let run = qtrap("exponent", &cfg, None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let fit = read_json(&dir.path().join("fit.json"));
    assert!((fit["exponent"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!((fit["intercept"].as_f64().unwrap() - 3f64.ln()).abs() < 1e-12);
    assert_eq!(fit["window"], serde_json::json!([2, 6]));
}

#[test]
fn current_column_contract() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "current.toml",
        r#"
output = "c"
[measure]
type = "atomic"
angles = [0.0, 3.141592653589793]
weights = [0.5, 0.5]
[params]
t_max = 4
"#,
    );
    let run = qtrap("current", &cfg, None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (header, rows) = read_csv(&dir.path().join("c.csv"));
    assert_eq!(header, ["t", "K_re", "K_im", "J", "N"]);
    let j: Vec<f64> = rows.iter().map(|r| r[3]).collect();
    let n: Vec<f64> = rows.iter().map(|r| r[4]).collect();
    for (got, want) in j.iter().zip([1.0, 1.0, 0.0, 0.0]) {
        assert!((got - want).abs() < 1e-15);
    }
    assert!((n[3] - 2.0).abs() < 1e-15);
}

#[test]
fn current_from_density_csv_and_from_system() {
    let dir = TempDir::new().unwrap();
    let m = 64;
    let values: String = (0..m)
        .map(|k| format!("{}\n", 1.0 + (std::f64::consts::TAU * k as f64 / m as f64).cos()))
        .collect();
    fs::write(dir.path().join("rho.csv"), format!("rho\n{values}")).unwrap();
    let cfg = write_config(
        &dir,
        "density.toml",
        "output = \"d\"\n[measure]\ntype = \"density\"\ncsv = \"rho.csv\"\n[params]\nt_max = 40\n",
    );
    assert_eq!(qtrap("current", &cfg, None).code, 0);
    let (_, rows) = read_csv(&dir.path().join("d.csv"));
    assert!((rows[39][3] - 2.0 / 3.0).abs() < 1e-10);

    let cfg = write_config(
        &dir,
        "system.toml",
        "output = \"s\"\n[system]\nkind = \"random\"\ndim = 8\nseed = 3\ntrap = [{ index = 0 }]\n[params]\nt_max = 10\n",
    );
    let run = qtrap("current", &cfg, None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let (_, rows) = read_csv(&dir.path().join("s.csv"));
    assert_eq!(rows.len(), 10);
    assert_eq!(rows[0][3], 1.0);
}

/// Dimension-64 shift with a rank-one trap on a spread-out vector.
fn shift_64_config(extra: &str) -> String {
    let list = |head: &[f64]| {
        let mut v = head.to_vec();
        v.resize(64, 0.0);
        format!("{v:?}")
    };
    format!(
        "output = \"oracle\"\n[system]\nkind = \"shift\"\ndim = 64\ntrap = [{{ re = {}, im = {} }}]\n{extra}",
        list(&[1.0, 0.5, 0.0, -0.25]),
        list(&[0.0, 0.5, 1.0, 0.0]),
    )
}

#[test]
fn oracle_compare_on_shift() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "oracle.toml", &shift_64_config(""));
    let run = qtrap("oracle-compare", &cfg, None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let report = read_json(&dir.path().join("oracle.json"));
    assert!(report["max_abs_diff"].as_f64().unwrap() <= 1e-10);
    assert_eq!(report["pass"], true);
    let (header, rows) = read_csv(&dir.path().join("oracle.csv"));
    assert_eq!(header, ["t", "J_recursion", "J_krylov", "J_trace", "max_abs_diff"]);
    assert_eq!(rows.len(), 31);
}

#[test]
fn oracle_compare_tolerance_failure_exits_two_and_still_writes() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "oracle.toml", &shift_64_config("[params]\ntolerance = 1e-300\n"));
    let run = qtrap("oracle-compare", &cfg, None);
    assert_eq!(run.code, 2, "{}", run.stdout);
    assert!(run.stderr.contains("tolerance"));
    assert!(dir.path().join("oracle.manifest.json").exists());
    assert_eq!(read_json(&dir.path().join("oracle.json"))["pass"], false);
}

#[test]
fn entropy_report_contract() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        &dir,
        "entropy.toml",
        "output = \"e\"\n[system]\nkind = \"random\"\ndim = 6\nseed = 11\ntrap = [{ index = 0, p = 0.5 }, { index = 2 }]\n[params]\nkappa = 0.3\nt_max = 5\nbits = true\n",
    );
    let run = qtrap("entropy", &cfg, None);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.contains("bits"));
    let report = read_json(&dir.path().join("e.json"));
    assert_eq!(
        keys(&report),
        ["H_exact_nats", "H_lower_nats", "defect_spectrum", "kappa", "t", "trace_defect"]
    );
    assert_eq!(report["t"], 5);
    let h = report["H_exact_nats"].as_f64().unwrap();
    let lower = report["H_lower_nats"].as_f64().unwrap();
    assert!(lower <= h);
    let (header, rows) = read_csv(&dir.path().join("e.csv"));
    assert_eq!(header, ["t", "trace_defect", "H_exact_nats", "H_lower_nats"]);
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[4][2], h);
}

#[test]
fn baselines_and_moments() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir, "walk.toml", "output = \"w\"\n[params]\nt_max = 3\n");
    assert_eq!(qtrap("baselines", &cfg, None).code, 0);
    let (header, rows) = read_csv(&dir.path().join("w.csv"));
    assert_eq!(header, ["t", "J"]);
    assert_eq!(rows, vec![vec![1.0, 0.5], vec![2.0, 0.25], vec![3.0, 0.25]]);

    let cfg = write_config(
        &dir,
        "mom.toml",
        "output = \"m\"\n[measure]\ntype = \"lebesgue\"\ngrid = 16\n[params]\norder = 3\n",
    );
    assert_eq!(qtrap("moments", &cfg, None).code, 0);
    let (header, rows) = read_csv(&dir.path().join("m.csv"));
    assert_eq!(header, ["s", "mu_re", "mu_im"]);
    assert_eq!(rows[0][1], 1.0);
    assert!(rows[1..].iter().all(|r| r[1].abs() < 1e-15 && r[2].abs() < 1e-15));
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let unknown = write_config(&dir, "bad.toml", "output = \"x\"\nmesh = 4\n");
    let run = qtrap("baselines", &unknown, None);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("unknown field"), "{}", run.stderr);

    let bounds = write_config(&dir, "bounds.toml", "output = \"x\"\n[params]\nt_max = 0\n");
    let run = qtrap("baselines", &bounds, None);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("params.t_max"), "{}", run.stderr);

    let invalid = write_config(
        &dir,
        "measure.toml",
        "output = \"x\"\n[measure]\ntype = \"atomic\"\nangles = [0.0]\nweights = [0.7]\n",
    );
    assert_eq!(qtrap("moments", &invalid, None).code, 1);

    assert_eq!(qtrap("moments", &dir.path().join("missing.toml"), None).code, 3);

    let ok = write_config(&dir, "ok.toml", "output = \"x\"\n");
    assert_eq!(qtrap("baselines", &ok, Some("zero")).code, 1);
    assert_eq!(qtrap("moments", &ok, None).code, 1);

    let mismatch = write_config(&dir, "mm.toml", "command = \"moments\"\noutput = \"x\"\n");
    assert_eq!(qtrap("baselines", &mismatch, None).code, 1);

    fs::write(dir.path().join("blocker"), "").unwrap();
    let blocked = write_config(&dir, "blocked.toml", "output = \"blocker/x\"\n");
    assert_eq!(qtrap("baselines", &blocked, None).code, 3);

    assert_eq!(qtrap("no-such-command", &ok, None).code, 1);
}

#[test]
fn shipped_configs_run() {
    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = TempDir::new().unwrap();
    let configs = dir.path().join("configs");
    fs::create_dir(&configs).unwrap();
    let mut names: Vec<String> = fs::read_dir(&shipped)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.ends_with(".toml"))
        .collect();
    // the refit reads a scan written by another config
    names.sort_by_key(|n| (n.starts_with("fit_"), n.clone()));
    assert!(names.len() >= 8);
    for name in &names {
        fs::copy(shipped.join(name), configs.join(name)).unwrap();
        let text = fs::read_to_string(configs.join(name)).unwrap();
        let command = text
            .lines()
            .find_map(|l| l.strip_prefix("command = "))
            .unwrap_or_else(|| panic!("{name} names no command"))
            .trim_matches('"')
            .to_string();
        let run = qtrap(&command, &configs.join(name), None);
        assert_eq!(run.code, 0, "{name}: {}", run.stderr);
    }
    let (_, table) = read_csv(&dir.path().join("runs/table1.csv"));
    let scan = read_json(&dir.path().join("runs/scan_bernoulli_p013.json"));
    let refit = read_json(&dir.path().join("runs/fit_scan_p013.json"));
    let a = scan["alpha_true"]["exponent"].as_f64().unwrap();
    assert!((refit["exponent"].as_f64().unwrap() - a).abs() < 1e-9);
    assert!((table[0][3] - a).abs() < 1e-12);
}
