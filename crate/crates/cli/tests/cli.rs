use std::fs;
use std::path::{Path, PathBuf};

use bipartite_glass::complexity::{curve, Cell};
use bipartite_glass::MixtureSpec;
use bipartite_glass_cli::{run, EXIT_NONCONVERGENCE, EXIT_OK, EXIT_VALIDATION};
use tempfile::TempDir;

fn data(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name).display().to_string()
}

fn invoke(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["bipartite-glass".to_string(), "--out".into(), out.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    run(argv)
}

/// Runs `args` and compares `file` against `tests/golden/<golden>`.
/// Set `BLESS=1` to rewrite the golden file.
fn golden(args: &[&str], file: &str, golden: &str) -> String {
    let dir = TempDir::new().unwrap();
    assert_eq!(invoke(dir.path(), args), EXIT_OK, "{args:?}");
    let got = fs::read_to_string(dir.path().join(file)).unwrap();
    let path: PathBuf = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(golden);
    if std::env::var_os("BLESS").is_some() {
        fs::write(&path, &got).unwrap();
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}; rerun with BLESS=1", path.display()));
    assert_eq!(got, want, "{golden} differs");
    assert!(dir.path().join("run_manifest.json").exists());
    got
}

#[test]
fn free_energy_golden() {
    let cfg = data("pure22.json");
    let got = golden(&["free-energy", "--config", &cfg], "free_energy.json", "free_energy_pure22.json");
    let v: serde_json::Value = serde_json::from_str(&got).unwrap();
    assert!((v["value"].as_f64().unwrap() - 0.005).abs() < 1e-15);
    let cfg = data("mixed.json");
    golden(&["free-energy", "--config", &cfg], "free_energy.json", "free_energy_mixed.json");
}

#[test]
fn complexity_golden() {
    let cfg = data("unit22.json");
    let csv = golden(
        &["complexity", "--config", &cfg, "--t-min", "-2", "--t-max", "-1", "--t-steps", "3"],
        "complexity.csv",
        "complexity_unit22.csv",
    );
    assert_eq!(csv.lines().count(), 4);
    // the lower bound is not available for pure models
    let mut rdr = csv::Reader::from_reader(csv.as_bytes());
    for row in rdr.records() {
        assert_eq!(&row.unwrap()[2], "unsupported");
    }
    golden(&["complexity", "--config", &cfg, "--m0"], "m0.json", "m0_unit22.json");
}

#[test]
fn complexity_csv_parses_back() {
    let cfg = data("unit22.json");
    let dir = TempDir::new().unwrap();
    let args = ["complexity", "--config", &cfg, "--t-min", "-3", "--t-max", "-1", "--t-steps", "9"];
    assert_eq!(invoke(dir.path(), &args), EXIT_OK);
    let spec: MixtureSpec = serde_json::from_str(&fs::read_to_string(&cfg).unwrap()).unwrap();
    let grid: Vec<f64> = (0..9).map(|i| -3.0 + 2.0 * i as f64 / 8.0).collect();
    let expected = curve(&spec, &grid).unwrap();
    let mut rdr = csv::Reader::from_path(dir.path().join("complexity.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap().iter().collect::<Vec<_>>(),
        ["t", "K", "J", "argmax_x", "argmax_y1", "argmax_y2", "argmax_a", "flags"]
    );
    let rows: Vec<_> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), grid.len());
    let mut saw_neg_inf = false;
    for (row, p) in rows.iter().zip(&expected.points) {
        assert_eq!(row[0].parse::<f64>().unwrap(), p.t);
        let k: f64 = row[1].parse().unwrap();
        match p.k {
            Cell::Value(v) => assert!(k == v || (k.is_nan() && v.is_nan())),
            _ => panic!("K missing at t = {}", p.t),
        }
        saw_neg_inf |= &row[1] == "-inf";
    }
    assert!(saw_neg_inf);
}

#[test]
fn rmt_golden() {
    let cfg = data("unit22.json");
    let got = golden(
        &["rmt", "check", "--config", &cfg, "--n1", "3", "--n2", "4", "--samples", "300", "--seed", "5"],
        "covariance_report.json",
        "rmt_check_unit22.json",
    );
    let v: serde_json::Value = serde_json::from_str(&got).unwrap();
    assert_eq!(v["samples"], 300);
    golden(&["rmt", "goe-edge", "--n", "40", "--samples", "4", "--seed", "2"], "goe_edge.json", "goe_edge.json");
}

#[test]
fn simulate_golden() {
    let unit = data("unit22.json");
    let pure = data("pure22.json");
    let common = |cfg: &str| vec!["--config".to_string(), cfg.to_string(), "--n1".into(), "4".into(), "--n2".into(), "4".into(), "--seed".into(), "9".into()];
    let cases: [(&str, &str, &[&str], &str, &str); 5] = [
        ("free-energy", &pure, &["--n-disorder", "3", "--n-sphere", "500"], "free_energy_mc.json", "sim_free_energy.json"),
        ("overlaps", &pure, &["--n-disorder", "2", "--burn-in", "5", "--blocks", "20", "--moves", "10"], "overlaps.json", "sim_overlaps.json"),
        ("minima", &unit, &["--n-starts", "8"], "minima.csv", "sim_minima.csv"),
        ("kac-rice", &unit, &["--t", "-1", "--n-x", "8", "--n-mc", "40"], "kac_rice.json", "sim_kac_rice.json"),
        ("ground-state", &unit, &["--n-hams", "3", "--n-starts", "4"], "ground_state.json", "sim_ground_state.json"),
    ];
    for (op, cfg, extra, file, gold) in cases {
        let mut args = vec!["simulate".to_string(), op.to_string()];
        args.extend(common(cfg));
        args.extend(extra.iter().map(|s| s.to_string()));
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        golden(&args, file, gold);
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let cfg = data("unit22.json");
    let args = ["simulate", "kac-rice", "--config", &cfg, "--n1", "3", "--n2", "3", "--seed", "4", "--t", "inf", "--index", "all", "--n-x", "8", "--n-mc", "30"];
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    assert_eq!(invoke(a.path(), &args), EXIT_OK);
    let mut threaded = vec!["--threads", "3"];
    threaded.extend(args);
    assert_eq!(invoke(b.path(), &threaded), EXIT_OK);
    let read = |d: &TempDir| fs::read(d.path().join("kac_rice.json")).unwrap();
    assert_eq!(read(&a), read(&b));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 4);
    assert_eq!(manifest["subcommand"], "simulate kac-rice");
    let digest = manifest["outputs"]["kac_rice.json"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    let other: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(b.path().join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(other["outputs"], manifest["outputs"]);
    assert_eq!(other["config_sha256"], manifest["config_sha256"]);
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    assert_eq!(invoke(dir.path(), &["bogus"]), EXIT_VALIDATION);
    assert_eq!(invoke(dir.path(), &["--help"]), EXIT_OK);
    assert_eq!(invoke(dir.path(), &["free-energy"]), EXIT_VALIDATION);
    let unit = data("unit22.json");
    let empty = data("empty.json");
    let pure = data("pure22.json");
    // unnormalized model for the complexity grid
    assert_eq!(invoke(dir.path(), &["complexity", "--config", &pure]), EXIT_VALIDATION);
    assert_eq!(invoke(dir.path(), &["free-energy", "--config", &empty]), EXIT_VALIDATION);
    assert_eq!(
        invoke(dir.path(), &["simulate", "kac-rice", "--config", &unit, "--n1", "3", "--n2", "3", "--t", "0", "--index", "x"]),
        EXIT_VALIDATION
    );
    assert_eq!(
        invoke(dir.path(), &["free-energy", "--config", &data("mixed.json"), "--max-iter", "1", "--tol", "1e-300"]),
        EXIT_NONCONVERGENCE
    );
    assert_eq!(invoke(dir.path(), &["free-energy", "--config", "/nonexistent.json"]), 1);
}
