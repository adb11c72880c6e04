use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use hbundle::cli::config::parse_config_str;
use hbundle::cli::spec_hash;
use serde_json::Value;

const GENUS: &str = r#"
[surface]
alphabet = ["A", "B", "C"]
pi1 = [3, 1, 2]
lambda = ["2/5", "3/10", "3/10"]
[suspension]
tau = [2, -1, -1]
[bundle]
b = [0.7, 0.4, 0.0]
"#;

const TORUS: &str = r#"
[surface]
pi1 = [2, 1]
lambda = [0.3819660112501051, 0.6180339887498949]
[suspension]
h = [1, 1]
[run]
n_max = 100
"#;

fn run(dir: &Path, config: &str, args: &[&str]) -> (i32, Vec<PathBuf>) {
    let cfg = dir.join("config.toml");
    fs::write(&cfg, config).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hbundle"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    let paths = String::from_utf8(out.stdout).unwrap().lines().map(PathBuf::from).collect();
    (out.status.code().unwrap(), paths)
}

fn json_of(paths: &[PathBuf]) -> Value {
    let p = paths.iter().find(|p| p.extension().unwrap() == "json").expect("json artifact");
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn csv_of(paths: &[PathBuf]) -> String {
    let p = paths.iter().find(|p| p.extension().unwrap() == "csv").expect("csv artifact");
    fs::read_to_string(p).unwrap()
}

#[test]
fn validate_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let (code, paths) = run(dir.path(), TORUS, &["validate", "--out", out]);
    assert_eq!(code, 0);
    let name = paths[0].file_name().unwrap().to_str().unwrap();
    assert!(name.starts_with("validate-") && name.ends_with(".json"));
    let v = json_of(&paths);
    assert_eq!(v["config"]["run"]["method"], "grid");
    assert_eq!(v["config"]["run"]["mesh"], 4 * (2 * 100 + 2));
    assert_eq!(v["config"]["b_source"], "default");
    assert!(v["spec_hash"].is_string());
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let short = TORUS.replace("lambda = [0.3819660112501051, 0.6180339887498949]", "lambda = [0.5]");
    assert_eq!(run(dir.path(), &short, &["validate", "--out", out]).0, 2);
    let garbled = format!("{TORUS}[extra]\n");
    assert_eq!(run(dir.path(), &garbled, &["validate", "--out", out]).0, 2);
    let not_integral = TORUS.replace("h = [1, 1]", "h = [1.5, 1.5]");
    assert_eq!(run(dir.path(), &not_integral, &["iterate", "--out", out]).0, 2);
}

#[test]
fn admissible_on_the_three_interval_example() {
    let dir = tempfile::tempdir().unwrap();
    let (code, paths) = run(dir.path(), GENUS, &["admissible", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let v = json_of(&paths);
    assert_eq!(v["result"]["codimension"], 1);
    let c = &v["result"]["constraints"][0];
    assert_eq!(c["coeffs"], serde_json::json!([0, 1, -1]));
    assert!((c["rhs"].as_f64().unwrap() - 0.4).abs() < 1e-12);
    assert_eq!(v["result"]["admissible"], true);
    assert_eq!(v["config"]["exact"], true);
}

#[test]
fn commutator_sweep_matches_area() {
    let dir = tempfile::tempdir().unwrap();
    let (code, paths) = run(dir.path(), GENUS, &["commutator", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let csv = csv_of(&paths);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,shift,t2,diff"));
    let diffs: Vec<f64> = lines.map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(diffs.len(), 3);
    assert!(diffs.iter().all(|&d| d < 1e-12));
}

#[test]
fn cross_mode_correlation_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = TORUS.replace("n_max = 100", "n_max = 100\nmode_f = 0\nmode_g = 1");
    let (code, paths) = run(dir.path(), &cfg, &["correlate", "--out", dir.path().to_str().unwrap(), "--format", "csv"]);
    assert_eq!(code, 0);
    assert_eq!(paths.len(), 1);
    let csv = csv_of(&paths);
    for line in csv.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(&f[1..], &["0.0", "0.0", "0.0"]);
    }
    assert_eq!(csv.lines().count(), 102);
}

#[test]
fn starting_on_a_breakpoint_trips_the_guard() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{GENUS}[run]\nx0 = 0.4\nsteps = 10\n");
    let (code, paths) = run(dir.path(), &cfg, &["iterate", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 3);
    assert_eq!(json_of(&paths)["result"]["reliable"], false);
}

#[test]
fn artifacts_do_not_depend_on_threads() {
    let cfg = TORUS.replace(
        "n_max = 100",
        "n_max = 100\nmethod = \"monte_carlo\"\nsamples = 5000\nwindow = 64\nlambda_grid = 32",
    );
    for cmd in ["correlate", "spectrum"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let (ca, pa) = run(a.path(), &cfg, &[cmd, "--seed", "9", "--threads", "1", "--out", a.path().to_str().unwrap()]);
        let (cb, pb) = run(b.path(), &cfg, &[cmd, "--seed", "9", "--threads", "3", "--out", b.path().to_str().unwrap()]);
        assert_eq!((ca, cb), (0, 0));
        assert_eq!(pa.len(), 2);
        for (x, y) in pa.iter().zip(&pb) {
            assert_eq!(x.file_name(), y.file_name());
            assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{cmd}");
        }
    }
}

#[test]
fn hash_tracks_semantic_fields_only() {
    let base = spec_hash(&parse_config_str(GENUS, None).unwrap().semantic);
    let edits = [
        ("b = [0.7, 0.4, 0.0]", "b = [0.7, 0.4, 0.1]"),
        ("tau = [2, -1, -1]", "tau = [2, -1, -1.5]"),
        ("\"3/10\", \"3/10\"]", "\"3/10\", \"0.3\"]"),
        ("[bundle]", "[bundle]\nseed = 5"),
        ("[bundle]", "[run]\nsteps = 7\n[bundle]"),
        ("alphabet = [\"A\", \"B\", \"C\"]", "alphabet = [\"A\", \"B\", \"D\"]"),
    ];
    for (from, to) in edits {
        let changed = parse_config_str(&GENUS.replace(from, to), None).unwrap();
        assert_ne!(spec_hash(&changed.semantic), base, "{to}");
    }
    let same = parse_config_str(&format!("{GENUS}[output]\ndirectory = \"elsewhere\"\n"), None).unwrap();
    assert_eq!(spec_hash(&same.semantic), base);
    let reordered = GENUS
        .replace("alphabet = [\"A\", \"B\", \"C\"]", "alphabet = [\"B\", \"A\", \"C\"]\npi0 = [2, 1, 3]")
        .replace("pi1 = [3, 1, 2]", "pi1 = [1, 3, 2]")
        .replace("[\"2/5\", \"3/10\", \"3/10\"]", "[\"3/10\", \"2/5\", \"3/10\"]")
        .replace("[2, -1, -1]", "[-1, 2, -1]")
        .replace("[0.7, 0.4, 0.0]", "[0.4, 0.7, 0.0]");
    assert_eq!(spec_hash(&parse_config_str(&reordered, None).unwrap().semantic), base);
}

#[test]
fn rational_lengths_take_the_exact_path() {
    let c = parse_config_str(GENUS, None).unwrap();
    assert!(c.spec.is_exact());
    assert_eq!(c.semantic.lambda, vec!["2/5", "3/10", "3/10"]);
    let f = parse_config_str(TORUS, None).unwrap();
    assert!(!f.spec.is_exact());
}
