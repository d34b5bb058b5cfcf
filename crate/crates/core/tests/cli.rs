use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn esfl(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_esfl"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("ESFL_OUTPUT_DIR")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &TempDir, name: &str, text: &str) -> String {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

const THREE_USERS: &str = "\
[[users]]
samples = 500
compute_tflops = 1.3
rates = { mode = \"direct\", direct = { up_kbps = 10 } }

[[users]]
samples = 300
compute_tflops = 3.25
rates = { mode = \"direct\", direct = { up_kbps = 25 } }

[[users]]
samples = 800
compute_tflops = 1.95
rates = { mode = \"direct\", direct = { up_kbps = 15 } }
";

const SMALL_PROFILE: &str = "name = small\nA 0.1 20 0.05\nB 0.5 40 0.02\nC 1.0 10 0.01\nD 0.2 5 0\n";

#[test]
fn missing_architecture_is_an_input_error_without_output() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = esfl(&["simulate", "--arch", "/no/such/profile.txt", "--rounds", "1"], &out);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("/no/such/profile.txt"));
    assert!(!out.exists());
}

#[test]
fn unknown_config_key_is_rejected_before_work() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(&tmp, "bad.toml", "seed = 1\n[scenario]\npreset = \"BP\"\nroundz = 3\n");
    let out = tmp.path().join("out");
    let o = esfl(&["simulate", "--config", &cfg], &out);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("roundz"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn bad_flags_exit_with_input_status() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    assert_eq!(esfl(&["simulate", "--rounds", "many"], &out).status.code(), Some(1));
    assert_eq!(
        esfl(&["simulate", "--algos", "esfl,magic", "--rounds", "1"], &out)
            .status
            .code(),
        Some(1)
    );
    assert_eq!(esfl(&["simulate", "--scenario", "XX"], &out).status.code(), Some(1));
    assert_eq!(esfl(&["frobnicate"], &out).status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn help_and_version_succeed() {
    let tmp = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_esfl"))
        .arg("--version")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains(env!("CARGO_PKG_VERSION")));
    let o = esfl(&["simulate", "--help"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("--scenario"));
}

#[test]
fn single_round_simulation_writes_one_record() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = esfl(&["simulate", "--scenario", "BP", "--rounds", "1", "--seed", "3"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("simulate.json")).unwrap()).unwrap();
    assert_eq!(doc["report"]["rounds"].as_array().unwrap().len(), 1);
    assert_eq!(doc["config"]["seed"], 3);
    assert_eq!(doc["config"]["scenario"]["name"], "BP");
    for name in ["summary.txt", "rounds.tsv", "distribution.txt"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(stdout(&o), summary);
    let tsv = std::fs::read_to_string(out.join("rounds.tsv")).unwrap();
    assert_eq!(tsv.lines().count(), 2);
    assert!(std::fs::read_dir(&out)
        .unwrap()
        .all(|e| !e.unwrap().file_name().to_string_lossy().ends_with(".tmp")));
}

#[test]
fn fl_only_simulation_has_no_other_columns() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = esfl(&["simulate", "--algos", "fl", "--rounds", "2"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("simulate.json")).unwrap()).unwrap();
    for r in doc["report"]["rounds"].as_array().unwrap() {
        let times = r["times"].as_object().unwrap();
        assert_eq!(times.keys().collect::<Vec<_>>(), vec!["fl"]);
    }
    assert!(!out.join("distribution.txt").exists());
}

#[test]
fn optimize_single_user_prints_one_allocation_line() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        &tmp,
        "one.toml",
        "[[users]]\nsamples = 500\ncompute_tflops = 1.3\nrates = { mode = \"direct\", direct = { up_kbps = 10 } }\n",
    );
    let out = tmp.path().join("out");
    let o = esfl(&["optimize", "--config", &cfg], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.lines().filter(|l| l.starts_with("user ")).count(), 1);
    assert!(text.contains("after 1 iterations (converged: true)"), "{text}");
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("optimize.json")).unwrap()).unwrap();
    let c = doc["outcome"]["allocation"]["server_compute"][0].as_f64().unwrap();
    assert!((c - 130e12).abs() <= 1e-6 * 130e12 || c == 0.0);
}

#[test]
fn optimize_trace_respects_iteration_cap() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(&tmp, "users.toml", THREE_USERS);
    let out = tmp.path().join("out");
    let o = esfl(&["optimize", "--config", &cfg, "--max-iters", "1"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(
        stdout(&o)
            .lines()
            .filter(|l| l.trim_start().starts_with("iteration "))
            .count(),
        1
    );
}

#[test]
fn optimize_oracle_reports_gap_on_small_instance() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(&tmp, "users.toml", THREE_USERS);
    let arch = write(&tmp, "small.profile", SMALL_PROFILE);
    let out = tmp.path().join("out");
    let o = esfl(&["optimize", "--config", &cfg, "--arch", &arch, "--oracle"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let line = text.lines().find(|l| l.starts_with("exhaustive optimum")).expect(&text);
    let gap: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((0.0..=0.05).contains(&gap), "{line}");
}

#[test]
fn optimize_oracle_on_large_instance_is_an_input_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(&tmp, "users.toml", THREE_USERS);
    let out = tmp.path().join("out");
    let o = esfl(&["optimize", "--config", &cfg, "--oracle"], &out);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn infeasible_user_is_a_runtime_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write(
        &tmp,
        "tiny.toml",
        "[[users]]\nsamples = 500\ncompute_tflops = 1.3\nstorage_bytes = 1.0\nrates = { mode = \"direct\", direct = { up_kbps = 10 } }\n",
    );
    let out = tmp.path().join("out");
    let o = esfl(&["optimize", "--config", &cfg], &out);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn converge_prints_one_row_per_scale_and_scenario() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = esfl(&["converge", "--scenarios", "BR", "--scales", "100,200"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("converge.json")).unwrap()).unwrap();
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["scenario"], "BR");
        assert!(r["iterations"].as_u64().unwrap() <= 9);
    }
    assert_eq!(std::fs::read_to_string(out.join("converge.txt")).unwrap(), stdout(&o));
}

#[test]
fn converge_defaults_cover_four_scales() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = esfl(&["converge", "--scenarios", "BP"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("converge.json")).unwrap()).unwrap();
    let scales: Vec<u64> = doc["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["scale"].as_u64().unwrap())
        .collect();
    assert_eq!(scales, vec![100, 200, 400, 800]);
}

#[test]
fn train_toy_equivalence_check() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = esfl(&["train-toy", "--rounds", "5", "--check-equivalence"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let line = stdout(&o)
        .lines()
        .find(|l| l.starts_with("split vs monolithic max relative deviation"))
        .map(str::to_owned)
        .expect("equivalence line");
    let dev: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(dev <= 1e-9, "{line}");
}

#[test]
fn train_toy_with_zero_rate_leaves_model_unchanged() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = esfl(&["train-toy", "--rounds", "3", "--rho", "0"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(
        stdout(&o).contains("max deviation from initialization: 0e0"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn train_toy_rejects_out_of_range_cut() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let o = esfl(&["train-toy", "--cuts", "1,9"], &out);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn seeded_reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = ["simulate", "--scenario", "SH", "--rounds", "4", "--seed", "11"];
    assert_eq!(esfl(&args, &a).status.code(), Some(0));
    assert_eq!(esfl(&args, &b).status.code(), Some(0));
    for name in ["simulate.json", "summary.txt", "rounds.tsv", "distribution.txt"] {
        assert_eq!(
            std::fs::read(a.join(name)).unwrap(),
            std::fs::read(b.join(name)).unwrap(),
            "{name}"
        );
    }
    let c = tmp.path().join("c");
    let other = ["simulate", "--scenario", "SH", "--rounds", "4", "--seed", "12"];
    assert_eq!(esfl(&other, &c).status.code(), Some(0));
    assert_ne!(
        std::fs::read(a.join("rounds.tsv")).unwrap(),
        std::fs::read(c.join("rounds.tsv")).unwrap()
    );
}

#[test]
fn output_directory_from_environment() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("from-env");
    let o = Command::new(env!("CARGO_BIN_EXE_esfl"))
        .args(["train-toy", "--rounds", "1"])
        .env("ESFL_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(out.join("train.json").exists());
}
