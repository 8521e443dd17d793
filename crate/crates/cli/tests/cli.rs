use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn qldpc(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("in.toml");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_qldpc"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join("out").join(name)).unwrap()
}

/// Column `name` of every CSV row.
fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let idx = lines.next().unwrap().split(',').position(|h| h == name).unwrap();
    lines.map(|l| l.split(',').nth(idx).unwrap().to_string()).collect()
}

const TORIC: &str = "seed = 3\nshots = 200\n[code]\nfamily = \"toric\"\nm = 4\n";

#[test]
fn toric_report() {
    let d = TempDir::new().unwrap();
    let o = qldpc(d.path(), TORIC, &["build-code"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(read(d.path(), "code_report.jsonl").trim()).unwrap();
    assert_eq!(r["n"], 32);
    assert_eq!(r["k"], 2);
    assert_eq!(r["cosystolic_distance"], "4");
    assert_eq!(r["labels"].as_array().unwrap().len(), 2);
    assert_eq!(r["seed"], 3);
    assert_eq!(r["version"], qldpc::VERSION);
}

#[test]
fn random_three_dim_report_lists_labels() {
    let d = TempDir::new().unwrap();
    let cfg = "[code]\nfamily = \"random\"\nr = 3\nn_left = 4\ndeg_left = 3\ndeg_right = 4\ndistance_budget = 1000\n";
    let o = qldpc(d.path(), cfg, &["build-code"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(read(d.path(), "code_report.jsonl").trim()).unwrap();
    let k = r["k"].as_u64().unwrap();
    assert!(k >= 1);
    assert_eq!(r["labels"].as_array().unwrap().len() as u64, k);
}

#[test]
fn malformed_config_is_a_usage_error() {
    let d = TempDir::new().unwrap();
    for bad in ["seed = [", "[code]\nfamily = \"toric\"\nmm = 4\n", "[code]\nfamily = \"toric\"\n"] {
        let o = qldpc(d.path(), bad, &["build-code"]);
        assert_eq!(o.status.code(), Some(2), "{bad}");
    }
    let o = Command::new(env!("CARGO_BIN_EXE_qldpc")).arg("no-such-command").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn zero_noise_memory_never_fails() {
    let d = TempDir::new().unwrap();
    let cfg = format!("{TORIC}[memory]\np = [0.0]\nrounds = 2\n");
    let o = qldpc(d.path(), &cfg, &["memory-experiment"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "memory.csv");
    assert_eq!(column(&csv, "failures"), ["0"]);
    assert_eq!(column(&csv, "shots"), ["200"]);
    assert_eq!(column(&csv, "seed"), ["3"]);
}

#[test]
fn weight_zero_decoding_always_succeeds() {
    let d = TempDir::new().unwrap();
    let cfg = format!("{TORIC}[decode]\nweights = [0]\n");
    let o = qldpc(d.path(), &cfg, &["decode-trials", "--shots", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "decode_trials.csv");
    assert_eq!(column(&csv, "rate"), ["1.0"]);
    assert_eq!(column(&csv, "trials"), ["50"]);
}

#[test]
fn exhaustive_low_weight_decoding_on_certified_instance() {
    let d = TempDir::new().unwrap();
    let cfg = "[code]\nfamily = \"projective\"\nq = 3\n[decode]\nweights = []\nexhaustive = 2\n";
    let o = qldpc(d.path(), cfg, &["decode-trials"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "decode_trials.csv");
    assert_eq!(column(&csv, "mode"), ["exhaustive"]);
    assert_eq!(column(&csv, "trials"), ["57291"]);
    assert_eq!(column(&csv, "rate"), ["1.0"]);
}

#[test]
fn gadget_suite_passes_and_tampering_fails() {
    let d = TempDir::new().unwrap();
    let cfg = format!("{TORIC}[gadgets]\nnames = [\"err_corr\", \"measure_logical\", \"transversal_cnot_same\"]\n");
    let o = qldpc(d.path(), &cfg, &["gadget-verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&read(d.path(), "gadget_verify.csv"), "status"), ["pass", "pass", "pass"]);

    let o = qldpc(d.path(), &format!("{cfg}corrupt = \"err_corr\"\n"), &["gadget-verify"]);
    assert_eq!(o.status.code(), Some(1));
    let csv = read(d.path(), "gadget_verify.csv");
    assert_eq!(column(&csv, "status"), ["fail", "pass", "pass"]);
    assert!(csv.contains("want 0 got 1") || csv.contains("want 1 got 0"), "{csv}");
}

#[test]
fn expander_check_certifies_projective_plane() {
    let d = TempDir::new().unwrap();
    let cfg = "[code]\nfamily = \"projective\"\nq = 2\n[expander]\nmu = 0.3\neps = 0.34\n";
    let o = qldpc(d.path(), cfg, &["check-expander"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(column(&read(d.path(), "expander.csv"), "certified"), ["true", "true"]);
}

#[test]
fn percolation_rows_carry_the_bound() {
    let d = TempDir::new().unwrap();
    let cfg = "seed = 9\nshots = 2000\n[percolation]\ngraph = \"cycle\"\nn = 12\neta = 3.0\ngamma = 1.0\neps = [0.0, 0.01]\n";
    let o = qldpc(d.path(), cfg, &["percolation"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(d.path(), "percolation.csv");
    assert_eq!(column(&csv, "non_avoiding")[0], "0");
    assert_eq!(column(&csv, "preconditions"), ["true", "true"]);
}

#[test]
fn same_config_and_seed_give_identical_files() {
    let cfg = format!(
        "{TORIC}[memory]\np = [0.002, 0.01]\nrounds = 1\n[threshold]\ncodes = [{{ family = \"toric\", m = 3 }}, {{ family = \"toric\", m = 4 }}]\n"
    );
    let runs: Vec<(String, String)> = (0..2)
        .map(|_| {
            let d = TempDir::new().unwrap();
            let o = qldpc(d.path(), &cfg, &["threshold-sweep", "--jobs", "2"]);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            (read(d.path(), "threshold.csv"), read(d.path(), "config.toml"))
        })
        .collect();
    assert_eq!(runs[0], runs[1]);
    assert_eq!(runs[0].0.lines().count(), 5);

    let d = TempDir::new().unwrap();
    qldpc(d.path(), &cfg, &["threshold-sweep", "--seed", "4"]);
    assert_ne!(read(d.path(), "threshold.csv"), runs[0].0);
}
