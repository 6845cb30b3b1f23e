use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

/// Runs the binary with a whitespace-separated argument line.
fn flexsky(line: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexsky"))
        .args(line.split_whitespace())
        .env_remove("FLEXSKY_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(line: &str) -> String {
    let out = flexsky(line);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(out.status.success(), "`{line}` failed: {stderr}");
    String::from_utf8(out.stdout).unwrap()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

const NINE: &str = "id,a1,a2\na,3,8\nb,8,6\nc,7,3\nd,4,9\ne,6,2\nf,6,9\ng,9,1.5\nh,5,7\ni,8,1\n";

fn nine_locations(dir: &Path) -> PathBuf {
    let csv = dir.join("nine.csv");
    std::fs::write(&csv, NINE).unwrap();
    let out = dir.join("nine");
    ok(&format!(
        "generate --from-csv {} --out {}",
        csv.display(),
        out.display()
    ));
    out
}

fn sorted_ids(items: &Value, key: Option<&str>) -> Vec<String> {
    let mut ids: Vec<String> = items
        .as_array()
        .unwrap()
        .iter()
        .map(|t| key.map_or(t, |k| &t[k]).as_str().unwrap().to_string())
        .collect();
    ids.sort();
    ids
}

fn result_ids(report: &str) -> Vec<String> {
    sorted_ids(&json(report)["result"], Some("id"))
}

#[test]
fn generate_writes_dataset_lists_and_meta() {
    let dir = tempfile::tempdir().unwrap();
    let (out, again) = (dir.path().join("u10k"), dir.path().join("again"));
    let flags = "generate --dist uni --n 10000 --d 2 --seed 1 --out";
    ok(&format!("{flags} {}", out.display()));
    ok(&format!("{flags} {}", again.display()));

    let meta = json(&std::fs::read_to_string(out.join("meta.json")).unwrap());
    assert_eq!(meta["distribution"], "uni");
    assert_eq!(meta["n"], 10000);
    assert_eq!(meta["seed"], 1);
    for f in ["dataset.csv", "list_1.csv", "list_2.csv", "meta.json"] {
        let first = std::fs::read(out.join(f)).unwrap();
        assert_eq!(first, std::fs::read(again.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn generate_rejects_bad_requests() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x").display().to_string();
    let too_wide = flexsky(&format!("generate --dist uni --n 10 --d 7 --out {out}"));
    assert_eq!(too_wide.status.code(), Some(2));

    ok(&format!("generate --dist ant --n 10 --d 2 --out {out}"));
    let again = flexsky(&format!("generate --dist ant --n 10 --d 2 --out {out}"));
    assert!(!again.status.success());
    assert!(String::from_utf8_lossy(&again.stderr).contains("not empty"));
}

#[test]
fn run_reproduces_worked_example() {
    let dir = tempfile::tempdir().unwrap();
    let lists = nine_locations(dir.path()).display().to_string();
    let constraints = dir.path().join("w1_ge_w2.json");
    let closure = r#"{"dim": 2, "inequalities": [{"a": [-1, 1], "b": 0}], "normalize": true}"#;
    std::fs::write(&constraints, closure).unwrap();

    let report = ok(&format!(
        "run --lists {lists} --k 2 --constraints {} --mu 1",
        constraints.display()
    ));
    assert_eq!(result_ids(&report), ["a", "c", "d", "e", "h", "i"]);

    let full = ok(&format!("run --lists {lists} --k 2 --eps full --mu 1"));
    assert_eq!(result_ids(&full), ["a", "c", "d", "e", "g", "h", "i"]);

    let v = json(&full);
    for key in [
        "depth",
        "sum_depths",
        "fdom_tests",
        "buffer_peak",
        "output_size",
        "elapsed_ms",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn run_writes_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let lists = nine_locations(dir.path());
    let report = dir.path().join("report.json");
    ok(&format!(
        "run --lists {} --k 2 --eps none --mu 3 --out {}",
        lists.display(),
        report.display()
    ));
    assert_eq!(
        result_ids(&std::fs::read_to_string(&report).unwrap()),
        ["e", "i"]
    );
}

#[test]
fn run_reports_missing_lists() {
    let dir = tempfile::tempdir().unwrap();
    let out = flexsky(&format!(
        "run --lists {}/nowhere --k 1",
        dir.path().display()
    ));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn oracle_kinds() {
    let dir = tempfile::tempdir().unwrap();
    let data = nine_locations(dir.path()).join("dataset.csv");
    let query = |flags: &str| json(&ok(&format!("oracle --dataset {} {flags}", data.display())));
    let ids = |flags: &str| sorted_ids(&query(flags)["ids"], None);

    assert_eq!(ids("--kind skyline"), ["a", "e", "h", "i"]);
    assert_eq!(
        ids("--kind skyband --k 2"),
        ["a", "c", "d", "e", "g", "h", "i"]
    );
    assert_eq!(ids("--kind topk --k 2 --weights 0.5,0.5"), ["e", "i"]);
    assert_eq!(ids("--kind ndk --k 2 --eps none"), ["e", "i"]);
    assert_eq!(query("--kind min-stop-depth --k 1 --eps none")["depth"], 4);
}

#[test]
fn verify_modes() {
    let stdout = ok("verify --golden");
    assert!(
        stdout.contains("8 instances, 8 passed, 0 failed"),
        "{stdout}"
    );

    let stdout = ok("verify --random-suite --instances 60 --max-n 80 --seed 3");
    assert!(stdout.contains("60 passed, 0 failed"), "{stdout}");

    let dir = tempfile::tempdir().unwrap();
    let data = nine_locations(dir.path()).join("dataset.csv");
    ok(&format!(
        "verify --dataset {} --k 2 --eps 0.2 --mu 1",
        data.display()
    ));
}

#[test]
fn verify_detects_injected_fault() {
    let out = flexsky("verify --golden --inject-fault prune-off-by-one");
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn sweep_writes_report_and_aggregate() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("mu.csv");
    let agg = dir.path().join("mu_agg.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_flexsky"))
        .args("sweep --n 2000 --mu 1,10 --seeds 1,2 --oracle".split_whitespace())
        .arg("--out")
        .arg(&report)
        .arg("--agg-out")
        .arg(&agg)
        .env("FLEXSKY_THREADS", "2")
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let text = std::fs::read_to_string(&report).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert!(header.starts_with("dist,n,d,k,eps,mu,seed"));
    assert!(header.ends_with("oracle_size"));
    assert_eq!(lines.count(), 4);

    let agg_text = std::fs::read_to_string(&agg).unwrap();
    assert_eq!(agg_text.lines().count(), 3);
}

#[test]
fn sweep_preset_and_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    let grid = r#"{"ns": [1000], "ks": [1, 5], "spreads": ["none", 0.1, "full"]}"#;
    std::fs::write(&spec, grid).unwrap();
    let stdout = ok(&format!("sweep --spec {}", spec.display()));
    assert_eq!(stdout.lines().count(), 1 + 6);

    assert_eq!(flexsky("sweep --preset nope").status.code(), Some(2));
}
