use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use faht::data::synthetic::{generate, SyntheticStreamSpec};
use faht::data::write_csv;
use tempfile::TempDir;

/// A synthetic stream of `n` instances written as CSV, plus its config.
fn fixture(n: usize) -> (TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let d = generate(&SyntheticStreamSpec::new(n, 0.4, 0.2, 9)).unwrap();
    write_csv(fs::File::create(dir.path().join("stream.csv")).unwrap(), &d).unwrap();
    let conf = dir.path().join("stream.conf");
    fs::write(
        &conf,
        "source = stream.csv\nclass = class\npositive = granted\nsensitive = sex\ndeprived = female\nnumeric = score\n",
    )
    .unwrap();
    (dir, conf)
}

fn faht(args: &[&str], data: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_faht"))
        .args(args)
        .arg("--data")
        .arg(data)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_snapshots_tree_and_summary() {
    let (dir, conf) = fixture(3000);
    let out = dir.path().join("out");
    let o = faht(&["run", "--criterion", "faht", "--seed", "4"], &conf, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("faht-seed4-snapshots.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,accuracy,discrimination,node_count"));
    assert_eq!(lines.count(), 3);
    assert!(out.join("faht-seed4-tree.json").exists());
    let summary = json(&out.join("faht-summary.json"));
    assert_eq!(summary["command"], "run");
    assert_eq!(summary["runs"].as_array().unwrap().len(), 1);
}

#[test]
fn missing_dataset_exits_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("gone.conf");
    fs::write(
        &conf,
        "source = nowhere.csv\nclass = c\npositive = y\nsensitive = s\ndeprived = d\n",
    )
    .unwrap();
    let o = faht(&["run"], &conf, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("nowhere.csv"));

    let o = faht(
        &["run"],
        &dir.path().join("no.conf"),
        &dir.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no.conf"));
}

#[test]
fn zero_window_is_rejected() {
    let (dir, conf) = fixture(100);
    let o = faht(
        &["ensemble", "--window", "0"],
        &conf,
        &dir.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2));
    let o = faht(
        &["ensemble", "--capacity", "0"],
        &conf,
        &dir.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn comparing_a_criterion_with_itself_gives_zero_deltas() {
    let (dir, conf) = fixture(3000);
    let out = dir.path().join("out");
    let o = faht(
        &[
            "compare",
            "--criterion",
            "ht",
            "--criterion",
            "ht",
            "--seed",
            "1",
        ],
        &conf,
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = json(&out.join("compare-summary.json"));
    let seed = &summary["seeds"][0];
    assert_eq!(seed["report"]["accuracy_delta"], 0.0);
    assert_eq!(seed["report"]["discrimination_delta"], 0.0);
    assert!(seed["mcnemar"].is_null());
    assert!(seed["note"].as_str().is_some_and(|n| !n.is_empty()));
    assert!(String::from_utf8_lossy(&o.stdout).contains("undefined"));
}

#[test]
fn compare_needs_two_criteria() {
    let (dir, conf) = fixture(100);
    let o = faht(
        &["compare", "--criterion", "ht"],
        &conf,
        &dir.path().join("out"),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn ensemble_reports_one_row_per_window() {
    let (dir, conf) = fixture(5000);
    let out = dir.path().join("out");
    let o = faht(
        &[
            "ensemble",
            "--window",
            "1000",
            "--capacity",
            "5",
            "--seed",
            "2",
        ],
        &conf,
        &out,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["ht", "faht"] {
        let csv =
            fs::read_to_string(out.join(format!("ensemble-{name}-seed2-windows.csv"))).unwrap();
        assert_eq!(csv.lines().count(), 1 + 5, "{name}");
    }
    let summary = json(&out.join("ensemble-summary.json"));
    for run in summary["runs"].as_array().unwrap() {
        assert_eq!(run["members"], 5);
    }
}

#[test]
fn unbounded_single_member_ensemble_matches_run() {
    let (dir, conf) = fixture(4000);
    let out = dir.path().join("out");
    assert!(faht(&["run", "--seed", "3"], &conf, &out).status.success());
    assert!(faht(
        &[
            "ensemble",
            "--window",
            "inf",
            "--capacity",
            "1",
            "--seed",
            "3"
        ],
        &conf,
        &out
    )
    .status
    .success());
    assert_eq!(
        fs::read_to_string(out.join("faht-seed3-snapshots.csv")).unwrap(),
        fs::read_to_string(out.join("ensemble-faht-seed3-snapshots.csv")).unwrap()
    );
}

#[test]
fn outputs_are_deterministic_across_parallel_seeds() {
    let (dir, conf) = fixture(3000);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = faht(&["compare", "--seeds", "1,2,3"], &conf, out);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let mut names: Vec<_> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert_eq!(names.len(), 3 * 5 + 1);
    for name in names {
        assert_eq!(
            fs::read(a.join(&name)).unwrap(),
            fs::read(b.join(&name)).unwrap(),
            "{name:?}"
        );
    }
}
