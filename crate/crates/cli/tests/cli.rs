use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = "n_days = 60\nticks_per_day = 100\nn_agents = 60\n";

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_marketfacts"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn simulate(dir: &Path, out: &str, runs: &str, seed: &str) -> Output {
    fs::write(dir.join("small.cfg"), SMALL).unwrap();
    run(
        &["simulate", "--config", "small.cfg", "--runs", runs, "--seed", seed, "--out", out],
        dir,
    )
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_writes_one_directory_per_run_and_treatment() {
    let dir = tempfile::tempdir().unwrap();
    let o = simulate(dir.path(), "out", "3", "11");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for t in ["unregulated", "var", "es"] {
        let mut runs: Vec<String> = fs::read_dir(dir.path().join("out").join(t))
            .unwrap()
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        runs.sort();
        assert_eq!(runs, ["run_000", "run_001", "run_002"]);
        for f in ["daily.csv", "ticks.csv", "manifest.json"] {
            assert!(dir.path().join("out").join(t).join("run_001").join(f).is_file());
        }
    }
}

#[test]
fn simulate_is_byte_identical_across_executions() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulate(dir.path(), "a", "2", "99").status.success());
    assert!(simulate(dir.path(), "b", "2", "99").status.success());
    for t in ["unregulated", "var", "es"] {
        for r in ["run_000", "run_001"] {
            for f in ["daily.csv", "ticks.csv", "manifest.json"] {
                let a = fs::read(dir.path().join("a").join(t).join(r).join(f)).unwrap();
                let b = fs::read(dir.path().join("b").join(t).join(r).join(f)).unwrap();
                assert!(a == b, "{t}/{r}/{f} differs");
            }
        }
    }
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["simulate", "--config", "missing.cfg", "--runs", "1", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    fs::write(dir.path().join("bad.cfg"), "n_days = many\n").unwrap();
    let o = run(&["simulate", "--config", "bad.cfg", "--runs", "1", "--out", "o"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_days"));
    assert_eq!(run(&["simulate", "--bogus"], dir.path()).status.code(), Some(2));
    let o = run(&["validate", "--in", ".", "--facts", "hill,nope", "--out", "r.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unreadable_report_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("r.json"), "{\"not\": \"a report\"}").unwrap();
    assert_eq!(run(&["report", "--in", "r.json"], dir.path()).status.code(), Some(1));
    assert_eq!(run(&["report", "--in", "none.json"], dir.path()).status.code(), Some(1));
}

#[test]
fn validate_selects_facts_and_report_renders() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulate(dir.path(), "out", "2", "3").status.success());
    let o = run(
        &[
            "validate", "--in", "out/var", "--facts", "hill,powerlaw", "--out", "rep/var.json", "--gof-sets", "20",
            "--bootstrap", "5",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&dir.path().join("rep/var.json"));
    let keys: Vec<&String> = rep["facts"].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["hill", "powerlaw"]);
    assert_eq!(rep["n_runs"], 2);

    let text = run(&["report", "--in", "rep/var.json"], dir.path());
    assert!(text.status.success());
    let text = String::from_utf8(text.stdout).unwrap();
    assert!(text.contains("[hill]") && text.contains("[powerlaw]"));
    assert!(!text.contains("[moments]"));

    let csv = run(&["report", "--in", "rep/var.json", "--format", "csv"], dir.path());
    let csv = String::from_utf8(csv.stdout).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "fact,name,n,mean,median,q1,q3,min,max,std");
    for l in lines {
        let cells: Vec<&str> = l.split(',').collect();
        assert_eq!(cells.len(), 10, "{l}");
        assert!(cells[0] == "hill" || cells[0] == "powerlaw");
        if let Some(mean) = cells.get(3).filter(|c| !c.is_empty()) {
            assert_eq!(mean.split('.').nth(1).unwrap().len(), 4, "{l}");
        }
    }
}

#[test]
fn validate_batch_writes_one_report_per_treatment() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulate(dir.path(), "out", "1", "8").status.success());
    let o = run(
        &["validate", "--in", "out", "--out", "rep.json", "--gof-sets", "10", "--bootstrap", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for t in ["unregulated", "var", "es"] {
        let rep = json(&dir.path().join(format!("rep.{t}.json")));
        assert_eq!(rep["facts"].as_object().unwrap().len(), 17);
        assert_eq!(rep["facts"]["spread"]["available"], true);
    }
    assert!(dir.path().join("rep.var.acf.daily.csv").is_file());
    let text = run(&["report", "--in", "rep.es.json"], dir.path());
    let text = String::from_utf8(text.stdout).unwrap();
    // one run: no quartile or range columns
    let row = text.lines().find(|l| l.trim_start().starts_with("daily.kurtosis")).unwrap();
    assert_eq!(row.split_whitespace().count(), 4, "{row}");
}

#[test]
fn external_daily_csv_has_only_low_frequency_facts() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("date,close\n");
    let mut p = 100.0f64;
    let mut s = 7u64;
    for i in 0..300 {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        p *= 1.0 + ((s >> 11) as f64 / (1u64 << 53) as f64 - 0.5) * 0.03;
        csv.push_str(&format!("{i},{p}\n"));
    }
    fs::write(dir.path().join("series.csv"), csv).unwrap();
    let o = run(
        &["validate", "--in", "series.csv", "--out", "ext.json", "--gof-sets", "10", "--bootstrap", "2"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rep = json(&dir.path().join("ext.json"));
    for f in ["durations", "spread", "volume_vol"] {
        assert_eq!(rep["facts"][f]["available"], false, "{f}");
    }
    for f in ["moments", "hill", "unit_root", "vol_clustering"] {
        assert_eq!(rep["facts"][f]["n_ok"], 1, "{f}");
    }
    let text = String::from_utf8(run(&["report", "--in", "ext.json"], dir.path()).stdout).unwrap();
    assert!(text.contains("unavailable: requires tick data"));
}
