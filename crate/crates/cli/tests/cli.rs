//! End-to-end tests of the `facedyn` binary: a tiny PNG dataset is
//! generated on the fly, then the extract/evaluate/synth-bench commands
//! are exercised through the real process boundary, including exit codes
//! and byte-level reproducibility of reports.

mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::{run, stderr, stdout, write_dataset};

fn default_dataset(dir: &Path) -> PathBuf {
    write_dataset(dir, &[("blink", 0.9), ("wave", 2.1)], 3)
}

#[test]
fn extract_writes_then_hits_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = default_dataset(tmp.path());
    let cache = tmp.path().join("cache");
    let args = [
        "extract",
        "--manifest",
        manifest.to_str().unwrap(),
        "--cache-dir",
        cache.to_str().unwrap(),
    ];
    let first = run(&args);
    assert!(first.status.success(), "stderr: {}", stderr(&first));
    assert!(stdout(&first).contains("extracted and cached"));
    assert!(stdout(&first).contains("30 channels"));
    let second = run(&args);
    assert!(second.status.success());
    assert!(stdout(&second).contains("cache hit"), "stdout: {}", stdout(&second));
}

#[test]
fn evaluate_writes_reproducible_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = default_dataset(tmp.path());
    let cache = tmp.path().join("cache");
    let out_a = tmp.path().join("out-a");
    let out_b = tmp.path().join("out-b");
    for out in [&out_a, &out_b] {
        let result = run(&[
            "evaluate",
            "--manifest",
            manifest.to_str().unwrap(),
            "--method",
            "hankel",
            "--cache-dir",
            cache.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--scales",
            "0.3,0.5",
        ]);
        assert!(result.status.success(), "stderr: {}", stderr(&result));
    }
    for file in ["accuracy.json", "confusion.json", "predictions.jsonl", "report.txt"] {
        let a = fs::read(out_a.join(file)).unwrap();
        let b = fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
        assert!(!a.is_empty());
    }
    // config.json records the resolved run, including hashes.
    let config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("config.json")).unwrap()).unwrap();
    assert_eq!(config["method"], "hankel");
    assert_eq!(config["order"], 2);
    assert!(config["manifest_hash"].as_str().unwrap().len() == 16);
    assert_eq!(config["labels"][0], "blink");
}

#[test]
fn evaluate_supports_both_methods_with_comparable_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = default_dataset(tmp.path());
    let cache = tmp.path().join("cache");
    let mut summaries = Vec::new();
    for method in ["hankel", "dtw"] {
        let out = tmp.path().join(method);
        let result = run(&[
            "evaluate",
            "--manifest",
            manifest.to_str().unwrap(),
            "--method",
            method,
            "--cache-dir",
            cache.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--scales",
            "0.3,0.5",
        ]);
        assert!(result.status.success(), "stderr: {}", stderr(&result));
        let accuracy: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(out.join("accuracy.json")).unwrap()).unwrap();
        assert_eq!(accuracy["method"], method);
        let classes = accuracy["per_class"].as_array().unwrap();
        assert_eq!(classes.len(), 2);
        summaries.push(accuracy["average_pct"].as_f64().unwrap());
    }
    // Both runs used the same cache file.
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    assert!(summaries.iter().all(|v| (0.0..=100.0).contains(v)));
}

#[test]
fn kinds_subset_is_recorded_and_respected() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = default_dataset(tmp.path());
    let out = tmp.path().join("out");
    let result = run(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--kinds",
        "edge-vertical,center-surround",
        "--scales",
        "0.4",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "stderr: {}", stderr(&result));
    let config: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(
        config["kinds"],
        serde_json::json!(["edge-vertical", "center-surround"])
    );
    // Two kinds x one scale = two votes per prediction.
    let first_line = fs::read_to_string(out.join("predictions.jsonl"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    let record: serde_json::Value = serde_json::from_str(&first_line).unwrap();
    assert_eq!(record["votes"].as_array().unwrap().len(), 2);
}

#[test]
fn usage_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = default_dataset(tmp.path());
    let out = tmp.path().join("out");
    let bad_kind = run(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--kinds",
        "squiggle",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(bad_kind.status.code(), Some(2), "stderr: {}", stderr(&bad_kind));
    let bad_method = run(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--method",
        "psychic",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(bad_method.status.code(), Some(2));
    let bad_order = run(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--order",
        "0",
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(bad_order.status.code(), Some(2));
}

#[test]
fn ingestion_failures_exit_3_with_itemized_report() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = run(&[
        "evaluate",
        "--manifest",
        tmp.path().join("nope.jsonl").to_str().unwrap(),
        "--out-dir",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(missing.status.code(), Some(3));

    // A manifest whose frames exist but cannot be decoded.
    let garbage = tmp.path().join("bad.png");
    fs::write(&garbage, b"this is not a png").unwrap();
    let manifest = tmp.path().join("manifest.jsonl");
    fs::write(
        &manifest,
        concat!(
            "{\"format\":\"facedyn-manifest\",\"version\":1,\"labels\":[\"a\",\"b\"]}\n",
            "{\"id\":\"x\",\"subject\":\"s1\",\"label\":\"a\",\"frames\":[\"bad.png\",\"bad.png\",\"bad.png\"],\"box\":[0,0,16,16]}\n",
            "{\"id\":\"y\",\"subject\":\"s2\",\"label\":\"b\",\"frames\":[\"bad.png\",\"bad.png\",\"bad.png\"],\"box\":[0,0,16,16]}\n",
        ),
    )
    .unwrap();
    let corrupt = run(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("out2").to_str().unwrap(),
    ]);
    assert_eq!(corrupt.status.code(), Some(3), "stderr: {}", stderr(&corrupt));
    assert!(stderr(&corrupt).contains("bad.png"), "stderr: {}", stderr(&corrupt));

    // Empty manifest.
    let empty = tmp.path().join("empty.jsonl");
    fs::write(&empty, "{\"format\":\"facedyn-manifest\",\"version\":1}\n").unwrap();
    let empty_run = run(&[
        "evaluate",
        "--manifest",
        empty.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("out3").to_str().unwrap(),
    ]);
    assert_eq!(empty_run.status.code(), Some(3));
}

#[test]
fn single_subject_protocol_failure_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = write_dataset(tmp.path(), &[("blink", 0.9)], 2);
    // Rewrite subjects to collapse onto one.
    let text = fs::read_to_string(&manifest).unwrap().replace("subj-0-1", "subj-0-0");
    fs::write(&manifest, text).unwrap();
    let result = run(&[
        "evaluate",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(4), "stderr: {}", stderr(&result));
}

#[test]
fn synth_bench_is_seed_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");
    let out_c = tmp.path().join("c");
    let spec = tmp.path().join("spec.json");
    fs::write(
        &spec,
        serde_json::to_string(&serde_json::json!({
            "version": 1,
            "classes": 3,
            "sequences_per_class": 4,
            "channels": 2,
            "state_dim": 2,
            "output_dim": 3,
            "t_min": 16,
            "t_max": 20,
            "noise_levels": [0.0, 0.2],
            "seed": 7,
            "order": 2,
            "class_separation": 0.2,
            "amplitude_spread": 3.0
        }))
        .unwrap(),
    )
    .unwrap();
    for out in [&out_a, &out_b] {
        let result = run(&[
            "synth-bench",
            "--spec",
            spec.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success(), "stderr: {}", stderr(&result));
    }
    assert_eq!(
        fs::read(out_a.join("bench.json")).unwrap(),
        fs::read(out_b.join("bench.json")).unwrap(),
        "same seed must reproduce byte-identical benchmark output"
    );
    // Seed override changes the outcome file.
    let result = run(&[
        "synth-bench",
        "--spec",
        spec.to_str().unwrap(),
        "--seed",
        "8",
        "--out-dir",
        out_c.to_str().unwrap(),
    ]);
    assert!(result.status.success());
    assert_ne!(
        fs::read(out_a.join("bench.json")).unwrap(),
        fs::read(out_c.join("bench.json")).unwrap()
    );
    // The noise-free level is perfect for the Hankel route.
    let bench: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_a.join("bench.json")).unwrap()).unwrap();
    let first = &bench["levels"][0];
    assert_eq!(first["noise_std"], 0.0);
    assert_eq!(first["hankel"]["accuracy"]["average_pct"], 100.0);

    // Unstable spec is rejected at construction.
    let bad_spec = tmp.path().join("bad.json");
    fs::write(
        &bad_spec,
        r#"{"version":1,"classes":1,"sequences_per_class":4,"channels":2,"state_dim":2,"output_dim":3,"t_min":16,"t_max":20,"noise_levels":[0.0],"seed":7,"order":2,"class_separation":0.2,"amplitude_spread":3.0}"#,
    )
    .unwrap();
    let rejected = run(&[
        "synth-bench",
        "--spec",
        bad_spec.to_str().unwrap(),
        "--out-dir",
        tmp.path().join("d").to_str().unwrap(),
    ]);
    assert_eq!(rejected.status.code(), Some(4), "stderr: {}", stderr(&rejected));
}

#[test]
fn jobs_flag_does_not_change_results() {
    let tmp = tempfile::tempdir().unwrap();
    let manifest = default_dataset(tmp.path());
    let out_par = tmp.path().join("par");
    let out_ser = tmp.path().join("ser");
    for (out, jobs) in [(&out_par, "4"), (&out_ser, "1")] {
        let result = run(&[
            "evaluate",
            "--manifest",
            manifest.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--scales",
            "0.3",
            "--jobs",
            jobs,
        ]);
        assert!(result.status.success(), "stderr: {}", stderr(&result));
    }
    assert_eq!(
        fs::read(out_par.join("predictions.jsonl")).unwrap(),
        fs::read(out_ser.join("predictions.jsonl")).unwrap()
    );
}
