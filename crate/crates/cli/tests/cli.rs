use std::path::Path;
use std::process::Command;

fn seislink(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_seislink"))
        .current_dir(dir)
        .args(["--workers", "1", "--output-dir"])
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &std::process::Output) {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn synth_is_byte_identical_for_a_fixed_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&seislink(d, &["--seed", "4", "synth", "--samples", "300", "--out", "a.sld"]));
    ok(&seislink(d, &["--seed", "4", "synth", "--samples", "300", "--out", "b.sld"]));
    ok(&seislink(d, &["--seed", "5", "synth", "--samples", "300", "--out", "c.sld"]));
    let a = std::fs::read(d.join("a.sld")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.sld")).unwrap());
    assert_ne!(a, std::fs::read(d.join("c.sld")).unwrap());
}

#[test]
fn missing_stations_file_is_a_usage_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let out = seislink(dir.path(), &["--stations", "nowhere/stations.csv", "synth", "--samples", "10"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere/stations.csv"));
}

#[test]
fn every_config_problem_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(
        &cfg,
        "threshold = 2.0\n[synth]\nn_p = 0\n[aggregate]\nn_min = 0\n[paths]\nstations = \"gone.csv\"\n",
    )
    .unwrap();
    let out = seislink(dir.path(), &["--config", cfg.to_str().unwrap(), "train"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for needle in ["threshold", "n_p", "n_min", "gone.csv", "paths.dataset"] {
        assert!(err.contains(needle), "{needle} missing from:\n{err}");
    }
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("typo.toml");
    std::fs::write(&cfg, "[train]\nepochz = 3\n").unwrap();
    let out = seislink(dir.path(), &["--config", cfg.to_str().unwrap(), "synth"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epochz"));
}

#[test]
fn corrupt_checkpoint_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&seislink(d, &["synth", "--stream", "--events", "5", "--out", "picks.csv"]));
    std::fs::write(d.join("model.slm"), b"not a model").unwrap();
    let out = seislink(d, &["associate", "--picks", "picks.csv", "--checkpoint", "model.slm"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn oracle_associate_then_eval_is_precise() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&seislink(
        d,
        &["--seed", "2", "synth", "--stream", "--events", "120", "--max-gap", "128", "--out", "picks.csv"],
    ));
    ok(&seislink(d, &["associate", "--oracle", "--picks", "picks.csv", "--out", "cat.jsonl"]));
    ok(&seislink(d, &["eval", "--picks", "picks.csv", "--catalog", "cat.jsonl", "--sweep"]));
    let m: serde_json::Value = serde_json::from_slice(&std::fs::read(d.join("metrics.json")).unwrap()).unwrap();
    let p = m["metrics"]["event_precision"].as_f64().unwrap();
    let r = m["metrics"]["event_recall"].as_f64().unwrap();
    assert!(p >= 0.99, "precision {p}");
    assert!(r >= 0.9, "recall {r}");
    // Provenance travels with every output.
    assert_eq!(m["header"]["config"]["seed"], 0);
    assert_eq!(m["catalog_header"]["linker"], "oracle");
    let csv = std::fs::read_to_string(d.join("metrics_sweep.csv")).unwrap();
    assert!(csv.starts_with("# {"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("8,")).count(), 6);

    // Re-running gives the same catalog.
    ok(&seislink(d, &["associate", "--oracle", "--picks", "picks.csv", "--out", "cat2.jsonl"]));
    assert_eq!(std::fs::read(d.join("cat.jsonl")).unwrap(), std::fs::read(d.join("cat2.jsonl")).unwrap());

    ok(&seislink(d, &["plot", "--sweep", "metrics_sweep.csv"]));
    assert!(std::fs::read_to_string(d.join("sweep.svg")).unwrap().contains("<svg"));
}

#[test]
fn tiny_pipeline_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = d.join("run.toml");
    std::fs::write(
        &cfg,
        "[synth]\nn_p = 20\n[train]\nepochs = 2\nhidden = 4\nbatch_size = 32\n[stress]\ngaps = [16.0, 64.0]\nn_events = 20\n[grid]\nspacing_km = 20.0\ndepth_levels_km = [5.0, 15.0]\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    ok(&seislink(d, &["--config", c, "synth", "--samples", "400", "--out", "ds.sld"]));
    ok(&seislink(d, &["--config", c, "train", "--dataset", "ds.sld", "--out", "m.slm"]));
    assert!(d.join("checkpoints/epoch_002.slm").is_file());
    ok(&seislink(d, &["--config", c, "synth", "--stream", "--events", "20", "--out", "picks.csv"]));
    ok(&seislink(d, &["--config", c, "associate", "--picks", "picks.csv", "--checkpoint", "m.slm"]));
    ok(&seislink(d, &["--config", c, "grid", "--picks", "picks.csv"]));
    ok(&seislink(
        d,
        &["--config", c, "eval", "--picks", "picks.csv", "--catalog", "grid_catalog.jsonl", "--name", "grid"],
    ));
    ok(&seislink(d, &["--config", c, "stress", "--checkpoint", "m.slm"]));
    let stress = std::fs::read_to_string(d.join("stress.csv")).unwrap();
    for name in ["oracle,", "model,", "grid,"] {
        assert!(stress.contains(name), "{name}");
    }
    ok(&seislink(d, &["plot", "--stress", "stress.csv", "--log", "train_log.csv"]));
    assert!(d.join("stress_event_recall.svg").is_file());
    assert!(d.join("train_log.svg").is_file());

    // A model trained at a different window length is rejected.
    let out = seislink(d, &["associate", "--picks", "picks.csv", "--checkpoint", "m.slm"]);
    assert_eq!(out.status.code(), Some(2));
}
