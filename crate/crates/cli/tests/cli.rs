use std::path::Path;
use std::process::{Command, Output};

use eyeread_core::dataset::SplitSpec;
use eyeread_core::pipeline::{InputSource, RunConfig};
use eyeread_core::synthetic::CohortSpec;

fn eyeread(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eyeread"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

// Small cohort and short training so staged tests stay quick.
fn small_config(out_dir: &Path, seed: u64) -> RunConfig {
    let spec = CohortSpec {
        n_control: 8,
        n_ad: 6,
        trials_per_subject_mean: 10.0,
        trials_per_subject_sd: 2.0,
        seed,
        ..CohortSpec::default()
    };
    let mut config =
        RunConfig::default_with(InputSource::Generate(spec), out_dir.to_path_buf(), seed);
    config.split = SplitSpec {
        test_controls: 2,
        test_ad: 2,
        seed,
    };
    for stage in &mut config.stack {
        stage.train.epochs = 20;
    }
    config.head.epochs = 40;
    config
}

fn write_config(dir: &Path, config: &RunConfig) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = eyeread(&["run", "--no-such-flag"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn missing_subcommand_is_usage_error() {
    let out = eyeread(&[]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn help_exits_zero() {
    let out = eyeread(&["--help"]);
    assert_eq!(exit_code(&out), 0);
}

#[test]
fn bad_sparsity_is_usage_error() {
    let out = eyeread(&["run", "--sparsity", "1.5"]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--sparsity"));
}

#[test]
fn unreadable_config_is_usage_error() {
    let out = eyeread(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn missing_input_csv_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = eyeread(&[
        "ingest",
        "/nonexistent/fixations.csv",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 2);
}

#[test]
fn divergent_training_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = small_config(dir.path(), 5);
    config.stack[0].train.learning_rate = 1e12;
    let config_path = write_config(dir.path(), &config);
    let out = eyeread(&["train", "--config", &config_path]);
    assert_eq!(
        exit_code(&out),
        3,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("diverged"));
}

#[test]
fn generate_is_deterministic_per_seed() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let out = eyeread(&["generate", "--seed", "42", "--out", d.path().to_str().unwrap()]);
        assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let b1 = std::fs::read(d1.path().join("cohort.csv")).unwrap();
    let b2 = std::fs::read(d2.path().join("cohort.csv")).unwrap();
    assert_eq!(b1, b2);
}

#[test]
fn staged_flow_matches_full_run_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path(), 9);
    let config_path = write_config(dir.path(), &config);

    for (args, artifact) in [
        (vec!["generate"], "cohort.csv"),
        (vec!["features"], "features.csv"),
        (vec!["train"], "model.json"),
        (vec!["predict"], "predictions.csv"),
        (vec!["evaluate"], "evaluation.json"),
        (vec!["smoothness"], "parallel_coordinates.csv"),
    ] {
        let mut full = args.clone();
        full.extend(["--config", &config_path]);
        let out = eyeread(&full);
        assert_eq!(
            exit_code(&out),
            0,
            "{args:?} failed: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(dir.path().join(artifact).exists(), "{artifact} missing");
    }
}

#[test]
fn run_emits_all_artifacts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_config(dir.path(), &small_config(dir.path(), 11));
    let out = eyeread(&["run", "--config", &config_path]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for name in [
        "cohort.csv",
        "features.csv",
        "split.txt",
        "model.json",
        "predictions.csv",
        "evaluation.json",
        "evaluation.txt",
        "histogram.csv",
        "per_type.csv",
        "parallel_coordinates.csv",
        "manifest.json",
    ] {
        assert!(dir.path().join(name).exists(), "{name} missing");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("accuracy"), "summary missing: {stdout}");
}

#[test]
fn overrides_change_the_trained_architecture() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = write_config(dir.path(), &small_config(dir.path(), 13));
    let out = eyeread(&[
        "train",
        "--config",
        &config_path,
        "--hidden",
        "8,3",
        "--sparsity",
        "0.2",
        "--corruption",
        "0.1",
    ]);
    assert_eq!(exit_code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("model.json")).unwrap())
            .unwrap();
    let stages = doc["stack"]["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 2);
    assert_eq!(stages[0]["config"]["hidden_units"], 8);
    assert_eq!(stages[1]["config"]["hidden_units"], 3);
    assert_eq!(stages[0]["config"]["sparsity_target"], 0.2);
    assert_eq!(stages[0]["config"]["corruption_fraction"], 0.1);
}
