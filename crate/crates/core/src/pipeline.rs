//! End-to-end orchestration: generate or ingest fixations, clean and
//! classify, extract features, filter outliers, split by subject, train
//! the encoder stack and softmax head, predict the test set, and write
//! the evaluation artifacts plus a reproducibility manifest.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::classifier::{train_head, DeepClassifier};
use crate::dataset::{
    filter_outliers, load_fixation_csv, split_by_subject, write_feature_csv, write_fixation_csv,
    write_split_manifest, Cohort, Provenance, RawTrial, SplitSpec,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    encoding_smoothness, evaluate, pairwise_distance_percentile, write_histogram_csv,
    write_parallel_coordinates_csv, write_per_type_csv, write_predictions_csv, EvaluationReport,
    SmoothnessReport, TrialPrediction,
};
use crate::features::{extract_trial_features, Standardizer, TrialFeatureVector};
use crate::model::ModelDocument;
use crate::nn::TrainConfig;
use crate::preprocess::{classify_fixations, clean_fixations};
use crate::sdae::{stack_train, SparseAeConfig};
use crate::synthetic::{generate_cohort, CohortSpec};
use crate::types::{encode_label, Subject};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InputSource {
    /// Path to a fixation CSV.
    Csv(PathBuf),
    /// Synthetic generator spec.
    Generate(CohortSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub input: InputSource,
    pub out_dir: PathBuf,
    pub split: SplitSpec,
    pub stack: Vec<SparseAeConfig>,
    pub head: TrainConfig,
    pub threshold: f64,
    pub histogram_bins: usize,
    /// Percentile (in [0,1]) of pairwise input distances used as the
    /// smoothness input radius.
    pub smoothness_input_percentile: f64,
    pub smoothness_code_radius: f64,
    pub seed: u64,
}

impl RunConfig {
    /// Reference defaults: [16, 4] stack, 10% sparsity target,
    /// 0.25 corruption, 0.5 decision threshold. Stage and head seeds are
    /// derived from the global seed.
    pub fn default_with(input: InputSource, out_dir: PathBuf, seed: u64) -> Self {
        RunConfig {
            input,
            out_dir,
            split: SplitSpec {
                test_controls: 4,
                test_ad: 4,
                seed,
            },
            stack: default_stack_configs(&[16, 4], 0.10, 0.25, seed),
            head: TrainConfig {
                learning_rate: 0.3,
                epochs: 400,
                batch_size: 32,
                l2_weight: 1e-4,
                seed: seed.wrapping_add(1000),
            },
            threshold: 0.5,
            histogram_bins: 10,
            smoothness_input_percentile: 0.05,
            smoothness_code_radius: 0.5,
            seed,
        }
    }
}

pub fn default_stack_configs(
    hidden: &[usize],
    sparsity: f64,
    corruption: f64,
    seed: u64,
) -> Vec<SparseAeConfig> {
    hidden
        .iter()
        .enumerate()
        .map(|(i, &units)| SparseAeConfig {
            hidden_units: units,
            sparsity_target: sparsity,
            sparsity_weight: 3.0,
            corruption_fraction: corruption,
            train: TrainConfig {
                learning_rate: 0.1,
                epochs: 250,
                batch_size: 32,
                l2_weight: 1e-4,
                seed: seed.wrapping_add(1 + i as u64),
            },
        })
        .collect()
}

/// Cleans, classifies, and extracts features for every trial; trials with
/// fewer than two retained fixations are dropped and counted.
pub fn trials_to_features(
    subjects: &[Subject],
    raw_trials: &[RawTrial],
) -> Result<(Vec<TrialFeatureVector>, usize)> {
    let label_of: BTreeMap<&str, u8> = subjects
        .iter()
        .map(|s| (s.subject_id.as_str(), encode_label(s.diagnosis)))
        .collect();
    let mut features = Vec::with_capacity(raw_trials.len());
    let mut skipped = 0usize;
    for raw in raw_trials {
        let label = *label_of.get(raw.subject_id.as_str()).ok_or_else(|| {
            Error::invalid("trial", format!("unknown subject '{}'", raw.subject_id))
        })?;
        let cleaned = clean_fixations(&raw.fixations, &raw.sentence)?;
        let trial = classify_fixations(&cleaned, &raw.sentence, raw.subject_id.clone())?;
        match extract_trial_features(&trial, label) {
            Ok(v) => features.push(v),
            Err(Error::TrialTooSparse { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((features, skipped))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub config_hash: String,
    pub seed: u64,
    pub n_subjects: usize,
    pub n_trials_extracted: usize,
    pub n_trials_skipped_sparse: usize,
    pub n_trials_dropped_outlier: usize,
    pub outlier_drop_fraction: f64,
    pub train_trials: usize,
    pub test_trials: usize,
    /// Artifact file name -> SHA-256 of its content. A partial run leaves
    /// the artifact out of this map.
    pub artifact_hashes: BTreeMap<String, String>,
    pub complete: bool,
}

pub struct RunOutput {
    pub manifest: RunManifest,
    pub classifier: DeepClassifier,
    pub predictions: Vec<TrialPrediction>,
    pub report: EvaluationReport,
    pub smoothness: SmoothnessReport,
}

/// Hash of the scientific configuration. The output directory is
/// normalized out so runs into different directories stay comparable.
pub fn config_hash(config: &RunConfig) -> Result<String> {
    let mut normalized = config.clone();
    normalized.out_dir = PathBuf::new();
    let json = serde_json::to_vec(&normalized)?;
    Ok(hex_digest(&json))
}

fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn file_hash(path: &Path) -> Result<String> {
    Ok(hex_digest(&std::fs::read(path)?))
}

/// Runs the full pipeline and writes all artifacts into `config.out_dir`:
/// `features.csv`, `split.txt`, `model.json`, `predictions.csv`,
/// `evaluation.json` (+ `evaluation.txt`), and `manifest.json`, plus
/// `histogram.csv`, `per_type.csv`, `parallel_coordinates.csv`, and
/// `cohort.csv` when generating.
pub fn run_pipeline(config: &RunConfig) -> Result<RunOutput> {
    std::fs::create_dir_all(&config.out_dir)?;
    let hash = config_hash(config)?;
    let out = |name: &str| config.out_dir.join(name);
    let mut artifact_hashes = BTreeMap::new();
    let record = |name: &str, hashes: &mut BTreeMap<String, String>| -> Result<()> {
        hashes.insert(name.to_string(), file_hash(&out(name))?);
        Ok(())
    };

    // Ingest or generate.
    let (subjects, raw_trials, provenance) = match &config.input {
        InputSource::Csv(path) => {
            let (s, t) = load_fixation_csv(path).map_err(|e| e.in_stage("ingest"))?;
            (s, t, Provenance::Ingested)
        }
        InputSource::Generate(spec) => {
            let (s, t) = generate_cohort(spec).map_err(|e| e.in_stage("generate"))?;
            write_fixation_csv(&out("cohort.csv"), &s, &t)
                .map_err(|e| e.in_stage("generate"))?;
            record("cohort.csv", &mut artifact_hashes)?;
            (s, t, Provenance::Synthetic)
        }
    };

    // Clean, classify, extract.
    let (features, skipped) =
        trials_to_features(&subjects, &raw_trials).map_err(|e| e.in_stage("features"))?;
    write_feature_csv(&out("features.csv"), &features).map_err(|e| e.in_stage("features"))?;
    record("features.csv", &mut artifact_hashes)?;

    // Outlier dropout on the full feature set, before splitting.
    let filtered = filter_outliers(&features).map_err(|e| e.in_stage("outlier-filter"))?;
    let kept_subjects: Vec<Subject> = subjects
        .iter()
        .filter(|s| filtered.kept.iter().any(|t| t.subject_id == s.subject_id))
        .cloned()
        .collect();
    let cohort = Cohort::new(kept_subjects, filtered.kept.clone(), provenance)
        .map_err(|e| e.in_stage("outlier-filter"))?;

    // Subject-disjoint split.
    let (train_cohort, test_cohort) =
        split_by_subject(&cohort, &config.split).map_err(|e| e.in_stage("split"))?;
    write_split_manifest(&out("split.txt"), &config.split, &train_cohort, &test_cohort)
        .map_err(|e| e.in_stage("split"))?;
    record("split.txt", &mut artifact_hashes)?;

    // Standardize on the training split only.
    let standardizer =
        Standardizer::fit(&train_cohort.trials).map_err(|e| e.in_stage("standardize"))?;
    let train_matrix = standardizer.apply_matrix(&train_cohort.trials);
    let train_labels: Vec<u8> = train_cohort.trials.iter().map(|t| t.label).collect();

    // Greedy stack pretraining, then the frozen-stack softmax head.
    let stack = stack_train(&train_matrix, &config.stack).map_err(|e| e.in_stage("stack-train"))?;
    let head = train_head(&stack, &train_matrix, &train_labels, &config.head)
        .map_err(|e| e.in_stage("head-train"))?;
    let classifier = DeepClassifier {
        standardizer,
        stack,
        head,
    };
    let model_doc = ModelDocument::from_classifier(&classifier, config.head, hash.clone());
    model_doc.save(&out("model.json")).map_err(|e| e.in_stage("model"))?;
    record("model.json", &mut artifact_hashes)?;

    // Predict the held-out test trials.
    let predictions: Vec<TrialPrediction> = test_cohort
        .trials
        .iter()
        .map(|t| {
            Ok(TrialPrediction {
                subject_id: t.subject_id.clone(),
                trial_id: t.trial_id.clone(),
                sentence_type: t.sentence_type,
                label: t.label,
                p_ad: classifier.predict_trial(t)?,
            })
        })
        .collect::<Result<_>>()
        .map_err(|e: Error| e.in_stage("predict"))?;
    write_predictions_csv(&out("predictions.csv"), &predictions)
        .map_err(|e| e.in_stage("predict"))?;
    record("predictions.csv", &mut artifact_hashes)?;

    // Evaluation battery.
    let scores: BTreeMap<String, f64> = test_cohort
        .subjects
        .iter()
        .filter_map(|s| s.clinician_score.map(|v| (s.subject_id.clone(), v)))
        .collect();
    let report = evaluate(&predictions, config.threshold, config.histogram_bins, &scores)
        .map_err(|e| e.in_stage("evaluate"))?;
    let mut report_json = serde_json::to_value(&report)?;
    if let serde_json::Value::Object(map) = &mut report_json {
        map.insert("config_hash".into(), serde_json::Value::String(hash.clone()));
    }
    std::fs::write(
        out("evaluation.json"),
        serde_json::to_string_pretty(&report_json)? + "\n",
    )?;
    record("evaluation.json", &mut artifact_hashes)?;
    std::fs::write(out("evaluation.txt"), report.text_summary())?;
    record("evaluation.txt", &mut artifact_hashes)?;
    write_histogram_csv(&out("histogram.csv"), &report.histogram)?;
    record("histogram.csv", &mut artifact_hashes)?;
    write_per_type_csv(&out("per_type.csv"), &report.per_type)?;
    record("per_type.csv", &mut artifact_hashes)?;

    // Encoding-smoothness report over the standardized test inputs.
    let standardized_test: Vec<(String, u8, Vec<f64>)> = test_cohort
        .trials
        .iter()
        .map(|t| (t.trial_id.clone(), t.label, classifier.standardizer.apply(t)))
        .collect();
    let inputs: Vec<Vec<f64>> = standardized_test.iter().map(|(_, _, v)| v.clone()).collect();
    let input_radius = pairwise_distance_percentile(&inputs, config.smoothness_input_percentile)
        .unwrap_or(1.0)
        .max(1e-9);
    let smoothness = encoding_smoothness(
        &classifier.stack,
        &standardized_test,
        input_radius,
        config.smoothness_code_radius,
    )
    .map_err(|e| e.in_stage("smoothness"))?;
    write_parallel_coordinates_csv(&out("parallel_coordinates.csv"), &smoothness.parallel_rows)?;
    record("parallel_coordinates.csv", &mut artifact_hashes)?;

    let manifest = RunManifest {
        config: config.clone(),
        config_hash: hash,
        seed: config.seed,
        n_subjects: subjects.len(),
        n_trials_extracted: features.len(),
        n_trials_skipped_sparse: skipped,
        n_trials_dropped_outlier: filtered.dropped.len(),
        outlier_drop_fraction: filtered.report.overall_drop_fraction(),
        train_trials: train_cohort.trials.len(),
        test_trials: test_cohort.trials.len(),
        artifact_hashes,
        complete: true,
    };
    std::fs::write(
        out("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;

    Ok(RunOutput {
        manifest,
        classifier,
        predictions,
        report,
        smoothness,
    })
}
