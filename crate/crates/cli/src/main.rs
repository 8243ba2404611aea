//! `eyeread`: seed-pinned command line for the reading-behavior pipeline.
//! Each stage is independently invocable; `run` chains them all.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eyeread_core::classifier::{train_head, DeepClassifier};
use eyeread_core::dataset::{
    filter_outliers, load_fixation_csv, split_by_subject, write_feature_csv, write_fixation_csv,
    write_split_manifest, Cohort, Provenance,
};
use eyeread_core::error::Error;
use eyeread_core::evaluation::{
    encoding_smoothness, evaluate, pairwise_distance_percentile, write_histogram_csv,
    write_parallel_coordinates_csv, write_per_type_csv, write_predictions_csv, TrialPrediction,
};
use eyeread_core::features::Standardizer;
use eyeread_core::model::ModelDocument;
use eyeread_core::pipeline::{
    config_hash, default_stack_configs, run_pipeline, trials_to_features, InputSource, RunConfig,
};
use eyeread_core::synthetic::{generate_cohort, CohortSpec};
use eyeread_core::types::Subject;

#[derive(Parser)]
#[command(
    name = "eyeread",
    version,
    about = "Classify reading trials from eye-movement fixations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    /// JSON run configuration; the flags below override its fields.
    #[arg(long, global = true, value_name = "path")]
    config: Option<PathBuf>,
    /// Global seed; re-derives the split, stage, and head seeds.
    #[arg(long, global = true, value_name = "int")]
    seed: Option<u64>,
    /// Output directory for artifacts.
    #[arg(long, global = true, value_name = "dir")]
    out: Option<PathBuf>,
    /// Hidden layer sizes, comma separated (e.g. 16,4).
    #[arg(long, global = true, value_delimiter = ',', value_name = "units")]
    hidden: Option<Vec<usize>>,
    /// Sparsity target for every stage, in (0,1).
    #[arg(long, global = true, value_name = "rho")]
    sparsity: Option<f64>,
    /// Input corruption fraction for every stage, in [0,1).
    #[arg(long, global = true, value_name = "frac")]
    corruption: Option<f64>,
    /// Decision threshold on p(AD), in [0,1].
    #[arg(long, global = true, value_name = "p")]
    threshold: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic fixation cohort and write cohort.csv.
    Generate,
    /// Validate a fixation CSV and write a normalized cohort.csv.
    Ingest { input: PathBuf },
    /// Clean, classify, and extract per-trial features to features.csv.
    Features { input: Option<PathBuf> },
    /// Train the encoder stack and softmax head; writes model.json.
    Train { input: Option<PathBuf> },
    /// Score trials with a trained model; writes predictions.csv.
    Predict {
        input: Option<PathBuf>,
        /// Trained model document (default: <out>/model.json).
        #[arg(long, value_name = "path")]
        model: Option<PathBuf>,
    },
    /// Full evaluation battery against a trained model.
    Evaluate {
        input: Option<PathBuf>,
        #[arg(long, value_name = "path")]
        model: Option<PathBuf>,
    },
    /// Encoding-smoothness report for a trained model.
    Smoothness {
        input: Option<PathBuf>,
        #[arg(long, value_name = "path")]
        model: Option<PathBuf>,
    },
    /// Run the whole pipeline and write every artifact.
    Run,
}

enum CliError {
    /// Bad invocation or unusable configuration.
    Usage(String),
    Core(Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn core_exit(err: &Error) -> u8 {
    match err {
        Error::Diverged { .. } => 3,
        Error::Stage { source, .. } => core_exit(source),
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let is_help = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return if is_help { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Core(err)) => {
            eprintln!("error: {err}");
            ExitCode::from(core_exit(&err))
        }
    }
}

/// Builds the effective RunConfig: config file (or defaults), then flag
/// overrides. Seed overrides re-derive every stage seed, and a seed given
/// to a generated input also re-seeds the generator.
fn resolve_config(o: &Overrides) -> Result<RunConfig, CliError> {
    let mut config = match &o.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("cannot read config '{}': {e}", path.display())))?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| usage(format!("invalid config '{}': {e}", path.display())))?
        }
        None => RunConfig::default_with(
            InputSource::Generate(CohortSpec::default()),
            PathBuf::from("out"),
            7,
        ),
    };
    if config.stack.is_empty() {
        return Err(usage("config must define at least one autoencoder stage"));
    }

    if let Some(seed) = o.seed {
        config.seed = seed;
        config.split.seed = seed;
        config.head.seed = seed.wrapping_add(1000);
        for (i, stage) in config.stack.iter_mut().enumerate() {
            stage.train.seed = seed.wrapping_add(1 + i as u64);
        }
        if let InputSource::Generate(spec) = &mut config.input {
            spec.seed = seed;
        }
    }
    if let Some(out) = &o.out {
        config.out_dir = out.clone();
    }

    if o.hidden.is_some() || o.sparsity.is_some() || o.corruption.is_some() {
        let hidden: Vec<usize> = o
            .hidden
            .clone()
            .unwrap_or_else(|| config.stack.iter().map(|s| s.hidden_units).collect());
        if hidden.is_empty() || hidden.contains(&0) {
            return Err(usage("--hidden needs one or more nonzero layer sizes"));
        }
        let sparsity = o.sparsity.unwrap_or(config.stack[0].sparsity_target);
        if !(sparsity > 0.0 && sparsity < 1.0) {
            return Err(usage(format!("--sparsity must lie in (0,1), got {sparsity}")));
        }
        let corruption = o.corruption.unwrap_or(config.stack[0].corruption_fraction);
        if !(0.0..1.0).contains(&corruption) {
            return Err(usage(format!("--corruption must lie in [0,1), got {corruption}")));
        }
        let template = config.stack[0].train;
        config.stack = default_stack_configs(&hidden, sparsity, corruption, config.seed);
        for stage in &mut config.stack {
            let seed = stage.train.seed;
            stage.train = template;
            stage.train.seed = seed;
        }
    }

    if let Some(threshold) = o.threshold {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(usage(format!("--threshold must lie in [0,1], got {threshold}")));
        }
        config.threshold = threshold;
    }
    Ok(config)
}

fn load_input(
    config: &RunConfig,
    override_csv: Option<PathBuf>,
) -> Result<(Vec<Subject>, Vec<eyeread_core::dataset::RawTrial>, Provenance), CliError> {
    let input = match override_csv {
        Some(path) => InputSource::Csv(path),
        None => config.input.clone(),
    };
    Ok(match input {
        InputSource::Csv(path) => {
            let (s, t) = load_fixation_csv(&path)?;
            (s, t, Provenance::Ingested)
        }
        InputSource::Generate(spec) => {
            let (s, t) = generate_cohort(&spec)?;
            (s, t, Provenance::Synthetic)
        }
    })
}

fn out_path(config: &RunConfig, name: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&config.out_dir).map_err(Error::Io)?;
    Ok(config.out_dir.join(name))
}

fn load_model(config: &RunConfig, model: Option<PathBuf>) -> Result<DeepClassifier, CliError> {
    let path = model.unwrap_or_else(|| config.out_dir.join("model.json"));
    Ok(ModelDocument::load(&path)?.into_classifier())
}

fn predictions_for(
    classifier: &DeepClassifier,
    subjects: &[Subject],
    trials: &[eyeread_core::dataset::RawTrial],
) -> Result<Vec<TrialPrediction>, CliError> {
    let (features, _) = trials_to_features(subjects, trials)?;
    features
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
        .collect()
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = resolve_config(&cli.overrides)?;
    match cli.command {
        Command::Generate => {
            let InputSource::Generate(spec) = &config.input else {
                return Err(usage("generate needs a generator spec, not a CSV input"));
            };
            let (subjects, trials) = generate_cohort(spec)?;
            let path = out_path(&config, "cohort.csv")?;
            write_fixation_csv(&path, &subjects, &trials)?;
            println!(
                "generated {} subjects, {} trials -> {}",
                subjects.len(),
                trials.len(),
                path.display()
            );
        }
        Command::Ingest { input } => {
            let (subjects, trials) = load_fixation_csv(&input)?;
            let path = out_path(&config, "cohort.csv")?;
            write_fixation_csv(&path, &subjects, &trials)?;
            println!(
                "ingested {} subjects, {} trials -> {}",
                subjects.len(),
                trials.len(),
                path.display()
            );
        }
        Command::Features { input } => {
            let (subjects, trials, _) = load_input(&config, input)?;
            let (features, skipped) = trials_to_features(&subjects, &trials)?;
            let path = out_path(&config, "features.csv")?;
            write_feature_csv(&path, &features)?;
            println!(
                "extracted {} trial feature vectors ({} too sparse) -> {}",
                features.len(),
                skipped,
                path.display()
            );
        }
        Command::Train { input } => {
            let (subjects, trials, provenance) = load_input(&config, input)?;
            let (features, _) = trials_to_features(&subjects, &trials)?;
            let filtered = filter_outliers(&features)?;
            let kept_subjects: Vec<Subject> = subjects
                .iter()
                .filter(|s| filtered.kept.iter().any(|t| t.subject_id == s.subject_id))
                .cloned()
                .collect();
            let cohort = Cohort::new(kept_subjects, filtered.kept, provenance)?;
            let (train_cohort, test_cohort) = split_by_subject(&cohort, &config.split)?;
            write_split_manifest(
                &out_path(&config, "split.txt")?,
                &config.split,
                &train_cohort,
                &test_cohort,
            )?;
            let standardizer = Standardizer::fit(&train_cohort.trials)?;
            let matrix = standardizer.apply_matrix(&train_cohort.trials);
            let labels: Vec<u8> = train_cohort.trials.iter().map(|t| t.label).collect();
            let stack = eyeread_core::sdae::stack_train(&matrix, &config.stack)?;
            let head = train_head(&stack, &matrix, &labels, &config.head)?;
            let classifier = DeepClassifier {
                standardizer,
                stack,
                head,
            };
            let doc =
                ModelDocument::from_classifier(&classifier, config.head, config_hash(&config)?);
            let path = out_path(&config, "model.json")?;
            doc.save(&path)?;
            println!(
                "trained on {} trials ({} held-out) -> {}",
                train_cohort.trials.len(),
                test_cohort.trials.len(),
                path.display()
            );
        }
        Command::Predict { input, model } => {
            let classifier = load_model(&config, model)?;
            let (subjects, trials, _) = load_input(&config, input)?;
            let preds = predictions_for(&classifier, &subjects, &trials)?;
            let path = out_path(&config, "predictions.csv")?;
            write_predictions_csv(&path, &preds)?;
            println!("scored {} trials -> {}", preds.len(), path.display());
        }
        Command::Evaluate { input, model } => {
            let classifier = load_model(&config, model)?;
            let (subjects, trials, _) = load_input(&config, input)?;
            let preds = predictions_for(&classifier, &subjects, &trials)?;
            let scores = subjects
                .iter()
                .filter_map(|s| s.clinician_score.map(|v| (s.subject_id.clone(), v)))
                .collect();
            let report = evaluate(&preds, config.threshold, config.histogram_bins, &scores)?;
            std::fs::write(
                out_path(&config, "evaluation.json")?,
                serde_json::to_string_pretty(&report).map_err(Error::Json)? + "\n",
            )
            .map_err(Error::Io)?;
            write_histogram_csv(&out_path(&config, "histogram.csv")?, &report.histogram)?;
            write_per_type_csv(&out_path(&config, "per_type.csv")?, &report.per_type)?;
            print!("{}", report.text_summary());
        }
        Command::Smoothness { input, model } => {
            let classifier = load_model(&config, model)?;
            let (subjects, trials, _) = load_input(&config, input)?;
            let (features, _) = trials_to_features(&subjects, &trials)?;
            let standardized: Vec<(String, u8, Vec<f64>)> = features
                .iter()
                .map(|t| (t.trial_id.clone(), t.label, classifier.standardizer.apply(t)))
                .collect();
            let inputs: Vec<Vec<f64>> =
                standardized.iter().map(|(_, _, v)| v.clone()).collect();
            let radius = pairwise_distance_percentile(&inputs, config.smoothness_input_percentile)
                .unwrap_or(1.0)
                .max(1e-9);
            let report = encoding_smoothness(
                &classifier.stack,
                &standardized,
                radius,
                config.smoothness_code_radius,
            )?;
            let path = out_path(&config, "parallel_coordinates.csv")?;
            write_parallel_coordinates_csv(&path, &report.parallel_rows)?;
            println!(
                "{} close pairs at input radius {:.4}; max code distance {}; export -> {}",
                report.n_pairs,
                report.input_radius,
                report
                    .max_code_distance
                    .map_or("n/a".to_string(), |d| format!("{d:.4}")),
                path.display()
            );
        }
        Command::Run => {
            let output = run_pipeline(&config)?;
            print!("{}", output.report.text_summary());
            println!("artifacts -> {}", config.out_dir.display());
        }
    }
    Ok(())
}
