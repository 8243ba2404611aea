//! Acceptance battery. Each test prints one PASS/FAIL line; oracles here
//! are implemented independently of the library code they check.

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use eyeread_core::corpus::{log_frequency, logit_predictability};
use eyeread_core::dataset::filter_outliers;
use eyeread_core::evaluation::{encoding_smoothness, severity_replay, write_parallel_coordinates_csv};
use eyeread_core::features::{Standardizer, TrialFeatureVector, N_FEATURES};
use eyeread_core::nn::{gradient_check, Activation, DenseLayer, LossSpec, GRADIENT_CHECK_EPS};
use eyeread_core::pipeline::{
    default_stack_configs, run_pipeline, trials_to_features, InputSource, RunConfig,
};
use eyeread_core::preprocess::{clean_fixations, classify_fixations};
use eyeread_core::sdae::{mean_hidden_activation, train_sparse_autoencoder, EncoderStack, SparseAutoencoder};
use eyeread_core::synthetic::{generate_cohort, CohortSpec};
use eyeread_core::types::{Fixation, FixationClass, SentenceMeta, SentenceType};

fn verdict(name: &str, pass: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect())
        .collect()
}

#[test]
fn a1_gradient_correctness() {
    let mut worst = 0.0_f64;
    // Fixed seeds: the relative-error denominator floors at the gradient
    // magnitude, so a draw with a vanishing gradient measures only
    // finite-difference cancellation noise.
    for seed in [2u64, 22, 24] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sparse = LossSpec::SparseAe { beta: 3.0, rho: 0.10 };

        // Both stack stages as denoising-shape autoencoders.
        for (in_dim, hid) in [(14usize, 16usize), (16, 4)] {
            let net = vec![
                DenseLayer::init(in_dim, hid, Activation::Sigmoid, &mut rng),
                DenseLayer::init(hid, in_dim, Activation::Linear, &mut rng),
            ];
            let xs = random_batch(&mut rng, 6, in_dim);
            let rel = gradient_check(&net, &xs, &xs, sparse, 1e-4, GRADIENT_CHECK_EPS).unwrap();
            worst = worst.max(rel);
        }

        // The full 14 -> 16 -> 4 -> 2 classifier under softmax cross-entropy.
        let net = vec![
            DenseLayer::init(14, 16, Activation::Sigmoid, &mut rng),
            DenseLayer::init(16, 4, Activation::Sigmoid, &mut rng),
            DenseLayer::init(4, 2, Activation::Softmax, &mut rng),
        ];
        let xs = random_batch(&mut rng, 6, 14);
        let ts: Vec<Vec<f64>> = (0..6)
            .map(|_| {
                if rng.gen_bool(0.5) {
                    vec![1.0, 0.0]
                } else {
                    vec![0.0, 1.0]
                }
            })
            .collect();
        let rel = gradient_check(&net, &xs, &ts, LossSpec::CrossEntropy, 1e-4, GRADIENT_CHECK_EPS)
            .unwrap();
        worst = worst.max(rel);
    }
    verdict(
        "gradient-correctness",
        worst < 1e-6,
        &format!("max relative error {worst:.3e} (limit 1e-6)"),
    );
}

#[test]
fn a2_sparsity_control() {
    let (subjects, raw) = generate_cohort(&CohortSpec::default()).unwrap();
    let (features, _) = trials_to_features(&subjects, &raw).unwrap();
    let standardizer = Standardizer::fit(&features).unwrap();
    let matrix = standardizer.apply_matrix(&features);

    let cfg = default_stack_configs(&[16], 0.10, 0.25, 7)[0].clone();
    let ae = train_sparse_autoencoder(&matrix, &cfg).unwrap();
    let mean_act = mean_hidden_activation(&ae, &matrix).unwrap();
    verdict(
        "sparsity-control",
        (mean_act - 0.10).abs() < 0.03,
        &format!("mean hidden activation {mean_act:.4} (target 0.10 +/- 0.03)"),
    );
}

// Event-trace reference classifier: re-derives each fixation's class from
// the cleaned stream alone, with no shared precomputation.
fn oracle_class(cleaned: &[Fixation], i: usize) -> FixationClass {
    let w = cleaned[i].word_index;
    let first = cleaned.iter().position(|f| f.word_index == w).unwrap();
    let passed_before_first = cleaned[..first].iter().any(|f| f.word_index > w);
    if passed_before_first {
        let total = cleaned.iter().filter(|f| f.word_index == w).count();
        return if total == 1 {
            FixationClass::Unique
        } else {
            FixationClass::Refixation
        };
    }
    if i == first {
        return FixationClass::FirstPass;
    }
    if cleaned[first..=i].iter().all(|f| f.word_index == w) {
        FixationClass::Multiple
    } else {
        FixationClass::Refixation
    }
}

#[test]
fn a3_fixation_classification_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut identity_holds = true;
    for trial in 0..10_000usize {
        let wc = rng.gen_range(5..=12usize);
        let meta = SentenceMeta::new("s", wc, SentenceType::LowPredictable).unwrap();
        let n = rng.gen_range(3..=18usize);
        let fixations: Vec<Fixation> = (0..n)
            .map(|seq| {
                let w = rng.gen_range(0..wc);
                Fixation::new(
                    format!("t{trial}"),
                    w,
                    w as f64 * 6.0 + rng.gen_range(0.0..6.0),
                    rng.gen_range(30.0..800.0),
                    seq,
                    rng.gen_bool(0.05),
                )
                .unwrap()
            })
            .collect();
        let cleaned = clean_fixations(&fixations, &meta).unwrap();
        let classified = classify_fixations(&cleaned, &meta, "subj").unwrap();
        for (i, (f, class)) in classified.fixations.iter().enumerate() {
            let expected = oracle_class(&cleaned, i);
            assert_eq!(
                *class, expected,
                "trial {trial}, fixation {i} (word {}): got {class:?}, oracle {expected:?}",
                f.word_index
            );
        }
        let ntf = classified.fixations.len();
        let by_class: usize = [
            FixationClass::FirstPass,
            FixationClass::Multiple,
            FixationClass::Refixation,
            FixationClass::Unique,
        ]
        .iter()
        .map(|&c| classified.count(c))
        .sum();
        identity_holds &= ntf == by_class;
    }
    verdict(
        "fixation-classification-oracle",
        identity_holds,
        "10000 random trials match the event-trace oracle; ntf = fpp + ntm + rf + nfu on all",
    );
}

fn random_feature_row(rng: &mut ChaCha8Rng, idx: usize, label: u8) -> TrialFeatureVector {
    // Occasional wild values so both filters actually see outliers.
    let wild = |scale: f64, rng: &mut ChaCha8Rng| {
        let v: f64 = rng.gen_range(0.0..scale);
        if rng.gen_bool(0.06) {
            v * rng.gen_range(3.0..8.0)
        } else {
            v
        }
    };
    TrialFeatureVector {
        nw: rng.gen_range(5..15usize),
        gaze: wild(400.0, rng),
        sd_gaze: wild(120.0, rng),
        as_: wild(12.0, rng),
        sd_as: wild(5.0, rng),
        ntf: rng.gen_range(2..20usize),
        ntm: rng.gen_range(0..6usize),
        dfp: wild(300.0, rng),
        sd_dfp: wild(90.0, rng),
        fpp: rng.gen_range(1..12usize),
        rf: rng.gen_range(0..6usize),
        nfu: rng.gen_range(0..3usize),
        dfu: wild(300.0, rng),
        sd_dfu: wild(60.0, rng),
        subject_id: format!("s{}", idx % 7),
        trial_id: format!("t{idx}"),
        sentence_type: SentenceType::Proverb,
        label,
    }
}

// Reference filter: per label group, z-score each feature against the
// group's mean and sample SD; any |z| > 2 marks the trial for removal.
fn zscore_dropped(trials: &[TrialFeatureVector]) -> BTreeSet<String> {
    let mut dropped = BTreeSet::new();
    for label in [0u8, 1u8] {
        let rows: Vec<&TrialFeatureVector> = trials.iter().filter(|t| t.label == label).collect();
        if rows.len() < 2 {
            continue;
        }
        for j in 0..N_FEATURES {
            let col: Vec<f64> = rows.iter().map(|t| t.to_array()[j]).collect();
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let var =
                col.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (col.len() - 1) as f64;
            let sd = var.sqrt();
            for t in &rows {
                if (t.to_array()[j] - m).abs() > 2.0 * sd {
                    dropped.insert(t.trial_id.clone());
                }
            }
        }
    }
    dropped
}

#[test]
fn a4_outlier_policy_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for cohort in 0..1_000usize {
        let n0 = rng.gen_range(2..30usize);
        let n1 = rng.gen_range(2..30usize);
        let trials: Vec<TrialFeatureVector> = (0..n0 + n1)
            .map(|i| random_feature_row(&mut rng, i, (i >= n0) as u8))
            .collect();
        let outcome = filter_outliers(&trials).unwrap();
        let got: BTreeSet<String> = outcome.dropped.iter().map(|t| t.trial_id.clone()).collect();
        let expected = zscore_dropped(&trials);
        assert_eq!(got, expected, "cohort {cohort} disagrees with z-score oracle");
    }

    let (subjects, raw) = generate_cohort(&CohortSpec::default()).unwrap();
    let (features, _) = trials_to_features(&subjects, &raw).unwrap();
    let frac = filter_outliers(&features)
        .unwrap()
        .report
        .overall_drop_fraction();
    verdict(
        "outlier-policy-oracle",
        (0.05..=0.15).contains(&frac),
        &format!("1000 cohorts match z-score oracle; default cohort drop fraction {frac:.4} (band [0.05, 0.15])"),
    );
}

#[test]
fn a5_severity_arithmetic_replay() {
    let pairs: [(f64, f64); 17] = [
        (0.97, 0.9),
        (0.95, 0.5),
        (0.49, 0.5),
        (0.95, 0.6),
        (0.96, 0.8),
        (0.94, 0.7),
        (0.87, 0.8),
        (0.51, 0.5),
        (0.90, 0.5),
        (0.84, 0.5),
        (0.91, 0.6),
        (0.58, 0.6),
        (0.75, 0.6),
        (0.76, 0.6),
        (0.47, 0.5),
        (0.40, 0.8),
        (0.84, 0.8),
    ];
    let (mean_diff, sd_diff) = severity_replay(&pairs);
    verdict(
        "severity-arithmetic-replay",
        (mean_diff - 0.19).abs() <= 0.005 && (sd_diff - 0.15).abs() <= 0.005,
        &format!("mean |difference| {mean_diff:.5} (0.19 +/- 0.005), SD {sd_diff:.5} (0.15 +/- 0.005)"),
    );
}

fn seeded_run(seed: u64, dir: PathBuf) -> RunConfig {
    let spec = CohortSpec {
        seed: seed * 1000,
        ..CohortSpec::default()
    };
    RunConfig::default_with(InputSource::Generate(spec), dir, seed)
}

#[test]
fn a6_end_to_end_synthetic() {
    let mut seeds_all_votes_correct = 0usize;
    let mut accs = Vec::new();
    for seed in 1..=5u64 {
        let dir = tempfile::tempdir().unwrap();
        let output = run_pipeline(&seeded_run(seed, dir.path().to_path_buf())).unwrap();
        let acc = output.report.confusion.overall_acc;
        accs.push(acc);
        assert!(acc >= 0.85, "seed {seed}: per-trial accuracy {acc:.4} below 0.85");
        let votes = &output.report.votes;
        assert_eq!(votes.len(), 8, "seed {seed}: expected 8 test subjects");
        if votes.iter().all(|v| v.vote == v.true_label) {
            seeds_all_votes_correct += 1;
        }
    }
    verdict(
        "end-to-end-synthetic",
        seeds_all_votes_correct >= 4,
        &format!(
            "per-trial accuracies {:?} (all >= 0.85); 8/8 subject votes on {seeds_all_votes_correct}/5 seeds (need >= 4)",
            accs.iter().map(|a| (a * 1e4).round() / 1e4).collect::<Vec<_>>()
        ),
    );
}

#[test]
fn a7_determinism() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    run_pipeline(&seeded_run(3, d1.path().to_path_buf())).unwrap();
    run_pipeline(&seeded_run(3, d2.path().to_path_buf())).unwrap();
    let mut same = true;
    for name in ["model.json", "predictions.csv"] {
        let b1 = std::fs::read(d1.path().join(name)).unwrap();
        let b2 = std::fs::read(d2.path().join(name)).unwrap();
        same &= b1 == b2;
    }
    verdict(
        "determinism",
        same,
        "two identical runs: model.json and predictions.csv byte-identical",
    );
}

#[test]
fn a8_encoding_smoothness_report() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let stage = |in_dim: usize, hid: usize, rng: &mut ChaCha8Rng| SparseAutoencoder {
        encoder: DenseLayer::init(in_dim, hid, Activation::Sigmoid, rng),
        decoder: DenseLayer::init(hid, in_dim, Activation::Linear, rng),
        config: default_stack_configs(&[hid], 0.10, 0.25, 1)[0].clone(),
        loss_trajectory: Vec::new(),
    };
    let stack = EncoderStack {
        stages: vec![stage(14, 16, &mut rng), stage(16, 4, &mut rng)],
    };

    // Six trials; the first two pairs are exact duplicates.
    let mut inputs: Vec<(String, u8, Vec<f64>)> = Vec::new();
    for i in 0..3usize {
        let row: Vec<f64> = (0..14).map(|_| rng.gen_range(-2.0..2.0)).collect();
        inputs.push((format!("t{i}a"), (i % 2) as u8, row.clone()));
        if i < 2 {
            inputs.push((format!("t{i}b"), (i % 2) as u8, row));
        }
    }
    // Radius small enough that only the duplicate pairs qualify.
    let report = encoding_smoothness(&stack, &inputs, 1e-9, 0.5).unwrap();
    let zero_distance = report.n_pairs == 2 && report.max_code_distance == Some(0.0);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("parallel.csv");
    write_parallel_coordinates_csv(&path, &report.parallel_rows).unwrap();
    let content = std::fs::read_to_string(&path).unwrap();
    let mut lines = content.lines();
    let header_cols = lines.next().unwrap().split(',').count();
    let rows_ok = lines.clone().count() == inputs.len()
        && lines.all(|l| l.split(',').count() == header_cols);
    // trial_id + label + 14 inputs + 16 stage-1 units + 4 stage-2 units.
    let cols_ok = header_cols == 2 + 14 + 16 + 4;

    verdict(
        "encoding-smoothness-report",
        zero_distance && cols_ok && rows_ok,
        &format!(
            "duplicate inputs: max code distance {:?} over {} pairs; export has {} value columns per trial (need 34)",
            report.max_code_distance,
            report.n_pairs,
            header_cols - 2
        ),
    );
}

#[test]
fn a9_corpus_transforms() {
    let n_protocols = 18usize;
    let grid: Vec<f64> = (0..1000).map(|i| i as f64 / 999.0).collect();
    let values: Vec<f64> = grid
        .iter()
        .map(|&p| logit_predictability(p, n_protocols).unwrap())
        .collect();
    let antisymmetric = grid.iter().zip(&values).all(|(&p, &v)| {
        (v + logit_predictability(1.0 - p, n_protocols).unwrap()).abs() < 1e-12
    });
    let monotone = values.windows(2).all(|w| w[1] >= w[0]);
    let log_exact = (0..=8).all(|k| log_frequency(10f64.powi(k)).unwrap() == k as f64);
    verdict(
        "corpus-transforms",
        antisymmetric && monotone && log_exact,
        &format!(
            "logit antisymmetric {antisymmetric}, monotone {monotone} over 1000-point grid; log frequency exact on powers of ten {log_exact}"
        ),
    );
}
