//! Trial-wise feature extraction and z-score standardization.
//!
//! A classified trial collapses into 14 descriptors: sentence length,
//! gaze-duration moments, saccade-amplitude moments, fixation-class
//! counts, and class-duration moments. Identity fields (subject, trial,
//! sentence type, label) ride along but never enter the model input.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::preprocess::{saccade_amplitudes, ClassifiedTrial};
use crate::types::{FixationClass, SentenceType};

pub const N_FEATURES: usize = 14;

/// Column order of the model-input matrix; fixed everywhere.
pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "nw", "gaze", "sd_gaze", "as", "sd_as", "ntf", "ntm", "dfp", "sd_dfp", "fpp", "rf", "nfu",
    "dfu", "sd_dfu",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFeatureVector {
    /// Number of words in the sentence.
    pub nw: usize,
    /// Mean over fixated words of per-word summed fixation durations (ms).
    pub gaze: f64,
    pub sd_gaze: f64,
    /// Mean saccade amplitude (chars).
    pub as_: f64,
    pub sd_as: f64,
    /// Total retained fixations.
    pub ntf: usize,
    /// Multiple fixations.
    pub ntm: usize,
    /// Mean first-pass fixation duration (ms).
    pub dfp: f64,
    pub sd_dfp: f64,
    /// First-pass fixation count.
    pub fpp: usize,
    /// Refixation count.
    pub rf: usize,
    /// Unique fixation count.
    pub nfu: usize,
    /// Mean unique-fixation duration (ms); 0 when the class is empty.
    pub dfu: f64,
    pub sd_dfu: f64,

    // Identity sidecar, excluded from model input.
    pub subject_id: String,
    pub trial_id: String,
    pub sentence_type: SentenceType,
    pub label: u8,
}

impl TrialFeatureVector {
    /// Model-input values in `FEATURE_NAMES` order; sidecar dropped.
    pub fn to_array(&self) -> [f64; N_FEATURES] {
        [
            self.nw as f64,
            self.gaze,
            self.sd_gaze,
            self.as_,
            self.sd_as,
            self.ntf as f64,
            self.ntm as f64,
            self.dfp,
            self.sd_dfp,
            self.fpp as f64,
            self.rf as f64,
            self.nfu as f64,
            self.dfu,
            self.sd_dfu,
        ]
    }
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

/// Sample standard deviation (n-1); fewer than two values give 0.
pub fn sample_sd(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Collapses a classified trial into its 14-descriptor vector.
pub fn extract_trial_features(trial: &ClassifiedTrial, label: u8) -> Result<TrialFeatureVector> {
    if trial.fixations.len() < 2 {
        return Err(Error::TrialTooSparse {
            trial_id: trial.trial_id.clone(),
            n_fixations: trial.fixations.len(),
        });
    }

    // Gaze duration: per fixated word, the sum of its fixation durations.
    let mut per_word: BTreeMap<usize, f64> = BTreeMap::new();
    for (f, _) in &trial.fixations {
        *per_word.entry(f.word_index).or_insert(0.0) += f.duration_ms;
    }
    let gazes: Vec<f64> = per_word.values().copied().collect();

    let amps = saccade_amplitudes(trial);
    let dfp_durs = trial.durations_of(FixationClass::FirstPass);
    let dfu_durs = trial.durations_of(FixationClass::Unique);

    Ok(TrialFeatureVector {
        nw: trial.sentence.word_count,
        gaze: mean(&gazes),
        sd_gaze: sample_sd(&gazes),
        as_: mean(&amps),
        sd_as: sample_sd(&amps),
        ntf: trial.fixations.len(),
        ntm: trial.count(FixationClass::Multiple),
        dfp: mean(&dfp_durs),
        sd_dfp: sample_sd(&dfp_durs),
        fpp: dfp_durs.len(),
        rf: trial.count(FixationClass::Refixation),
        nfu: dfu_durs.len(),
        dfu: mean(&dfu_durs),
        sd_dfu: sample_sd(&dfu_durs),
        subject_id: trial.subject_id.clone(),
        trial_id: trial.trial_id.clone(),
        sentence_type: trial.sentence.sentence_type,
        label,
    })
}

/// Per-feature affine transform fitted on the training matrix only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fits per-feature mean and sample SD; constant features get scale 1.
    pub fn fit(rows: &[TrialFeatureVector]) -> Result<Standardizer> {
        if rows.len() < 2 {
            return Err(Error::invalid(
                "Standardizer input",
                format!("need at least 2 rows, got {}", rows.len()),
            ));
        }
        let matrix: Vec<[f64; N_FEATURES]> = rows.iter().map(|r| r.to_array()).collect();
        let mut means = Vec::with_capacity(N_FEATURES);
        let mut scales = Vec::with_capacity(N_FEATURES);
        for j in 0..N_FEATURES {
            let col: Vec<f64> = matrix.iter().map(|r| r[j]).collect();
            means.push(mean(&col));
            let sd = sample_sd(&col);
            scales.push(if sd > 0.0 { sd } else { 1.0 });
        }
        Ok(Standardizer { means, scales })
    }

    /// (value - mean) / scale per feature, in `FEATURE_NAMES` order.
    pub fn apply(&self, v: &TrialFeatureVector) -> Vec<f64> {
        let raw = v.to_array();
        raw.iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn apply_matrix(&self, rows: &[TrialFeatureVector]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}
