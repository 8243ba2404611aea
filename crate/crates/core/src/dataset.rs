//! Fixation CSV ingestion, 2-SD outlier dropout per condition group, and
//! subject-disjoint train/test splits.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::features::{mean, sample_sd, TrialFeatureVector, FEATURE_NAMES, N_FEATURES};
use crate::types::{Diagnosis, Fixation, SentenceMeta, SentenceType, Subject};

pub const FIXATION_CSV_HEADER: [&str; 11] = [
    "subject_id",
    "diagnosis",
    "trial_id",
    "sentence_id",
    "sentence_type",
    "word_count",
    "seq",
    "word_index",
    "char_position",
    "duration_ms",
    "blink",
];

/// One trial's raw fixations as ingested, before cleaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTrial {
    pub trial_id: String,
    pub subject_id: String,
    pub sentence: SentenceMeta,
    pub fixations: Vec<Fixation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Ingested,
    Synthetic,
}

/// Subjects plus their extracted trial feature vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub subjects: Vec<Subject>,
    pub trials: Vec<TrialFeatureVector>,
    pub provenance: Provenance,
}

impl Cohort {
    pub fn new(
        subjects: Vec<Subject>,
        trials: Vec<TrialFeatureVector>,
        provenance: Provenance,
    ) -> Result<Self> {
        for t in &trials {
            if !subjects.iter().any(|s| s.subject_id == t.subject_id) {
                return Err(Error::invalid(
                    "Cohort",
                    format!("trial {} references unknown subject {}", t.trial_id, t.subject_id),
                ));
            }
        }
        for s in &subjects {
            if !trials.iter().any(|t| t.subject_id == s.subject_id) {
                return Err(Error::invalid(
                    "Cohort",
                    format!("subject {} has no trials", s.subject_id),
                ));
            }
        }
        Ok(Cohort {
            subjects,
            trials,
            provenance,
        })
    }

    pub fn subject_ids(&self) -> Vec<String> {
        self.subjects.iter().map(|s| s.subject_id.clone()).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub test_controls: usize,
    pub test_ad: usize,
    pub seed: u64,
}

/// Parses the fixation CSV. Rows are grouped by (subject_id, trial_id),
/// fixations ordered by seq, and subjects deduplicated; a subject id with
/// two different diagnoses is a parse error naming the subject.
pub fn load_fixation_csv(path: &Path) -> Result<(Vec<Subject>, Vec<RawTrial>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != FIXATION_CSV_HEADER {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header {:?}, got {:?}", FIXATION_CSV_HEADER, headers),
        });
    }

    let mut subjects: BTreeMap<String, Diagnosis> = BTreeMap::new();
    // Keyed by (subject_id, trial_id); insertion order preserved separately.
    let mut trials: BTreeMap<(String, String), RawTrial> = BTreeMap::new();
    let mut trial_order: Vec<(String, String)> = Vec::new();

    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        if record.len() != FIXATION_CSV_HEADER.len() {
            return Err(Error::Parse {
                line,
                msg: format!("expected {} fields, got {}", FIXATION_CSV_HEADER.len(), record.len()),
            });
        }
        let get = |idx: usize| record.get(idx).unwrap();
        let parse_f64 = |idx: usize| -> Result<f64> {
            get(idx).parse().map_err(|_| Error::Parse {
                line,
                msg: format!("non-numeric '{}' in column {}", get(idx), FIXATION_CSV_HEADER[idx]),
            })
        };
        let parse_usize = |idx: usize| -> Result<usize> {
            get(idx).parse().map_err(|_| Error::Parse {
                line,
                msg: format!("non-integer '{}' in column {}", get(idx), FIXATION_CSV_HEADER[idx]),
            })
        };

        let subject_id = get(0).to_string();
        let diagnosis = Diagnosis::parse(get(1)).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        if let Some(&prev) = subjects.get(&subject_id) {
            if prev != diagnosis {
                return Err(Error::Parse {
                    line,
                    msg: format!(
                        "subject '{subject_id}' has inconsistent diagnosis: {} then {}",
                        prev.as_str(),
                        diagnosis.as_str()
                    ),
                });
            }
        } else {
            subjects.insert(subject_id.clone(), diagnosis);
        }

        let trial_id = get(2).to_string();
        let sentence_id = get(3).to_string();
        let sentence_type = SentenceType::parse(get(4)).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        let word_count = parse_usize(5)?;
        let seq = parse_usize(6)?;
        let word_index = parse_usize(7)?;
        let char_position = parse_f64(8)?;
        let duration_ms = parse_f64(9)?;
        let blink = match get(10) {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Parse {
                    line,
                    msg: format!("blink must be 0 or 1, got '{other}'"),
                })
            }
        };

        let fixation = Fixation::new(&trial_id, word_index, char_position, duration_ms, seq, blink)
            .map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })?;

        let key = (subject_id.clone(), trial_id.clone());
        if let Some(existing) = trials.get_mut(&key) {
            existing.fixations.push(fixation);
        } else {
            let sentence =
                SentenceMeta::new(sentence_id, word_count, sentence_type).map_err(|e| {
                    Error::Parse {
                        line,
                        msg: e.to_string(),
                    }
                })?;
            trial_order.push(key.clone());
            trials.insert(
                key,
                RawTrial {
                    trial_id,
                    subject_id,
                    sentence,
                    fixations: vec![fixation],
                },
            );
        }
    }

    let mut out_trials = Vec::with_capacity(trial_order.len());
    for key in trial_order {
        let mut t = trials.remove(&key).unwrap();
        t.fixations.sort_by_key(|f| f.seq);
        out_trials.push(t);
    }
    let out_subjects = subjects
        .into_iter()
        .map(|(id, d)| Subject::new(id, d, None))
        .collect::<Result<Vec<_>>>()?;
    Ok((out_subjects, out_trials))
}

/// Writes trials back to the fixation CSV schema.
pub fn write_fixation_csv(
    path: &Path,
    subjects: &[Subject],
    trials: &[RawTrial],
) -> Result<()> {
    let diagnosis_of = |id: &str| -> Result<Diagnosis> {
        subjects
            .iter()
            .find(|s| s.subject_id == id)
            .map(|s| s.diagnosis)
            .ok_or_else(|| Error::invalid("trial", format!("unknown subject '{id}'")))
    };
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(FIXATION_CSV_HEADER)?;
    for t in trials {
        let diag = diagnosis_of(&t.subject_id)?;
        for f in &t.fixations {
            w.write_record([
                t.subject_id.as_str(),
                diag.as_str(),
                t.trial_id.as_str(),
                t.sentence.sentence_id.as_str(),
                t.sentence.sentence_type.as_str(),
                &t.sentence.word_count.to_string(),
                &f.seq.to_string(),
                &f.word_index.to_string(),
                &format!("{:.4}", f.char_position),
                &format!("{:.4}", f.duration_ms),
                if f.is_blink_or_loss { "1" } else { "0" },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Feature CSV: Table-layout headers plus the identity sidecar.
pub fn write_feature_csv(path: &Path, trials: &[TrialFeatureVector]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = FEATURE_NAMES.to_vec();
    header.extend(["subject_id", "trial_id", "sentence_type", "label"]);
    w.write_record(&header)?;
    for t in trials {
        let mut record: Vec<String> = t.to_array().iter().map(|v| format!("{v:.6}")).collect();
        record.push(t.subject_id.clone());
        record.push(t.trial_id.clone());
        record.push(t.sentence_type.as_str().to_string());
        record.push(t.label.to_string());
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub group_sizes: BTreeMap<u8, usize>,
    pub group_dropped: BTreeMap<u8, usize>,
}

impl OutlierReport {
    pub fn drop_fraction(&self, label: u8) -> f64 {
        let n = *self.group_sizes.get(&label).unwrap_or(&0);
        let d = *self.group_dropped.get(&label).unwrap_or(&0);
        if n == 0 {
            0.0
        } else {
            d as f64 / n as f64
        }
    }

    pub fn overall_drop_fraction(&self) -> f64 {
        let n: usize = self.group_sizes.values().sum();
        let d: usize = self.group_dropped.values().sum();
        if n == 0 {
            0.0
        } else {
            d as f64 / n as f64
        }
    }
}

pub struct FilterOutcome {
    pub kept: Vec<TrialFeatureVector>,
    pub dropped: Vec<TrialFeatureVector>,
    pub report: OutlierReport,
}

/// Single-pass 2-SD dropout, label groups processed independently: a trial
/// is dropped when any feature deviates from its group mean by more than
/// twice the group's sample SD.
pub fn filter_outliers(trials: &[TrialFeatureVector]) -> Result<FilterOutcome> {
    let mut by_label: BTreeMap<u8, Vec<&TrialFeatureVector>> = BTreeMap::new();
    for t in trials {
        by_label.entry(t.label).or_default().push(t);
    }
    for (label, group) in &by_label {
        if group.len() < 2 {
            return Err(Error::invalid(
                "outlier filter",
                format!("label group {label} has {} trial(s), need at least 2", group.len()),
            ));
        }
    }

    // Per group, per feature moments.
    let mut group_stats: BTreeMap<u8, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for (&label, group) in &by_label {
        let matrix: Vec<[f64; N_FEATURES]> = group.iter().map(|t| t.to_array()).collect();
        let mut means = Vec::with_capacity(N_FEATURES);
        let mut sds = Vec::with_capacity(N_FEATURES);
        for j in 0..N_FEATURES {
            let col: Vec<f64> = matrix.iter().map(|r| r[j]).collect();
            means.push(mean(&col));
            sds.push(sample_sd(&col));
        }
        group_stats.insert(label, (means, sds));
    }

    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    let mut report = OutlierReport {
        group_sizes: by_label.iter().map(|(&l, g)| (l, g.len())).collect(),
        group_dropped: by_label.keys().map(|&l| (l, 0)).collect(),
    };
    for t in trials {
        let (means, sds) = &group_stats[&t.label];
        let values = t.to_array();
        let is_outlier = values
            .iter()
            .zip(means.iter().zip(sds))
            .any(|(v, (m, s))| (v - m).abs() > 2.0 * s);
        if is_outlier {
            *report.group_dropped.get_mut(&t.label).unwrap() += 1;
            dropped.push(t.clone());
        } else {
            kept.push(t.clone());
        }
    }
    Ok(FilterOutcome {
        kept,
        dropped,
        report,
    })
}

/// Draws test subjects uniformly without replacement per diagnosis group
/// and routes every trial to its subject's side. Deterministic per seed.
pub fn split_by_subject(cohort: &Cohort, spec: &SplitSpec) -> Result<(Cohort, Cohort)> {
    if spec.test_controls == 0 || spec.test_ad == 0 {
        return Err(Error::invalid("SplitSpec", "test counts must be >= 1"));
    }
    // Sort per group so the draw depends only on ids and the seed.
    let mut controls: Vec<&Subject> = cohort
        .subjects
        .iter()
        .filter(|s| s.diagnosis == Diagnosis::Control)
        .collect();
    let mut ads: Vec<&Subject> = cohort
        .subjects
        .iter()
        .filter(|s| s.diagnosis == Diagnosis::Ad)
        .collect();
    controls.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));
    ads.sort_by(|a, b| a.subject_id.cmp(&b.subject_id));

    if spec.test_controls > controls.len() || spec.test_ad > ads.len() {
        return Err(Error::invalid(
            "SplitSpec",
            format!(
                "requested {}+{} test subjects, have {} Control and {} AD",
                spec.test_controls,
                spec.test_ad,
                controls.len(),
                ads.len()
            ),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut test_ids: Vec<String> = Vec::new();
    for idx in sample(&mut rng, controls.len(), spec.test_controls) {
        test_ids.push(controls[idx].subject_id.clone());
    }
    for idx in sample(&mut rng, ads.len(), spec.test_ad) {
        test_ids.push(ads[idx].subject_id.clone());
    }

    let in_test = |id: &str| test_ids.iter().any(|t| t == id);
    let (test_subjects, train_subjects): (Vec<Subject>, Vec<Subject>) = cohort
        .subjects
        .iter()
        .cloned()
        .partition(|s| in_test(&s.subject_id));
    let (test_trials, train_trials): (Vec<TrialFeatureVector>, Vec<TrialFeatureVector>) = cohort
        .trials
        .iter()
        .cloned()
        .partition(|t| in_test(&t.subject_id));

    Ok((
        Cohort::new(train_subjects, train_trials, cohort.provenance)?,
        Cohort::new(test_subjects, test_trials, cohort.provenance)?,
    ))
}

/// Plain-text split manifest: the seed and the subject ids per side.
pub fn write_split_manifest(path: &Path, spec: &SplitSpec, train: &Cohort, test: &Cohort) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "seed: {}", spec.seed)?;
    writeln!(f, "train_subjects: {}", train.subject_ids().join(","))?;
    writeln!(f, "test_subjects: {}", test.subject_ids().join(","))?;
    Ok(())
}
