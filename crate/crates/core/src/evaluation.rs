//! Evaluation battery: threshold histogram data, confusion matrix and
//! per-class accuracy, misclassification by sentence type, per-subject
//! majority voting and mean-score severity marker, and the
//! encoding-smoothness check over the trained stack.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use crate::classifier::classify_at_threshold;
use crate::error::{Error, Result};
use crate::features::{mean, FEATURE_NAMES};
use crate::sdae::EncoderStack;
use crate::types::SentenceType;

/// One evaluated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPrediction {
    pub subject_id: String,
    pub trial_id: String,
    pub sentence_type: SentenceType,
    pub label: u8,
    pub p_ad: f64,
}

/// Confusion matrix indexed [expected][predicted].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionReport {
    /// Rows: expected label (0 Control, 1 AD); columns: predicted label.
    pub confusion: [[usize; 2]; 2],
    pub overall_acc: f64,
    pub control_acc: f64,
    pub ad_acc: f64,
    pub n_trials: usize,
    pub threshold: f64,
}

/// Rounds predictions at the threshold and fills the confusion matrix.
pub fn confusion_and_accuracy(preds: &[TrialPrediction], threshold: f64) -> Result<ConfusionReport> {
    if preds.is_empty() {
        return Err(Error::invalid("predictions", "must be non-empty"));
    }
    let mut confusion = [[0usize; 2]; 2];
    for p in preds {
        let predicted = classify_at_threshold(p.p_ad, threshold) as usize;
        confusion[p.label as usize][predicted] += 1;
    }
    let n = preds.len();
    let correct = confusion[0][0] + confusion[1][1];
    let control_total = confusion[0][0] + confusion[0][1];
    let ad_total = confusion[1][0] + confusion[1][1];
    Ok(ConfusionReport {
        confusion,
        overall_acc: correct as f64 / n as f64,
        control_acc: if control_total == 0 {
            0.0
        } else {
            confusion[0][0] as f64 / control_total as f64
        },
        ad_acc: if ad_total == 0 {
            0.0
        } else {
            confusion[1][1] as f64 / ad_total as f64
        },
        n_trials: n,
        threshold,
    })
}

/// p_ad counts in equal bins over [0,1], split by true label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub n_bins: usize,
    pub control_counts: Vec<usize>,
    pub ad_counts: Vec<usize>,
}

pub fn histogram(preds: &[TrialPrediction], n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::invalid("n_bins", "must be >= 1"));
    }
    let mut control = vec![0usize; n_bins];
    let mut ad = vec![0usize; n_bins];
    for p in preds {
        let bin = ((p.p_ad * n_bins as f64) as usize).min(n_bins - 1);
        match p.label {
            0 => control[bin] += 1,
            _ => ad[bin] += 1,
        }
    }
    Ok(Histogram {
        n_bins,
        control_counts: control,
        ad_counts: ad,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectVote {
    pub subject_id: String,
    pub true_label: u8,
    pub vote: u8,
    pub ad_fraction: f64,
    pub n_trials: usize,
}

/// Majority vote per subject: strictly more than half AD-classified trials
/// -> AD; strictly fewer -> Control; exact tie -> AD.
pub fn majority_vote(preds: &[TrialPrediction], threshold: f64) -> Vec<SubjectVote> {
    let mut grouped: BTreeMap<&str, (u8, usize, usize)> = BTreeMap::new();
    for p in preds {
        let entry = grouped.entry(&p.subject_id).or_insert((p.label, 0, 0));
        entry.1 += 1;
        if classify_at_threshold(p.p_ad, threshold) == 1 {
            entry.2 += 1;
        }
    }
    grouped
        .into_iter()
        .map(|(id, (label, total, ad_votes))| {
            let frac = ad_votes as f64 / total as f64;
            SubjectVote {
                subject_id: id.to_string(),
                true_label: label,
                vote: if 2 * ad_votes >= total { 1 } else { 0 },
                ad_fraction: frac,
                n_trials: total,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityRow {
    pub subject_id: String,
    pub mean_p: f64,
    pub sd_p: f64,
    pub clinician_score: Option<f64>,
    pub abs_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeverityComparison {
    pub rows: Vec<SeverityRow>,
    /// Mean of |mean_p - score| over scored subjects.
    pub mean_difference: Option<f64>,
    /// Population SD of the differences; the grand summary deliberately
    /// uses the population convention, not the sample one.
    pub sd_difference: Option<f64>,
}

pub fn population_sd(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

/// Per-subject mean/SD of p_ad compared against clinician scores where
/// present. `scores` maps subject_id to a severity score in [0,1].
pub fn severity_marker(
    preds: &[TrialPrediction],
    scores: &BTreeMap<String, f64>,
) -> Result<SeverityComparison> {
    for (id, s) in scores {
        if !(0.0..=1.0).contains(s) {
            return Err(Error::invalid(
                "clinician score",
                format!("subject {id}: must lie in [0,1], got {s}"),
            ));
        }
    }
    let mut grouped: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for p in preds {
        grouped.entry(&p.subject_id).or_default().push(p.p_ad);
    }
    let rows: Vec<SeverityRow> = grouped
        .into_iter()
        .map(|(id, ps)| {
            let mean_p = mean(&ps);
            let score = scores.get(id).copied();
            SeverityRow {
                subject_id: id.to_string(),
                mean_p,
                sd_p: population_sd(&ps),
                clinician_score: score,
                abs_difference: score.map(|s| (mean_p - s).abs()),
            }
        })
        .collect();
    let diffs: Vec<f64> = rows.iter().filter_map(|r| r.abs_difference).collect();
    Ok(SeverityComparison {
        mean_difference: (!diffs.is_empty()).then(|| mean(&diffs)),
        sd_difference: (!diffs.is_empty()).then(|| population_sd(&diffs)),
        rows,
    })
}

/// Arithmetic replay of already-aggregated (mean_p, score) pairs.
pub fn severity_replay(pairs: &[(f64, f64)]) -> (f64, f64) {
    let diffs: Vec<f64> = pairs.iter().map(|(m, s)| (m - s).abs()).collect();
    (mean(&diffs), population_sd(&diffs))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeMiscounts {
    /// Per (sentence_type, true label): (total trials, misclassified).
    pub cells: BTreeMap<SentenceType, BTreeMap<u8, (usize, usize)>>,
}

pub fn misclassification_by_type(preds: &[TrialPrediction], threshold: f64) -> TypeMiscounts {
    let mut cells: BTreeMap<SentenceType, BTreeMap<u8, (usize, usize)>> = BTreeMap::new();
    for p in preds {
        let cell = cells
            .entry(p.sentence_type)
            .or_default()
            .entry(p.label)
            .or_insert((0, 0));
        cell.0 += 1;
        if classify_at_threshold(p.p_ad, threshold) != p.label {
            cell.1 += 1;
        }
    }
    TypeMiscounts { cells }
}

/// Per-trial parallel-coordinates row: standardized input plus the code
/// after every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelRow {
    pub trial_id: String,
    pub label: u8,
    pub input: Vec<f64>,
    pub stage_codes: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessReport {
    pub input_radius: f64,
    pub code_radius: f64,
    pub n_pairs: usize,
    /// None when no pair of inputs lies within input_radius.
    pub max_code_distance: Option<f64>,
    pub fraction_exceeding: Option<f64>,
    pub parallel_rows: Vec<ParallelRow>,
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// For every input pair closer than `input_radius`, measures the distance
/// between final-stage encodings; reports the worst pair and the fraction
/// exceeding `code_radius`, plus per-stage parallel-coordinates data.
pub fn encoding_smoothness(
    stack: &EncoderStack,
    standardized: &[(String, u8, Vec<f64>)],
    input_radius: f64,
    code_radius: f64,
) -> Result<SmoothnessReport> {
    if standardized.len() < 2 {
        return Err(Error::invalid("smoothness input", "need at least 2 trials"));
    }
    if !(input_radius > 0.0) || !(code_radius > 0.0) {
        return Err(Error::invalid("smoothness radii", "must be > 0"));
    }
    let mut parallel_rows = Vec::with_capacity(standardized.len());
    let mut codes = Vec::with_capacity(standardized.len());
    for (trial_id, label, input) in standardized {
        let stage_codes = stack.encode_stages(input)?;
        codes.push(stage_codes.last().unwrap().clone());
        parallel_rows.push(ParallelRow {
            trial_id: trial_id.clone(),
            label: *label,
            input: input.clone(),
            stage_codes,
        });
    }

    let mut n_pairs = 0usize;
    let mut n_exceeding = 0usize;
    let mut max_code_distance: Option<f64> = None;
    for i in 0..standardized.len() {
        for j in (i + 1)..standardized.len() {
            if euclidean(&standardized[i].2, &standardized[j].2) <= input_radius {
                n_pairs += 1;
                let d = euclidean(&codes[i], &codes[j]);
                if d > code_radius {
                    n_exceeding += 1;
                }
                max_code_distance = Some(max_code_distance.map_or(d, |m: f64| m.max(d)));
            }
        }
    }
    Ok(SmoothnessReport {
        input_radius,
        code_radius,
        n_pairs,
        max_code_distance,
        fraction_exceeding: (n_pairs > 0).then(|| n_exceeding as f64 / n_pairs as f64),
        parallel_rows,
    })
}

/// Percentile of the pairwise Euclidean input distances (q in [0,1]);
/// used to pick a data-driven input radius.
pub fn pairwise_distance_percentile(inputs: &[Vec<f64>], q: f64) -> Option<f64> {
    let mut dists = Vec::new();
    for i in 0..inputs.len() {
        for j in (i + 1)..inputs.len() {
            dists.push(euclidean(&inputs[i], &inputs[j]));
        }
    }
    if dists.is_empty() {
        return None;
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((dists.len() - 1) as f64 * q).round() as usize;
    Some(dists[idx])
}

/// Full evaluation document, serialized as JSON for machines and rendered
/// as a plain-text summary for humans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub confusion: ConfusionReport,
    pub histogram: Histogram,
    pub per_type: TypeMiscounts,
    pub votes: Vec<SubjectVote>,
    pub severity: SeverityComparison,
}

pub fn evaluate(
    preds: &[TrialPrediction],
    threshold: f64,
    n_bins: usize,
    scores: &BTreeMap<String, f64>,
) -> Result<EvaluationReport> {
    Ok(EvaluationReport {
        confusion: confusion_and_accuracy(preds, threshold)?,
        histogram: histogram(preds, n_bins)?,
        per_type: misclassification_by_type(preds, threshold),
        votes: majority_vote(preds, threshold),
        severity: severity_marker(preds, scores)?,
    })
}

impl EvaluationReport {
    pub fn text_summary(&self) -> String {
        let mut s = String::new();
        let c = &self.confusion;
        s.push_str(&format!(
            "trials: {}  threshold: {}\n\
             confusion (expected x predicted):\n\
             \x20 Control: [{}, {}]\n\
             \x20 AD:      [{}, {}]\n\
             overall accuracy: {:.4}\n\
             control accuracy: {:.4}\n\
             ad accuracy:      {:.4}\n",
            c.n_trials,
            c.threshold,
            c.confusion[0][0],
            c.confusion[0][1],
            c.confusion[1][0],
            c.confusion[1][1],
            c.overall_acc,
            c.control_acc,
            c.ad_acc,
        ));
        s.push_str("misclassified by sentence type (type/label: wrong/total):\n");
        for (ty, by_label) in &self.per_type.cells {
            for (label, (total, wrong)) in by_label {
                s.push_str(&format!("  {}/{}: {}/{}\n", ty.as_str(), label, wrong, total));
            }
        }
        s.push_str("subject votes:\n");
        for v in &self.votes {
            s.push_str(&format!(
                "  {}: vote {} (true {}), {:.2} AD over {} trials\n",
                v.subject_id, v.vote, v.true_label, v.ad_fraction, v.n_trials
            ));
        }
        if let (Some(m), Some(sd)) = (self.severity.mean_difference, self.severity.sd_difference) {
            s.push_str(&format!("severity marker: mean |diff| {m:.4}, SD {sd:.4}\n"));
        }
        s
    }
}

pub fn write_predictions_csv(path: &Path, preds: &[TrialPrediction]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["subject_id", "trial_id", "sentence_type", "label", "p_ad"])?;
    for p in preds {
        w.write_record([
            p.subject_id.as_str(),
            p.trial_id.as_str(),
            p.sentence_type.as_str(),
            &p.label.to_string(),
            &format!("{:.6}", p.p_ad),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_histogram_csv(path: &Path, h: &Histogram) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_low", "bin_high", "control", "ad"])?;
    for i in 0..h.n_bins {
        let lo = i as f64 / h.n_bins as f64;
        let hi = (i + 1) as f64 / h.n_bins as f64;
        w.write_record([
            format!("{lo:.4}"),
            format!("{hi:.4}"),
            h.control_counts[i].to_string(),
            h.ad_counts[i].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_per_type_csv(path: &Path, t: &TypeMiscounts) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sentence_type", "label", "total", "misclassified"])?;
    for (ty, by_label) in &t.cells {
        for (label, (total, wrong)) in by_label {
            w.write_record([
                ty.as_str().to_string(),
                label.to_string(),
                total.to_string(),
                wrong.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per trial; one column per input field and per code unit.
pub fn write_parallel_coordinates_csv(path: &Path, rows: &[ParallelRow]) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    let mut header: Vec<String> = vec!["trial_id".into(), "label".into()];
    header.extend(FEATURE_NAMES.iter().map(|n| format!("in_{n}")));
    if let Some(first) = rows.first() {
        for (stage, code) in first.stage_codes.iter().enumerate() {
            for unit in 0..code.len() {
                header.push(format!("s{}_u{}", stage + 1, unit));
            }
        }
    }
    writeln!(f, "{}", header.join(","))?;
    for r in rows {
        let mut record = vec![r.trial_id.clone(), r.label.to_string()];
        record.extend(r.input.iter().map(|v| format!("{v:.6}")));
        for code in &r.stage_codes {
            record.extend(code.iter().map(|v| format!("{v:.6}")));
        }
        writeln!(f, "{}", record.join(","))?;
    }
    Ok(())
}
