//! Fixation-stream cleaning and fixation-class assignment.
//!
//! Cleaning drops blink/loss events, durations shorter than 51 ms or
//! longer than 750 ms (exactly 51 and 750 are kept), and fixations on
//! the first and last word of the sentence. Classification then tags
//! each retained fixation as FirstPass, Multiple, Unique, or Refixation;
//! the four classes partition the cleaned stream.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{validate_trial_fixations, Fixation, FixationClass, SentenceMeta};

pub const MIN_DURATION_MS: f64 = 51.0;
pub const MAX_DURATION_MS: f64 = 750.0;

/// A trial's cleaned fixations, each tagged with its class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedTrial {
    pub trial_id: String,
    pub subject_id: String,
    pub sentence: SentenceMeta,
    /// In seq order.
    pub fixations: Vec<(Fixation, FixationClass)>,
    /// Span from first to last retained fixation, including their durations.
    pub reading_time_ms: f64,
}

impl ClassifiedTrial {
    pub fn count(&self, class: FixationClass) -> usize {
        self.fixations.iter().filter(|(_, c)| *c == class).count()
    }

    pub fn durations_of(&self, class: FixationClass) -> Vec<f64> {
        self.fixations
            .iter()
            .filter(|(_, c)| *c == class)
            .map(|(f, _)| f.duration_ms)
            .collect()
    }
}

/// Drops blink/loss events, out-of-window durations, and first/last-word
/// fixations. Seq order is preserved; the output may be empty.
pub fn clean_fixations(raw: &[Fixation], meta: &SentenceMeta) -> Result<Vec<Fixation>> {
    validate_trial_fixations(raw, meta)?;
    let mut sorted: Vec<Fixation> = raw.to_vec();
    sorted.sort_by_key(|f| f.seq);
    let last_word = meta.word_count - 1;
    Ok(sorted
        .into_iter()
        .filter(|f| {
            !f.is_blink_or_loss
                && f.duration_ms >= MIN_DURATION_MS
                && f.duration_ms <= MAX_DURATION_MS
                && f.word_index != 0
                && f.word_index != last_word
        })
        .collect())
}

/// Tags each cleaned fixation with its class.
///
/// Per word, the first-pass window is the maximal run of consecutive
/// fixations starting at the word's first fixation, provided the gaze had
/// not already progressed past the word (no earlier fixation on a
/// higher-indexed word). Inside that window the first fixation is
/// FirstPass and the rest are Multiple. A word first fixated after being
/// passed is Unique when it holds exactly one fixation in the whole trial,
/// otherwise all of its fixations are Refixation. Any later return to a
/// word outside its first-pass window is a Refixation.
pub fn classify_fixations(
    cleaned: &[Fixation],
    meta: &SentenceMeta,
    subject_id: impl Into<String>,
) -> Result<ClassifiedTrial> {
    validate_trial_fixations_loose(cleaned)?;
    let n = cleaned.len();
    let nw = meta.word_count;

    // Per word: index of first fixation, trial-total fixation count, and
    // whether a higher-indexed word was fixated before the first fixation.
    let mut first_idx = vec![usize::MAX; nw];
    let mut total = vec![0usize; nw];
    let mut passed_at_first = vec![false; nw];
    let mut max_word_seen: Option<usize> = None;
    for (i, f) in cleaned.iter().enumerate() {
        let w = f.word_index;
        if w >= nw {
            return Err(Error::invalid(
                "Fixation.word_index",
                format!("index {w} out of range for {nw}-word sentence"),
            ));
        }
        if first_idx[w] == usize::MAX {
            first_idx[w] = i;
            passed_at_first[w] = matches!(max_word_seen, Some(m) if m > w);
        }
        total[w] += 1;
        max_word_seen = Some(max_word_seen.map_or(w, |m| m.max(w)));
    }

    // First-pass window end (exclusive) per word: consecutive same-word run
    // starting at first_idx.
    let mut window_end = vec![0usize; nw];
    for w in 0..nw {
        if first_idx[w] == usize::MAX || passed_at_first[w] {
            continue;
        }
        let mut end = first_idx[w];
        while end < n && cleaned[end].word_index == w {
            end += 1;
        }
        window_end[w] = end;
    }

    let mut tagged = Vec::with_capacity(n);
    for (i, f) in cleaned.iter().enumerate() {
        let w = f.word_index;
        let class = if passed_at_first[w] {
            // Skipped in first pass: Unique only when fixated exactly once.
            if total[w] == 1 {
                FixationClass::Unique
            } else {
                FixationClass::Refixation
            }
        } else if i == first_idx[w] {
            FixationClass::FirstPass
        } else if i < window_end[w] {
            FixationClass::Multiple
        } else {
            FixationClass::Refixation
        };
        tagged.push((f.clone(), class));
    }

    // Without inter-fixation timestamps the span from first to last retained
    // fixation reduces to the summed durations of the retained fixations.
    let reading_time_ms = tagged.iter().map(|(f, _)| f.duration_ms).sum::<f64>();
    let trial_id = tagged
        .first()
        .map(|(f, _)| f.trial_id.clone())
        .unwrap_or_default();

    Ok(ClassifiedTrial {
        trial_id,
        subject_id: subject_id.into(),
        sentence: meta.clone(),
        fixations: tagged,
        reading_time_ms,
    })
}

// Cleaned streams are sub-sequences of a trial, so seq values are ordered
// but no longer contiguous; only ordering and id consistency are checked.
fn validate_trial_fixations_loose(fixations: &[Fixation]) -> Result<()> {
    for pair in fixations.windows(2) {
        if pair[1].seq <= pair[0].seq {
            return Err(Error::invalid(
                "cleaned fixations",
                "must be in strictly increasing seq order",
            ));
        }
        if pair[1].trial_id != pair[0].trial_id {
            return Err(Error::invalid("cleaned fixations", "mixed trial ids"));
        }
    }
    Ok(())
}

/// Absolute char-position differences between consecutive retained
/// fixations; empty when the trial has fewer than two fixations.
pub fn saccade_amplitudes(trial: &ClassifiedTrial) -> Vec<f64> {
    trial
        .fixations
        .windows(2)
        .map(|pair| (pair[1].0.char_position - pair[0].0.char_position).abs())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SentenceType;

    fn meta(nw: usize) -> SentenceMeta {
        SentenceMeta::new("s1", nw, SentenceType::LowPredictable).unwrap()
    }

    fn fix(word: usize, dur: f64, seq: usize) -> Fixation {
        Fixation::new("t1", word, word as f64 * 6.0, dur, seq, false).unwrap()
    }

    fn fixes_on_words(words: &[usize]) -> Vec<Fixation> {
        words
            .iter()
            .enumerate()
            .map(|(i, &w)| fix(w, 200.0, i))
            .collect()
    }

    fn classes(words: &[usize], nw: usize) -> Vec<FixationClass> {
        let trial = classify_fixations(&fixes_on_words(words), &meta(nw), "subj").unwrap();
        trial.fixations.into_iter().map(|(_, c)| c).collect()
    }

    #[test]
    fn clean_drops_short_durations() {
        let raw = vec![fix(3, 50.9, 0)];
        assert!(clean_fixations(&raw, &meta(8)).unwrap().is_empty());
    }

    #[test]
    fn clean_keeps_exact_bounds() {
        let raw = vec![fix(3, 51.0, 0), fix(4, 750.0, 1), fix(5, 750.1, 2)];
        let out = clean_fixations(&raw, &meta(8)).unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].duration_ms, 51.0);
        assert_eq!(out[1].duration_ms, 750.0);
    }

    #[test]
    fn clean_drops_first_and_last_word() {
        let raw = vec![fix(0, 200.0, 0), fix(3, 200.0, 1), fix(7, 200.0, 2)];
        let out = clean_fixations(&raw, &meta(8)).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].word_index, 3);
    }

    #[test]
    fn clean_drops_blinks() {
        let mut f = fix(3, 200.0, 0);
        f.is_blink_or_loss = true;
        assert!(clean_fixations(&[f], &meta(8)).unwrap().is_empty());
    }

    #[test]
    fn clean_rejects_mixed_trial_ids() {
        let mut raw = vec![fix(3, 200.0, 0), fix(4, 200.0, 1)];
        raw[1].trial_id = "other".into();
        assert!(clean_fixations(&raw, &meta(8)).is_err());
    }

    #[test]
    fn left_to_right_scan_is_all_first_pass() {
        let c = classes(&[1, 2, 3, 4], 6);
        assert!(c.iter().all(|&c| c == FixationClass::FirstPass));
    }

    #[test]
    fn skipped_word_single_return_is_unique() {
        // words [1, 3, 3, 2]: word1 FP; word3 FP then Multiple; word2 Unique.
        let c = classes(&[1, 3, 3, 2], 6);
        assert_eq!(
            c,
            vec![
                FixationClass::FirstPass,
                FixationClass::FirstPass,
                FixationClass::Multiple,
                FixationClass::Unique,
            ]
        );
    }

    #[test]
    fn regression_to_fixated_word_is_refixation() {
        let c = classes(&[1, 2, 1], 6);
        assert_eq!(
            c,
            vec![
                FixationClass::FirstPass,
                FixationClass::FirstPass,
                FixationClass::Refixation,
            ]
        );
    }

    #[test]
    fn skipped_word_fixated_twice_is_all_refixation() {
        // word2 skipped in first pass, then fixated twice.
        let c = classes(&[1, 3, 2, 4, 2], 6);
        assert_eq!(c[2], FixationClass::Refixation);
        assert_eq!(c[4], FixationClass::Refixation);
    }

    #[test]
    fn later_same_word_run_outside_window_is_refixation() {
        // Return run to word1 after leaving: both returns are refixations.
        let c = classes(&[1, 2, 1, 1], 6);
        assert_eq!(c[2], FixationClass::Refixation);
        assert_eq!(c[3], FixationClass::Refixation);
    }

    #[test]
    fn empty_input_yields_empty_trial() {
        let trial = classify_fixations(&[], &meta(6), "subj").unwrap();
        assert!(trial.fixations.is_empty());
        assert_eq!(trial.reading_time_ms, 0.0);
    }

    #[test]
    fn saccade_amplitudes_absolute_diffs() {
        let mut fs = fixes_on_words(&[1, 2, 1]);
        fs[0].char_position = 10.0;
        fs[1].char_position = 17.0;
        fs[2].char_position = 13.0;
        let trial = classify_fixations(&fs, &meta(6), "subj").unwrap();
        assert_eq!(saccade_amplitudes(&trial), vec![7.0, 4.0]);
    }

    #[test]
    fn saccade_amplitudes_single_fixation_empty() {
        let trial = classify_fixations(&fixes_on_words(&[2]), &meta(6), "subj").unwrap();
        assert!(saccade_amplitudes(&trial).is_empty());
    }

    #[test]
    fn class_partition_identity() {
        let words = [1, 3, 3, 2, 4, 1, 5, 5, 2];
        let trial = classify_fixations(&fixes_on_words(&words), &meta(8), "subj").unwrap();
        let sum = trial.count(FixationClass::FirstPass)
            + trial.count(FixationClass::Unique)
            + trial.count(FixationClass::Multiple)
            + trial.count(FixationClass::Refixation);
        assert_eq!(sum, words.len());
    }
}
