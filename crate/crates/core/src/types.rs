//! Domain vocabulary shared by every other module.
//!
//! All types here are immutable after construction and validate their
//! invariants at the boundary; a violation is rejected, never repaired.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One eye-tracker fixation event within a trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixation {
    pub trial_id: String,
    /// 0-based index into the sentence's words.
    pub word_index: usize,
    /// Character cells from line start.
    pub char_position: f64,
    pub duration_ms: f64,
    /// Chronological order within the trial, contiguous from 0.
    pub seq: usize,
    pub is_blink_or_loss: bool,
}

impl Fixation {
    pub fn new(
        trial_id: impl Into<String>,
        word_index: usize,
        char_position: f64,
        duration_ms: f64,
        seq: usize,
        is_blink_or_loss: bool,
    ) -> Result<Self> {
        if !(duration_ms > 0.0) {
            return Err(Error::invalid(
                "Fixation.duration_ms",
                format!("must be > 0, got {duration_ms}"),
            ));
        }
        if !char_position.is_finite() {
            return Err(Error::invalid(
                "Fixation.char_position",
                format!("must be finite, got {char_position}"),
            ));
        }
        Ok(Fixation {
            trial_id: trial_id.into(),
            word_index,
            char_position,
            duration_ms,
            seq,
            is_blink_or_loss,
        })
    }
}

/// Checks the trial-level fixation invariants: one trial id, unique and
/// contiguous seq values from 0, and word indices valid for the sentence.
pub fn validate_trial_fixations(fixations: &[Fixation], meta: &SentenceMeta) -> Result<()> {
    let Some(first) = fixations.first() else {
        return Ok(());
    };
    let mut seen = vec![false; fixations.len()];
    for f in fixations {
        if f.trial_id != first.trial_id {
            return Err(Error::invalid(
                "trial fixations",
                format!("mixed trial ids '{}' and '{}'", first.trial_id, f.trial_id),
            ));
        }
        if f.seq >= fixations.len() || seen[f.seq] {
            return Err(Error::invalid(
                "Fixation.seq",
                format!("seq values must be unique and contiguous from 0, got {}", f.seq),
            ));
        }
        seen[f.seq] = true;
        if f.word_index >= meta.word_count {
            return Err(Error::invalid(
                "Fixation.word_index",
                format!(
                    "index {} out of range for {}-word sentence",
                    f.word_index, meta.word_count
                ),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SentenceType {
    LowPredictable,
    HighPredictable,
    Proverb,
}

impl SentenceType {
    pub fn as_str(&self) -> &'static str {
        match self {
            SentenceType::LowPredictable => "low",
            SentenceType::HighPredictable => "high",
            SentenceType::Proverb => "proverb",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(SentenceType::LowPredictable),
            "high" => Ok(SentenceType::HighPredictable),
            "proverb" => Ok(SentenceType::Proverb),
            other => Err(Error::invalid(
                "sentence_type",
                format!("expected low|high|proverb, got '{other}'"),
            )),
        }
    }

    pub const ALL: [SentenceType; 3] = [
        SentenceType::LowPredictable,
        SentenceType::HighPredictable,
        SentenceType::Proverb,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceMeta {
    pub sentence_id: String,
    pub word_count: usize,
    pub sentence_type: SentenceType,
}

impl SentenceMeta {
    /// Word counts outside the corpus bounds [5, 14] are accepted with a
    /// warning flag so synthetic edge-case sentences still construct.
    pub fn new(
        sentence_id: impl Into<String>,
        word_count: usize,
        sentence_type: SentenceType,
    ) -> Result<Self> {
        if word_count == 0 {
            return Err(Error::invalid("SentenceMeta.word_count", "must be > 0"));
        }
        Ok(SentenceMeta {
            sentence_id: sentence_id.into(),
            word_count,
            sentence_type,
        })
    }

    pub fn outside_corpus_bounds(&self) -> bool {
        self.word_count < 5 || self.word_count > 14
    }
}

/// Taxonomy of cleaned fixations; every cleaned fixation receives exactly one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FixationClass {
    /// First fixation on a word during its first-pass window.
    FirstPass,
    /// Single fixation on a word that was skipped in the first pass.
    Unique,
    /// 2nd..kth fixation on a word within its first-pass window.
    Multiple,
    /// Return to an already-fixated word, implying a regression.
    Refixation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Diagnosis {
    Control,
    Ad,
}

impl Diagnosis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Diagnosis::Control => "Control",
            Diagnosis::Ad => "AD",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "Control" => Ok(Diagnosis::Control),
            "AD" => Ok(Diagnosis::Ad),
            other => Err(Error::invalid(
                "diagnosis",
                format!("expected Control|AD, got '{other}'"),
            )),
        }
    }
}

/// Label encoding: Control -> 0, AD -> 1.
pub fn encode_label(diagnosis: Diagnosis) -> u8 {
    match diagnosis {
        Diagnosis::Control => 0,
        Diagnosis::Ad => 1,
    }
}

pub fn decode_label(label: u8) -> Result<Diagnosis> {
    match label {
        0 => Ok(Diagnosis::Control),
        1 => Ok(Diagnosis::Ad),
        other => Err(Error::invalid("label", format!("expected 0 or 1, got {other}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub subject_id: String,
    pub diagnosis: Diagnosis,
    /// Disease-severity score from clinicians, when available.
    pub clinician_score: Option<f64>,
}

impl Subject {
    pub fn new(
        subject_id: impl Into<String>,
        diagnosis: Diagnosis,
        clinician_score: Option<f64>,
    ) -> Result<Self> {
        if let Some(s) = clinician_score {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::invalid(
                    "Subject.clinician_score",
                    format!("must lie in [0,1], got {s}"),
                ));
            }
        }
        Ok(Subject {
            subject_id: subject_id.into(),
            diagnosis,
            clinician_score,
        })
    }
}
