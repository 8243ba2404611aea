//! Corpus-descriptor transforms: log frequency and half-logit predictability.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordDescriptor {
    pub sentence_id: String,
    pub word_index: usize,
    /// Letters, 1..=14.
    pub length: usize,
    pub frequency_per_million: f64,
    /// Cloze predictability in [0,1].
    pub predictability: f64,
}

impl WordDescriptor {
    pub fn validate(&self) -> Result<()> {
        if !(1..=14).contains(&self.length) {
            return Err(Error::invalid(
                "WordDescriptor.length",
                format!("must lie in [1,14], got {}", self.length),
            ));
        }
        if self.frequency_per_million < 1.0 {
            return Err(Error::invalid(
                "WordDescriptor.frequency_per_million",
                format!("must be >= 1, got {}", self.frequency_per_million),
            ));
        }
        if !(0.0..=1.0).contains(&self.predictability) {
            return Err(Error::invalid(
                "WordDescriptor.predictability",
                format!("must lie in [0,1], got {}", self.predictability),
            ));
        }
        Ok(())
    }
}

/// Base-10 logarithm of a per-million word frequency.
pub fn log_frequency(f: f64) -> Result<f64> {
    if f < 1.0 {
        return Err(Error::invalid(
            "frequency",
            format!("must be >= 1, got {f}"),
        ));
    }
    Ok(f.log10())
}

/// Half-logit transform of cloze predictability, 0.5*ln(p/(1-p)).
///
/// p saturates into [1/(2n), (2n-1)/(2n)] before the logit, where n is
/// the number of complete predictability protocols; cloze values are
/// multiples of 1/n, so on real data only exact 0 and 1 are affected.
/// Saturation keeps the transform monotone and antisymmetric.
pub fn logit_predictability(p: f64, n_protocols: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(
            "predictability",
            format!("must lie in [0,1], got {p}"),
        ));
    }
    if n_protocols == 0 {
        return Err(Error::invalid("n_protocols", "must be >= 1"));
    }
    let n = n_protocols as f64;
    let clamped = p.clamp(1.0 / (2.0 * n), (2.0 * n - 1.0) / (2.0 * n));
    Ok(0.5 * (clamped / (1.0 - clamped)).ln())
}

/// Reads the optional corpus-metadata CSV:
/// `sentence_id,word_index,length,frequency_per_million,predictability`.
pub fn load_corpus_csv(path: &Path) -> Result<Vec<WordDescriptor>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let expected = [
        "sentence_id",
        "word_index",
        "length",
        "frequency_per_million",
        "predictability",
    ];
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            line: 1,
            msg: format!("expected header {:?}, got {:?}", expected, headers),
        });
    }
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + 2;
        let record = record?;
        let field = |idx: usize| -> Result<&str> {
            record.get(idx).ok_or(Error::Parse {
                line,
                msg: format!("missing column {idx}"),
            })
        };
        let parse_num = |idx: usize| -> Result<f64> {
            field(idx)?.parse().map_err(|_| Error::Parse {
                line,
                msg: format!("non-numeric value '{}'", record.get(idx).unwrap_or("")),
            })
        };
        let d = WordDescriptor {
            sentence_id: field(0)?.to_string(),
            word_index: parse_num(1)? as usize,
            length: parse_num(2)? as usize,
            frequency_per_million: parse_num(3)?,
            predictability: parse_num(4)?,
        };
        d.validate().map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        out.push(d);
    }
    Ok(out)
}
