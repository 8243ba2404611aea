//! Seeded generator of two-population fixation cohorts.
//!
//! A testing instrument, not a cognitive model: it produces fixation
//! streams whose trial-level descriptors separate the two populations in
//! the directions reported for AD reading (longer fixations, more
//! refixations and regressions, fewer skips), with no fidelity claim
//! beyond those contrasts.
//!
//! Each trial draws two latent factors - a tempo multiplier on all
//! durations and an effort shift on the skip/refixation/regression
//! probabilities - so the 14 descriptors stay strongly correlated within
//! a trial, as they are in real reading records.
//!
//! All continuous noise is uniform (bounded), not Gaussian. Bounded noise
//! keeps every descriptor inside roughly 2 group SDs, so the downstream
//! 2-SD outlier filter removes a small fraction of trials instead of a
//! heavy lognormal tail.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::RawTrial;
use crate::error::{Error, Result};
use crate::types::{Diagnosis, Fixation, SentenceMeta, SentenceType, Subject};

/// Generative knobs for one population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationParams {
    /// Central single-fixation duration (ms).
    pub duration_median_ms: f64,
    /// Relative SD of per-fixation duration noise (uniform, bounded).
    pub duration_noise_sd: f64,
    /// Relative SD of the per-trial tempo multiplier (uniform, bounded).
    pub tempo_sd: f64,
    /// Fraction of interior words skipped in the first pass; the skip
    /// count is the rounded product, fixed given the sentence length.
    pub skip_prob: f64,
    /// Lower of the two equally likely per-trial totals of corrective
    /// events (immediate refixations plus regressions); the total is
    /// busy_events_min or busy_events_min + 1, split evenly between the
    /// two kinds with each kind capped at 2.
    pub busy_events_min: usize,
    /// Probability of revisiting one first-pass-skipped word at the end
    /// of the trial with a single fixation.
    pub unique_revisit_prob: f64,
    /// Char-position jitter around word centers (chars).
    pub saccade_jitter_sd: f64,
    /// Multiplier on all durations (reading-time inflation).
    pub duration_inflation: f64,
}

impl PopulationParams {
    pub fn default_control() -> Self {
        PopulationParams {
            duration_median_ms: 205.0,
            duration_noise_sd: 0.13,
            tempo_sd: 0.13,
            skip_prob: 0.32,
            busy_events_min: 1,
            unique_revisit_prob: 0.45,
            saccade_jitter_sd: 0.8,
            duration_inflation: 1.0,
        }
    }

    pub fn default_ad() -> Self {
        PopulationParams {
            duration_median_ms: 205.0,
            duration_noise_sd: 0.14,
            tempo_sd: 0.13,
            skip_prob: 0.12,
            busy_events_min: 2,
            unique_revisit_prob: 0.55,
            saccade_jitter_sd: 0.8,
            duration_inflation: 1.42,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("skip_prob", self.skip_prob),
            ("unique_revisit_prob", self.unique_revisit_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(
                    "PopulationParams",
                    format!("{name} must lie in [0,1], got {p}"),
                ));
            }
        }
        if self.busy_events_min > 3 {
            return Err(Error::invalid(
                "PopulationParams",
                "busy_events_min must be at most 3",
            ));
        }
        if !(self.duration_median_ms > 0.0) || !(self.duration_inflation > 0.0) {
            return Err(Error::invalid(
                "PopulationParams",
                "duration parameters must be positive",
            ));
        }
        if self.duration_noise_sd < 0.0 || self.tempo_sd < 0.0 {
            return Err(Error::invalid("PopulationParams", "SDs must be >= 0"));
        }
        if self.duration_noise_sd * 3f64.sqrt() >= 1.0 || self.tempo_sd * 3f64.sqrt() >= 1.0 {
            return Err(Error::invalid(
                "PopulationParams",
                "duration_noise_sd and tempo_sd must keep 1 + noise positive (sd * sqrt(3) < 1)",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_control: usize,
    pub n_ad: usize,
    pub trials_per_subject_mean: f64,
    pub trials_per_subject_sd: f64,
    pub control: PopulationParams,
    pub ad: PopulationParams,
    /// Probability of injecting a deliberately out-of-range duration,
    /// exercising the cleaning bounds.
    pub out_of_range_prob: f64,
    /// Probability of flagging a fixation as blink/track loss.
    pub blink_prob: f64,
    /// Fraction of AD subjects that carry a synthetic clinician score.
    pub scored_ad_fraction: f64,
    pub seed: u64,
}

impl Default for CohortSpec {
    /// Clinic-scale cohort: 39 Control + 22 AD, ~47 trials per subject.
    fn default() -> Self {
        CohortSpec {
            n_control: 39,
            n_ad: 22,
            trials_per_subject_mean: 46.88,
            trials_per_subject_sd: 10.76,
            control: PopulationParams::default_control(),
            ad: PopulationParams::default_ad(),
            out_of_range_prob: 0.005,
            blink_prob: 0.003,
            scored_ad_fraction: 0.8,
            seed: 20240901,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_control == 0 || self.n_ad == 0 {
            return Err(Error::invalid("CohortSpec", "need at least 1 subject per group"));
        }
        if !(self.trials_per_subject_mean >= 1.0) {
            return Err(Error::invalid("CohortSpec", "trials_per_subject_mean must be >= 1"));
        }
        for (name, p) in [
            ("out_of_range_prob", self.out_of_range_prob),
            ("blink_prob", self.blink_prob),
            ("scored_ad_fraction", self.scored_ad_fraction),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(
                    "CohortSpec",
                    format!("{name} must lie in [0,1], got {p}"),
                ));
            }
        }
        self.control.validate()?;
        self.ad.validate()
    }
}

const WORD_WIDTH_CHARS: f64 = 6.0;

/// Longest allowed regression, in words. Bounds saccade amplitudes.
const MAX_REGRESSION_WORDS: usize = 3;

/// Uniform noise with the given SD: half-width sd * sqrt(3).
fn uniform_sd(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd <= 0.0 {
        return 0.0;
    }
    let w = sd * 3f64.sqrt();
    rng.gen_range(-w..w)
}

/// Splits a trial's corrective-event total into (immediate refixations,
/// regressions), cycling the imbalance with sentence length so each
/// kind's count varies over {0, 1, 2} across a cohort.
fn split_busy_events(busy_total: usize, word_count: usize) -> (usize, usize) {
    match (busy_total.min(4), word_count % 3) {
        (0, _) => (0, 0),
        (1, 1) => (0, 1),
        (1, _) => (1, 0),
        (2, 0) => (1, 1),
        (2, 1) => (2, 0),
        (2, _) => (0, 2),
        (3, 1) => (1, 2),
        (3, _) => (2, 1),
        (_, _) => (2, 2),
    }
}

/// Evenly spaced values over the uniform(sd) support, shuffled; a
/// stratified stand-in for n iid draws whose sample mean and SD barely
/// vary between trials.
fn stratified_pool(n: usize, sd: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let w = sd * 3f64.sqrt();
    let mut pool: Vec<f64> = (0..n)
        .map(|i| w * ((2 * i + 1) as f64 / n as f64 - 1.0))
        .collect();
    pool.shuffle(rng);
    pool
}

/// Simulates one sentence-reading trial.
///
/// Event counts are drawn first on small bounded supports (skips from a
/// randomized-rounded fraction, refixations and regressions from
/// Binomial(2, p), at most one skipped-word revisit), then a fixation
/// sequence realizing them is laid out left to right. Counts drawn per
/// word would be near-binomial across trials, and a near-Gaussian
/// descriptor puts ~5% of trials past a 2-SD gate on that descriptor
/// alone; bounded supports keep each descriptor's own exceedance small.
fn generate_trial(
    trial_id: &str,
    sentence_index: usize,
    params: &PopulationParams,
    spec: &CohortSpec,
    rng: &mut ChaCha8Rng,
) -> RawTrial {
    let word_count = rng.gen_range(8..=14usize);
    let sentence_type = SentenceType::ALL[sentence_index % 3];
    let sentence = SentenceMeta::new(
        format!("sen{sentence_index:03}"),
        word_count,
        sentence_type,
    )
    .expect("word_count >= 5");

    let tempo = 1.0 + uniform_sd(rng, params.tempo_sd);
    // Flat per-trial scalings; each descriptor should be dominated by a
    // bounded trial factor rather than by within-trial sampling noise.
    let noise_sd = params.duration_noise_sd * (1.0 + uniform_sd(rng, 0.20));
    let jitter_sd = params.saccade_jitter_sd * (1.0 + uniform_sd(rng, 0.20));
    let word_width = WORD_WIDTH_CHARS * (1.0 + uniform_sd(rng, 0.15));

    let duration_center = params.duration_median_ms * params.duration_inflation * tempo;

    // First and last words are removed by cleaning, so every count-bearing
    // event lands on an interior word.
    let interior: Vec<usize> = (1..word_count - 1).collect();

    let n_skips = ((params.skip_prob * interior.len() as f64).round() as usize)
        .clamp(1, interior.len() - 2);
    // Longer sentences carry one more corrective event; tying the extra
    // event to sentence length keeps the total fixation count tracking
    // the flat word-count factor.
    let busy_total = params.busy_events_min + usize::from(interior.len() >= 9);
    // Sentence length decides the split; a random split would hand the
    // regression count (and the two large saccades each regression
    // brings) an independent coin-flip spread on top of every other
    // descriptor. The 3-cycle keeps each kind spread over {0, 1, 2}
    // with real mass off the mode.
    let (n_extras, n_regressions) = split_busy_events(busy_total, word_count);
    let revisit = rng.gen_bool(params.unique_revisit_prob);

    // One skip lands two words before the sentence end. It is the revisit
    // target when the revisit fires, which pins the late return saccade to
    // two words instead of a sweep across the sentence. The remaining
    // skips spread evenly over the earlier interior words (with a random
    // rotation), so no two skips touch and the saccade-gap mix barely
    // changes between trials of the same length.
    let near_end_skip = word_count - 3;
    let eligible: Vec<usize> = interior
        .iter()
        .copied()
        .filter(|&w| w < near_end_skip - 1)
        .collect();
    let mut skipped: Vec<usize> = vec![near_end_skip];
    if n_skips > 1 {
        let stride = eligible.len() as f64 / (n_skips - 1) as f64;
        let offset = rng.gen_range(0.0..stride);
        for i in 0..n_skips - 1 {
            let pos = (offset + i as f64 * stride).floor() as usize;
            skipped.push(eligible[pos.min(eligible.len() - 1)]);
        }
    }
    skipped.sort_unstable();
    skipped.dedup();
    let visited: Vec<usize> = interior
        .iter()
        .copied()
        .filter(|w| !skipped.contains(w))
        .collect();

    let mut extra_words = visited.clone();
    extra_words.shuffle(rng);
    let extra_words: Vec<usize> = extra_words[..n_extras.min(visited.len())].to_vec();

    // One block of consecutive fixations per visited word, in reading order.
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    blocks.push(vec![0]);
    for &w in &visited {
        let len = if extra_words.contains(&w) { 2 } else { 1 };
        blocks.push(vec![w; len]);
    }
    blocks.push(vec![word_count - 1]);

    // A regression to word w is inserted after a later block, with that
    // block's fixations in between, so the return reads as a revisit
    // rather than an extension of w's first-pass run.
    let mut regression_sites: Vec<(usize, usize)> = Vec::new();
    for j in 2..blocks.len() {
        let trigger = blocks[j - 1][0];
        for &w in visited.iter().rev() {
            if w < trigger && trigger - w <= MAX_REGRESSION_WORDS {
                regression_sites.push((j, w));
            }
        }
    }
    regression_sites.shuffle(rng);
    // Two-word returns first: holding the regression distance near 2
    // keeps the back-and-forth saccade pair the same size from trial to
    // trial. Each return also lands on its own word, away from the
    // doubled-fixation words, so a trial's busy-event total maps
    // one-to-one onto words with inflated gaze.
    regression_sites.sort_by_key(|&(j, w)| {
        let dist = blocks[j - 1][0] - w;
        (dist as i64 - 2).abs()
    });
    let mut after_block: Vec<Vec<usize>> = vec![Vec::new(); blocks.len() + 1];
    let mut used_targets: Vec<usize> = extra_words.clone();
    let mut n_regressions_placed = 0usize;
    for &(j, w) in &regression_sites {
        if n_regressions_placed == n_regressions {
            break;
        }
        if used_targets.contains(&w) {
            continue;
        }
        after_block[j].push(w);
        used_targets.push(w);
        n_regressions_placed += 1;
    }

    // The revisit target must sit below a visited interior word: cleaning
    // removes the sentence-final fixations, and without a retained
    // fixation past the target the late return would read as ordinary
    // first-pass progress instead of a one-off visit to a skipped word.
    let revisit_word: Option<usize> = if revisit {
        visited
            .last()
            .and_then(|&limit| skipped.iter().filter(|&&w| w < limit).next_back())
            .copied()
    } else {
        None
    };

    // Stratified duration noise for the full-length fixations that survive
    // cleaning: an evenly spaced shuffled grid, so the per-trial mean and
    // spread of the noise are nearly fixed and the duration descriptors
    // follow the bounded trial factors instead of the sampling tail of a
    // ~10-value estimate. Edge-word fixations draw outside the pool.
    let n_full = visited.len() + usize::from(revisit_word.is_some());
    let mut noise_pool = stratified_pool(n_full, noise_sd, rng);
    let n_total = blocks.iter().map(Vec::len).sum::<usize>()
        + n_regressions_placed
        + usize::from(revisit_word.is_some());
    let mut jitter_pool = stratified_pool(n_total, jitter_sd, rng);

    let mut fixations: Vec<Fixation> = Vec::new();
    let mut seq = 0usize;
    let mut emit = |word: usize,
                    duration: f64,
                    seq: &mut usize,
                    rng: &mut ChaCha8Rng,
                    fixes: &mut Vec<Fixation>| {
        let mut duration = duration;
        if rng.gen_bool(spec.out_of_range_prob) {
            duration = if rng.gen_bool(0.5) { 25.0 } else { 900.0 };
        }
        let blink = rng.gen_bool(spec.blink_prob);
        let pos = word as f64 * word_width
            + word_width / 2.0
            + jitter_pool.pop().unwrap_or(0.0);
        fixes.push(
            Fixation::new(trial_id, word, pos, duration, *seq, blink)
                .expect("generated durations are positive"),
        );
        *seq += 1;
    };

    // Returns and run extensions are brief corrective fixations on a
    // fixed short range, so a revisited word perturbs the per-word gaze
    // spread far less than a second full-length fixation would.
    let return_dur = |rng: &mut ChaCha8Rng| rng.gen_range(52.0..70.0f64);
    for (j, block) in blocks.iter().enumerate() {
        let edge = j == 0 || j == blocks.len() - 1;
        for (k, &w) in block.iter().enumerate() {
            let d = if k > 0 {
                return_dur(rng)
            } else if edge {
                duration_center * (1.0 + uniform_sd(rng, noise_sd))
            } else {
                duration_center * (1.0 + noise_pool.pop().unwrap_or(0.0))
            };
            emit(w, d, &mut seq, rng, &mut fixations);
        }
        for &w in &after_block[j + 1] {
            let d = return_dur(rng);
            emit(w, d, &mut seq, rng, &mut fixations);
        }
    }

    if let Some(w) = revisit_word {
        let d = duration_center * (1.0 + noise_pool.pop().unwrap_or(0.0));
        emit(w, d, &mut seq, rng, &mut fixations);
    }

    RawTrial {
        trial_id: trial_id.to_string(),
        subject_id: String::new(), // filled by the caller
        sentence,
        fixations,
    }
}

/// Generates the full two-population cohort of raw fixation trials.
/// Fully deterministic per seed; subjects use derived rng streams, so
/// generation could be parallelized per subject without changing output.
pub fn generate_cohort(spec: &CohortSpec) -> Result<(Vec<Subject>, Vec<RawTrial>)> {
    spec.validate()?;
    let mut subjects = Vec::with_capacity(spec.n_control + spec.n_ad);
    let mut trials = Vec::new();

    let total = spec.n_control + spec.n_ad;
    for subject_index in 0..total {
        let (diagnosis, params, subject_id) = if subject_index < spec.n_control {
            (
                Diagnosis::Control,
                &spec.control,
                format!("ctrl{subject_index:03}"),
            )
        } else {
            (
                Diagnosis::Ad,
                &spec.ad,
                format!("ad{:03}", subject_index - spec.n_control),
            )
        };

        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(subject_index as u64 + 1);

        let n_trials = Normal::new(spec.trials_per_subject_mean, spec.trials_per_subject_sd.max(1e-12))
            .map_err(|e| Error::invalid("CohortSpec", e.to_string()))?
            .sample(&mut rng)
            .round()
            .max(5.0) as usize;

        let clinician_score = if diagnosis == Diagnosis::Ad && rng.gen_bool(spec.scored_ad_fraction)
        {
            Some((rng.gen_range(0.5..0.9f64) * 10.0).round() / 10.0)
        } else {
            None
        };
        subjects.push(Subject::new(&subject_id, diagnosis, clinician_score)?);

        for t in 0..n_trials {
            let trial_id = format!("{subject_id}_t{t:03}");
            let mut trial = generate_trial(&trial_id, t, params, spec, &mut rng);
            trial.subject_id = subject_id.clone();
            trials.push(trial);
        }
    }
    Ok((subjects, trials))
}
