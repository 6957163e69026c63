//! Records, datasets and score orientation.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One scored generation: raw proxy values plus the correctness label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub id: String,
    /// Raw proxy values keyed by score name. Unbounded, direction given by [`Orientation`].
    pub scores: BTreeMap<String, f64>,
    /// `true` when the response was graded correct (C = 1).
    pub label: bool,
    /// Natural-log token probabilities, all `<= 0`.
    pub token_logprobs: Option<Vec<f64>>,
    /// Per-step predictive entropies in nats, all `>= 0`.
    pub step_entropies: Option<Vec<f64>>,
    pub meta: Option<BTreeMap<String, String>>,
}

impl ScoreRecord {
    pub fn new(id: impl Into<String>, label: bool) -> Self {
        Self {
            id: id.into(),
            scores: BTreeMap::new(),
            label,
            token_logprobs: None,
            step_entropies: None,
            meta: None,
        }
    }

    pub fn with_score(mut self, name: impl Into<String>, value: f64) -> Self {
        self.scores.insert(name.into(), value);
        self
    }

    /// Checks the record-level invariants.
    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidRecord { id: self.id.clone(), reason };
        if self.scores.is_empty() {
            return Err(invalid("no scores".into()));
        }
        if let Some((name, v)) = self.scores.iter().find(|(_, v)| !v.is_finite()) {
            return Err(invalid(format!("score `{name}` is not finite ({v})")));
        }
        if let Some(lp) = &self.token_logprobs {
            if let Some(v) = lp.iter().find(|v| !(**v <= 0.0)) {
                return Err(invalid(format!("token log-probability {v} is not <= 0")));
            }
        }
        if let Some(h) = &self.step_entropies {
            if let Some(v) = h.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
                return Err(invalid(format!("step entropy {v} is not a finite value >= 0")));
            }
        }
        Ok(())
    }
}

/// An ordered, id-unique collection of records plus the seed all derived
/// randomness is drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    records: Vec<ScoreRecord>,
    source_tag: String,
    seed: u64,
}

impl LabeledDataset {
    pub fn new(records: Vec<ScoreRecord>, source_tag: impl Into<String>, seed: u64) -> Result<Self> {
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert(r.id.as_str()) {
                return Err(Error::DuplicateId(r.id.clone()));
            }
            r.validate()?;
        }
        Ok(Self { records, source_tag: source_tag.into(), seed })
    }

    pub fn records(&self) -> &[ScoreRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<ScoreRecord> {
        self.records
    }

    pub fn source_tag(&self) -> &str {
        &self.source_tag
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Same tag and seed, different records.
    pub fn with_records(&self, records: Vec<ScoreRecord>) -> Result<Self> {
        Self::new(records, self.source_tag.clone(), self.seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn count_positive(&self) -> usize {
        self.records.iter().filter(|r| r.label).count()
    }
}

/// Fraction of records labeled correct. May be exactly 0 or 1; callers that
/// need both classes must reject those.
pub fn correctness_prior(ds: &LabeledDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(ds.count_positive() as f64 / ds.len() as f64)
}

/// Which way a raw score points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Larger means more likely correct.
    Confidence,
    /// Larger means less likely correct.
    Uncertainty,
}

impl Direction {
    /// Maps a raw value into the confidence direction.
    pub fn to_confidence(self, raw: f64) -> f64 {
        match self {
            Direction::Confidence => raw,
            Direction::Uncertainty => -raw,
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "confidence" => Ok(Direction::Confidence),
            "uncertainty" => Ok(Direction::Uncertainty),
            other => Err(Error::InvalidConfig(format!(
                "unknown orientation `{other}` (expected confidence|uncertainty)"
            ))),
        }
    }
}

const UNCERTAINTY_MARKERS: &[&str] = &["entropy", "perplexity", "eigenscore", "energy", "uncertainty"];
const UNCERTAINTY_NAMES: &[&str] = &["se", "ppl"];

/// Per-score-name direction. Total: names without an override fall back to
/// a name-based default (entropy, perplexity and similar are uncertainties,
/// everything else, including MSP and log-probabilities, is a confidence).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    overrides: BTreeMap<String, Direction>,
}

impl Orientation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: impl Into<String>, direction: Direction) -> Self {
        self.overrides.insert(name.into(), direction);
        self
    }

    pub fn set(&mut self, name: impl Into<String>, direction: Direction) {
        self.overrides.insert(name.into(), direction);
    }

    pub fn direction(&self, name: &str) -> Direction {
        self.overrides.get(name).copied().unwrap_or_else(|| default_direction(name))
    }
}

/// Shipped default direction for a score name.
pub fn default_direction(name: &str) -> Direction {
    let lower = name.to_ascii_lowercase();
    if UNCERTAINTY_NAMES.contains(&lower.as_str()) || UNCERTAINTY_MARKERS.iter().any(|m| lower.contains(m)) {
        Direction::Uncertainty
    } else {
        Direction::Confidence
    }
}

/// Pulls one score out of every record, flipped into the confidence
/// direction. Order follows the dataset.
pub fn extract_score_column(ds: &LabeledDataset, name: &str, orient: &Orientation) -> Result<Vec<(f64, bool)>> {
    let direction = orient.direction(name);
    let missing: Vec<String> = ds
        .records()
        .iter()
        .filter(|r| !r.scores.contains_key(name))
        .map(|r| r.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingScore { name: name.to_string(), ids: missing });
    }
    Ok(ds
        .records()
        .iter()
        .map(|r| (direction.to_confidence(r.scores[name]), r.label))
        .collect())
}
