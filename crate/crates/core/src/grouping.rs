//! Class labels, labeled source sequences, and per-label TP/FN/FP accounting.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::signal::Waveform;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroupingError {
    #[error("label token must be nonempty")]
    EmptyLabel,
    #[error("waveform {index} has length {got}, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        got: usize,
    },
    #[error("waveform {index} has sample rate {got} Hz, expected {expected} Hz")]
    RateMismatch {
        index: usize,
        expected: u32,
        got: u32,
    },
}

/// A class identifier. Comparison is exact token equality; ordering is
/// lexicographic, which fixes the deterministic group order in reports.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(String);

impl Label {
    pub fn new(token: impl Into<String>) -> Result<Self, GroupingError> {
        let token = token.into();
        if token.is_empty() {
            return Err(GroupingError::EmptyLabel);
        }
        Ok(Self(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An ordered sequence of (label, waveform) pairs. All waveforms must
/// share one length and sample rate. May be empty (a system can predict
/// no sources at all).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSources {
    entries: Vec<(Label, Waveform)>,
}

impl LabeledSources {
    pub fn new(entries: Vec<(Label, Waveform)>) -> Result<Self, GroupingError> {
        if let Some((_, first)) = entries.first() {
            let len = first.len();
            let rate = first.sample_rate_hz();
            for (index, (_, w)) in entries.iter().enumerate() {
                if w.len() != len {
                    return Err(GroupingError::LengthMismatch {
                        index,
                        expected: len,
                        got: w.len(),
                    });
                }
                if w.sample_rate_hz() != rate {
                    return Err(GroupingError::RateMismatch {
                        index,
                        expected: rate,
                        got: w.sample_rate_hz(),
                    });
                }
            }
        }
        Ok(Self { entries })
    }

    pub fn empty() -> Self {
        Self { entries: vec![] }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(Label, Waveform)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = &(Label, Waveform)> {
        self.entries.iter()
    }

    pub fn labels(&self) -> impl Iterator<Item = &Label> {
        self.entries.iter().map(|(l, _)| l)
    }
}

/// TP/FN/FP counts for one label.
///
/// `n_tp = min(refs, ests)`, `n_fn = max(refs - ests, 0)`,
/// `n_fp = max(ests - refs, 0)`; at most one of FN and FP is nonzero and
/// `n_total = n_tp + n_fn + n_fp = max(refs, ests)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PredictionCounts {
    pub n_tp: usize,
    pub n_fn: usize,
    pub n_fp: usize,
    pub n_total: usize,
}

impl PredictionCounts {
    pub fn from_sizes(n_refs: usize, n_ests: usize) -> Self {
        Self {
            n_tp: n_refs.min(n_ests),
            n_fn: n_refs.saturating_sub(n_ests),
            n_fp: n_ests.saturating_sub(n_refs),
            n_total: n_refs.max(n_ests),
        }
    }
}

/// The reference and estimate waveforms that carry one label, in their
/// original relative order, together with the prediction counts.
#[derive(Debug, Clone)]
pub struct ClassGroup<'a> {
    pub label: Label,
    pub refs: Vec<&'a Waveform>,
    pub ests: Vec<&'a Waveform>,
    counts: PredictionCounts,
}

impl ClassGroup<'_> {
    pub fn counts(&self) -> PredictionCounts {
        self.counts
    }
}

/// Partitions both sequences by label, one group per label in the union
/// of unique labels, ordered lexicographically.
pub fn group_by_label<'a>(
    refs: &'a LabeledSources,
    ests: &'a LabeledSources,
) -> Vec<ClassGroup<'a>> {
    let mut by_label: BTreeMap<&Label, (Vec<&Waveform>, Vec<&Waveform>)> = BTreeMap::new();
    for (label, w) in refs.iter() {
        by_label.entry(label).or_default().0.push(w);
    }
    for (label, w) in ests.iter() {
        by_label.entry(label).or_default().1.push(w);
    }
    by_label
        .into_iter()
        .map(|(label, (refs, ests))| {
            let counts = PredictionCounts::from_sizes(refs.len(), ests.len());
            ClassGroup {
                label: label.clone(),
                refs,
                ests,
                counts,
            }
        })
        .collect()
}
