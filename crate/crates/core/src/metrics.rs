//! Per-class metric components and the mixture-level CA-PI-SDRi, with the
//! label-matched CA-SDRi baseline and the label-free PI-SDRi comparison.
//!
//! For each label in the union of reference and estimate labels, the
//! `min(refs, ests)` true-positive pairs are chosen to maximize the summed
//! SDRi over every way of selecting and matching sources within the class.
//! Missed and spurious sources contribute penalty terms, and every true or
//! false prediction increments the denominator of the final average, so
//! false predictions dilute the metric even at zero penalties.

use thiserror::Error;

use crate::assignment::{solve_max_assignment, Assignment, AssignmentError, ScoreMatrix};
use crate::grouping::{group_by_label, ClassGroup, Label, LabeledSources, PredictionCounts};
use crate::signal::{sdr, sdri, NumericGuards, SignalError, Waveform};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error("reference list is empty; the metric is undefined")]
    EmptyReference,
    #[error("label {label} occurs more than once; CA-SDRi requires mutually exclusive labels")]
    DuplicateLabels { label: Label },
    #[error("estimate count {ests} does not match reference count {refs}")]
    CountMismatch { refs: usize, ests: usize },
}

/// Penalties and numeric guards for one evaluation run.
///
/// Penalties are flat per-false-prediction dB contributions added into the
/// class component; both default to zero, in which case false predictions
/// still dilute the metric through the denominator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricConfig {
    pub penalty_fn: f64,
    pub penalty_fp: f64,
    pub guards: NumericGuards,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            penalty_fn: 0.0,
            penalty_fp: 0.0,
            guards: NumericGuards::default(),
        }
    }
}

/// One label's contribution: penalty terms plus the optimal summed SDRi
/// over the true-positive pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassComponent {
    pub label: Label,
    pub p_value: f64,
    pub counts: PredictionCounts,
    pub assignment: Assignment,
}

/// A full per-mixture evaluation: per-class components and their average
/// over all true and false predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureEvaluation {
    pub components: Vec<ClassComponent>,
    pub metric_db: f64,
    pub total_n: usize,
}

/// Pairwise SDRi matrix for one class: rows are estimates, columns are
/// references. The mixture SDR of each reference is computed once and
/// reused across rows.
fn sdri_matrix(
    ests: &[&Waveform],
    refs: &[&Waveform],
    mixture_ref: &Waveform,
    guards: &NumericGuards,
) -> Result<ScoreMatrix, MetricError> {
    let mix_sdr: Vec<f64> = refs
        .iter()
        .map(|r| sdr(mixture_ref, r, guards))
        .collect::<Result<_, _>>()?;
    let mut values = Vec::with_capacity(ests.len() * refs.len());
    for est in ests {
        for (j, r) in refs.iter().enumerate() {
            values.push(sdr(est, r, guards)? - mix_sdr[j]);
        }
    }
    Ok(ScoreMatrix::new(ests.len(), refs.len(), values)?)
}

/// Computes one class's metric component.
///
/// Signal math runs only for classes with at least one true-positive pair;
/// pure-FN and pure-FP classes reduce to their penalty terms.
pub fn class_component(
    group: &ClassGroup<'_>,
    mixture_ref: &Waveform,
    cfg: &MetricConfig,
) -> Result<ClassComponent, MetricError> {
    let counts = group.counts();
    let assignment = if counts.n_tp == 0 {
        Assignment::empty()
    } else {
        let matrix = sdri_matrix(&group.ests, &group.refs, mixture_ref, &cfg.guards)?;
        solve_max_assignment(&matrix)
    };
    let p_value = counts.n_fn as f64 * cfg.penalty_fn
        + counts.n_fp as f64 * cfg.penalty_fp
        + assignment.objective;
    Ok(ClassComponent {
        label: group.label.clone(),
        p_value,
        counts,
        assignment,
    })
}

/// Class-aware permutation-invariant SDRi over one mixture.
///
/// Components are reported per label in lexicographic order; the metric is
/// the sum of components divided by the total number of true and false
/// predictions.
pub fn ca_pi_sdri(
    refs: &LabeledSources,
    ests: &LabeledSources,
    mixture_ref: &Waveform,
    cfg: &MetricConfig,
) -> Result<MixtureEvaluation, MetricError> {
    if refs.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let groups = group_by_label(refs, ests);
    let mut components = Vec::with_capacity(groups.len());
    for group in &groups {
        components.push(class_component(group, mixture_ref, cfg)?);
    }
    let total_n: usize = components.iter().map(|c| c.counts.n_total).sum();
    let sum_p: f64 = components.iter().map(|c| c.p_value).sum();
    Ok(MixtureEvaluation {
        metric_db: sum_p / total_n as f64,
        total_n,
        components,
    })
}

/// Label-matched CA-SDRi without any permutation search.
///
/// This is the baseline metric that CA-PI-SDRi generalizes: valid only
/// when every reference label and every estimate label is unique, and
/// implemented independently of the assignment machinery so the reduction
/// property is a real cross-check.
pub fn ca_sdri_baseline(
    refs: &LabeledSources,
    ests: &LabeledSources,
    mixture_ref: &Waveform,
    cfg: &MetricConfig,
) -> Result<f64, MetricError> {
    use std::collections::BTreeMap;

    if refs.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    let mut ref_map: BTreeMap<&Label, &Waveform> = BTreeMap::new();
    for (label, w) in refs.iter() {
        if ref_map.insert(label, w).is_some() {
            return Err(MetricError::DuplicateLabels {
                label: label.clone(),
            });
        }
    }
    let mut est_map: BTreeMap<&Label, &Waveform> = BTreeMap::new();
    for (label, w) in ests.iter() {
        if est_map.insert(label, w).is_some() {
            return Err(MetricError::DuplicateLabels {
                label: label.clone(),
            });
        }
    }

    let union: std::collections::BTreeSet<&Label> =
        ref_map.keys().chain(est_map.keys()).copied().collect();
    let mut sum_p = 0.0;
    let mut total_n = 0usize;
    for label in union {
        match (ref_map.get(label), est_map.get(label)) {
            (Some(r), Some(e)) => sum_p += sdri(e, r, mixture_ref, &cfg.guards)?,
            (Some(_), None) => sum_p += cfg.penalty_fn,
            (None, Some(_)) => sum_p += cfg.penalty_fp,
            (None, None) => unreachable!("label came from the union"),
        }
        total_n += 1;
    }
    Ok(sum_p / total_n as f64)
}

/// Label-free permutation-invariant SDRi: the summed SDRi maximized over
/// all full assignments of estimates to references, averaged over K.
pub fn pi_sdri(
    refs: &LabeledSources,
    ests: &LabeledSources,
    mixture_ref: &Waveform,
    cfg: &MetricConfig,
) -> Result<f64, MetricError> {
    if refs.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if ests.len() != refs.len() {
        return Err(MetricError::CountMismatch {
            refs: refs.len(),
            ests: ests.len(),
        });
    }
    let ref_waves: Vec<&Waveform> = refs.iter().map(|(_, w)| w).collect();
    let est_waves: Vec<&Waveform> = ests.iter().map(|(_, w)| w).collect();
    let matrix = sdri_matrix(&est_waves, &ref_waves, mixture_ref, &cfg.guards)?;
    let assignment = solve_max_assignment(&matrix);
    Ok(assignment.objective / refs.len() as f64)
}
