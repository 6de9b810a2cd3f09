//! Value-level training losses: CA-PI-SDR, CA-SDR, and PI-SDR.
//!
//! All three are `-(1/K) * sum_k SDR(est_{pi(k)}, ref_k)` and differ only
//! in how the mapping `pi` is chosen: minimized over within-class
//! permutations (CA-PI-SDR), fixed or drawn at random within classes
//! (CA-SDR), or minimized over all permutations ignoring labels (PI-SDR).
//! The functions return the loss value and the mapping that achieves it;
//! gradients are the caller's concern.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::assignment::{solve_max_assignment, AssignmentError, ScoreMatrix};
use crate::grouping::{Label, LabeledSources};
use crate::rng::stream;
use crate::signal::{sdr, NumericGuards, SignalError};

/// Stream role for the CA-SDR random mapping draw.
const STREAM_LOSS_MAPPING: u64 = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error(transparent)]
    Assignment(#[from] AssignmentError),
    #[error("estimate count {ests} does not match reference count {refs}")]
    CountMismatch { refs: usize, ests: usize },
    #[error("estimate labels are not a permutation of reference labels")]
    LabelMultisetMismatch,
    #[error("loss is undefined for empty inputs")]
    EmptyInput,
}

/// A loss value together with the mapping that produced it.
///
/// `chosen_permutation[k]` is the estimate index matched to reference `k`,
/// and `per_pair_sdr[k]` is the SDR of that pair, so
/// `loss_value = -(per_pair_sdr.iter().sum()) / K` by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LossResult {
    pub loss_value: f64,
    pub chosen_permutation: Vec<usize>,
    pub per_pair_sdr: Vec<f64>,
}

fn finish(permutation: Vec<usize>, per_pair_sdr: Vec<f64>) -> LossResult {
    let k = per_pair_sdr.len() as f64;
    let total: f64 = per_pair_sdr.iter().sum();
    LossResult {
        loss_value: -total / k,
        chosen_permutation: permutation,
        per_pair_sdr,
    }
}

fn validate_counts(ests: &LabeledSources, refs: &LabeledSources) -> Result<usize, LossError> {
    if ests.len() != refs.len() {
        return Err(LossError::CountMismatch {
            refs: refs.len(),
            ests: ests.len(),
        });
    }
    if refs.is_empty() {
        return Err(LossError::EmptyInput);
    }
    Ok(refs.len())
}

/// Reference and estimate positions of one label.
type ClassSlots = (Vec<usize>, Vec<usize>);

/// Positions of each label on both sides, keyed in lexicographic label
/// order. Errors unless the label multisets agree.
fn class_positions<'a>(
    ests: &'a LabeledSources,
    refs: &'a LabeledSources,
) -> Result<BTreeMap<&'a Label, ClassSlots>, LossError> {
    let mut by_label: BTreeMap<&Label, ClassSlots> = BTreeMap::new();
    for (pos, (label, _)) in refs.iter().enumerate() {
        by_label.entry(label).or_default().0.push(pos);
    }
    for (pos, (label, _)) in ests.iter().enumerate() {
        by_label.entry(label).or_default().1.push(pos);
    }
    if by_label.values().any(|(r, e)| r.len() != e.len()) {
        return Err(LossError::LabelMultisetMismatch);
    }
    Ok(by_label)
}

/// CA-PI-SDR: the loss minimized over within-class permutations, solved
/// per class by optimal assignment.
///
/// The class-constrained search factorizes into independent per-class
/// problems because the objective is a sum over positions and only
/// same-class positions may trade places.
pub fn ca_pi_sdr_loss(
    ests: &LabeledSources,
    refs: &LabeledSources,
    guards: &NumericGuards,
) -> Result<LossResult, LossError> {
    let k = validate_counts(ests, refs)?;
    let by_label = class_positions(ests, refs)?;

    let mut permutation = vec![usize::MAX; k];
    let mut per_pair_sdr = vec![0.0f64; k];
    for (ref_positions, est_positions) in by_label.values() {
        let mut values = Vec::with_capacity(est_positions.len() * ref_positions.len());
        for &e in est_positions {
            for &r in ref_positions {
                values.push(sdr(&ests.entries()[e].1, &refs.entries()[r].1, guards)?);
            }
        }
        let matrix = ScoreMatrix::new(est_positions.len(), ref_positions.len(), values)?;
        let assignment = solve_max_assignment(&matrix);
        for &(row, col) in &assignment.pairs {
            permutation[ref_positions[col]] = est_positions[row];
            per_pair_sdr[ref_positions[col]] = matrix.get(row, col);
        }
    }
    Ok(finish(permutation, per_pair_sdr))
}

/// CA-SDR: the loss at one label-respecting mapping.
///
/// With no seed, same-class sources pair in their given order, which is
/// the identity mapping when estimates are already aligned to the
/// reference label order. With a seed, the mapping is drawn uniformly
/// from the within-class permutations; the draw is deterministic per
/// seed so training runs can be reproduced.
pub fn ca_sdr_loss(
    ests: &LabeledSources,
    refs: &LabeledSources,
    mapping_seed: Option<u64>,
    guards: &NumericGuards,
) -> Result<LossResult, LossError> {
    let k = validate_counts(ests, refs)?;
    let by_label = class_positions(ests, refs)?;

    let mut permutation = vec![usize::MAX; k];
    let mut per_pair_sdr = vec![0.0f64; k];
    for (class_index, (ref_positions, est_positions)) in by_label.values().enumerate() {
        let mut mapped = est_positions.clone();
        if let Some(seed) = mapping_seed {
            let mut rng = stream(seed, STREAM_LOSS_MAPPING, class_index as u64);
            for i in (1..mapped.len()).rev() {
                mapped.swap(i, rng.index(i + 1));
            }
        }
        for (i, &r) in ref_positions.iter().enumerate() {
            let e = mapped[i];
            permutation[r] = e;
            per_pair_sdr[r] = sdr(&ests.entries()[e].1, &refs.entries()[r].1, guards)?;
        }
    }
    Ok(finish(permutation, per_pair_sdr))
}

/// PI-SDR: the loss minimized over all permutations, ignoring labels.
pub fn pi_sdr_loss(
    ests: &LabeledSources,
    refs: &LabeledSources,
    guards: &NumericGuards,
) -> Result<LossResult, LossError> {
    let k = validate_counts(ests, refs)?;
    let mut values = Vec::with_capacity(k * k);
    for (_, est) in ests.iter() {
        for (_, reference) in refs.iter() {
            values.push(sdr(est, reference, guards)?);
        }
    }
    let matrix = ScoreMatrix::new(k, k, values)?;
    let assignment = solve_max_assignment(&matrix);
    let mut permutation = vec![usize::MAX; k];
    let mut per_pair_sdr = vec![0.0f64; k];
    for &(row, col) in &assignment.pairs {
        permutation[col] = row;
        per_pair_sdr[col] = matrix.get(row, col);
    }
    Ok(finish(permutation, per_pair_sdr))
}
