//! Batch evaluation of a manifest over a worker pool.
//!
//! Entries are independent; a failure in one (missing file, corrupt WAV,
//! shape mismatch) becomes an error row instead of aborting the run. The
//! report is identical for any worker count: workers only change who
//! computes a row, never its content or order.

use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use s5eval_core::{ca_pi_sdri, Label, LabeledSources, MetricConfig, Waveform};

use crate::manifest::{Manifest, MixtureEntry, SourceEntry};
use crate::report::{EvaluationReport, MixtureRow};

#[derive(Debug, Error)]
pub enum EvaluateError {
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

fn load_sources(base: &Path, sources: &[SourceEntry]) -> Result<LabeledSources, String> {
    let mut entries: Vec<(Label, Waveform)> = Vec::with_capacity(sources.len());
    for source in sources {
        let label = Label::new(source.label.as_str()).map_err(|e| e.to_string())?;
        let wave = crate::wav::load_mono(&base.join(&source.path)).map_err(|e| e.to_string())?;
        entries.push((label, wave));
    }
    LabeledSources::new(entries).map_err(|e| e.to_string())
}

fn evaluate_entry(entry: &MixtureEntry, base: &Path, cfg: &MetricConfig) -> MixtureRow {
    let result = (|| -> Result<MixtureRow, String> {
        let mixture_audio =
            crate::wav::load_wav(&base.join(&entry.mixture)).map_err(|e| e.to_string())?;
        let mixture = mixture_audio
            .channel(entry.ref_channel)
            .map_err(|e| e.to_string())?;
        let refs = load_sources(base, &entry.references)?;
        let ests = load_sources(base, &entry.estimates)?;
        let eval = ca_pi_sdri(&refs, &ests, &mixture, cfg).map_err(|e| e.to_string())?;
        Ok(MixtureRow::ok(
            entry.id.clone(),
            entry.subset.clone(),
            &eval,
        ))
    })();
    result.unwrap_or_else(|error| MixtureRow::failed(entry.id.clone(), entry.subset.clone(), error))
}

/// Evaluates every manifest entry on `workers` threads and assembles the
/// deterministic report.
pub fn evaluate_manifest(
    manifest: &Manifest,
    base: &Path,
    cfg: &MetricConfig,
    workers: usize,
) -> Result<EvaluationReport, EvaluateError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| EvaluateError::Pool(e.to_string()))?;
    let rows: Vec<MixtureRow> = pool.install(|| {
        manifest
            .mixtures
            .par_iter()
            .map(|entry| evaluate_entry(entry, base, cfg))
            .collect()
    });
    Ok(EvaluationReport::assemble(rows, cfg))
}
