//! Synthetic dataset emission: scenes, oracle-quality estimates, and the
//! matching manifest.
//!
//! Each scene gets its own directory of mono float32 WAV files. Estimates
//! are built per reference at a drawn SDRi target (SDR target offset by
//! the mixture SDR of that reference), with optional FN/FP label-error
//! injection so evaluation fixtures can exercise the penalty accounting.

use std::path::PathBuf;

use thiserror::Error;

use s5eval_core::rng::stream;
use s5eval_core::scene::{generate_scene, make_estimate_with_sdr, SceneSpec, K_MAX};
use s5eval_core::signal::{sdr, NumericGuards, Waveform};
use s5eval_core::{Label, SceneError};

use crate::manifest::{Manifest, ManifestError, MixtureEntry, SourceEntry};
use crate::wav::{write_wav_f32, WavError};

/// Stream roles for dataset-level draws, disjoint from the scene roles.
const STREAM_DATASET: u64 = 100;
const STREAM_ESTIMATE_PARAMS: u64 = 101;

/// Fixture vocabulary for synthetic scenes.
pub const SYNTH_VOCABULARY: [&str; 6] = ["alarm", "dog", "drums", "guitar", "siren", "speech"];

#[derive(Debug, Error)]
pub enum SynthError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Wav(#[from] WavError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("cannot create {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("invalid synth option: {0}")]
    BadOption(String),
}

#[derive(Debug, Clone)]
pub struct SynthOptions {
    pub out_dir: PathBuf,
    pub scenes: usize,
    pub seed: u64,
    pub duration_s: f64,
    pub sample_rate_hz: u32,
    pub max_targets: usize,
    /// Probability that a multi-source scene carries a duplicated label.
    pub duplicate_prob: f64,
    pub max_interference: usize,
    pub noise_floor_db: Option<f64>,
    /// Range of per-source SDRi targets for the emitted estimates.
    pub est_sdri_db: (f64, f64),
    /// Per-reference probability of dropping its estimate (an FN).
    pub fn_prob: f64,
    /// Per-scene probability of adding one spurious estimate (an FP).
    pub fp_prob: f64,
}

impl SynthOptions {
    pub fn new(out_dir: PathBuf) -> Self {
        Self {
            out_dir,
            scenes: 12,
            seed: 0,
            duration_s: 10.0,
            sample_rate_hz: 32_000,
            max_targets: K_MAX,
            duplicate_prob: 0.4,
            max_interference: 2,
            noise_floor_db: Some(-40.0),
            est_sdri_db: (0.0, 20.0),
            fn_prob: 0.0,
            fp_prob: 0.0,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.scenes == 0 {
            return Err(SynthError::BadOption("scene count must be positive".into()));
        }
        if self.max_targets == 0 || self.max_targets > K_MAX {
            return Err(SynthError::BadOption(format!(
                "max targets must be 1..={K_MAX}"
            )));
        }
        if self.max_interference > 2 {
            return Err(SynthError::BadOption(
                "at most 2 interference sources".into(),
            ));
        }
        for (name, p) in [
            ("dup-prob", self.duplicate_prob),
            ("fn-prob", self.fn_prob),
            ("fp-prob", self.fp_prob),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(SynthError::BadOption(format!("{name} must be in [0, 1]")));
            }
        }
        if self.est_sdri_db.0 > self.est_sdri_db.1 {
            return Err(SynthError::BadOption("empty estimate SDRi range".into()));
        }
        Ok(())
    }
}

fn sanitize(label: &str) -> String {
    label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

/// Generates `scenes` scenes under `out_dir` and writes the manifest.
/// Returns the manifest path.
pub fn synthesize_dataset(opts: &SynthOptions) -> Result<PathBuf, SynthError> {
    opts.validate()?;
    std::fs::create_dir_all(&opts.out_dir).map_err(|source| SynthError::Io {
        path: opts.out_dir.display().to_string(),
        source,
    })?;

    let guards = NumericGuards::default();
    let mut entries = Vec::with_capacity(opts.scenes);
    for index in 0..opts.scenes {
        let mut draws = stream(opts.seed, STREAM_DATASET, index as u64);
        let k = 1 + draws.index(opts.max_targets);
        let mut vocab_order: Vec<&str> = SYNTH_VOCABULARY.to_vec();
        for i in (1..vocab_order.len()).rev() {
            vocab_order.swap(i, draws.index(i + 1));
        }
        let mut tokens: Vec<&str> = vocab_order[..k].to_vec();
        if k >= 2 && draws.next_f64() < opts.duplicate_prob {
            tokens[1] = tokens[0];
            if k == 3 && draws.next_f64() < 0.3 {
                tokens[2] = tokens[0];
            }
        }
        let has_dup = (1..tokens.len()).any(|i| tokens[..i].contains(&tokens[i]));

        let mut spec = SceneSpec::new(
            draws.next_u64(),
            tokens
                .iter()
                .map(|t| Label::new(*t).expect("vocabulary labels are nonempty"))
                .collect(),
        );
        spec.duration_s = opts.duration_s;
        spec.sample_rate_hz = opts.sample_rate_hz;
        spec.n_interference = draws.index(opts.max_interference + 1);
        spec.noise_floor_db = opts.noise_floor_db;
        let scene = generate_scene(&spec)?;

        let scene_dir_name = format!("scene_{index:04}");
        let scene_dir = opts.out_dir.join(&scene_dir_name);
        std::fs::create_dir_all(&scene_dir).map_err(|source| SynthError::Io {
            path: scene_dir.display().to_string(),
            source,
        })?;

        let mixture_rel = format!("{scene_dir_name}/mixture.wav");
        write_wav_f32(&opts.out_dir.join(&mixture_rel), &scene.mixture_ref)?;

        let mut references = Vec::with_capacity(k);
        let mut estimates = Vec::new();
        let mut est_params = stream(opts.seed, STREAM_ESTIMATE_PARAMS, index as u64);
        for (i, (label, reference)) in scene.references.iter().enumerate() {
            let ref_rel = format!(
                "{scene_dir_name}/ref_{i:02}_{}.wav",
                sanitize(label.as_str())
            );
            write_wav_f32(&opts.out_dir.join(&ref_rel), reference)?;
            references.push(SourceEntry {
                label: label.to_string(),
                path: ref_rel,
            });

            if est_params.next_f64() < opts.fn_prob {
                continue;
            }
            let target_sdri = est_params.uniform(opts.est_sdri_db.0, opts.est_sdri_db.1);
            let mixture_sdr =
                sdr(&scene.mixture_ref, reference, &guards).map_err(SceneError::from)?;
            let estimate = make_estimate_with_sdr(
                reference,
                target_sdri + mixture_sdr,
                est_params.next_u64(),
            )?;
            let est_rel = format!(
                "{scene_dir_name}/est_{:02}_{}.wav",
                estimates.len(),
                sanitize(label.as_str())
            );
            write_wav_f32(&opts.out_dir.join(&est_rel), &estimate)?;
            estimates.push(SourceEntry {
                label: label.to_string(),
                path: est_rel,
            });
        }
        if est_params.next_f64() < opts.fp_prob {
            let token = SYNTH_VOCABULARY[est_params.index(SYNTH_VOCABULARY.len())];
            let n = scene.mixture_ref.len();
            let mut noise_rng = stream(spec.seed, STREAM_ESTIMATE_PARAMS, u64::MAX);
            let junk = Waveform::new(
                (0..n).map(|_| 0.05 * noise_rng.symmetric()).collect(),
                opts.sample_rate_hz,
            )
            .expect("nonempty junk estimate");
            let est_rel = format!(
                "{scene_dir_name}/est_{:02}_{}.wav",
                estimates.len(),
                sanitize(token)
            );
            write_wav_f32(&opts.out_dir.join(&est_rel), &junk)?;
            estimates.push(SourceEntry {
                label: token.to_string(),
                path: est_rel,
            });
        }

        entries.push(MixtureEntry {
            id: scene_dir_name,
            mixture: mixture_rel,
            ref_channel: 0,
            subset: Some(if has_dup { "dup" } else { "nodup" }.to_string()),
            references,
            estimates,
        });
    }

    let manifest = Manifest {
        vocabulary: Some(SYNTH_VOCABULARY.iter().map(|s| s.to_string()).collect()),
        mixtures: entries,
    };
    manifest.validate()?;
    let manifest_path = opts.out_dir.join("manifest.json");
    manifest.save(&manifest_path)?;
    Ok(manifest_path)
}
