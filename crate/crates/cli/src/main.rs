//! `s5eval`: evaluate labeled source-separation outputs with CA-PI-SDRi,
//! synthesize validation datasets, compute the loss family, and self-test.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use s5eval_cli::evaluate::evaluate_manifest;
use s5eval_cli::manifest::Manifest;
use s5eval_cli::report::ReportFormat;
use s5eval_cli::synth::{synthesize_dataset, SynthOptions};
use s5eval_core::signal::NumericGuards;
use s5eval_core::{ca_pi_sdr_loss, ca_sdr_loss, pi_sdr_loss, Label, LabeledSources, MetricConfig};

/// Environment variable holding the default worker count.
const WORKERS_ENV: &str = "S5EVAL_WORKERS";

#[derive(Parser)]
#[command(
    name = "s5eval",
    version,
    about = "Class-aware permutation-invariant evaluation of labeled separated sources"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    JsonLines,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every mixture in a manifest and emit a report.
    Evaluate {
        /// Manifest file (JSON); audio paths are resolved relative to it.
        #[arg(long)]
        manifest: PathBuf,
        /// Report destination; "-" or absent means stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Penalty per false-negative source, in dB.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        penalty_fn: f64,
        /// Penalty per false-positive source, in dB.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        penalty_fp: f64,
        /// Upper bound applied to every SDR value, in dB.
        #[arg(long, default_value_t = 60.0)]
        sdr_cap: f64,
        /// Worker threads; defaults to $S5EVAL_WORKERS or the CPU count.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value = "json-lines")]
        format: FormatArg,
    },
    /// Generate a synthetic dataset of scenes, estimates, and a manifest.
    Synth {
        /// Output directory for scene folders and manifest.json.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 12)]
        scenes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10.0)]
        duration_s: f64,
        #[arg(long, default_value_t = 32_000)]
        sample_rate: u32,
        /// Largest number of target sources per scene (1..=3).
        #[arg(long, default_value_t = 3)]
        max_targets: usize,
        /// Probability that a multi-source scene duplicates a label.
        #[arg(long, default_value_t = 0.4)]
        dup_prob: f64,
        /// Largest number of interference sources per scene (0..=2).
        #[arg(long, default_value_t = 2)]
        max_interference: usize,
        /// Noise floor RMS in dBFS.
        #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
        noise_floor_db: f64,
        /// Lower bound of the per-source estimate SDRi target range (dB).
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        est_sdri_min: f64,
        /// Upper bound of the per-source estimate SDRi target range (dB).
        #[arg(long, default_value_t = 20.0, allow_negative_numbers = true)]
        est_sdri_max: f64,
        /// Per-reference probability of omitting its estimate.
        #[arg(long, default_value_t = 0.0)]
        fn_prob: f64,
        /// Per-scene probability of adding a spurious estimate.
        #[arg(long, default_value_t = 0.0)]
        fp_prob: f64,
    },
    /// Compute the CA-PI-SDR / CA-SDR / PI-SDR losses for one manifest
    /// entry, treating its estimates as oracle-labeled outputs.
    Losses {
        #[arg(long)]
        manifest: PathBuf,
        /// Mixture id within the manifest.
        #[arg(long)]
        id: String,
        /// Seed for the CA-SDR random within-class mapping; without it the
        /// mapping pairs same-class sources in their given order.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the built-in correctness suites and exit nonzero on failure.
    Selftest,
}

fn default_workers() -> usize {
    if let Ok(value) = std::env::var(WORKERS_ENV) {
        if let Ok(parsed) = value.parse::<usize>() {
            if parsed >= 1 {
                return parsed;
            }
        }
    }
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn run() -> anyhow::Result<ExitCode> {
    match Cli::parse().command {
        Command::Evaluate {
            manifest,
            output,
            penalty_fn,
            penalty_fp,
            sdr_cap,
            workers,
            format,
        } => {
            let (manifest, base) = Manifest::load(&manifest)?;
            let cfg = MetricConfig {
                penalty_fn,
                penalty_fp,
                guards: NumericGuards {
                    sdr_cap_db: sdr_cap,
                    ..NumericGuards::default()
                },
            };
            let workers = workers.unwrap_or_else(default_workers);
            let report = evaluate_manifest(&manifest, &base, &cfg, workers)?;
            let body = report.render(match format {
                FormatArg::JsonLines => ReportFormat::JsonLines,
                FormatArg::Csv => ReportFormat::Csv,
            });
            match output {
                Some(path) if path.as_os_str() != "-" => {
                    std::fs::write(&path, body)
                        .with_context(|| format!("cannot write {}", path.display()))?;
                }
                _ => print!("{body}"),
            }
            eprintln!(
                "evaluated {}/{} mixtures{}",
                report.summary.evaluated,
                report.summary.mixtures,
                report
                    .summary
                    .overall_mean_db
                    .map(|m| format!(", overall mean {m:.3} dB"))
                    .unwrap_or_default()
            );
            Ok(if report.summary.failed == 0 {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::Synth {
            out,
            scenes,
            seed,
            duration_s,
            sample_rate,
            max_targets,
            dup_prob,
            max_interference,
            noise_floor_db,
            est_sdri_min,
            est_sdri_max,
            fn_prob,
            fp_prob,
        } => {
            let opts = SynthOptions {
                out_dir: out,
                scenes,
                seed,
                duration_s,
                sample_rate_hz: sample_rate,
                max_targets,
                duplicate_prob: dup_prob,
                max_interference,
                noise_floor_db: Some(noise_floor_db),
                est_sdri_db: (est_sdri_min, est_sdri_max),
                fn_prob,
                fp_prob,
            };
            let manifest_path = synthesize_dataset(&opts)?;
            println!("{}", manifest_path.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Losses { manifest, id, seed } => {
            let (manifest, base) = Manifest::load(&manifest)?;
            let entry = manifest
                .mixtures
                .iter()
                .find(|e| e.id == id)
                .ok_or_else(|| anyhow!("no mixture with id {id:?} in the manifest"))?;
            let load =
                |sources: &[s5eval_cli::manifest::SourceEntry]| -> anyhow::Result<LabeledSources> {
                    let mut entries = Vec::with_capacity(sources.len());
                    for s in sources {
                        entries.push((
                            Label::new(s.label.as_str())?,
                            s5eval_cli::wav::load_mono(&base.join(&s.path))?,
                        ));
                    }
                    Ok(LabeledSources::new(entries)?)
                };
            let refs = load(&entry.references)?;
            let ests = load(&entry.estimates)?;
            if ests.len() != refs.len() {
                bail!(
                    "losses need as many estimates as references (got {} vs {})",
                    ests.len(),
                    refs.len()
                );
            }
            let guards = NumericGuards::default();
            let to_json = |r: &s5eval_core::LossResult| {
                serde_json::json!({
                    "loss": r.loss_value,
                    "permutation": r.chosen_permutation,
                    "per_pair_sdr_db": r.per_pair_sdr,
                })
            };
            let ca_pi = ca_pi_sdr_loss(&ests, &refs, &guards)?;
            let ca = ca_sdr_loss(&ests, &refs, seed, &guards)?;
            let pi = pi_sdr_loss(&ests, &refs, &guards)?;
            let doc = serde_json::json!({
                "id": entry.id,
                "ca_pi_sdr": to_json(&ca_pi),
                "ca_sdr": to_json(&ca),
                "pi_sdr": to_json(&pi),
            });
            println!("{}", serde_json::to_string_pretty(&doc)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Selftest => {
            let mut stdout = std::io::stdout();
            let ok = s5eval_cli::selftest::run(&mut stdout)?;
            Ok(if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            let record = serde_json::json!({ "error": format!("{err:#}") });
            eprintln!("{record}");
            ExitCode::FAILURE
        }
    }
}
