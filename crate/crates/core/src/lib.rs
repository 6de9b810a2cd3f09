//! Evaluation metrics and training losses for labeled source separation.
//!
//! This crate implements the class-aware permutation-invariant SDR
//! improvement metric (CA-PI-SDRi) for systems that output separated
//! sources together with class labels, where the same class may occur
//! more than once per mixture. It also provides the matching loss
//! family (CA-PI-SDR, CA-SDR, PI-SDR), exact assignment solvers with
//! brute-force oracles, and a deterministic synthetic scene generator
//! for validation.
//!
//! The crate is pure computation: no I/O, no global state. All
//! functions are safe to call from concurrent workers.

pub mod assignment;
pub mod grouping;
pub mod losses;
pub mod metrics;
pub mod rng;
pub mod scene;
pub mod signal;

pub use assignment::{
    enumerate_class_permutations, enumerate_selections, solve_max_assignment,
    solve_max_assignment_bruteforce, Assignment, AssignmentError, ScoreMatrix,
};
pub use grouping::{
    group_by_label, ClassGroup, GroupingError, Label, LabeledSources, PredictionCounts,
};
pub use losses::{ca_pi_sdr_loss, ca_sdr_loss, pi_sdr_loss, LossError, LossResult};
pub use metrics::{
    ca_pi_sdri, ca_sdri_baseline, class_component, pi_sdri, ClassComponent, MetricConfig,
    MetricError, MixtureEvaluation,
};
pub use scene::{generate_scene, make_estimate_with_sdr, Scene, SceneError, SceneSpec, K_MAX};
pub use signal::{energy, sdr, sdri, NumericGuards, SignalError, Waveform};
