//! WAV and manifest ingestion, batch evaluation, report emission, and the
//! library side of the `s5eval` command line.

pub mod evaluate;
pub mod manifest;
pub mod report;
pub mod selftest;
pub mod synth;
pub mod wav;
