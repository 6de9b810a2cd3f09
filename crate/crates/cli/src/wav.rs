//! WAV reading and writing.
//!
//! Reads PCM 16/24-bit integer and 32-bit float files, mono or
//! multi-channel. Integer samples are scaled to [-1, 1) by the format's
//! full-scale value. Writing always emits mono 32-bit float, so a written
//! file reads back sample-exactly whenever the in-memory samples are
//! representable as f32 (float-to-float is a lossless path).

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};
use thiserror::Error;

use s5eval_core::signal::{SignalError, Waveform};

#[derive(Debug, Error)]
pub enum WavError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: corrupt or not a WAV file ({detail})")]
    CorruptFile { path: String, detail: String },
    #[error("{path}: unsupported format ({detail}); supported: PCM 16/24-bit int, 32-bit float")]
    UnsupportedFormat { path: String, detail: String },
    #[error("{path}: channel {requested} requested but the file has {channels}")]
    ChannelOutOfRange {
        path: String,
        channels: usize,
        requested: usize,
    },
    #[error("{path}: expected a mono file, found {channels} channels")]
    ExpectedMono { path: String, channels: usize },
    #[error("{path}: {source}")]
    BadSignal { path: String, source: SignalError },
}

fn hound_error(path: &Path, err: hound::Error) -> WavError {
    let path = path.display().to_string();
    match err {
        hound::Error::IoError(source) => WavError::Io { path, source },
        hound::Error::FormatError(detail) => WavError::CorruptFile {
            path,
            detail: detail.to_string(),
        },
        hound::Error::Unsupported => WavError::UnsupportedFormat {
            path,
            detail: "unsupported encoding".into(),
        },
        other => WavError::CorruptFile {
            path,
            detail: other.to_string(),
        },
    }
}

/// Deinterleaved multi-channel audio.
#[derive(Debug, Clone)]
pub struct MultiChannelAudio {
    channels: Vec<Vec<f64>>,
    sample_rate_hz: u32,
    path: String,
}

impl MultiChannelAudio {
    pub fn n_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channel(&self, index: usize) -> Result<Waveform, WavError> {
        let samples = self
            .channels
            .get(index)
            .ok_or_else(|| WavError::ChannelOutOfRange {
                path: self.path.clone(),
                channels: self.channels.len(),
                requested: index,
            })?;
        Waveform::new(samples.clone(), self.sample_rate_hz).map_err(|source| WavError::BadSignal {
            path: self.path.clone(),
            source,
        })
    }
}

/// Loads a WAV file with all its channels.
pub fn load_wav(path: &Path) -> Result<MultiChannelAudio, WavError> {
    let reader = WavReader::open(path).map_err(|e| hound_error(path, e))?;
    let spec = reader.spec();
    let n_channels = spec.channels as usize;
    if n_channels == 0 {
        return Err(WavError::CorruptFile {
            path: path.display().to_string(),
            detail: "zero channels".into(),
        });
    }
    let interleaved = read_interleaved(reader, &spec, path)?;
    let frames = interleaved.len() / n_channels;
    let mut channels = vec![Vec::with_capacity(frames); n_channels];
    for (i, sample) in interleaved.into_iter().enumerate() {
        channels[i % n_channels].push(sample);
    }
    Ok(MultiChannelAudio {
        channels,
        sample_rate_hz: spec.sample_rate,
        path: path.display().to_string(),
    })
}

fn read_interleaved(
    reader: WavReader<std::io::BufReader<std::fs::File>>,
    spec: &WavSpec,
    path: &Path,
) -> Result<Vec<f64>, WavError> {
    let mut reader = reader;
    match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|x| x as f64).map_err(|e| hound_error(path, e)))
            .collect(),
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| {
                s.map(|x| x as f64 / 32_768.0)
                    .map_err(|e| hound_error(path, e))
            })
            .collect(),
        (SampleFormat::Int, 24) => reader
            .samples::<i32>()
            .map(|s| {
                s.map(|x| x as f64 / 8_388_608.0)
                    .map_err(|e| hound_error(path, e))
            })
            .collect(),
        (format, bits) => Err(WavError::UnsupportedFormat {
            path: path.display().to_string(),
            detail: format!("{bits}-bit {format:?}"),
        }),
    }
}

/// Loads a single-channel file; multi-channel input is an error.
pub fn load_mono(path: &Path) -> Result<Waveform, WavError> {
    let audio = load_wav(path)?;
    if audio.n_channels() != 1 {
        return Err(WavError::ExpectedMono {
            path: audio.path.clone(),
            channels: audio.n_channels(),
        });
    }
    audio.channel(0)
}

/// Writes a mono 32-bit float WAV file.
pub fn write_wav_f32(path: &Path, waveform: &Waveform) -> Result<(), WavError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: waveform.sample_rate_hz(),
        bits_per_sample: 32,
        sample_format: SampleFormat::Float,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| hound_error(path, e))?;
    for &x in waveform.samples() {
        writer
            .write_sample(x as f32)
            .map_err(|e| hound_error(path, e))?;
    }
    writer.finalize().map_err(|e| hound_error(path, e))
}
