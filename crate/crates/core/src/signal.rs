//! Single-channel waveforms and the scalar SDR / SDRi primitives.
//!
//! SDR is the plain (not scale-invariant) signal-to-distortion ratio
//! `10 log10(||s||^2 / ||s - s_hat||^2)`. The raw ratio is unbounded when
//! the estimate reconstructs the reference exactly, so every SDR value
//! is capped at `sdr_cap_db` and the error energy is floored at
//! `energy_floor * energy(reference)`, which keeps all outputs finite.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("waveform must contain at least one sample")]
    Empty,
    #[error("waveform sample {index} is not finite")]
    NonFinite { index: usize },
    #[error("sample rate must be positive")]
    ZeroRate,
    #[error("length mismatch: {expected} vs {got} samples")]
    LengthMismatch { expected: usize, got: usize },
    #[error("sample rate mismatch: {expected} Hz vs {got} Hz")]
    RateMismatch { expected: u32, got: u32 },
    #[error("reference energy {energy} is below the silence floor; SDR is undefined")]
    SilentReference { energy: f64 },
    #[error("numeric guards must be positive (cap {cap_db} dB, floor {floor})")]
    InvalidGuards { cap_db: f64, floor: f64 },
}

/// A finite single-channel sampled signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    samples: Vec<f64>,
    sample_rate_hz: u32,
}

impl Waveform {
    /// Validates that the signal is nonempty, finite, and has a positive rate.
    pub fn new(samples: Vec<f64>, sample_rate_hz: u32) -> Result<Self, SignalError> {
        if samples.is_empty() {
            return Err(SignalError::Empty);
        }
        if sample_rate_hz == 0 {
            return Err(SignalError::ZeroRate);
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(SignalError::NonFinite { index });
        }
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }
}

/// Caps and floors applied to every SDR computation.
///
/// `sdr_cap_db` bounds the output for (near-)perfect reconstruction;
/// `energy_floor` is the relative error-energy floor, i.e. the error
/// energy is clamped to at least `energy_floor * energy(reference)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericGuards {
    pub sdr_cap_db: f64,
    pub energy_floor: f64,
}

impl Default for NumericGuards {
    fn default() -> Self {
        Self {
            sdr_cap_db: 60.0,
            energy_floor: 1e-12,
        }
    }
}

impl NumericGuards {
    fn validate(&self) -> Result<(), SignalError> {
        if self.sdr_cap_db > 0.0 && self.energy_floor > 0.0 {
            Ok(())
        } else {
            Err(SignalError::InvalidGuards {
                cap_db: self.sdr_cap_db,
                floor: self.energy_floor,
            })
        }
    }
}

/// Sum of squared samples.
pub fn energy(w: &Waveform) -> f64 {
    w.samples.iter().map(|x| x * x).sum()
}

fn check_compatible(a: &Waveform, b: &Waveform) -> Result<(), SignalError> {
    if a.len() != b.len() {
        return Err(SignalError::LengthMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.sample_rate_hz != b.sample_rate_hz {
        return Err(SignalError::RateMismatch {
            expected: a.sample_rate_hz,
            got: b.sample_rate_hz,
        });
    }
    Ok(())
}

/// Signal-to-distortion ratio of `est` against `ref_` in dB, capped and floored.
///
/// A reference whose energy is at or below `energy_floor` has no defined
/// SDR and is reported as [`SignalError::SilentReference`]; active sources
/// are a data-level guarantee, so silence signals a corrupt input.
pub fn sdr(est: &Waveform, ref_: &Waveform, guards: &NumericGuards) -> Result<f64, SignalError> {
    guards.validate()?;
    check_compatible(est, ref_)?;
    let ref_energy = energy(ref_);
    if ref_energy <= guards.energy_floor {
        return Err(SignalError::SilentReference { energy: ref_energy });
    }
    let err_energy: f64 = ref_
        .samples
        .iter()
        .zip(&est.samples)
        .map(|(r, e)| {
            let d = r - e;
            d * d
        })
        .sum();
    let floored = err_energy.max(guards.energy_floor * ref_energy);
    Ok((10.0 * (ref_energy / floored).log10()).min(guards.sdr_cap_db))
}

/// SDR improvement: SDR of the estimate minus SDR of the unprocessed
/// mixture reference channel, both against the same reference source.
pub fn sdri(
    est: &Waveform,
    ref_: &Waveform,
    mixture_ref_channel: &Waveform,
    guards: &NumericGuards,
) -> Result<f64, SignalError> {
    let est_sdr = sdr(est, ref_, guards)?;
    let mix_sdr = sdr(mixture_ref_channel, ref_, guards)?;
    Ok(est_sdr - mix_sdr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn wave(samples: Vec<f64>) -> Waveform {
        Waveform::new(samples, 32_000).unwrap()
    }

    fn noise(seed: u64, n: usize) -> Waveform {
        let mut r = stream(seed, 99, 0);
        wave((0..n).map(|_| r.symmetric()).collect())
    }

    /// Straight re-evaluation of the SDR and SDRi formulas, kept free of
    /// the library call path so it can serve as an independent oracle.
    fn sdr_formula(est: &[f64], ref_: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..ref_.len() {
            num += ref_[i] * ref_[i];
            den += (ref_[i] - est[i]) * (ref_[i] - est[i]);
        }
        10.0 * (num / den).log10()
    }

    #[test]
    fn waveform_rejects_bad_input() {
        assert_eq!(Waveform::new(vec![], 32_000), Err(SignalError::Empty));
        assert_eq!(
            Waveform::new(vec![1.0, f64::NAN], 32_000),
            Err(SignalError::NonFinite { index: 1 })
        );
        assert_eq!(Waveform::new(vec![1.0], 0), Err(SignalError::ZeroRate));
    }

    #[test]
    fn energy_of_zero_signal() {
        assert_eq!(energy(&wave(vec![0.0; 100])), 0.0);
    }

    #[test]
    fn energy_of_single_sample() {
        assert_eq!(energy(&wave(vec![3.0])), 9.0);
    }

    #[test]
    fn energy_of_constant_signal() {
        assert_eq!(energy(&wave(vec![0.5; 32_000])), 8_000.0);
    }

    #[test]
    fn sdr_of_perfect_estimate_is_capped() {
        let s = noise(1, 4000);
        let g = NumericGuards::default();
        assert_eq!(sdr(&s, &s, &g).unwrap(), 60.0);
    }

    #[test]
    fn sdr_of_doubled_estimate_is_zero() {
        let s = noise(2, 4000);
        let doubled = wave(s.samples().iter().map(|x| 2.0 * x).collect());
        let got = sdr(&doubled, &s, &NumericGuards::default()).unwrap();
        assert!(got.abs() < 1e-12, "got {got}");
    }

    #[test]
    fn sdr_of_constructed_10db_estimate() {
        let s = noise(3, 8000);
        let n = noise(4, 8000);
        let beta = (energy(&s) / (energy(&n) * 10f64.powf(1.0))).sqrt();
        let est = wave(
            s.samples()
                .iter()
                .zip(n.samples())
                .map(|(a, b)| a + beta * b)
                .collect(),
        );
        let got = sdr(&est, &s, &NumericGuards::default()).unwrap();
        assert!((got - 10.0).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn sdr_errors() {
        let g = NumericGuards::default();
        let a = noise(5, 100);
        let b = noise(5, 101);
        assert!(matches!(
            sdr(&a, &b, &g),
            Err(SignalError::LengthMismatch { .. })
        ));
        let silent = wave(vec![0.0; 100]);
        assert!(matches!(
            sdr(&a, &silent, &g),
            Err(SignalError::SilentReference { .. })
        ));
        let other_rate = Waveform::new(a.samples().to_vec(), 16_000).unwrap();
        assert!(matches!(
            sdr(&other_rate, &a, &g),
            Err(SignalError::RateMismatch { .. })
        ));
        let bad = NumericGuards {
            sdr_cap_db: -1.0,
            energy_floor: 1e-12,
        };
        assert!(matches!(
            sdr(&a, &a, &bad),
            Err(SignalError::InvalidGuards { .. })
        ));
    }

    #[test]
    fn sdri_of_mixture_as_estimate_is_exactly_zero() {
        let s = noise(6, 4000);
        let y = noise(7, 4000);
        let g = NumericGuards::default();
        assert_eq!(sdri(&y, &s, &y, &g).unwrap(), 0.0);
    }

    #[test]
    fn sdri_of_perfect_estimate_adds_cap_to_mixture_sdr() {
        let s = noise(8, 4000);
        let g = NumericGuards::default();
        // Mixture chosen so SDR(y, s) is some fixed negative value.
        let n = noise(9, 4000);
        let beta = (energy(&s) / (energy(&n) * 10f64.powf(-0.32))).sqrt();
        let y = wave(
            s.samples()
                .iter()
                .zip(n.samples())
                .map(|(a, b)| a + beta * b)
                .collect(),
        );
        let mix_sdr = sdr(&y, &s, &g).unwrap();
        assert!((mix_sdr + 3.2).abs() < 1e-9);
        let got = sdri(&s, &s, &y, &g).unwrap();
        assert!((got - (60.0 + 3.2)).abs() < 1e-9, "got {got}");
    }

    #[test]
    fn sdri_matches_independent_formula_evaluation() {
        // Randomly scaled noisy estimate, cross-checked against a direct
        // re-evaluation of both formulas.
        let s = noise(10, 8000);
        let mut r = stream(11, 0, 0);
        let y = wave(
            s.samples()
                .iter()
                .map(|x| 0.7 * x + 0.4 * r.symmetric())
                .collect(),
        );
        let est = wave(
            s.samples()
                .iter()
                .map(|x| 1.3 * x + 0.05 * r.symmetric())
                .collect(),
        );
        let g = NumericGuards::default();
        let got = sdri(&est, &s, &y, &g).unwrap();
        let expected =
            sdr_formula(est.samples(), s.samples()) - sdr_formula(y.samples(), s.samples());
        assert!((got - expected).abs() < 1e-12, "got {got} want {expected}");
    }

    #[test]
    fn sdr_is_scale_invariant() {
        let s = noise(12, 2000);
        let mut r = stream(13, 0, 0);
        let est = wave(
            s.samples()
                .iter()
                .map(|x| x + 0.1 * r.symmetric())
                .collect(),
        );
        let g = NumericGuards::default();
        let base = sdr(&est, &s, &g).unwrap();
        // Powers of two and sign flips scale both energies exactly.
        for alpha in [2.0, 0.5, -1.0, 4.0] {
            let se = wave(est.samples().iter().map(|x| alpha * x).collect());
            let sr = wave(s.samples().iter().map(|x| alpha * x).collect());
            assert_eq!(sdr(&se, &sr, &g).unwrap(), base);
        }
        for alpha in [1.7, 0.013, -3.9] {
            let se = wave(est.samples().iter().map(|x| alpha * x).collect());
            let sr = wave(s.samples().iter().map(|x| alpha * x).collect());
            assert!((sdr(&se, &sr, &g).unwrap() - base).abs() < 1e-9);
        }
    }

    #[test]
    fn sdr_decreases_with_noise_level() {
        let s = noise(14, 2000);
        let n = noise(15, 2000);
        let g = NumericGuards::default();
        let mut last = f64::INFINITY;
        for beta in [0.01, 0.1, 0.5, 1.0, 4.0] {
            let est = wave(
                s.samples()
                    .iter()
                    .zip(n.samples())
                    .map(|(a, b)| a + beta * b)
                    .collect(),
            );
            let v = sdr(&est, &s, &g).unwrap();
            assert!(v < last, "beta {beta}: {v} !< {last}");
            last = v;
        }
    }

    #[test]
    fn sdr_is_finite_and_capped_in_degenerate_cases() {
        let g = NumericGuards::default();
        let s = wave(vec![1e-3; 50]);
        let tiny = wave(s.samples().iter().map(|x| x + f64::EPSILON * x).collect());
        let v = sdr(&tiny, &s, &g).unwrap();
        assert!(v.is_finite() && v <= g.sdr_cap_db);
    }
}
