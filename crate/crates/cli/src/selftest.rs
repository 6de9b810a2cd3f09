//! Built-in correctness gate: reduced-count versions of the reduction,
//! solver-oracle, and loss-ordering suites, runnable in CI via
//! `s5eval selftest`.

use s5eval_core::assignment::{
    enumerate_class_permutations, solve_max_assignment, solve_max_assignment_bruteforce,
    ScoreMatrix, DEFAULT_ENUMERATION_LIMIT,
};
use s5eval_core::rng::{stream, Xoshiro256PlusPlus};
use s5eval_core::signal::{sdr, NumericGuards, Waveform};
use s5eval_core::{
    ca_pi_sdr_loss, ca_pi_sdri, ca_sdr_loss, ca_sdri_baseline, pi_sdr_loss, Label, LabeledSources,
    MetricConfig,
};

const RATE: u32 = 8_000;
const LEN: usize = 800;

fn white(seed: u64, n: usize) -> Waveform {
    let mut r = stream(seed, 92, 0);
    Waveform::new((0..n).map(|_| r.symmetric()).collect(), RATE).unwrap()
}

fn noisy(reference: &Waveform, level: f64, seed: u64) -> Waveform {
    let mut r = stream(seed, 93, 0);
    Waveform::new(
        reference
            .samples()
            .iter()
            .map(|x| x + level * r.symmetric())
            .collect(),
        RATE,
    )
    .unwrap()
}

fn sum_of(parts: &[&Waveform]) -> Waveform {
    let mut acc = vec![0.0f64; parts[0].len()];
    for p in parts {
        for (a, x) in acc.iter_mut().zip(p.samples()) {
            *a += x;
        }
    }
    Waveform::new(acc, RATE).unwrap()
}

/// Random mixture with all-distinct labels and FN/FP injections.
pub fn distinct_label_instance(seed: u64) -> (LabeledSources, LabeledSources, Waveform) {
    let vocab = ["a", "b", "c", "d", "e"];
    let mut r = Xoshiro256PlusPlus::from_seed(seed);
    let k = 1 + r.index(3);
    let mut picks: Vec<usize> = (0..vocab.len()).collect();
    for i in (1..picks.len()).rev() {
        picks.swap(i, r.index(i + 1));
    }
    let refs: Vec<(Label, Waveform)> = (0..k)
        .map(|i| {
            (
                Label::new(vocab[picks[i]]).unwrap(),
                white(seed * 61 + i as u64, LEN),
            )
        })
        .collect();
    let ref_waves: Vec<&Waveform> = refs.iter().map(|(_, w)| w).collect();
    let mixture = sum_of(&ref_waves);
    let mut ests: Vec<(Label, Waveform)> = Vec::new();
    for (i, (label, w)) in refs.iter().enumerate() {
        if r.next_f64() < 0.25 {
            continue; // FN
        }
        let level = 0.05 + 0.5 * r.next_f64();
        ests.push((label.clone(), noisy(w, level, seed * 67 + i as u64)));
    }
    if r.next_f64() < 0.35 {
        // FP with a label unused by the references.
        ests.push((Label::new(vocab[picks[k]]).unwrap(), white(seed * 71, LEN)));
    }
    (
        LabeledSources::new(refs).unwrap(),
        LabeledSources::new(ests).unwrap(),
        mixture,
    )
}

/// Random oracle-label instance (equal counts, matching label multisets,
/// duplicates allowed) for the loss suites.
pub fn oracle_label_instance(
    seed: u64,
    k_max: usize,
) -> (LabeledSources, LabeledSources, Waveform) {
    let vocab = ["a", "b", "c"];
    let mut r = Xoshiro256PlusPlus::from_seed(seed ^ 0xFEED);
    let k = 1 + r.index(k_max);
    let labels: Vec<Label> = (0..k)
        .map(|_| Label::new(vocab[r.index(vocab.len())]).unwrap())
        .collect();
    let refs: Vec<(Label, Waveform)> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), white(seed * 73 + i as u64, LEN)))
        .collect();
    let ref_waves: Vec<&Waveform> = refs.iter().map(|(_, w)| w).collect();
    let mixture = sum_of(&ref_waves);
    let mut order: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        order.swap(i, r.index(i + 1));
    }
    let ests: Vec<(Label, Waveform)> = (0..k)
        .map(|i| {
            let level = 0.05 + 0.8 * r.next_f64();
            (
                labels[i].clone(),
                noisy(&refs[order[i]].1, level, seed * 79 + i as u64),
            )
        })
        .collect();
    (
        LabeledSources::new(ests).unwrap(),
        LabeledSources::new(refs).unwrap(),
        mixture,
    )
}

fn check_reduction(instances: u64) -> Result<(), String> {
    let cfg = MetricConfig::default();
    for seed in 1..=instances {
        let (refs, ests, mixture) = distinct_label_instance(seed);
        let full =
            ca_pi_sdri(&refs, &ests, &mixture, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        let baseline = ca_sdri_baseline(&refs, &ests, &mixture, &cfg)
            .map_err(|e| format!("seed {seed}: {e}"))?;
        if full.metric_db != baseline {
            return Err(format!(
                "seed {seed}: CA-PI-SDRi {} != CA-SDRi {}",
                full.metric_db, baseline
            ));
        }
    }
    Ok(())
}

fn check_solver_oracle(instances: u64) -> Result<(), String> {
    for seed in 1..=instances {
        let mut r = Xoshiro256PlusPlus::from_seed(seed ^ 0xBEEF);
        let rows = 1 + r.index(5);
        let cols = 1 + r.index(8);
        let values: Vec<f64> = (0..rows * cols).map(|_| r.uniform(-40.0, 40.0)).collect();
        let m = ScoreMatrix::new(rows, cols, values).map_err(|e| e.to_string())?;
        let fast = solve_max_assignment(&m);
        let brute = solve_max_assignment_bruteforce(&m).map_err(|e| e.to_string())?;
        if fast.objective != brute.objective || fast.pairs != brute.pairs {
            return Err(format!(
                "seed {seed} ({rows}x{cols}): fast {:?} vs brute {:?}",
                fast, brute
            ));
        }
    }
    Ok(())
}

fn check_loss_chain(instances: u64, mapping_seeds: u64) -> Result<(), String> {
    let g = NumericGuards::default();
    for seed in 1..=instances {
        let (ests, refs, _mixture) = oracle_label_instance(seed, 4);
        let pi = pi_sdr_loss(&ests, &refs, &g).map_err(|e| e.to_string())?;
        let capi = ca_pi_sdr_loss(&ests, &refs, &g).map_err(|e| e.to_string())?;
        if pi.loss_value > capi.loss_value {
            return Err(format!(
                "seed {seed}: PI-SDR {} > CA-PI-SDR {}",
                pi.loss_value, capi.loss_value
            ));
        }
        for mapping_seed in 0..mapping_seeds {
            let ca =
                ca_sdr_loss(&ests, &refs, Some(mapping_seed), &g).map_err(|e| e.to_string())?;
            if capi.loss_value > ca.loss_value {
                return Err(format!(
                    "seed {seed}/{mapping_seed}: CA-PI-SDR {} > CA-SDR {}",
                    capi.loss_value, ca.loss_value
                ));
            }
        }
        let labels: Vec<Label> = refs.labels().cloned().collect();
        let perms = enumerate_class_permutations(&labels, DEFAULT_ENUMERATION_LIMIT)
            .map_err(|e| e.to_string())?;
        let k = refs.len() as f64;
        let best = perms
            .iter()
            .map(|p| {
                let total: f64 = (0..refs.len())
                    .map(|i| sdr(&ests.entries()[p[i]].1, &refs.entries()[i].1, &g).unwrap())
                    .sum();
                -total / k
            })
            .fold(f64::INFINITY, f64::min);
        if capi.loss_value != best {
            return Err(format!(
                "seed {seed}: CA-PI-SDR {} != enumeration minimum {best}",
                capi.loss_value
            ));
        }
    }
    Ok(())
}

type Check = fn() -> Result<(), String>;

/// Runs the reduced suites, printing one line per check. Returns false if
/// anything failed.
pub fn run(out: &mut dyn std::io::Write) -> std::io::Result<bool> {
    let checks: [(&str, Check); 3] = [
        (
            "reduction equivalence (CA-PI-SDRi == CA-SDRi on distinct labels)",
            || check_reduction(150),
        ),
        ("assignment solver matches brute-force oracle", || {
            check_solver_oracle(150)
        }),
        ("loss ordering chain and enumeration minimum", || {
            check_loss_chain(150, 16)
        }),
    ];
    let mut all_ok = true;
    for (name, check) in &checks {
        match check() {
            Ok(()) => writeln!(out, "PASS {name}")?,
            Err(why) => {
                all_ok = false;
                writeln!(out, "FAIL {name}: {why}")?;
            }
        }
    }
    Ok(all_ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selftest_passes_on_a_correct_build() {
        let mut out = Vec::new();
        assert!(run(&mut out).unwrap());
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.lines().all(|l| l.starts_with("PASS")));
    }
}
