//! Cross-module properties: reduction to the baseline metric, loss
//! ordering, closed-form synthetic checks, and solver/oracle agreement.

use proptest::prelude::*;

use s5eval_core::assignment::{
    enumerate_class_permutations, solve_max_assignment, solve_max_assignment_bruteforce,
    ScoreMatrix, DEFAULT_ENUMERATION_LIMIT,
};
use s5eval_core::rng::{stream, Xoshiro256PlusPlus};
use s5eval_core::scene::{generate_scene, make_estimate_with_sdr, SceneSpec};
use s5eval_core::signal::{sdr, NumericGuards, Waveform};
use s5eval_core::{
    ca_pi_sdr_loss, ca_pi_sdri, ca_sdr_loss, ca_sdri_baseline, pi_sdr_loss, pi_sdri, Label,
    LabeledSources, MetricConfig,
};

const RATE: u32 = 8_000;
const LEN: usize = 1_600;

fn white(seed: u64, n: usize) -> Waveform {
    let mut r = stream(seed, 90, 0);
    Waveform::new((0..n).map(|_| r.symmetric()).collect(), RATE).unwrap()
}

fn noisy(reference: &Waveform, level: f64, seed: u64) -> Waveform {
    let mut r = stream(seed, 91, 0);
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

/// A random mixture instance with all-distinct labels and random FN/FP
/// injections, for the reduction property.
fn distinct_label_instance(seed: u64) -> (LabeledSources, LabeledSources, Waveform) {
    let vocab = ["a", "b", "c", "d", "e"];
    let mut r = Xoshiro256PlusPlus::from_seed(seed);
    let k = 1 + r.index(3);
    let mut picks: Vec<usize> = (0..vocab.len()).collect();
    for i in (1..picks.len()).rev() {
        picks.swap(i, r.index(i + 1));
    }
    let ref_labels: Vec<&str> = picks[..k].iter().map(|&i| vocab[i]).collect();

    let refs: Vec<(Label, Waveform)> = ref_labels
        .iter()
        .enumerate()
        .map(|(i, t)| (Label::new(*t).unwrap(), white(seed * 100 + i as u64, LEN)))
        .collect();
    let ref_waves: Vec<&Waveform> = refs.iter().map(|(_, w)| w).collect();
    let mixture = sum_of(&ref_waves);

    let mut ests: Vec<(Label, Waveform)> = Vec::new();
    for (i, (label, w)) in refs.iter().enumerate() {
        // Random FN injection: drop this reference's estimate.
        if r.next_f64() < 0.25 {
            continue;
        }
        let level = 0.05 + 0.5 * r.next_f64();
        ests.push((label.clone(), noisy(w, level, seed * 200 + i as u64)));
    }
    // Random FP injection: an estimate with an unused label.
    if r.next_f64() < 0.35 {
        let unused = vocab[picks[k]];
        ests.push((Label::new(unused).unwrap(), white(seed * 300 + 17, LEN)));
    }
    (
        LabeledSources::new(refs).unwrap(),
        LabeledSources::new(ests).unwrap(),
        mixture,
    )
}

/// A random oracle-label instance (equal counts, matching multisets),
/// possibly with duplicated labels, for the loss properties.
fn oracle_label_instance(seed: u64, k_max: usize) -> (LabeledSources, LabeledSources, Waveform) {
    let vocab = ["a", "b", "c"];
    let mut r = Xoshiro256PlusPlus::from_seed(seed ^ 0xFEED);
    let k = 1 + r.index(k_max);
    let labels: Vec<Label> = (0..k)
        .map(|_| Label::new(vocab[r.index(vocab.len())]).unwrap())
        .collect();
    let refs: Vec<(Label, Waveform)> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.clone(), white(seed * 400 + i as u64, LEN)))
        .collect();
    let ref_waves: Vec<&Waveform> = refs.iter().map(|(_, w)| w).collect();
    let mixture = sum_of(&ref_waves);
    // Estimates carry the same label multiset but scrambled targets, so
    // the within-class alignment has real work to do.
    let mut order: Vec<usize> = (0..k).collect();
    for i in (1..k).rev() {
        order.swap(i, r.index(i + 1));
    }
    let ests: Vec<(Label, Waveform)> = (0..k)
        .map(|i| {
            let level = 0.05 + 0.8 * r.next_f64();
            (
                labels[i].clone(),
                noisy(&refs[order[i]].1, level, seed * 500 + i as u64),
            )
        })
        .collect();
    (
        LabeledSources::new(ests).unwrap(),
        LabeledSources::new(refs).unwrap(),
        mixture,
    )
}

#[test]
fn reduction_to_baseline_is_exact_on_distinct_labels() {
    let cfg = MetricConfig::default();
    let with_penalties = MetricConfig {
        penalty_fn: -25.0,
        penalty_fp: -8.0,
        ..MetricConfig::default()
    };
    for seed in 1..=200u64 {
        let (refs, ests, mixture) = distinct_label_instance(seed);
        for cfg in [&cfg, &with_penalties] {
            let full = ca_pi_sdri(&refs, &ests, &mixture, cfg).unwrap();
            let baseline = ca_sdri_baseline(&refs, &ests, &mixture, cfg).unwrap();
            assert_eq!(full.metric_db, baseline, "seed {seed}");
        }
    }
}

#[test]
fn loss_chain_and_enumeration_minimum() {
    let g = NumericGuards::default();
    for seed in 1..=150u64 {
        let (ests, refs, _mixture) = oracle_label_instance(seed, 4);
        let pi = pi_sdr_loss(&ests, &refs, &g).unwrap();
        let capi = ca_pi_sdr_loss(&ests, &refs, &g).unwrap();
        assert!(pi.loss_value <= capi.loss_value, "seed {seed}");
        for mapping_seed in 0..16u64 {
            let ca = ca_sdr_loss(&ests, &refs, Some(mapping_seed), &g).unwrap();
            assert!(
                capi.loss_value <= ca.loss_value,
                "seed {seed}/{mapping_seed}"
            );
        }

        // Definitional check: CA-PI-SDR is the minimum over the
        // class-preserving permutations, by direct enumeration.
        let labels: Vec<Label> = refs.labels().cloned().collect();
        let perms = enumerate_class_permutations(&labels, DEFAULT_ENUMERATION_LIMIT).unwrap();
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
        assert_eq!(capi.loss_value, best, "seed {seed}");
    }
}

#[test]
fn losses_coincide_at_k1() {
    let g = NumericGuards::default();
    let r = white(7, LEN);
    let refs = LabeledSources::new(vec![(Label::new("a").unwrap(), r.clone())]).unwrap();
    let ests = LabeledSources::new(vec![(Label::new("a").unwrap(), noisy(&r, 0.3, 8))]).unwrap();
    let a = pi_sdr_loss(&ests, &refs, &g).unwrap().loss_value;
    let b = ca_pi_sdr_loss(&ests, &refs, &g).unwrap().loss_value;
    let c = ca_sdr_loss(&ests, &refs, None, &g).unwrap().loss_value;
    assert_eq!(a, b);
    assert_eq!(b, c);
}

#[test]
fn closed_form_scene_metric_equals_mean_target_sdri() {
    let cfg = MetricConfig::default();
    for seed in 1..=40u64 {
        let mut r = Xoshiro256PlusPlus::from_seed(seed ^ 0xC0FFEE);
        let label_sets: [&[&str]; 4] = [&["a"], &["a", "a"], &["a", "b", "a"], &["a", "a", "a"]];
        let tokens = label_sets[r.index(label_sets.len())];
        let mut spec = SceneSpec::new(
            seed,
            tokens.iter().map(|t| Label::new(*t).unwrap()).collect(),
        );
        spec.duration_s = 0.25;
        spec.sample_rate_hz = 8_000;
        spec.n_interference = r.index(3);
        spec.noise_floor_db = Some(-45.0);
        let scene = generate_scene(&spec).unwrap();

        // Per-source SDRi targets in [0, 20] dB, same-class targets kept
        // at least 3 dB apart so the optimal pairing is unambiguous.
        let mut targets: Vec<f64> = Vec::new();
        for i in 0..tokens.len() {
            loop {
                let t = r.uniform(0.0, 20.0);
                let clash = (0..i).any(|j| tokens[j] == tokens[i] && (targets[j] - t).abs() < 3.0);
                if !clash {
                    targets.push(t);
                    break;
                }
            }
        }

        let guards = NumericGuards::default();
        let ests: Vec<(Label, Waveform)> = scene
            .references
            .iter()
            .zip(&targets)
            .enumerate()
            .map(|(i, ((label, reference), &t))| {
                let mix_sdr = sdr(&scene.mixture_ref, reference, &guards).unwrap();
                let est =
                    make_estimate_with_sdr(reference, t + mix_sdr, seed * 1000 + i as u64).unwrap();
                (label.clone(), est)
            })
            .collect();
        let ests = LabeledSources::new(ests).unwrap();

        let eval = ca_pi_sdri(&scene.references, &ests, &scene.mixture_ref, &cfg).unwrap();
        let mean: f64 = targets.iter().sum::<f64>() / targets.len() as f64;
        assert!(
            (eval.metric_db - mean).abs() < 1e-6,
            "seed {seed}: {} vs {mean}",
            eval.metric_db
        );
        // The assignment must have picked the constructed pairing.
        for comp in &eval.components {
            for &(est_i, ref_j) in &comp.assignment.pairs {
                assert_eq!(est_i, ref_j, "seed {seed} label {}", comp.label);
            }
        }
    }
}

#[test]
fn pi_sdri_bounds_the_class_constrained_separation_term() {
    let cfg = MetricConfig::default();
    for seed in 1..=60u64 {
        let (ests, refs, mixture) = oracle_label_instance(seed, 3);
        let unconstrained = pi_sdri(&refs, &ests, &mixture, &cfg).unwrap();
        let eval = ca_pi_sdri(&refs, &ests, &mixture, &cfg).unwrap();
        let constrained: f64 = eval
            .components
            .iter()
            .map(|c| c.assignment.objective)
            .sum::<f64>()
            / refs.len() as f64;
        assert!(
            unconstrained >= constrained - 1e-9,
            "seed {seed}: {unconstrained} < {constrained}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solver_matches_bruteforce(seed in 0u64..1_000_000) {
        let mut r = Xoshiro256PlusPlus::from_seed(seed);
        let rows = 1 + r.index(5);
        let cols = 1 + r.index(8);
        let values: Vec<f64> = (0..rows * cols).map(|_| r.uniform(-40.0, 40.0)).collect();
        let m = ScoreMatrix::new(rows, cols, values).unwrap();
        let fast = solve_max_assignment(&m);
        let brute = solve_max_assignment_bruteforce(&m).unwrap();
        prop_assert_eq!(fast.objective, brute.objective);
        prop_assert_eq!(fast.pairs, brute.pairs);
    }

    #[test]
    fn estimates_land_on_requested_sdr(target in 0.0f64..40.0, seed in 0u64..100_000) {
        let reference = white(seed.wrapping_add(99), 400);
        let est = make_estimate_with_sdr(&reference, target, seed).unwrap();
        let got = sdr(&est, &reference, &NumericGuards::default()).unwrap();
        prop_assert!((got - target).abs() < 1e-9);
    }

    #[test]
    fn sdr_stays_finite_and_capped(seed in 0u64..100_000, level in 0.0f64..4.0) {
        let reference = white(seed.wrapping_add(7), 256);
        let est = noisy(&reference, level, seed.wrapping_add(8));
        let g = NumericGuards::default();
        let v = sdr(&est, &reference, &g).unwrap();
        prop_assert!(v.is_finite());
        prop_assert!(v <= g.sdr_cap_db);
    }

    #[test]
    fn metric_is_invariant_under_entry_shuffles(seed in 0u64..100_000) {
        let (ests, refs, mixture) = oracle_label_instance(seed, 3);
        let cfg = MetricConfig::default();
        let base = ca_pi_sdri(&refs, &ests, &mixture, &cfg).unwrap().metric_db;
        let mut r = Xoshiro256PlusPlus::from_seed(seed ^ 0xABCD);
        let mut shuffled_refs = refs.entries().to_vec();
        let mut shuffled_ests = ests.entries().to_vec();
        for i in (1..shuffled_refs.len()).rev() {
            shuffled_refs.swap(i, r.index(i + 1));
        }
        for i in (1..shuffled_ests.len()).rev() {
            shuffled_ests.swap(i, r.index(i + 1));
        }
        let refs2 = LabeledSources::new(shuffled_refs).unwrap();
        let ests2 = LabeledSources::new(shuffled_ests).unwrap();
        let got = ca_pi_sdri(&refs2, &ests2, &mixture, &cfg).unwrap().metric_db;
        prop_assert_eq!(got, base);
    }
}
