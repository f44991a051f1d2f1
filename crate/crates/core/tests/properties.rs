//! Property-based invariants: metric axioms for the trace distance,
//! word-code round trips, and structural guarantees that must hold for
//! every valid machine, not just the zoo.

use proptest::prelude::*;
use statmem_core::alphabet::Alphabet;
use statmem_core::perturb::{random_zero_sum_delta, PerturbationSpec};
use statmem_core::quantum::{gram_from_overlaps, memory_overlaps, statistical_complexity};
use statmem_core::rng::{seeded_rng, substream_seed};
use statmem_core::words::trace_distance;
use statmem_core::zoo::random_unifilar;

/// A normalized probability vector of the given dimension.
fn prob_vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-3..1.0f64, dim).prop_map(|mut v| {
        let sum: f64 = v.iter().sum();
        for x in &mut v {
            *x /= sum;
        }
        v
    })
}

proptest! {
    #[test]
    fn trace_distance_is_a_metric(
        p in prob_vector(4),
        q in prob_vector(4),
        r in prob_vector(4),
    ) {
        let dpq = trace_distance(&p, &q).unwrap();
        let dqp = trace_distance(&q, &p).unwrap();
        prop_assert!((dpq - dqp).abs() <= 1e-15);
        prop_assert!((0.0..=1.0).contains(&dpq));
        prop_assert!(trace_distance(&p, &p).unwrap() == 0.0);
        let dpr = trace_distance(&p, &r).unwrap();
        let drq = trace_distance(&r, &q).unwrap();
        prop_assert!(dpq <= dpr + drq + 1e-15);
    }

    #[test]
    fn word_codes_roundtrip(
        size in 2usize..5,
        indices in prop::collection::vec(0u8..4, 0..9),
    ) {
        let symbols: Vec<char> = "abcd".chars().take(size).collect();
        let alphabet = Alphabet::new(symbols).unwrap();
        let word: Vec<u8> = indices.iter().map(|&i| i % size as u8).collect();
        let code = alphabet.encode(&word).unwrap();
        prop_assert!(code < alphabet.word_space(word.len()).unwrap());
        prop_assert_eq!(alphabet.decode(code, word.len()), word);
    }

    #[test]
    fn random_machines_satisfy_structural_bounds(seed in any::<u64>()) {
        let machine = random_unifilar(4, seed, 0);

        // Stationarity: π is a fixed point of the transition operator.
        let t = machine.transition_matrix();
        let pi = machine.stationary();
        for (k, row) in t.iter().enumerate() {
            let image: f64 = row.iter().zip(pi).map(|(a, b)| a * b).sum();
            prop_assert!((image - pi[k]).abs() <= 1e-10);
        }

        // Exact word probabilities form a distribution.
        let dist = machine.word_distribution(5).unwrap();
        prop_assert!((dist.total_mass() - 1.0).abs() <= 1e-10);
        for (_, p) in dist.iter() {
            prop_assert!(p >= 0.0);
        }

        // The memory Gram is well-formed and its entropy never exceeds the
        // classical memory.
        let overlaps = memory_overlaps(&machine).unwrap();
        let gram = gram_from_overlaps(&overlaps, pi).unwrap();
        let spectrum = gram.spectrum().unwrap();
        prop_assert!(spectrum.entropy_bits <= statistical_complexity(&machine) + 1e-9);
        prop_assert!((gram.matrix().trace() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn zero_sum_perturbations_preserve_mass(seed in any::<u64>(), scale in 0.0..1.0f64) {
        let machine = random_unifilar(3, seed, 1);
        let base = machine.word_distribution(4).unwrap();
        let delta = random_zero_sum_delta(&base, &mut seeded_rng(substream_seed(seed, &[1])));

        // The largest admissible ε keeps P + εΔP ≥ 0; scale inside it.
        let headroom = base
            .iter()
            .filter_map(|(w, p)| {
                let d = delta.get(&w).copied().unwrap_or(0.0);
                (d < 0.0).then(|| p / -d)
            })
            .fold(f64::INFINITY, f64::min);
        let epsilon = if headroom.is_finite() { scale * headroom * 0.99 } else { 0.0 };

        let spec = PerturbationSpec::new(base.clone(), delta, epsilon).unwrap();
        let perturbed = spec.apply();
        prop_assert!((perturbed.total_mass() - base.total_mass()).abs() <= 1e-9);
        for (w, p) in perturbed.iter() {
            prop_assert!(p >= 0.0, "word {} got {}", w, p);
        }
    }
}
