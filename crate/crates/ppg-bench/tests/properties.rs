//! Randomized property checks over the metric layer.

use proptest::prelude::*;

use ppg_bench::metrics::{
    classify_accuracy, coefficient_of_variation, mape, pearson, PairedMeasurements,
};

fn hr_pairs() -> impl Strategy<Value = PairedMeasurements> {
    proptest::collection::vec((40.0f64..200.0, 0.90f64..1.10), 2..40).prop_map(|v| {
        PairedMeasurements {
            expected_bpm: v.iter().map(|(e, _)| *e).collect(),
            measured_bpm: v.iter().map(|(e, f)| e * f).collect(),
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mape_is_permutation_invariant(pairs in hr_pairs(), seed in 0u64..1000) {
        let base = mape(&pairs).unwrap().mape_pct;
        // deterministic shuffle driven by the seed
        let mut idx: Vec<usize> = (0..pairs.expected_bpm.len()).collect();
        let n = idx.len();
        for i in 0..n {
            let j = (seed as usize).wrapping_mul(31).wrapping_add(i * 7) % n;
            idx.swap(i, j);
        }
        let shuffled = PairedMeasurements {
            expected_bpm: idx.iter().map(|&i| pairs.expected_bpm[i]).collect(),
            measured_bpm: idx.iter().map(|&i| pairs.measured_bpm[i]).collect(),
        };
        let shuffled_mape = mape(&shuffled).unwrap().mape_pct;
        prop_assert!((base - shuffled_mape).abs() < 1e-9);
    }

    #[test]
    fn mape_is_scale_invariant(pairs in hr_pairs(), scale in 0.5f64..1.2) {
        let base = mape(&pairs).unwrap().mape_pct;
        let scaled = PairedMeasurements {
            expected_bpm: pairs.expected_bpm.iter().map(|v| v * scale).collect(),
            measured_bpm: pairs.measured_bpm.iter().map(|v| v * scale).collect(),
        };
        prop_assert!((base - mape(&scaled).unwrap().mape_pct).abs() < 1e-9);
    }

    #[test]
    fn pearson_is_affine_invariant(
        xs in proptest::collection::vec(-100.0f64..100.0, 3..50),
        a in -10.0f64..10.0,
        b in 0.1f64..5.0,
    ) {
        // needs genuine variation on both sides
        let ys: Vec<f64> = xs.iter().enumerate().map(|(i, v)| v + (i as f64).sin()).collect();
        let spread = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>()
        };
        prop_assume!(spread(&xs) > 1e-6 && spread(&ys) > 1e-6);
        let base = pearson(&xs, &ys).unwrap();
        let transformed: Vec<f64> = ys.iter().map(|v| a + b * v).collect();
        prop_assert!((base - pearson(&xs, &transformed).unwrap()).abs() < 1e-7);
    }

    #[test]
    fn cov_is_scale_invariant(
        values in proptest::collection::vec(1.0f64..100.0, 2..40),
        scale in 0.1f64..10.0,
    ) {
        let base = coefficient_of_variation(&values).unwrap();
        let scaled: Vec<f64> = values.iter().map(|v| v * scale).collect();
        prop_assert!((base - coefficient_of_variation(&scaled).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn classification_is_deterministic_and_monotone(
        seed in 0u64..10_000,
        low in proptest::collection::vec(0.0f64..5.0, 10..40),
        high in proptest::collection::vec(15.0f64..40.0, 10..40),
    ) {
        let a = classify_accuracy(&low, seed).unwrap();
        let b = classify_accuracy(&low, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.pass, "all APEs below 5% must pass, got upper {}", a.ci95_upper_pct);
        let c = classify_accuracy(&high, seed).unwrap();
        prop_assert!(!c.pass, "all APEs above 15% must fail, got upper {}", c.ci95_upper_pct);
    }
}
