use embviz_core::metrics::{ci95, classification_metrics, regression_metrics, MetricsError};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Textbook definitions via an explicit confusion matrix.
fn naive_classification(truth: &[usize], pred: &[Option<usize>], k: usize) -> (f64, f64, f64) {
    let mut cm = vec![vec![0.0f64; k]; k];
    let mut missing = vec![0.0f64; k];
    for (&t, &p) in truth.iter().zip(pred) {
        match p {
            Some(p) => cm[t][p] += 1.0,
            None => missing[t] += 1.0,
        }
    }
    let n = truth.len() as f64;
    let acc = (0..k).map(|c| cm[c][c]).sum::<f64>() / n;
    let row = |c: usize| cm[c].iter().sum::<f64>() + missing[c];
    let col = |c: usize| (0..k).map(|r| cm[r][c]).sum::<f64>();
    let present: Vec<usize> = (0..k).filter(|&c| row(c) > 0.0).collect();
    let bal = present.iter().map(|&c| cm[c][c] / row(c)).sum::<f64>() / present.len() as f64;
    let considered: Vec<usize> = (0..k).filter(|&c| row(c) > 0.0 || col(c) > 0.0).collect();
    let f1 = considered
        .iter()
        .map(|&c| {
            let tp = cm[c][c];
            let (fp, fn_) = (col(c) - tp, row(c) - tp);
            if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fn_)
            }
        })
        .sum::<f64>()
        / considered.len() as f64;
    (acc, bal, f1)
}

fn naive_regression(t: &[f64], p: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let mean = t.iter().sum::<f64>() / n;
    let ss_res: f64 = t.iter().zip(p).map(|(a, b)| (a - b).powi(2)).sum();
    let ss_tot: f64 = t.iter().map(|a| (a - mean).powi(2)).sum();
    let mae = t.iter().zip(p).map(|(a, b)| (a - b).abs()).sum::<f64>() / n;
    (1.0 - ss_res / ss_tot, mae, (ss_res / n).sqrt())
}

#[test]
fn classification_matches_reference_on_100_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let k = rng.random_range(1..7);
        let n = rng.random_range(1..60);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        let pred: Vec<Option<usize>> = (0..n)
            .map(|_| rng.random_bool(0.9).then(|| rng.random_range(0..k)))
            .collect();
        let m = classification_metrics(&truth, &pred, k).unwrap();
        let (acc, bal, f1) = naive_classification(&truth, &pred, k);
        assert!((m.accuracy - acc).abs() < 1e-12);
        assert!((m.balanced_accuracy - bal).abs() < 1e-12);
        assert!((m.macro_f1 - f1).abs() < 1e-12);
    }
}

#[test]
fn regression_matches_reference_on_100_cases() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let n = rng.random_range(2..50);
        let t: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let m = regression_metrics(&t, &p).unwrap();
        let (r2, mae, rmse) = naive_regression(&t, &p);
        assert!((m.r2_raw.unwrap() - r2).abs() < 1e-12);
        assert_eq!(m.r2.unwrap(), r2.max(0.0));
        assert!((m.mae - mae).abs() < 1e-12);
        assert!((m.rmse - rmse).abs() < 1e-12);
    }
}

#[test]
fn r2_floor_and_constant_truth() {
    let m = regression_metrics(&[1.0, 2.0, 3.0, 4.0], &[4.0, 3.0, 2.0, 1.0]).unwrap();
    assert!(m.r2_raw.unwrap() < 0.0);
    assert_eq!(m.r2, Some(0.0));
    let m = regression_metrics(&[5.0f64, 5.0, 5.0], &[4.0, 5.0, 6.0]).unwrap();
    assert_eq!(m.r2_or_err(), Err(MetricsError::ConstantTruth));
    assert!((m.mae - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn ci95_reference_values() {
    assert!((ci95(0.5, 100) - 0.098).abs() < 1e-3);
    assert!((ci95(0.98, 10_000) - 0.00274).abs() < 1e-5);
}

proptest! {
    #[test]
    fn balanced_equals_accuracy_when_balanced(k in 1usize..6, per in 1usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth: Vec<usize> = (0..k * per).map(|i| i / per).collect();
        let mut pred: Vec<Option<usize>> = truth.iter().map(|_| Some(rng.random_range(0..k))).collect();
        for c in 0..k {
            pred[c * per] = Some(c);
        }
        let m = classification_metrics(&truth, &pred, k).unwrap();
        prop_assert!((m.balanced_accuracy - m.accuracy).abs() < 1e-12);
    }

    #[test]
    fn ci95_shrinks_with_n(p in 0.001f64..0.999, n in 1usize..100_000) {
        prop_assert!(ci95(p, n + 1) < ci95(p, n));
    }
}
