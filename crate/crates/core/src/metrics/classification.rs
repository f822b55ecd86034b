use serde::{Deserialize, Serialize};

use super::MetricsError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationMetrics {
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub macro_f1: f64,
}

/// Accuracy, balanced accuracy and macro F1.
///
/// A `None` prediction (unparseable answer) is wrong and counts as no
/// prediction for any class. Balanced accuracy averages recall over classes
/// present in `truth`. Macro F1 averages over classes present in `truth` or
/// predicted at least once; a predicted class absent from `truth` scores 0.
pub fn classification_metrics(
    truth: &[usize],
    pred: &[Option<usize>],
    n_classes: usize,
) -> Result<ClassificationMetrics, MetricsError> {
    if truth.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricsError::TooFew { n: 0, min: 1 });
    }
    let check = |class: usize| {
        if class >= n_classes {
            Err(MetricsError::ClassOutOfRange { class, n_classes })
        } else {
            Ok(())
        }
    };
    let mut support = vec![0usize; n_classes];
    let mut predicted = vec![0usize; n_classes];
    let mut hits = vec![0usize; n_classes];
    for (&t, &p) in truth.iter().zip(pred) {
        check(t)?;
        support[t] += 1;
        if let Some(p) = p {
            check(p)?;
            predicted[p] += 1;
            if p == t {
                hits[t] += 1;
            }
        }
    }
    let n = truth.len() as f64;
    let accuracy = hits.iter().sum::<usize>() as f64 / n;

    let recalls: Vec<f64> = (0..n_classes)
        .filter(|&c| support[c] > 0)
        .map(|c| hits[c] as f64 / support[c] as f64)
        .collect();
    let balanced_accuracy = recalls.iter().sum::<f64>() / recalls.len() as f64;

    let f1s: Vec<f64> = (0..n_classes)
        .filter(|&c| support[c] > 0 || predicted[c] > 0)
        .map(|c| {
            let precision = if predicted[c] > 0 {
                hits[c] as f64 / predicted[c] as f64
            } else {
                0.0
            };
            let recall = if support[c] > 0 {
                hits[c] as f64 / support[c] as f64
            } else {
                0.0
            };
            if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            }
        })
        .collect();
    let macro_f1 = f1s.iter().sum::<f64>() / f1s.len() as f64;

    Ok(ClassificationMetrics {
        accuracy,
        balanced_accuracy,
        macro_f1,
    })
}
