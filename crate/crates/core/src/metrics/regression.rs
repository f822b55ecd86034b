use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics<T> {
    /// Raw coefficient of determination; `None` when truth is constant.
    pub r2_raw: Option<T>,
    /// `max(0, r2_raw)`, the reported score.
    pub r2: Option<T>,
    pub mae: T,
    pub rmse: T,
}

impl<T: Scalar> RegressionMetrics<T> {
    pub fn r2_or_err(&self) -> Result<T, MetricsError> {
        self.r2.ok_or(MetricsError::ConstantTruth)
    }
}

pub fn regression_metrics<T: Scalar>(
    truth: &[T],
    pred: &[T],
) -> Result<RegressionMetrics<T>, MetricsError> {
    if truth.len() != pred.len() {
        return Err(MetricsError::LengthMismatch {
            truth: truth.len(),
            pred: pred.len(),
        });
    }
    if truth.len() < 2 {
        return Err(MetricsError::TooFew {
            n: truth.len(),
            min: 2,
        });
    }
    let n = T::from_count(truth.len());
    let mean = truth.iter().copied().sum::<T>() / n;
    let mut ss_res = T::zero();
    let mut ss_tot = T::zero();
    let mut abs = T::zero();
    for (&t, &p) in truth.iter().zip(pred) {
        ss_res += (t - p) * (t - p);
        ss_tot += (t - mean) * (t - mean);
        abs += (t - p).abs();
    }
    let r2_raw = (ss_tot > T::zero()).then(|| T::one() - ss_res / ss_tot);
    Ok(RegressionMetrics {
        r2_raw,
        r2: r2_raw.map(|r| r.max(T::zero())),
        mae: abs / n,
        rmse: (ss_res / n).sqrt(),
    })
}
