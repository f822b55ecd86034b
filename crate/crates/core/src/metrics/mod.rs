//! Evaluation metrics and reasoning-trace statistics.

mod classification;
mod reasoning;
mod regression;

use thiserror::Error;

pub use classification::{classification_metrics, ClassificationMetrics};
pub use reasoning::{analyze_reasoning, ReasoningRecord, ReasoningStats, TraceStats};
pub use regression::{regression_metrics, RegressionMetrics};

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("length mismatch: {truth} truths, {pred} predictions")]
    LengthMismatch { truth: usize, pred: usize },
    #[error("need at least {min} samples, got {n}")]
    TooFew { n: usize, min: usize },
    #[error("class {class} out of range for {n_classes} classes")]
    ClassOutOfRange { class: usize, n_classes: usize },
    #[error("R² undefined: truth is constant")]
    ConstantTruth,
}

/// Half-width of the 95% normal-approximation interval for a proportion.
/// `p` is clamped to `[0, 1]` and `n` to at least one.
pub fn ci95(p: f64, n: usize) -> f64 {
    let p = p.clamp(0.0, 1.0);
    1.96 * (p * (1.0 - p) / n.max(1) as f64).sqrt()
}
