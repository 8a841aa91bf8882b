//! Confusion-matrix metrics with anomaly as the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub f_measure: f64,
    pub runtime_seconds: f64,
    pub batch_fraction: f64,
    /// Names of measures whose denominator was zero (reported as 0).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl Metrics {
    pub fn with_runtime(mut self, seconds: f64) -> Self {
        self.runtime_seconds = seconds;
        self
    }

    pub fn with_batch_fraction(mut self, fraction: f64) -> Self {
        self.batch_fraction = fraction;
        self
    }
}

/// Standard confusion-matrix measures. Zero-denominator cells yield 0 and
/// the affected measure is listed in `warnings`.
pub fn compute_metrics(predicted: &[bool], truth: &[bool]) -> Result<Metrics> {
    if predicted.len() != truth.len() {
        return Err(Error::Data(format!(
            "prediction/truth length mismatch: {} vs {}",
            predicted.len(),
            truth.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::EmptyData("metrics require at least one point"));
    }
    let mut tp = 0.0;
    let mut fp = 0.0;
    let mut tn = 0.0;
    let mut fnn = 0.0;
    for (&p, &t) in predicted.iter().zip(truth) {
        match (p, t) {
            (true, true) => tp += 1.0,
            (true, false) => fp += 1.0,
            (false, false) => tn += 1.0,
            (false, true) => fnn += 1.0,
        }
    }
    let mut warnings = Vec::new();
    let mut ratio = |name: &str, num: f64, den: f64| {
        if den == 0.0 {
            warnings.push(name.to_string());
            0.0
        } else {
            num / den
        }
    };
    let precision = ratio("precision", tp, tp + fp);
    let recall = ratio("recall", tp, tp + fnn);
    let specificity = ratio("specificity", tn, tn + fp);
    let accuracy = (tp + tn) / predicted.len() as f64;
    let f_measure = ratio("f_measure", 2.0 * precision * recall, precision + recall);
    Ok(Metrics {
        precision,
        recall,
        specificity,
        accuracy,
        f_measure,
        runtime_seconds: 0.0,
        batch_fraction: 0.0,
        warnings,
    })
}
