//! Classification metrics: per-class precision/recall/F1, macro-F1, and
//! accuracy, computed from confusion counts with label 1 (antonym) as the
//! positive class. Zero-support denominators yield 0, never NaN, and are
//! counted as warnings.

use serde::Serialize;

use crate::error::{Error, Result};

/// Confusion counts and the derived metrics for a binary evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    /// Indexed by class label (0 = synonym, 1 = antonym).
    pub precision: [f64; 2],
    pub recall: [f64; 2],
    pub f1: [f64; 2],
    pub macro_f1: f64,
    pub accuracy: f64,
    /// How many precision/recall/F1 values hit a zero denominator.
    pub zero_division_warnings: usize,
}

fn safe_div(num: f64, den: f64, warnings: &mut usize) -> f64 {
    if den == 0.0 {
        *warnings += 1;
        0.0
    } else {
        num / den
    }
}

impl EvalReport {
    /// Build a report from confusion counts (label 1 positive).
    pub fn from_confusion(tp: usize, fp: usize, tn: usize, fn_: usize) -> Result<Self> {
        let total = tp + fp + tn + fn_;
        if total == 0 {
            return Err(Error::InvalidInput("evaluation over zero pairs".into()));
        }
        let mut warnings = 0;
        // class 1 (antonym, positive)
        let p1 = safe_div(tp as f64, (tp + fp) as f64, &mut warnings);
        let r1 = safe_div(tp as f64, (tp + fn_) as f64, &mut warnings);
        let f1_1 = safe_div(2.0 * p1 * r1, p1 + r1, &mut warnings);
        // class 0 (synonym, negative)
        let p0 = safe_div(tn as f64, (tn + fn_) as f64, &mut warnings);
        let r0 = safe_div(tn as f64, (tn + fp) as f64, &mut warnings);
        let f1_0 = safe_div(2.0 * p0 * r0, p0 + r0, &mut warnings);

        Ok(EvalReport {
            tp,
            fp,
            tn,
            fn_,
            precision: [p0, p1],
            recall: [r0, r1],
            f1: [f1_0, f1_1],
            macro_f1: (f1_0 + f1_1) / 2.0,
            accuracy: (tp + tn) as f64 / total as f64,
            zero_division_warnings: warnings,
        })
    }

    /// Build a report from predicted and true labels.
    pub fn from_labels(predicted: &[u8], actual: &[u8]) -> Result<Self> {
        if predicted.len() != actual.len() {
            return Err(Error::InvalidInput(format!(
                "{} predictions for {} labels",
                predicted.len(),
                actual.len()
            )));
        }
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&p, &y) in predicted.iter().zip(actual) {
            match (p, y) {
                (1, 1) => tp += 1,
                (1, 0) => fp += 1,
                (0, 0) => tn += 1,
                (0, 1) => fn_ += 1,
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "labels must be 0 or 1, got predicted {p}, actual {y}"
                    )))
                }
            }
        }
        EvalReport::from_confusion(tp, fp, tn, fn_)
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Decision threshold: probabilities at or above 0.5 classify as label 1.
pub fn threshold_label(prob: f64) -> u8 {
    if prob >= 0.5 {
        1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Rng, Stream};

    #[test]
    fn perfect_predictions() {
        let r = EvalReport::from_labels(&[1, 0, 1, 0], &[1, 0, 1, 0]).unwrap();
        assert_eq!(r.macro_f1, 1.0);
        assert_eq!(r.accuracy, 1.0);
        assert_eq!(r.f1, [1.0, 1.0]);
        assert_eq!(r.zero_division_warnings, 0);
    }

    #[test]
    fn worked_example() {
        // preds [1,1,0,0] vs labels [1,0,0,0]
        let r = EvalReport::from_labels(&[1, 1, 0, 0], &[1, 0, 0, 0]).unwrap();
        assert_eq!((r.tp, r.fp, r.tn, r.fn_), (1, 1, 2, 0));
        assert!((r.precision[1] - 0.5).abs() < 1e-12);
        assert!((r.recall[1] - 1.0).abs() < 1e-12);
        assert!((r.f1[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.precision[0] - 1.0).abs() < 1e-12);
        assert!((r.recall[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f1[0] - 0.8).abs() < 1e-12);
        assert!((r.macro_f1 - 0.7333).abs() < 1e-4);
        assert!((r.accuracy - 0.75).abs() < 1e-12);
    }

    #[test]
    fn all_one_predictions_on_balanced_data() {
        let r = EvalReport::from_labels(&[1, 1, 1, 1], &[1, 0, 1, 0]).unwrap();
        assert_eq!(r.f1[0], 0.0);
        assert!((r.macro_f1 - r.f1[1] / 2.0).abs() < 1e-12);
        assert!(r.zero_division_warnings > 0);
    }

    #[test]
    fn zero_support_never_nan() {
        // no positives anywhere
        let r = EvalReport::from_labels(&[0, 0], &[0, 0]).unwrap();
        assert_eq!(r.precision[1], 0.0);
        assert_eq!(r.recall[1], 0.0);
        assert_eq!(r.f1[1], 0.0);
        assert!(!r.macro_f1.is_nan());
        assert!(r.zero_division_warnings > 0);
    }

    #[test]
    fn empty_input_rejected() {
        assert!(EvalReport::from_labels(&[], &[]).is_err());
    }

    #[test]
    fn threshold_tie_goes_to_antonym() {
        assert_eq!(threshold_label(0.5), 1);
        assert_eq!(threshold_label(0.4999999), 0);
    }

    #[test]
    fn matches_brute_force_on_random_vectors() {
        let mut rng = Rng::seeded(123, Stream::Sampling);
        for _ in 0..1000 {
            let n = 1 + rng.below(30);
            let predicted: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
            let actual: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
            let r = EvalReport::from_labels(&predicted, &actual).unwrap();

            // direct confusion-matrix computation
            let tp = predicted
                .iter()
                .zip(&actual)
                .filter(|&(&p, &y)| p == 1 && y == 1)
                .count();
            let fp = predicted
                .iter()
                .zip(&actual)
                .filter(|&(&p, &y)| p == 1 && y == 0)
                .count();
            let tn = predicted
                .iter()
                .zip(&actual)
                .filter(|&(&p, &y)| p == 0 && y == 0)
                .count();
            let fn_ = predicted
                .iter()
                .zip(&actual)
                .filter(|&(&p, &y)| p == 0 && y == 1)
                .count();
            assert_eq!((r.tp, r.fp, r.tn, r.fn_), (tp, fp, tn, fn_));
            let acc = (tp + tn) as f64 / n as f64;
            assert_eq!(r.accuracy, acc);
            let prf = |tp: usize, fp: usize, fn_: usize| {
                let p = if tp + fp == 0 {
                    0.0
                } else {
                    tp as f64 / (tp + fp) as f64
                };
                let r = if tp + fn_ == 0 {
                    0.0
                } else {
                    tp as f64 / (tp + fn_) as f64
                };
                let f = if p + r == 0.0 {
                    0.0
                } else {
                    2.0 * p * r / (p + r)
                };
                (p, r, f)
            };
            let (p1, r1, f1) = prf(tp, fp, fn_);
            let (p0, r0, f0) = prf(tn, fn_, fp);
            assert_eq!(r.precision, [p0, p1]);
            assert_eq!(r.recall, [r0, r1]);
            assert_eq!(r.f1, [f0, f1]);
            assert_eq!(r.macro_f1, (f0 + f1) / 2.0);
        }
    }
}
