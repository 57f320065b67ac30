//! The training objective: binary cross-entropy over predictions plus a
//! dual-space margin loss, combined as `total = bce + lambda * margin`.
//!
//! The margin terms use raw dot products inside tanh:
//! synonym pairs (label 0) are pushed above `m_syn` in synonym space, antonym
//! pairs (label 1) below `m_ant` in antonym space. Only the label-selected
//! term contributes. The hinge subgradient at an exactly-zero argument is 0.

use crate::error::{Error, Result};
use crate::model::{HyperParams, PairForward};
use crate::tape::{bce_value, GradTape, NodeId};
use crate::tensor::Tensor;

/// Loss components for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct LossBreakdown {
    pub bce: f64,
    /// Mean margin loss over the batch pairs.
    pub margin: f64,
    /// `bce + lambda * margin`.
    pub total: f64,
    /// Per-pair BCE terms, for diagnostics.
    pub per_pair_bce: Vec<f64>,
    /// Per-pair margin terms, for diagnostics.
    pub per_pair_margin: Vec<f64>,
}

/// Mean binary cross-entropy of probability predictions against 0/1 labels.
/// Predictions are clamped to `[1e-7, 1 - 1e-7]`.
pub fn bce_loss(preds: &[f64], labels: &[u8]) -> Result<f64> {
    if preds.len() != labels.len() || preds.is_empty() {
        return Err(Error::InvalidInput(format!(
            "bce_loss needs equal-length non-empty inputs, got {} and {}",
            preds.len(),
            labels.len()
        )));
    }
    let labels_f: Vec<f64> = labels.iter().map(|&y| y as f64).collect();
    Ok(bce_value(preds, &labels_f))
}

/// Margin loss of a single pair from its projected vectors.
///
/// Label 0: `max(0, m_syn - tanh(<s1, s2>))`.
/// Label 1: `max(0, tanh(<a1, a2>) - m_ant)`; 0 when the antonym space is
/// absent (single-space mode).
pub fn margin_loss(
    label: u8,
    s1: &[f64],
    s2: &[f64],
    a1: Option<&[f64]>,
    a2: Option<&[f64]>,
    m_syn: f64,
    m_ant: f64,
) -> f64 {
    let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    if label == 0 {
        (m_syn - dot(s1, s2).tanh()).max(0.0)
    } else {
        match (a1, a2) {
            (Some(a1), Some(a2)) => (dot(a1, a2).tanh() - m_ant).max(0.0),
            _ => 0.0,
        }
    }
}

/// Record one pair's margin term on the tape. Returns a `[1]` node.
pub fn margin_loss_node(
    tape: &mut GradTape,
    pf: &PairForward,
    label: u8,
    hp: &HyperParams,
) -> Result<NodeId> {
    if label == 0 {
        let d = tape.dot(pf.s1, pf.s2)?;
        let t = tape.tanh(d);
        let neg = tape.scale(t, -1.0);
        let arg = tape.add_scalar(neg, hp.m_syn);
        Ok(tape.relu(arg))
    } else {
        match (pf.a1, pf.a2) {
            (Some(a1), Some(a2)) => {
                let d = tape.dot(a1, a2)?;
                let t = tape.tanh(d);
                let arg = tape.add_scalar(t, -hp.m_ant);
                Ok(tape.relu(arg))
            }
            // single-space mode has no antonym projections to separate
            _ => Ok(tape.constant(Tensor::scalar(0.0))),
        }
    }
}

/// Taped total loss over a batch: the BCE node, the mean margin node, the
/// total node, and the value breakdown.
pub fn total_loss_nodes(
    tape: &mut GradTape,
    preds: NodeId,
    labels: &[u8],
    forwards: &[PairForward],
    hp: &HyperParams,
) -> Result<(NodeId, LossBreakdown)> {
    if labels.len() != forwards.len() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} forwards",
            labels.len(),
            forwards.len()
        )));
    }
    let labels_f: Vec<f64> = labels.iter().map(|&y| y as f64).collect();
    let bce = tape.bce(preds, &labels_f)?;

    let mut margin_nodes = Vec::with_capacity(forwards.len());
    for (pf, &label) in forwards.iter().zip(labels) {
        margin_nodes.push(margin_loss_node(tape, pf, label, hp)?);
    }
    let margins = tape.concat(&margin_nodes)?;
    let margin_mean = tape.mean(margins);
    let weighted = tape.scale(margin_mean, hp.lambda_w);
    let total = tape.add(bce, weighted)?;

    let pred_values = tape.value(preds).data().to_vec();
    let per_pair_bce: Vec<f64> = pred_values
        .iter()
        .zip(&labels_f)
        .map(|(&p, &y)| bce_value(&[p], &[y]))
        .collect();
    let per_pair_margin: Vec<f64> = margin_nodes
        .iter()
        .map(|&id| tape.value(id).item())
        .collect();
    let breakdown = LossBreakdown {
        bce: tape.value(bce).item(),
        margin: tape.value(margin_mean).item(),
        total: tape.value(total).item(),
        per_pair_bce,
        per_pair_margin,
    };
    Ok((total, breakdown))
}

/// Value-level total loss from plain activations, mirroring
/// [`total_loss_nodes`] without a tape.
pub fn total_loss_values(
    preds: &[f64],
    labels: &[u8],
    pair_margins: &[f64],
    lambda_w: f64,
) -> Result<LossBreakdown> {
    if preds.len() != labels.len() || labels.len() != pair_margins.len() {
        return Err(Error::InvalidInput(
            "total_loss needs aligned preds, labels, margins".into(),
        ));
    }
    let bce = bce_loss(preds, labels)?;
    let margin = pair_margins.iter().sum::<f64>() / pair_margins.len() as f64;
    let labels_f: Vec<f64> = labels.iter().map(|&y| y as f64).collect();
    let per_pair_bce = preds
        .iter()
        .zip(&labels_f)
        .map(|(&p, &y)| bce_value(&[p], &[y]))
        .collect();
    Ok(LossBreakdown {
        bce,
        margin,
        total: bce + lambda_w * margin,
        per_pair_bce,
        per_pair_margin: pair_margins.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{Rng, Stream};
    use crate::tape::grad_check;

    #[test]
    fn bce_half_prediction_is_ln2() {
        let loss = bce_loss(&[0.5], &[1]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-9, "{loss}");
    }

    #[test]
    fn bce_near_perfect_prediction() {
        let loss = bce_loss(&[1.0 - 1e-7], &[1]).unwrap();
        assert!(loss > 0.0 && loss < 1.1e-7, "{loss}");
    }

    #[test]
    fn bce_worked_example() {
        let loss = bce_loss(&[0.9, 0.2], &[1, 0]).unwrap();
        let want = -(0.9f64.ln() + 0.8f64.ln()) / 2.0;
        assert!((loss - want).abs() < 1e-12);
        assert!((loss - 0.164252).abs() < 1e-6, "{loss}");
    }

    #[test]
    fn bce_length_mismatch_rejected() {
        assert!(bce_loss(&[0.5], &[1, 0]).is_err());
    }

    #[test]
    fn bce_permutation_invariant() {
        let preds = [0.3, 0.7, 0.9, 0.1];
        let labels = [0u8, 1, 1, 0];
        let a = bce_loss(&preds, &labels).unwrap();
        let b = bce_loss(&[0.9, 0.1, 0.3, 0.7], &[1, 0, 0, 1]).unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn margin_satisfied_synonym_is_zero() {
        // huge dot product: tanh ~ 1 > m_syn
        let s = vec![10.0, 10.0];
        let loss = margin_loss(0, &s, &s, None, None, 0.8, 0.2);
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn margin_antonym_at_zero_dot_is_zero() {
        let a1 = vec![1.0, 0.0];
        let a2 = vec![0.0, 1.0];
        let loss = margin_loss(1, &[0.0], &[0.0], Some(&a1), Some(&a2), 0.8, 0.2);
        assert_eq!(loss, 0.0);
    }

    #[test]
    fn margin_synonym_worked_example() {
        // <s1, s2> = 0.9 -> max(0, 0.8 - tanh(0.9)) = 0.08370...
        let s1 = vec![0.9, 0.0];
        let s2 = vec![1.0, 0.0];
        let loss = margin_loss(0, &s1, &s2, None, None, 0.8, 0.2);
        assert!((loss - 0.08370).abs() < 5e-6, "{loss}");
    }

    #[test]
    fn margin_bounded_by_tanh_range() {
        let mut rng = Rng::seeded(5, Stream::Init);
        for _ in 0..200 {
            let v: Vec<f64> = (0..4).map(|_| rng.uniform(-3.0, 3.0)).collect();
            let w: Vec<f64> = (0..4).map(|_| rng.uniform(-3.0, 3.0)).collect();
            for label in [0u8, 1] {
                let loss = margin_loss(label, &v, &w, Some(&v), Some(&w), 0.8, 0.2);
                assert!(loss >= 0.0);
                assert!(loss <= 1.8 + 1e-12, "{loss}");
            }
        }
    }

    #[test]
    fn total_with_lambda_zero_is_bce() {
        let bd = total_loss_values(&[0.7, 0.4], &[1, 0], &[0.3, 0.5], 0.0).unwrap();
        assert_eq!(bd.total, bd.bce);
    }

    #[test]
    fn total_with_satisfied_margins_is_bce() {
        let bd = total_loss_values(&[0.7, 0.4], &[1, 0], &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(bd.total, bd.bce);
        assert_eq!(bd.margin, 0.0);
    }

    #[test]
    fn breakdown_identity_holds() {
        let bd = total_loss_values(&[0.7, 0.4, 0.9], &[1, 0, 1], &[0.3, 0.5, 0.0], 0.7).unwrap();
        assert!((bd.total - (bd.bce + 0.7 * bd.margin)).abs() < 1e-12);
        assert!(bd.bce >= 0.0 && bd.margin >= 0.0);
    }

    #[test]
    fn taped_total_matches_formula_oracle() {
        // straight-line recomputation of bce + lambda * mean(margins) from
        // raw projected vectors
        let mut rng = Rng::seeded(17, Stream::Init);
        let mut hp = HyperParams::for_input_dim(4);
        hp.lambda_w = 0.6;
        for _ in 0..100 {
            let n = 1 + rng.below(5);
            let mut tape = GradTape::new();
            let mut forwards = Vec::new();
            let mut labels = Vec::new();
            let mut preds = Vec::new();
            let mut raw = Vec::new();
            for _ in 0..n {
                let v: Vec<Vec<f64>> = (0..4)
                    .map(|_| (0..3).map(|_| rng.uniform(-1.0, 1.0)).collect())
                    .collect();
                let s1 = tape.leaf(Tensor::vector(v[0].clone()));
                let s2 = tape.leaf(Tensor::vector(v[1].clone()));
                let a1 = tape.leaf(Tensor::vector(v[2].clone()));
                let a2 = tape.leaf(Tensor::vector(v[3].clone()));
                forwards.push(PairForward {
                    s1,
                    s2,
                    a1: Some(a1),
                    a2: Some(a2),
                    sim_syn: 0.0,
                    sim_ant: None,
                    fused: None,
                });
                labels.push(rng.below(2) as u8);
                preds.push(rng.uniform(0.05, 0.95));
                raw.push(v);
            }
            let preds_node = tape.constant(Tensor::vector(preds.clone()));
            let (total, bd) =
                total_loss_nodes(&mut tape, preds_node, &labels, &forwards, &hp).unwrap();

            // oracle
            let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
            let mut bce_sum = 0.0;
            for (p, &y) in preds.iter().zip(&labels) {
                let p = p.clamp(1e-7, 1.0 - 1e-7);
                bce_sum += if y == 1 { -p.ln() } else { -(1.0 - p).ln() };
            }
            let bce = bce_sum / n as f64;
            let mut margin_sum = 0.0;
            for (v, &y) in raw.iter().zip(&labels) {
                margin_sum += if y == 0 {
                    (hp.m_syn - dot(&v[0], &v[1]).tanh()).max(0.0)
                } else {
                    (dot(&v[2], &v[3]).tanh() - hp.m_ant).max(0.0)
                };
            }
            let margin = margin_sum / n as f64;
            let want = bce + hp.lambda_w * margin;
            let got = tape.value(total).item();
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
            assert!((bd.total - want).abs() < 1e-12);
            assert!((bd.total - (bd.bce + hp.lambda_w * bd.margin)).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_derivative_equals_margin() {
        // d(total)/d(lambda) checked by finite differences on lambda
        let preds = [0.7, 0.3, 0.6];
        let labels = [1u8, 0, 1];
        let margins = [0.25, 0.1, 0.0];
        let eps = 1e-6;
        let at = |l: f64| {
            total_loss_values(&preds, &labels, &margins, l)
                .unwrap()
                .total
        };
        let base = total_loss_values(&preds, &labels, &margins, 0.8).unwrap();
        let numeric = (at(0.8 + eps) - at(0.8 - eps)) / (2.0 * eps);
        assert!((numeric - base.margin).abs() < 1e-9);
    }

    #[test]
    fn margin_gradient_away_from_kinks() {
        // gradient check of the selected hinge term; inputs keep the hinge
        // argument away from 0
        let s1 = Tensor::vector(vec![0.4, 0.1]);
        let s2 = Tensor::vector(vec![0.5, -0.2]);
        let err = grad_check(
            |t, ids| {
                let d = t.dot(ids[0], ids[1])?;
                let tn = t.tanh(d);
                let neg = t.scale(tn, -1.0);
                let arg = t.add_scalar(neg, 0.8);
                Ok(t.relu(arg))
            },
            &[s1, s2],
            1e-6,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }
}
