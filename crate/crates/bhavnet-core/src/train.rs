//! The training loop, the SGD update, and evaluation entry points.
//!
//! One epoch cycles round-robin over the configured languages in fixed
//! order, consuming one freshly shuffled batch per language per cycle until
//! every language's epoch partition is exhausted. Each batch runs
//! forward -> total loss -> backward -> SGD. Dev evaluation happens once per
//! epoch; the parameters with the best dev macro-F1 are retained.
//!
//! Inference is per pair: every pair is evaluated as its own single-node
//! graph, so predictions do not depend on batch composition.

use std::collections::VecDeque;

use crate::data::{batches, EmbeddingTable, LabeledPair};
use crate::error::{Error, Result};
use crate::loss::total_loss_nodes;
use crate::metrics::{threshold_label, EvalReport};
use crate::model::{
    bind_params, forward_batch, BoundParams, HyperParams, Mode, ModelParams,
};
use crate::rng::{Rng, Stream};
use crate::tape::{GradTape, Gradients};
use crate::tensor::Tensor;

/// Loop controls that are not architecture hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    /// Epoch count T.
    pub epochs: usize,
    /// Batch size B.
    pub batch_size: usize,
    /// Stop after this many consecutive epochs without a dev macro-F1
    /// improvement; `None` disables early stopping.
    pub patience: Option<usize>,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 100,
            batch_size: 32,
            patience: Some(10),
        }
    }
}

/// One language's data for training.
#[derive(Debug, Clone)]
pub struct LanguageData {
    pub language: String,
    pub table: EmbeddingTable,
    pub train: Vec<LabeledPair>,
    pub dev: Vec<LabeledPair>,
}

/// Per-epoch summary passed to the training callback.
#[derive(Debug, Clone)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    pub mean_train_loss: f64,
    pub mean_train_bce: f64,
    pub mean_train_margin: f64,
    /// Pooled dev evaluation, when any language has dev pairs.
    pub dev: Option<EvalReport>,
}

/// Result of a training run.
#[derive(Debug)]
pub struct TrainState {
    /// Parameters after the last completed epoch.
    pub params: ModelParams,
    /// Parameters at the best dev macro-F1 (the final parameters when no dev
    /// data exists).
    pub best_params: ModelParams,
    /// 1-based epoch of the best dev macro-F1; 0 when no dev evaluation ran.
    pub best_epoch: usize,
    pub best_dev_macro_f1: Option<f64>,
    pub epochs_run: usize,
    /// Total loss of every optimizer step, in order.
    pub loss_trace: Vec<f64>,
    pub history: Vec<EpochRecord>,
}

/// Fallible per-epoch callback; an error aborts training.
pub type EpochCallback<'a> = &'a mut dyn FnMut(&EpochRecord) -> Result<()>;

/// Plain gradient descent: `p <- p - lr * g` for every array.
pub fn sgd_step(params: &mut ModelParams, grads: &[Tensor], lr: f64) -> Result<()> {
    let mut slots = params.arrays_mut();
    if slots.len() != grads.len() {
        return Err(Error::InvalidInput(format!(
            "{} gradient arrays for {} parameter arrays",
            grads.len(),
            slots.len()
        )));
    }
    for ((name, slot), grad) in slots.iter_mut().zip(grads) {
        if slot.shape() != grad.shape() {
            return Err(Error::InvalidInput(format!(
                "gradient shape {:?} does not match {name} {:?}",
                grad.shape(),
                slot.shape()
            )));
        }
        for (p, g) in slot.data_mut().iter_mut().zip(grad.data()) {
            *p -= lr * g;
        }
    }
    Ok(())
}

/// Gradients aligned with [`ModelParams::arrays`] order (zeros where no
/// gradient reached a parameter).
pub fn collect_grads(
    bound: &BoundParams,
    grads: &Gradients,
    params: &ModelParams,
) -> Vec<Tensor> {
    bound
        .ordered_ids()
        .iter()
        .zip(params.arrays())
        .map(|(&id, (_, t))| grads.get_or_zeros(id, t.shape()))
        .collect()
}

/// A single pair's inference output.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Antonym probability from the classifier head.
    pub probability: f64,
    pub sim_syn: f64,
    /// Absent in single-space mode.
    pub sim_ant: Option<f64>,
    /// Thresholded at 0.5 (ties classify as antonym).
    pub label: u8,
}

/// Classify one word pair. Both tokens must resolve in the table.
pub fn predict(
    w1: &str,
    w2: &str,
    table: &EmbeddingTable,
    params: &ModelParams,
    hp: &HyperParams,
) -> Result<Prediction> {
    let pair = LabeledPair::new(w1, w2, 0, table.language())?;
    let mut tape = GradTape::new();
    let bound = bind_params(&mut tape, params);
    predict_on(&mut tape, &bound, &pair, table, hp)
}

fn predict_on(
    tape: &mut GradTape,
    bound: &BoundParams,
    pair: &LabeledPair,
    table: &EmbeddingTable,
    hp: &HyperParams,
) -> Result<Prediction> {
    let mut rng = Rng::seeded(hp.seed, Stream::Dropout); // unused in eval mode
    let fwd = forward_batch(
        tape,
        bound,
        hp,
        std::slice::from_ref(pair),
        table,
        Mode::Eval,
        &mut rng,
    )?;
    let probability = tape.value(fwd.preds).data()[0];
    let pf = &fwd.forwards[0];
    Ok(Prediction {
        probability,
        sim_syn: pf.sim_syn,
        sim_ant: pf.sim_ant,
        label: threshold_label(probability),
    })
}

/// Evaluate a pair list: per-pair single-graph inference thresholded at 0.5,
/// reduced to confusion counts.
pub fn evaluate(
    pairs: &[LabeledPair],
    table: &EmbeddingTable,
    params: &ModelParams,
    hp: &HyperParams,
) -> Result<EvalReport> {
    if pairs.is_empty() {
        return Err(Error::InvalidInput("evaluate needs at least one pair".into()));
    }
    let mut tape = GradTape::new();
    let bound = bind_params(&mut tape, params);
    let mut predicted = Vec::with_capacity(pairs.len());
    let mut actual = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let p = predict_on(&mut tape, &bound, pair, table, hp)?;
        predicted.push(p.label);
        actual.push(pair.label);
    }
    EvalReport::from_labels(&predicted, &actual)
}

fn pooled_dev_report(
    langs: &[LanguageData],
    params: &ModelParams,
    hp: &HyperParams,
) -> Result<Option<EvalReport>> {
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    let mut any = false;
    for lang in langs {
        if lang.dev.is_empty() {
            continue;
        }
        any = true;
        let r = evaluate(&lang.dev, &lang.table, params, hp)?;
        tp += r.tp;
        fp += r.fp;
        tn += r.tn;
        fn_ += r.fn_;
    }
    if !any {
        return Ok(None);
    }
    Ok(Some(EvalReport::from_confusion(tp, fp, tn, fn_)?))
}

/// Run the training procedure for up to `opts.epochs` epochs.
pub fn train(
    langs: &[LanguageData],
    hp: &HyperParams,
    opts: &TrainOptions,
    mut on_epoch: Option<EpochCallback<'_>>,
) -> Result<TrainState> {
    hp.validate()?;
    if langs.iter().all(|l| l.train.is_empty()) {
        return Err(Error::InvalidConfig(
            "no language has a nonempty train split".into(),
        ));
    }
    for lang in langs {
        if lang.table.dim() != hp.d {
            return Err(Error::InvalidConfig(format!(
                "table for {:?} has dim {}, config d is {}",
                lang.language,
                lang.table.dim(),
                hp.d
            )));
        }
    }

    let mut params = ModelParams::init(hp)?;
    let mut sample_rng = Rng::seeded(hp.seed, Stream::Sampling);
    let mut dropout_rng = Rng::seeded(hp.seed, Stream::Dropout);

    let mut loss_trace = Vec::new();
    let mut history = Vec::new();
    let mut best_params = params.clone();
    let mut best_epoch = 0usize;
    let mut best_macro: Option<f64> = None;
    let mut epochs_since_best = 0usize;
    let mut epochs_run = 0usize;

    for epoch in 1..=opts.epochs {
        // fresh shuffled partition per language, fixed language order
        let mut queues: Vec<(usize, VecDeque<Vec<LabeledPair>>)> = Vec::new();
        for (li, lang) in langs.iter().enumerate() {
            if lang.train.is_empty() {
                continue;
            }
            let parts = batches(&lang.train, opts.batch_size, &mut sample_rng)?;
            queues.push((li, parts.into()));
        }

        let mut epoch_loss = 0.0;
        let mut epoch_bce = 0.0;
        let mut epoch_margin = 0.0;
        let mut steps = 0usize;
        loop {
            let mut progressed = false;
            for (li, queue) in queues.iter_mut() {
                let Some(batch) = queue.pop_front() else {
                    continue;
                };
                progressed = true;
                let lang = &langs[*li];

                let mut tape = GradTape::new();
                let bound = bind_params(&mut tape, &params);
                let fwd = forward_batch(
                    &mut tape,
                    &bound,
                    hp,
                    &batch,
                    &lang.table,
                    Mode::Train,
                    &mut dropout_rng,
                )?;
                let labels: Vec<u8> = batch.iter().map(|p| p.label).collect();
                let (total, bd) =
                    total_loss_nodes(&mut tape, fwd.preds, &labels, &fwd.forwards, hp)?;
                if !bd.total.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "loss diverged at epoch {epoch}, language {:?}, step {}: \
                         bce {}, margin {}, first pair ({:?}, {:?})",
                        lang.language, steps, bd.bce, bd.margin, batch[0].w1, batch[0].w2
                    )));
                }
                let grads = tape.backward(total)?;
                let grad_tensors = collect_grads(&bound, &grads, &params);
                sgd_step(&mut params, &grad_tensors, hp.lr)?;

                loss_trace.push(bd.total);
                epoch_loss += bd.total;
                epoch_bce += bd.bce;
                epoch_margin += bd.margin;
                steps += 1;
            }
            if !progressed {
                break;
            }
        }
        epochs_run = epoch;

        let dev = pooled_dev_report(langs, &params, hp)?;
        let record = EpochRecord {
            epoch,
            mean_train_loss: epoch_loss / steps.max(1) as f64,
            mean_train_bce: epoch_bce / steps.max(1) as f64,
            mean_train_margin: epoch_margin / steps.max(1) as f64,
            dev: dev.clone(),
        };
        if let Some(cb) = on_epoch.as_mut() {
            cb(&record)?;
        }
        history.push(record);

        if let Some(report) = dev {
            if best_macro.is_none_or(|b| report.macro_f1 > b) {
                best_macro = Some(report.macro_f1);
                best_params = params.clone();
                best_epoch = epoch;
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if opts.patience.is_some_and(|p| epochs_since_best >= p) {
                    break;
                }
            }
        }
    }

    if best_macro.is_none() {
        best_params = params.clone();
    }
    Ok(TrainState {
        params,
        best_params,
        best_epoch,
        best_dev_macro_f1: best_macro,
        epochs_run,
        loss_trace,
        history,
    })
}
