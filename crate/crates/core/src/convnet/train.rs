//! Mini-batch Adam training with best-validation-epoch snapshots.

use log::info;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamConfig, AdamState};
use super::network::{bce_from_logit, probability, Architecture, NetworkParams};
use super::tensor::Tensor;
use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::metrics::ConfusionMatrix;
use crate::rng::substream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Stop once this many epochs pass without a new best validation epoch.
    /// `None` always runs `max_epochs`.
    pub patience: Option<usize>,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            max_epochs: 60,
            patience: Some(8),
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

/// One image with its class.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a> {
    pub input: &'a [f32],
    pub label: Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Parameters of the best validation epoch.
    pub params: NetworkParams<f32>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

pub fn history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,train_loss,train_acc,val_loss,val_acc\n");
    for h in history {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6},{:.6}\n",
            h.epoch, h.train_loss, h.train_acc, h.val_loss, h.val_acc
        ));
    }
    out
}

/// Mean loss and accuracy in inference mode.
pub fn loss_and_accuracy(params: &NetworkParams<f32>, set: &[Example<'_>]) -> (f64, f64) {
    use rayon::prelude::*;
    if set.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let logits: Vec<f32> = set
        .par_iter()
        .map(|e| params.forward_sample(e.input, None).logit)
        .collect();
    let mut loss = 0.0;
    let mut hits = 0;
    for (z, e) in logits.iter().zip(set) {
        loss += bce_from_logit(*z as f64, e.label.target());
        if Label::from_score(probability(*z) as f64) == e.label {
            hits += 1;
        }
    }
    (loss / set.len() as f64, hits as f64 / set.len() as f64)
}

/// Accuracy and confusion matrix on a held-out set.
pub fn evaluate(params: &NetworkParams<f32>, set: &[Example<'_>]) -> Result<ConfusionMatrix> {
    let mut cm = ConfusionMatrix::default();
    for e in set {
        let p = params.predict_one(e.input)?;
        cm.record(e.label, Label::from_score(p as f64));
    }
    Ok(cm)
}

fn better(candidate: &EpochStats, best: &EpochStats, by_val: bool) -> bool {
    let (acc, loss, best_acc, best_loss) = if by_val {
        (candidate.val_acc, candidate.val_loss, best.val_acc, best.val_loss)
    } else {
        (candidate.train_acc, candidate.train_loss, best.train_acc, best.train_loss)
    };
    acc > best_acc || (acc == best_acc && loss < best_loss)
}

/// Trains from a He-uniform start. Model selection uses validation accuracy
/// (ties broken by lower validation loss), or training metrics when `val` is
/// empty.
pub fn train(
    arch: Architecture,
    train_set: &[Example<'_>],
    val: &[Example<'_>],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    arch.validate()?;
    if cfg.batch_size == 0 || cfg.max_epochs == 0 {
        return Err(Error::Config("batch size and epoch count must be positive".into()));
    }
    let has = |l| train_set.iter().any(|e| e.label == l);
    if !(has(Label::Human) && has(Label::Robot)) {
        return Err(Error::Data("training set must contain both classes".into()));
    }
    let n_in = arch.input_size * arch.input_size;
    if let Some(e) = train_set.iter().chain(val).find(|e| e.input.len() != n_in) {
        return Err(Error::Data(format!(
            "input has {} values, expected {n_in}",
            e.input.len()
        )));
    }

    let mut init_rng = substream(cfg.seed, 0);
    let mut shuffle_rng = substream(cfg.seed, 1);
    let mut dropout_rng = substream(cfg.seed, 2);

    let mut params = NetworkParams::<f32>::he_uniform(arch, &mut init_rng)?;
    let mut adam = AdamState::new(params.len(), cfg.adam);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(EpochStats, NetworkParams<f32>)> = None;
    let by_val = !val.is_empty();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut hits = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let images: Vec<&[f32]> = chunk.iter().map(|&i| train_set[i].input).collect();
            let labels: Vec<f32> = chunk
                .iter()
                .map(|&i| train_set[i].label.target() as f32)
                .collect();
            let batch = Tensor::stack_images(&images, arch.input_size)?;
            let (_, cache) = params.forward(&batch, true, &mut dropout_rng)?;
            for (c, &y) in cache.samples.iter().zip(&labels) {
                loss_sum += bce_from_logit(c.logit as f64, y as f64);
                if (probability(c.logit) >= 0.5) == (y == 1.0) {
                    hits += 1;
                }
            }
            let grad = params.backward(&cache, &labels)?;
            adam_step(&mut params.values, &grad, &mut adam)?;
        }
        let train_loss = loss_sum / train_set.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Training(format!("training loss diverged in epoch {epoch}")));
        }
        let (val_loss, val_acc) = if by_val {
            loss_and_accuracy(&params, val)
        } else {
            (f64::NAN, f64::NAN)
        };
        if by_val && !val_loss.is_finite() {
            return Err(Error::Training(format!(
                "validation loss is not finite after epoch {epoch}"
            )));
        }
        let stats = EpochStats {
            epoch,
            train_loss,
            train_acc: hits as f64 / train_set.len() as f64,
            val_loss,
            val_acc,
        };
        info!(
            "epoch {epoch}: train loss {:.4} acc {:.4}, val loss {:.4} acc {:.4}",
            stats.train_loss, stats.train_acc, stats.val_loss, stats.val_acc
        );
        history.push(stats);

        let improved = best.as_ref().is_none_or(|(b, _)| better(&stats, b, by_val));
        if improved {
            best = Some((stats, params.clone()));
        }
        let best_epoch = best.as_ref().map_or(epoch, |(b, _)| b.epoch);
        if let Some(p) = cfg.patience {
            if epoch - best_epoch >= p {
                break;
            }
        }
    }

    let (best_stats, best_params) = best.expect("at least one epoch ran");
    Ok(TrainOutcome {
        params: best_params,
        history,
        best_epoch: best_stats.epoch,
    })
}
