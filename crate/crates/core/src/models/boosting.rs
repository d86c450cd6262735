//! Gradient boosting for binomial deviance.
//!
//! Starts from the training log-odds and adds shallow regression trees fit to
//! the residuals `y - p`. Each leaf takes one Newton step,
//! `Σ residual / Σ p(1-p)`, and every stage is scaled by the shrinkage.

use serde::{Deserialize, Serialize};

use super::linear::check_dim;
use super::tree::{grow_tree, targets, Node, Presorted, Tree, TrainingView, TreeParams};
use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

/// Bound on the initial log-odds and on every leaf value.
pub const LOGIT_CLAMP: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub stages: usize,
    pub max_depth: usize,
    pub shrinkage: f64,
    pub min_leaf: usize,
    /// Kept for interface symmetry with the forest; fitting draws no random
    /// numbers.
    pub seed: u64,
}

impl Default for BoostingParams {
    fn default() -> Self {
        BoostingParams {
            stages: 200,
            max_depth: 3,
            shrinkage: 0.1,
            min_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub hyperparameters: BoostingParams,
    pub n_features: usize,
    pub initial_logit: f64,
    pub trees: Vec<Tree>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Mean binomial deviance of raw scores `f` against 0/1 targets.
pub fn deviance(f: &[f64], y: &[f64]) -> f64 {
    let total: f64 = f
        .iter()
        .zip(y)
        .map(|(&f, &y)| 2.0 * (f.max(0.0) + (-f.abs()).exp().ln_1p() - y * f))
        .sum();
    total / f.len() as f64
}

/// Fits the model and returns the training deviance after each stage
/// (the first entry is the deviance of the initial log-odds).
pub fn fit_gradient_boosting_traced(
    data: &LabeledDataset,
    params: &BoostingParams,
) -> Result<(BoostedModel, Vec<f64>)> {
    if !(params.shrinkage > 0.0 && params.shrinkage <= 1.0) {
        return Err(Error::Config(format!(
            "shrinkage must lie in (0, 1], got {}",
            params.shrinkage
        )));
    }
    let n = data.len();
    let d = data.n_features();
    let y = targets(data);
    let prior = data.human_fraction();
    let initial_logit = if prior == 0.0 {
        -LOGIT_CLAMP
    } else if prior == 1.0 {
        LOGIT_CLAMP
    } else {
        (prior / (1.0 - prior)).ln().clamp(-LOGIT_CLAMP, LOGIT_CLAMP)
    };
    let mut model = BoostedModel {
        hyperparameters: *params,
        n_features: d,
        initial_logit,
        trees: Vec::new(),
    };
    let mut f = vec![initial_logit; n];
    let mut trace = vec![deviance(&f, &y)];
    if !data.has_both_classes() {
        return Ok((model, trace));
    }

    let presorted = Presorted::new(data.features(), n, d);
    let weights = vec![1.0; n];
    let tree_params = TreeParams {
        max_depth: Some(params.max_depth),
        min_leaf: params.min_leaf,
        max_features: None,
    };
    let mut residual = vec![0.0; n];
    for stage in 0..params.stages {
        let p: Vec<f64> = f.iter().map(|&z| sigmoid(z)).collect();
        for i in 0..n {
            residual[i] = y[i] - p[i];
        }
        let view = TrainingView {
            x: data.features(),
            n,
            d,
            y: &residual,
            w: &weights,
        };
        let mut tree = grow_tree(&view, &presorted, &tree_params, None)?;

        let mut num = vec![0.0; tree.nodes.len()];
        let mut den = vec![0.0; tree.nodes.len()];
        let leaves: Vec<usize> = data.rows().map(|x| tree.leaf_index(x)).collect();
        for (i, &leaf) in leaves.iter().enumerate() {
            num[leaf] += residual[i];
            den[leaf] += p[i] * (1.0 - p[i]);
        }
        for (idx, node) in tree.nodes.clone().iter().enumerate() {
            if let Node::Leaf { .. } = node {
                let step = if den[idx] > 0.0 { num[idx] / den[idx] } else { 0.0 };
                tree.set_leaf_value(idx, step.clamp(-LOGIT_CLAMP, LOGIT_CLAMP));
            }
        }
        for (fi, &leaf) in f.iter_mut().zip(&leaves) {
            if let Node::Leaf { value, .. } = tree.nodes[leaf] {
                *fi += params.shrinkage * value;
            }
        }
        let dev = deviance(&f, &y);
        if !dev.is_finite() {
            return Err(Error::Training(format!("boosting deviance not finite at stage {stage}")));
        }
        trace.push(dev);
        model.trees.push(tree);
    }
    Ok((model, trace))
}

pub fn fit_gradient_boosting(data: &LabeledDataset, params: &BoostingParams) -> Result<BoostedModel> {
    fit_gradient_boosting_traced(data, params).map(|r| r.0)
}

impl BoostedModel {
    /// Raw score after each stage, starting with the initial log-odds.
    pub fn staged_logits(&self, x: &[f64]) -> Vec<f64> {
        let mut f = self.initial_logit;
        let mut out = Vec::with_capacity(self.trees.len() + 1);
        out.push(f);
        for t in &self.trees {
            f += self.hyperparameters.shrinkage * t.predict(x);
            out.push(f);
        }
        out
    }

    pub fn logit(&self, x: &[f64]) -> f64 {
        let mut f = self.initial_logit;
        for t in &self.trees {
            f += self.hyperparameters.shrinkage * t.predict(x);
        }
        f
    }

    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        check_dim(self.n_features, x)?;
        let score = sigmoid(self.logit(x));
        Ok((Label::from_score(score), score))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable(n: usize) -> LabeledDataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let a = ((i * 7919) % 1000) as f64 / 100.0;
                let b = ((i * 104729) % 1000) as f64 / 100.0;
                vec![a, b, ((i * 31) % 17) as f64]
            })
            .collect();
        let labels = rows.iter().map(|r| Label::from_bool(r[0] + 0.6 * r[1] > 8.0)).collect();
        LabeledDataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn deviance_never_increases() {
        let data = separable(200);
        let (_, trace) = fit_gradient_boosting_traced(&data, &BoostingParams::default()).unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn separable_data_is_fit_exactly() {
        let data = separable(200);
        let m = fit_gradient_boosting(&data, &BoostingParams::default()).unwrap();
        for (r, &l) in data.rows().zip(data.labels()) {
            assert_eq!(m.predict(r).unwrap().0, l);
        }
    }

    #[test]
    fn no_stages_predicts_prior() {
        let data = separable(200);
        let m = fit_gradient_boosting(&data, &BoostingParams { stages: 0, ..BoostingParams::default() }).unwrap();
        let (_, score) = m.predict(&[1.0, 2.0, 3.0]).unwrap();
        assert!((score - data.human_fraction()).abs() < 1e-12);
    }

    #[test]
    fn depth_zero_stage_moves_toward_prior() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let labels = (0..10).map(|i| Label::from_bool(i < 3)).collect();
        let data = LabeledDataset::from_rows(&rows, labels).unwrap();
        let params = BoostingParams { stages: 1, max_depth: 0, shrinkage: 1.0, ..BoostingParams::default() };
        let m = fit_gradient_boosting(&data, &params).unwrap();
        assert_eq!(m.trees[0].nodes.len(), 1);
        // Residuals sum to zero at the prior, so the single leaf adds nothing.
        assert!((m.predict(&[0.0]).unwrap().1 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn single_class_data() {
        let rows: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let data = LabeledDataset::from_rows(&rows, vec![Label::Human; 10]).unwrap();
        let m = fit_gradient_boosting(&data, &BoostingParams::default()).unwrap();
        assert_eq!((m.initial_logit, m.trees.len()), (LOGIT_CLAMP, 0));
        assert_eq!(m.predict(&[0.0]).unwrap().0, Label::Human);
    }

    #[test]
    fn staged_scores_match_final() {
        let data = separable(150);
        let m = fit_gradient_boosting(&data, &BoostingParams { stages: 40, ..BoostingParams::default() }).unwrap();
        for r in data.rows().take(30) {
            let staged = m.staged_logits(r);
            assert_eq!(staged.len(), 41);
            assert_eq!(*staged.last().unwrap(), m.logit(r));
        }
    }
}
