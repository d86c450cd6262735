//! Logistic regression and a linear SVM on standardized features.

use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

/// Per-column mean and standard deviation learned from training data.
/// Constant columns keep a unit scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    pub fn fit(data: &LabeledDataset) -> Self {
        let (n, d) = (data.len() as f64, data.n_features());
        let mut mean = vec![0.0; d];
        for row in data.rows() {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in data.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let scale = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Standardizer { mean, scale }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.mean)
            .zip(&self.scale)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    }

    pub fn apply_all(&self, data: &LabeledDataset) -> Vec<Vec<f64>> {
        data.rows().map(|r| self.apply(r)).collect()
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::Data(format!(
            "model expects {expected} features, got {}",
            x.len()
        )));
    }
    Ok(())
}

fn check_training_set(data: &LabeledDataset) -> Result<()> {
    if !data.has_both_classes() {
        return Err(Error::Data("training set must contain both classes".into()));
    }
    Ok(())
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn dot(w: &[f64], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// Weights and bias of a linear decision function on standardized inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<H> {
    pub hyperparameters: H,
    pub standardizer: Standardizer,
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl<H> LinearModel<H> {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.standardizer.dim(), x)?;
        Ok(dot(&self.weights, &self.standardizer.apply(x)) + self.bias)
    }

    /// Class from the sign of the decision value; score is its logistic.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        let z = self.decision(x)?;
        Ok((Label::from_bool(z >= 0.0), sigmoid(z)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub l2: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        LogisticParams {
            l2: 1e-3,
            epochs: 500,
            learning_rate: 0.1,
        }
    }
}

/// Mean negative log-likelihood plus `l2/2·|w|²`, and its gradient with the
/// bias as the last entry.
pub fn logistic_loss_and_grad(
    weights: &[f64],
    bias: f64,
    rows: &[Vec<f64>],
    targets: &[f64],
    l2: f64,
) -> (f64, Vec<f64>) {
    let n = rows.len() as f64;
    let d = weights.len();
    let mut grad = vec![0.0; d + 1];
    let mut loss = 0.0;
    for (x, &y) in rows.iter().zip(targets) {
        let z = dot(weights, x) + bias;
        loss += softplus(z) - y * z;
        let r = sigmoid(z) - y;
        for (g, v) in grad.iter_mut().zip(x) {
            *g += r * v;
        }
        grad[d] += r;
    }
    loss /= n;
    grad.iter_mut().for_each(|g| *g /= n);
    loss += 0.5 * l2 * dot(weights, weights);
    for (g, w) in grad.iter_mut().zip(weights) {
        *g += l2 * w;
    }
    (loss, grad)
}

/// Full-batch gradient descent; fails if the loss rises five epochs in a row.
/// Also returns the loss after each epoch.
pub fn fit_logistic_regression_traced(
    data: &LabeledDataset,
    params: &LogisticParams,
) -> Result<(LinearModel<LogisticParams>, Vec<f64>)> {
    check_training_set(data)?;
    if !(params.learning_rate > 0.0 && params.l2 >= 0.0) {
        return Err(Error::Config("learning rate must be positive and l2 non-negative".into()));
    }
    let standardizer = Standardizer::fit(data);
    let rows = standardizer.apply_all(data);
    let targets: Vec<f64> = data.labels().iter().map(|l| l.target()).collect();
    let d = data.n_features();
    let mut weights = vec![0.0; d];
    let mut bias = 0.0;
    let mut trace = Vec::with_capacity(params.epochs);
    let mut previous = f64::INFINITY;
    let mut rises = 0;
    for epoch in 0..params.epochs {
        let (loss, grad) = logistic_loss_and_grad(&weights, bias, &rows, &targets, params.l2);
        if !loss.is_finite() {
            return Err(Error::Training(format!("logistic loss not finite at epoch {epoch}")));
        }
        rises = if loss > previous { rises + 1 } else { 0 };
        if rises >= 5 {
            return Err(Error::Training(format!(
                "logistic regression diverged: loss rose 5 epochs in a row, reaching {loss:.6} at epoch {epoch} (learning rate {})",
                params.learning_rate
            )));
        }
        previous = loss;
        trace.push(loss);
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= params.learning_rate * g;
        }
        bias -= params.learning_rate * grad[d];
    }
    let model = LinearModel {
        hyperparameters: *params,
        standardizer,
        weights,
        bias,
    };
    Ok((model, trace))
}

pub fn fit_logistic_regression(
    data: &LabeledDataset,
    params: &LogisticParams,
) -> Result<LinearModel<LogisticParams>> {
    fit_logistic_regression_traced(data, params).map(|r| r.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    /// Misclassification cost; the weight penalty is `1/(C·N)`.
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, epochs: 1000 }
    }
}

/// `λ/2·|w|² + mean hinge loss` with labels in {-1, +1}.
pub fn svm_objective(weights: &[f64], bias: f64, rows: &[Vec<f64>], signs: &[f64], lambda: f64) -> f64 {
    let hinge: f64 = rows
        .iter()
        .zip(signs)
        .map(|(x, y)| (1.0 - y * (dot(weights, x) + bias)).max(0.0))
        .sum();
    0.5 * lambda * dot(weights, weights) + hinge / rows.len() as f64
}

/// Full-batch subgradient descent with step `1/(λ·t)`, projection onto the
/// ball of radius `1/√λ`, and the lowest-objective iterate kept.
pub fn fit_linear_svm(data: &LabeledDataset, params: &SvmParams) -> Result<LinearModel<SvmParams>> {
    check_training_set(data)?;
    if !(params.c > 0.0) || params.epochs == 0 {
        return Err(Error::Config("SVM needs C > 0 and at least one epoch".into()));
    }
    let standardizer = Standardizer::fit(data);
    let rows = standardizer.apply_all(data);
    let signs: Vec<f64> = data.labels().iter().map(|l| 2.0 * l.target() - 1.0).collect();
    let n = rows.len() as f64;
    let d = data.n_features();
    let lambda = 1.0 / (params.c * n);
    let radius = 1.0 / lambda.sqrt();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut best = (svm_objective(&w, b, &rows, &signs, lambda), w.clone(), b);
    let mut step_w = vec![0.0; d];
    for t in 1..=params.epochs {
        let eta = 1.0 / (lambda * t as f64);
        step_w.fill(0.0);
        let mut step_b = 0.0;
        for (x, &y) in rows.iter().zip(&signs) {
            if y * (dot(&w, x) + b) < 1.0 {
                for (s, v) in step_w.iter_mut().zip(x) {
                    *s += y * v;
                }
                step_b += y;
            }
        }
        for (wi, s) in w.iter_mut().zip(&step_w) {
            *wi = (1.0 - eta * lambda) * *wi + eta * s / n;
        }
        b += eta * step_b / n;
        let norm = dot(&w, &w).sqrt();
        if norm > radius {
            w.iter_mut().for_each(|wi| *wi *= radius / norm);
        }
        let objective = svm_objective(&w, b, &rows, &signs, lambda);
        if !objective.is_finite() {
            return Err(Error::Training(format!("SVM objective not finite at epoch {t}")));
        }
        if objective < best.0 {
            best = (objective, w.clone(), b);
        }
    }
    Ok(LinearModel {
        hyperparameters: *params,
        standardizer,
        weights: best.1,
        bias: best.2,
    })
}
