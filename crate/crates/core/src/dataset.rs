//! Labeled feature matrices shared by every learner.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Robot = 0,
    Human = 1,
}

impl Label {
    pub fn from_bool(human: bool) -> Self {
        if human {
            Label::Human
        } else {
            Label::Robot
        }
    }

    pub fn is_human(self) -> bool {
        self == Label::Human
    }

    /// 1.0 for human, 0.0 for robot.
    pub fn target(self) -> f64 {
        if self.is_human() {
            1.0
        } else {
            0.0
        }
    }

    /// Class decided by a human-probability score.
    pub fn from_score(score: f64) -> Self {
        Label::from_bool(score >= 0.5)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Robot => "robot",
            Label::Human => "human",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "human" | "1" => Ok(Label::Human),
            "robot" | "0" => Ok(Label::Robot),
            other => Err(Error::Data(format!("unknown label `{other}`"))),
        }
    }
}

/// `N × d` row-major feature matrix with one label and experiment id per row.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    n_features: usize,
    labels: Vec<Label>,
    experiment_ids: Vec<u32>,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<f64>,
        n_features: usize,
        labels: Vec<Label>,
        experiment_ids: Vec<u32>,
    ) -> Result<Self> {
        let n = labels.len();
        if n == 0 || n_features == 0 {
            return Err(Error::Data("dataset is empty".into()));
        }
        if features.len() != n * n_features || experiment_ids.len() != n {
            return Err(Error::Data(format!(
                "dataset shape mismatch: {} values, {n} labels, {} ids, {n_features} features",
                features.len(),
                experiment_ids.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite feature in row {}",
                i / n_features
            )));
        }
        Ok(LabeledDataset {
            features,
            n_features,
            labels,
            experiment_ids,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<Label>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Data("ragged feature rows".into()));
        }
        let n = rows.len();
        LabeledDataset::new(rows.concat(), d, labels, vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// All rows, row-major.
    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.n_features)
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.features[i * self.n_features + j]
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn experiment_ids(&self) -> &[u32] {
        &self.experiment_ids
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    pub fn has_both_classes(&self) -> bool {
        self.count(Label::Human) > 0 && self.count(Label::Robot) > 0
    }

    /// Fraction of rows labeled human.
    pub fn human_fraction(&self) -> f64 {
        self.count(Label::Human) as f64 / self.len() as f64
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        LabeledDataset::new(
            features,
            self.n_features,
            indices.iter().map(|&i| self.labels[i]).collect(),
            indices.iter().map(|&i| self.experiment_ids[i]).collect(),
        )
    }

    /// Applies `f` to every feature column, e.g. to test invariances.
    pub fn map_features(&self, f: impl Fn(usize, f64) -> f64) -> Result<Self> {
        let d = self.n_features;
        let features = self
            .features
            .iter()
            .enumerate()
            .map(|(k, &v)| f(k % d, v))
            .collect();
        LabeledDataset::new(
            features,
            d,
            self.labels.clone(),
            self.experiment_ids.clone(),
        )
    }
}
