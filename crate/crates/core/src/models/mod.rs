//! Binary human/robot classifiers and their on-disk format.
//!
//! Every learner produces a model whose `predict` maps one input vector to a
//! label and a human score in `[0, 1]`. [`ClassifierModel`] wraps them all so
//! the harness can store, load and evaluate any kind uniformly.
//!
//! A model file is pretty-printed JSON:
//!
//! ```json
//! {
//!   "format": "mdclass-model",
//!   "version": 1,
//!   "input": { "type": "features", "buffer": 3 },
//!   "model": { "kind": "random_forest", "hyperparameters": { ... }, ... }
//! }
//! ```
//!
//! `input` says what the model consumes (`features` with a buffer length,
//! `profile`, or `image`). `model` carries the kind tag, the hyperparameters
//! and the fitted parameters, including any standardization statistics.
//! Floats are written with shortest round-trip formatting, so loading a file
//! reproduces predictions bit for bit.

pub mod boosting;
pub mod forest;
pub mod knn;
pub mod linear;
pub mod tree;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::convnet::{Architecture, NetworkParams, TrainConfig};
use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::features::Weighting;

pub use boosting::{fit_gradient_boosting, fit_gradient_boosting_traced, BoostedModel, BoostingParams};
pub use forest::{bootstrap_counts, fit_random_forest, ForestModel, ForestParams};
pub use knn::{fit_knn, KnnModel, KnnParams};
pub use linear::{
    fit_linear_svm, fit_logistic_regression, fit_logistic_regression_traced, LinearModel,
    LogisticParams, Standardizer, SvmParams,
};
pub use tree::{fit_decision_tree, Tree, TreeModel, TreeParams};

pub const MODEL_FORMAT: &str = "mdclass-model";
pub const MODEL_VERSION: u32 = 1;

/// A trained convolutional network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConvNetRecord", into = "ConvNetRecord")]
pub struct ConvNetModel {
    pub training: TrainConfig,
    pub best_epoch: usize,
    pub params: NetworkParams<f32>,
}

#[derive(Serialize, Deserialize)]
struct ConvNetRecord {
    hyperparameters: TrainConfig,
    architecture: Architecture,
    best_epoch: usize,
    /// Flat parameter vector in layer order.
    values: Vec<f64>,
}

impl From<ConvNetModel> for ConvNetRecord {
    fn from(m: ConvNetModel) -> Self {
        ConvNetRecord {
            hyperparameters: m.training,
            architecture: m.params.arch,
            best_epoch: m.best_epoch,
            values: m.params.values.iter().map(|&v| v as f64).collect(),
        }
    }
}

impl TryFrom<ConvNetRecord> for ConvNetModel {
    type Error = Error;

    fn try_from(r: ConvNetRecord) -> Result<Self> {
        let values = r.values.iter().map(|&v| v as f32).collect();
        Ok(ConvNetModel {
            training: r.hyperparameters,
            best_epoch: r.best_epoch,
            params: NetworkParams::from_values(r.architecture, values)?,
        })
    }
}

impl ConvNetModel {
    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        let input: Vec<f32> = x.iter().map(|&v| v as f32).collect();
        self.predict_image(&input)
    }

    pub fn predict_image(&self, input: &[f32]) -> Result<(Label, f64)> {
        let p = self.params.predict_one(input)? as f64;
        Ok((Label::from_score(p), p))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierModel {
    DecisionTree(TreeModel),
    LogisticRegression(LinearModel<LogisticParams>),
    LinearSvm(LinearModel<SvmParams>),
    Knn(KnnModel),
    RandomForest(ForestModel),
    GradientBoosting(BoostedModel),
    ConvNet(ConvNetModel),
}

impl ClassifierModel {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierModel::DecisionTree(_) => "decision_tree",
            ClassifierModel::LogisticRegression(_) => "logistic_regression",
            ClassifierModel::LinearSvm(_) => "linear_svm",
            ClassifierModel::Knn(_) => "knn",
            ClassifierModel::RandomForest(_) => "random_forest",
            ClassifierModel::GradientBoosting(_) => "gradient_boosting",
            ClassifierModel::ConvNet(_) => "convnet",
        }
    }

    /// Predicted label and human score for one input.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        match self {
            ClassifierModel::DecisionTree(m) => {
                linear::check_dim(m.n_features, x)?;
                Ok(m.predict(x))
            }
            ClassifierModel::LogisticRegression(m) => m.predict(x),
            ClassifierModel::LinearSvm(m) => m.predict(x),
            ClassifierModel::Knn(m) => m.predict(x),
            ClassifierModel::RandomForest(m) => m.predict(x),
            ClassifierModel::GradientBoosting(m) => m.predict(x),
            ClassifierModel::ConvNet(m) => m.predict(x),
        }
    }
}

/// What a model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InputKind {
    /// Concatenated feature vectors of `buffer` consecutive frames.
    Features {
        buffer: usize,
        #[serde(default)]
        weighting: Weighting,
    },
    /// Centered, cropped Doppler and range profiles.
    Profile {
        #[serde(default)]
        normalize: bool,
    },
    /// Downsampled range-Doppler image.
    Image,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub input: InputKind,
    pub model: ClassifierModel,
}

impl ModelFile {
    pub fn new(input: InputKind, model: ClassifierModel) -> Self {
        ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            input,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Data(format!("not a model file (format {:?})", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Data(format!(
                "unsupported model file version {} (expected {MODEL_VERSION})",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convnet::Architecture;
    use crate::dataset::LabeledDataset;
    use crate::rng::rng_from_seed;

    fn data() -> LabeledDataset {
        let rows: Vec<Vec<f64>> = (0..80)
            .map(|i| {
                let a = ((i * 37) % 41) as f64 / 7.0;
                vec![a, ((i * 13) % 29) as f64 * 0.3 - 2.0, (a * 1.7).sin()]
            })
            .collect();
        let labels = rows.iter().map(|r| Label::from_bool(r[0] - 0.4 * r[1] > 2.5)).collect();
        LabeledDataset::from_rows(&rows, labels).unwrap()
    }

    fn round_trip(model: ClassifierModel, input: InputKind, probes: &[Vec<f64>]) {
        let file = ModelFile::new(input, model);
        let loaded = ModelFile::from_json(&file.to_json().unwrap()).unwrap();
        assert_eq!(loaded, file);
        for x in probes {
            let (l0, s0) = file.model.predict(x).unwrap();
            let (l1, s1) = loaded.model.predict(x).unwrap();
            assert_eq!(l0, l1);
            assert_eq!(s0.to_bits(), s1.to_bits());
        }
    }

    #[test]
    fn every_kind_round_trips_bit_exactly() {
        let d = data();
        let probes: Vec<Vec<f64>> = (0..25)
            .map(|i| vec![i as f64 * 0.31, 1.0 - i as f64 * 0.17, (i as f64).cos()])
            .collect();
        let input = InputKind::Features { buffer: 1, weighting: Weighting::Intensity };
        let models = vec![
            ClassifierModel::DecisionTree(fit_decision_tree(&d, &TreeParams::default()).unwrap()),
            ClassifierModel::LogisticRegression(fit_logistic_regression(&d, &LogisticParams::default()).unwrap()),
            ClassifierModel::LinearSvm(fit_linear_svm(&d, &SvmParams::default()).unwrap()),
            ClassifierModel::Knn(fit_knn(&d, &KnnParams::default()).unwrap()),
            ClassifierModel::RandomForest(
                fit_random_forest(&d, &ForestParams { trees: 10, ..ForestParams::default() }).unwrap(),
            ),
            ClassifierModel::GradientBoosting(
                fit_gradient_boosting(&d, &BoostingParams { stages: 20, ..BoostingParams::default() }).unwrap(),
            ),
        ];
        for m in models {
            round_trip(m, input, &probes);
        }
    }

    #[test]
    fn convnet_round_trips_bit_exactly() {
        let arch = Architecture { input_size: 16, blocks: 2, kernels: 4, dense_units: 5, dropout: 0.5 };
        let params = NetworkParams::<f32>::he_uniform(arch, &mut rng_from_seed(4)).unwrap();
        let model = ClassifierModel::ConvNet(ConvNetModel { training: TrainConfig::default(), best_epoch: 3, params });
        let probes: Vec<Vec<f64>> = (0..4)
            .map(|k| (0..256).map(|i| ((i * (k + 3)) % 17) as f32 as f64 / 16.0).collect())
            .collect();
        round_trip(model, InputKind::Image, &probes);
    }

    #[test]
    fn rejects_foreign_files() {
        let d = data();
        let m = ClassifierModel::DecisionTree(fit_decision_tree(&d, &TreeParams::default()).unwrap());
        let mut file = ModelFile::new(InputKind::Profile { normalize: false }, m);
        file.version = 99;
        assert!(ModelFile::from_json(&file.to_json().unwrap()).is_err());
        assert!(ModelFile::from_json("{\"format\": \"x\"}").is_err());
    }

    #[test]
    fn wrong_input_width_is_an_error() {
        let d = data();
        let m = ClassifierModel::DecisionTree(fit_decision_tree(&d, &TreeParams::default()).unwrap());
        assert!(m.predict(&[1.0]).is_err());
    }
}
