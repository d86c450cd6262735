//! Fitting any model kind on the frames of a split.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::frames::{feature_dataset, image_examples, profile_dataset, Frame, FrameOptions};
use super::split::SplitPlan;
use crate::config::KeyValues;
use crate::convnet::{self, Architecture, TrainConfig};
use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::models::{
    fit_decision_tree, fit_gradient_boosting, fit_knn, fit_linear_svm, fit_logistic_regression,
    fit_random_forest, BoostingParams, ClassifierModel, ConvNetModel, ForestParams, InputKind,
    KnnParams, LogisticParams, ModelFile, SvmParams, TreeParams,
};
use crate::rng::substream_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    DecisionTree,
    LogisticRegression,
    LinearSvm,
    Knn,
    RandomForest,
    GradientBoosting,
    ConvNet,
}

impl ModelKind {
    pub const CLASSICAL: [ModelKind; 4] = [
        ModelKind::DecisionTree,
        ModelKind::LogisticRegression,
        ModelKind::LinearSvm,
        ModelKind::Knn,
    ];
    pub const ENSEMBLE: [ModelKind; 2] = [ModelKind::RandomForest, ModelKind::GradientBoosting];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::LogisticRegression => "logistic_regression",
            ModelKind::LinearSvm => "linear_svm",
            ModelKind::Knn => "knn",
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
            ModelKind::ConvNet => "convnet",
        }
    }

    /// Input a model of this kind is trained on; classical models take
    /// buffered features.
    pub fn input(self, buffer: usize, opts: FrameOptions) -> InputKind {
        match self {
            ModelKind::RandomForest | ModelKind::GradientBoosting => InputKind::Profile {
                normalize: opts.normalize_profiles,
            },
            ModelKind::ConvNet => InputKind::Image,
            _ => InputKind::Features {
                buffer,
                weighting: opts.weighting,
            },
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let all = Self::CLASSICAL
            .iter()
            .chain(&Self::ENSEMBLE)
            .chain(&[ModelKind::ConvNet]);
        all.copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind `{s}`")))
    }
}

/// Hyperparameters of every learner. Seeds inside are overwritten from
/// `seed` when training.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub tree: TreeParams,
    pub logistic: LogisticParams,
    pub svm: SvmParams,
    pub knn: KnnParams,
    pub forest: ForestParams,
    pub boosting: BoostingParams,
    pub architecture: Architecture,
    pub training: TrainConfig,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            tree: TreeParams::default(),
            logistic: LogisticParams::default(),
            svm: SvmParams::default(),
            knn: KnnParams::default(),
            forest: ForestParams::default(),
            boosting: BoostingParams::default(),
            architecture: Architecture::default(),
            training: TrainConfig::default(),
            seed: 0,
        }
    }
}

pub const HYPERPARAMETER_KEYS: [&str; 19] = [
    "tree_max_depth",
    "tree_min_leaf",
    "logistic_l2",
    "logistic_epochs",
    "logistic_learning_rate",
    "svm_c",
    "svm_epochs",
    "knn_k",
    "forest_trees",
    "forest_max_depth",
    "forest_max_features",
    "boosting_stages",
    "boosting_max_depth",
    "boosting_shrinkage",
    "cnn_batch_size",
    "cnn_max_epochs",
    "cnn_patience",
    "cnn_learning_rate",
    "cnn_dropout",
];

fn read_optional(kv: &KeyValues, key: &str, slot: &mut Option<usize>) -> Result<()> {
    // `none` clears a limit.
    if let Some(v) = kv.get::<String>(key)? {
        *slot = match v.as_str() {
            "none" => None,
            n => Some(
                n.parse()
                    .map_err(|_| Error::Config(format!("`{key}`: cannot parse `{n}`")))?,
            ),
        };
    }
    Ok(())
}

impl Hyperparameters {
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        read_optional(kv, "tree_max_depth", &mut self.tree.max_depth)?;
        kv.read_into("tree_min_leaf", &mut self.tree.min_leaf)?;
        kv.read_into("logistic_l2", &mut self.logistic.l2)?;
        kv.read_into("logistic_epochs", &mut self.logistic.epochs)?;
        kv.read_into("logistic_learning_rate", &mut self.logistic.learning_rate)?;
        kv.read_into("svm_c", &mut self.svm.c)?;
        kv.read_into("svm_epochs", &mut self.svm.epochs)?;
        kv.read_into("knn_k", &mut self.knn.k)?;
        kv.read_into("forest_trees", &mut self.forest.trees)?;
        read_optional(kv, "forest_max_depth", &mut self.forest.max_depth)?;
        read_optional(kv, "forest_max_features", &mut self.forest.max_features)?;
        kv.read_into("boosting_stages", &mut self.boosting.stages)?;
        kv.read_into("boosting_max_depth", &mut self.boosting.max_depth)?;
        kv.read_into("boosting_shrinkage", &mut self.boosting.shrinkage)?;
        kv.read_into("cnn_batch_size", &mut self.training.batch_size)?;
        kv.read_into("cnn_max_epochs", &mut self.training.max_epochs)?;
        read_optional(kv, "cnn_patience", &mut self.training.patience)?;
        kv.read_into("cnn_learning_rate", &mut self.training.adam.alpha)?;
        kv.read_into("cnn_dropout", &mut self.architecture.dropout)?;
        Ok(())
    }

    fn seeded(&self) -> Self {
        let mut h = *self;
        h.forest.seed = substream_seed(self.seed, 1);
        h.training.seed = substream_seed(self.seed, 2);
        h.boosting.seed = substream_seed(self.seed, 3);
        h
    }
}

/// Fits a feature- or profile-based model on `data`.
pub fn fit_tabular(kind: ModelKind, data: &LabeledDataset, hp: &Hyperparameters) -> Result<ClassifierModel> {
    let hp = hp.seeded();
    Ok(match kind {
        ModelKind::DecisionTree => ClassifierModel::DecisionTree(fit_decision_tree(data, &hp.tree)?),
        ModelKind::LogisticRegression => {
            ClassifierModel::LogisticRegression(fit_logistic_regression(data, &hp.logistic)?)
        }
        ModelKind::LinearSvm => ClassifierModel::LinearSvm(fit_linear_svm(data, &hp.svm)?),
        ModelKind::Knn => ClassifierModel::Knn(fit_knn(data, &hp.knn)?),
        ModelKind::RandomForest => ClassifierModel::RandomForest(fit_random_forest(data, &hp.forest)?),
        ModelKind::GradientBoosting => {
            ClassifierModel::GradientBoosting(fit_gradient_boosting(data, &hp.boosting)?)
        }
        ModelKind::ConvNet => {
            return Err(Error::Config("the convolutional network trains on images".into()))
        }
    })
}

/// Trains the network on the training experiments, selecting the epoch by
/// validation accuracy. Returns the model and the per-epoch history.
pub fn fit_convnet(
    frames: &[Frame],
    plan: &SplitPlan,
    hp: &Hyperparameters,
) -> Result<(ConvNetModel, Vec<convnet::EpochStats>)> {
    let hp = hp.seeded();
    let (train, _) = image_examples(frames, &plan.train);
    let (val, _) = image_examples(frames, &plan.validation);
    let outcome = convnet::train(hp.architecture, &train, &val, &hp.training)?;
    Ok((
        ConvNetModel {
            training: hp.training,
            best_epoch: outcome.best_epoch,
            params: outcome.params,
        },
        outcome.history,
    ))
}

/// Trains one model on the training experiments of `plan`. `opts` must be
/// the options the frames were derived with.
pub fn train_model(
    kind: ModelKind,
    frames: &[Frame],
    plan: &SplitPlan,
    buffer: usize,
    hp: &Hyperparameters,
    opts: FrameOptions,
) -> Result<ModelFile> {
    let input = kind.input(buffer, opts);
    let model = match input {
        InputKind::Image => ClassifierModel::ConvNet(fit_convnet(frames, plan, hp)?.0),
        InputKind::Profile { .. } => fit_tabular(kind, &profile_dataset(frames, &plan.train)?.0, hp)?,
        InputKind::Features { buffer, .. } => {
            fit_tabular(kind, &feature_dataset(frames, &plan.train, buffer)?.0, hp)?
        }
    };
    Ok(ModelFile::new(input, model))
}
