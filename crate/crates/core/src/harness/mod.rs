//! Dataset construction, hold-out splits and the experiment suite.
//!
//! The flow is: plan experiments ([`scenario`]), simulate them to maps on
//! disk or in memory ([`frames`]), split whole experiments into
//! train/validation/test ([`split`]), then fit and score every model family
//! ([`benchmark`]). [`Settings`] gathers all knobs from a `key = value` file.

pub mod benchmark;
pub mod frames;
pub mod inference;
pub mod manifest;
pub mod scenario;
pub mod split;
pub mod training;

use crate::config::KeyValues;
use crate::error::Result;
use crate::radar::RADAR_KEYS;

pub use benchmark::{run_benchmark, write_report, BenchmarkConfig, BenchmarkReport, Suites};
pub use frames::{build_dataset, generate_frames, load_frames, summarize, Frame, FrameOptions};
pub use inference::{evaluate, predict_one};
pub use manifest::{ExperimentSummary, Manifest, ManifestRow, MANIFEST_FILE};
pub use scenario::{plan_experiments, DatasetConfig};
pub use split::{holdout_split, Role, SplitConfig, SplitPlan};
pub use training::{train_model, Hyperparameters, ModelKind};

const SPLIT_KEYS: [&str; 3] = ["test_fraction", "val_fraction", "max_buffer"];

/// Every configurable value of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Settings {
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub benchmark: BenchmarkConfig,
}

impl Settings {
    /// Defaults overridden by `kv`; unknown keys are rejected.
    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let known: Vec<&str> = RADAR_KEYS
            .iter()
            .chain(&scenario::DATASET_KEYS)
            .chain(&training::HYPERPARAMETER_KEYS)
            .chain(&SPLIT_KEYS)
            .chain(&frames::FRAME_KEYS)
            .copied()
            .collect();
        kv.check_known(&known)?;
        let mut s = Settings::default();
        s.dataset.apply(kv)?;
        s.dataset.validate()?;
        kv.read_into("test_fraction", &mut s.split.test_fraction)?;
        kv.read_into("val_fraction", &mut s.split.val_fraction)?;
        kv.read_into("max_buffer", &mut s.benchmark.max_buffer)?;
        s.benchmark.hyperparameters.apply(kv)?;
        s.benchmark.inputs.apply(kv)?;
        Ok(s)
    }

    /// Derives the dataset, split and training seeds from one master seed.
    pub fn seeded(mut self, seed: u64) -> (Self, u64) {
        use crate::rng::substream_seed;
        self.split.seed = substream_seed(seed, 1);
        self.benchmark.hyperparameters.seed = substream_seed(seed, 2);
        (self, substream_seed(seed, 0))
    }
}
