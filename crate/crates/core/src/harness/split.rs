//! Hold-out splits by whole experiment.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::manifest::ExperimentSummary;
use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// Fewest experiments per class a split accepts.
pub const MIN_EXPERIMENTS_PER_CLASS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_fraction: f64,
    /// Share of the non-test frames of each class held out for validation.
    pub val_fraction: f64,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            test_fraction: 0.2,
            val_fraction: 0.15,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Train,
    Validation,
    Test,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Train => "train",
            Role::Validation => "validation",
            Role::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SplitPlan {
    pub train: BTreeSet<u32>,
    pub validation: BTreeSet<u32>,
    pub test: BTreeSet<u32>,
}

impl SplitPlan {
    pub fn role_of(&self, experiment_id: u32) -> Option<Role> {
        if self.train.contains(&experiment_id) {
            Some(Role::Train)
        } else if self.validation.contains(&experiment_id) {
            Some(Role::Validation)
        } else if self.test.contains(&experiment_id) {
            Some(Role::Test)
        } else {
            None
        }
    }

    pub fn ids(&self, role: Role) -> &BTreeSet<u32> {
        match role {
            Role::Train => &self.train,
            Role::Validation => &self.validation,
            Role::Test => &self.test,
        }
    }
}

/// Takes experiments from the front of `pool` until their frames reach
/// `fraction` of `total`.
fn take_until(pool: &mut Vec<ExperimentSummary>, fraction: f64, total: usize) -> BTreeSet<u32> {
    let mut taken = BTreeSet::new();
    let target = fraction * total as f64;
    let mut count = 0usize;
    while (count as f64) < target && !pool.is_empty() {
        let e = pool.remove(0);
        count += e.frames;
        taken.insert(e.id);
    }
    taken
}

/// Per class, shuffles the experiments and assigns whole experiments to the
/// test set until it holds at least `test_fraction` of the class's frames,
/// then likewise to validation from what remains. The rest is training data.
pub fn holdout_split(experiments: &[ExperimentSummary], cfg: &SplitConfig) -> Result<SplitPlan> {
    let fractions_ok = (0.0..1.0).contains(&cfg.test_fraction)
        && cfg.test_fraction > 0.0
        && (0.0..1.0).contains(&cfg.val_fraction);
    if !fractions_ok {
        return Err(Error::Config(format!(
            "test fraction must lie in (0, 1) and validation fraction in [0, 1), got {} and {}",
            cfg.test_fraction, cfg.val_fraction
        )));
    }
    let ids: BTreeSet<u32> = experiments.iter().map(|e| e.id).collect();
    if ids.len() != experiments.len() {
        return Err(Error::Data("duplicate experiment ids".into()));
    }
    let mut rng = rng_from_seed(cfg.seed);
    let mut plan = SplitPlan::default();
    for label in [Label::Human, Label::Robot] {
        let mut pool: Vec<ExperimentSummary> = experiments
            .iter()
            .filter(|e| e.label == label)
            .copied()
            .collect();
        if pool.len() < MIN_EXPERIMENTS_PER_CLASS {
            return Err(Error::Data(format!(
                "{label}: {} experiments, a split needs at least {MIN_EXPERIMENTS_PER_CLASS}",
                pool.len()
            )));
        }
        pool.sort_by_key(|e| e.id);
        pool.shuffle(&mut rng);
        let total: usize = pool.iter().map(|e| e.frames).sum();
        let test = take_until(&mut pool, cfg.test_fraction, total);
        let remaining: usize = pool.iter().map(|e| e.frames).sum();
        let validation = take_until(&mut pool, cfg.val_fraction, remaining);
        if pool.is_empty() {
            return Err(Error::Data(format!(
                "{label}: no experiments left for training after the hold-out"
            )));
        }
        plan.test.extend(test);
        plan.validation.extend(validation);
        plan.train.extend(pool.iter().map(|e| e.id));
    }
    Ok(plan)
}
