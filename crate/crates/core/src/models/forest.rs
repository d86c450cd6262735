//! Bagged decision trees.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linear::check_dim;
use super::tree::{grow_tree, targets, Presorted, Tree, TrainingView, TreeParams};
use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, substream_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    /// Features tried per split; `None` uses `⌊√d⌋`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    pub min_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            trees: 100,
            max_features: None,
            max_depth: None,
            min_leaf: 1,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub hyperparameters: ForestParams,
    pub n_features: usize,
    /// Seed of each tree's bootstrap and feature draws.
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<Tree>,
}

/// Multiplicity of each sample in a size-`n` draw with replacement.
pub fn bootstrap_counts<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    for _ in 0..n {
        counts[rng.random_range(0..n)] += 1.0;
    }
    counts
}

pub fn fit_random_forest(data: &LabeledDataset, params: &ForestParams) -> Result<ForestModel> {
    let d = data.n_features();
    let m = params.max_features.unwrap_or(((d as f64).sqrt().floor() as usize).max(1));
    if m == 0 || m > d {
        return Err(Error::Config(format!("features per split must lie in [1, {d}], got {m}")));
    }
    if params.trees == 0 {
        return Err(Error::Config("a forest needs at least one tree".into()));
    }
    let y = targets(data);
    let presorted = Presorted::new(data.features(), data.len(), d);
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf,
        max_features: Some(m),
    };
    let tree_seeds: Vec<u64> = (0..params.trees as u64)
        .map(|t| substream_seed(params.seed, t))
        .collect();
    let trees = tree_seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = rng_from_seed(seed);
            let w = if params.bootstrap {
                bootstrap_counts(data.len(), &mut rng)
            } else {
                vec![1.0; data.len()]
            };
            let view = TrainingView {
                x: data.features(),
                n: data.len(),
                d,
                y: &y,
                w: &w,
            };
            grow_tree(&view, &presorted, &tree_params, Some(&mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ForestModel {
        hyperparameters: ForestParams {
            max_features: Some(m),
            ..*params
        },
        n_features: d,
        tree_seeds,
        trees,
    })
}

impl ForestModel {
    /// Per-tree human frequencies.
    pub fn tree_scores(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict(x)).collect()
    }

    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        check_dim(self.n_features, x)?;
        let score = self.tree_scores(x).iter().sum::<f64>() / self.trees.len() as f64;
        Ok((Label::from_score(score), score))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::tree::fit_decision_tree;

    fn toy(n: usize) -> LabeledDataset {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..6).map(|j| ((i * (j + 3) * 7919 + j) % 113) as f64).collect())
            .collect();
        let labels = rows.iter().map(|r| Label::from_bool(r[0] + 0.5 * r[3] > 80.0)).collect();
        LabeledDataset::from_rows(&rows, labels).unwrap()
    }

    #[test]
    fn single_unbagged_tree_matches_cart() {
        let data = toy(120);
        let params = ForestParams {
            trees: 1,
            max_features: Some(6),
            max_depth: Some(4),
            min_leaf: 3,
            bootstrap: false,
            seed: 9,
        };
        let forest = fit_random_forest(&data, &params).unwrap();
        let tree = fit_decision_tree(&data, &TreeParams { max_depth: Some(4), min_leaf: 3, max_features: None }).unwrap();
        assert_eq!(forest.trees[0], tree.tree);
        for r in data.rows() {
            assert_eq!(forest.predict(r).unwrap(), tree.predict(r));
        }
    }

    #[test]
    fn constant_labels_give_exact_scores() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64, 1.0]).collect();
        let data = LabeledDataset::from_rows(&rows, vec![Label::Robot; 30]).unwrap();
        let forest = fit_random_forest(&data, &ForestParams { trees: 10, ..ForestParams::default() }).unwrap();
        assert!(forest.trees.iter().all(|t| t.nodes.len() == 1));
        assert_eq!(forest.predict(&[3.0, 1.0]).unwrap(), (Label::Robot, 0.0));
    }

    #[test]
    fn score_is_mean_of_tree_scores() {
        let data = toy(200);
        let forest = fit_random_forest(&data, &ForestParams { trees: 16, seed: 3, ..ForestParams::default() }).unwrap();
        for r in data.rows().take(20) {
            let s = forest.tree_scores(r);
            let mean = s.iter().sum::<f64>() / s.len() as f64;
            assert_eq!(forest.predict(r).unwrap().1, mean);
        }
    }

    #[test]
    fn bootstrap_keeps_about_63_percent() {
        let mut rng = rng_from_seed(11);
        let counts = bootstrap_counts(10_000, &mut rng);
        let unique = counts.iter().filter(|&&c| c > 0.0).count() as f64 / 10_000.0;
        assert!((unique - (1.0 - (-1f64).exp())).abs() < 0.02, "{unique}");
        assert_eq!(counts.iter().sum::<f64>(), 10_000.0);
    }

    #[test]
    fn deterministic_and_validated() {
        let data = toy(100);
        let p = ForestParams { trees: 8, seed: 5, ..ForestParams::default() };
        assert_eq!(fit_random_forest(&data, &p).unwrap(), fit_random_forest(&data, &p).unwrap());
        assert!(fit_random_forest(&data, &ForestParams { max_features: Some(7), ..p }).is_err());
    }

    #[test]
    fn more_trees_vary_less_across_seeds() {
        let data = toy(150);
        let probe: Vec<f64> = (0..6).map(|j| 40.0 + j as f64 * 5.0).collect();
        let spread = |trees: usize| {
            let scores: Vec<f64> = (0..20)
                .map(|seed| {
                    let p = ForestParams { trees, seed, ..ForestParams::default() };
                    fit_random_forest(&data, &p).unwrap().predict(&probe).unwrap().1
                })
                .collect();
            let mean = scores.iter().sum::<f64>() / scores.len() as f64;
            scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / scores.len() as f64
        };
        assert!(spread(64) < spread(4));
    }
}
