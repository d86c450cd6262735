//! CART trees with weighted samples.
//!
//! Splits maximize `S_L²/W_L + S_R²/W_R`, where `W` is the sample weight and
//! `S` the weighted target sum on each side. For 0/1 targets this is the same
//! as minimizing weighted Gini impurity; for real targets it minimizes the
//! squared error. Thresholds sit halfway between consecutive distinct values
//! and samples with `x <= threshold` go left.

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    /// Smallest total sample weight allowed in a leaf.
    pub min_leaf: usize,
    /// Features drawn at random per split; `None` uses all of them.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: Some(8),
            min_leaf: 5,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: f64,
        weight: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root first.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { .. } => return i,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self.nodes[self.leaf_index(x)] {
            Node::Leaf { value, .. } => value,
            Node::Split { .. } => unreachable!("leaf_index stops at a leaf"),
        }
    }

    pub fn set_leaf_value(&mut self, index: usize, new_value: f64) {
        if let Node::Leaf { value, .. } = &mut self.nodes[index] {
            *value = new_value;
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left).max(walk(nodes, right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }

    pub fn max_feature(&self) -> Option<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf { .. } => None,
            })
            .max()
    }
}

/// Per-feature sample order by value, shared by every tree fit on one
/// feature matrix.
#[derive(Debug, Clone)]
pub struct Presorted {
    order: Vec<Vec<u32>>,
}

impl Presorted {
    pub fn new(x: &[f64], n: usize, d: usize) -> Self {
        let order = (0..d)
            .map(|f| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| x[a as usize * d + f].total_cmp(&x[b as usize * d + f]));
                idx
            })
            .collect();
        Presorted { order }
    }
}

/// Row-major feature matrix with targets and weights.
pub struct TrainingView<'a> {
    pub x: &'a [f64],
    pub n: usize,
    pub d: usize,
    pub y: &'a [f64],
    pub w: &'a [f64],
}

struct Split {
    feature: usize,
    threshold: f64,
    score: f64,
}

struct Grower<'a> {
    data: &'a TrainingView<'a>,
    presorted: &'a Presorted,
    params: TreeParams,
    rng: Option<&'a mut SimRng>,
    /// Node currently holding each sample.
    owner: Vec<u32>,
    nodes: Vec<Node>,
    scratch: Vec<u32>,
}

impl Grower<'_> {
    fn value(&self, i: u32, f: usize) -> f64 {
        self.data.x[i as usize * self.data.d + f]
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.data.d;
        match (self.params.max_features, self.rng.as_deref_mut()) {
            (Some(m), Some(rng)) if m < d => {
                let mut f = sample(rng, d, m).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    /// Scans samples of one feature in ascending value order.
    fn scan(&self, f: usize, sorted: &[u32], total_w: f64, total_s: f64, best: &mut Option<Split>) {
        let min_leaf = self.params.min_leaf.max(1) as f64;
        let (mut wl, mut sl) = (0.0, 0.0);
        for k in 0..sorted.len() - 1 {
            let i = sorted[k] as usize;
            wl += self.data.w[i];
            sl += self.data.w[i] * self.data.y[i];
            let (lo, hi) = (self.value(sorted[k], f), self.value(sorted[k + 1], f));
            if lo == hi {
                continue;
            }
            let wr = total_w - wl;
            if wl < min_leaf || wr < min_leaf {
                continue;
            }
            let sr = total_s - sl;
            let score = sl * sl / wl + sr * sr / wr;
            if best.as_ref().is_none_or(|b| score > b.score) {
                let mut threshold = lo + (hi - lo) / 2.0;
                if threshold >= hi {
                    threshold = lo;
                }
                *best = Some(Split {
                    feature: f,
                    threshold,
                    score,
                });
            }
        }
    }

    fn best_split(&mut self, id: u32, members: &[u32], total_w: f64, total_s: f64) -> Option<Split> {
        let features = self.candidate_features();
        let n_total = self.data.n;
        let small = members.len() * 16 < n_total;
        let mut best = None;
        let mut sorted = std::mem::take(&mut self.scratch);
        for f in features {
            sorted.clear();
            if small {
                sorted.extend_from_slice(members);
                sorted.sort_by(|&a, &b| self.value(a, f).total_cmp(&self.value(b, f)).then(a.cmp(&b)));
            } else {
                sorted.extend(
                    self.presorted.order[f]
                        .iter()
                        .copied()
                        .filter(|&i| self.owner[i as usize] == id),
                );
            }
            self.scan(f, &sorted, total_w, total_s, &mut best);
        }
        self.scratch = sorted;
        best
    }

    fn grow(&mut self, members: Vec<u32>, depth: usize) -> usize {
        let id = self.nodes.len();
        let (mut total_w, mut total_s) = (0.0, 0.0);
        for &i in &members {
            total_w += self.data.w[i as usize];
            total_s += self.data.w[i as usize] * self.data.y[i as usize];
        }
        self.nodes.push(Node::Leaf {
            value: total_s / total_w,
            weight: total_w,
        });
        for &i in &members {
            self.owner[i as usize] = id as u32;
        }

        let depth_ok = self.params.max_depth.is_none_or(|m| depth < m);
        if !depth_ok || members.len() < 2 || total_w < 2.0 * self.params.min_leaf.max(1) as f64 {
            return id;
        }
        let Some(split) = self.best_split(id as u32, &members, total_w, total_s) else {
            return id;
        };
        let parent = total_s * total_s / total_w;
        if split.score - parent <= 1e-12 * parent.abs().max(1e-12) {
            return id;
        }
        let (left, right): (Vec<u32>, Vec<u32>) = members
            .into_iter()
            .partition(|&i| self.value(i, split.feature) <= split.threshold);
        let l = self.grow(left, depth + 1);
        let r = self.grow(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: l,
            right: r,
        };
        id
    }
}

/// Grows one tree on the samples with positive weight.
pub fn grow_tree(
    data: &TrainingView<'_>,
    presorted: &Presorted,
    params: &TreeParams,
    rng: Option<&mut SimRng>,
) -> Result<Tree> {
    if data.n == 0 || data.d == 0 {
        return Err(Error::Data("cannot fit a tree to an empty dataset".into()));
    }
    if let Some(m) = params.max_features {
        if m == 0 || m > data.d {
            return Err(Error::Config(format!(
                "max_features must lie in [1, {}], got {m}",
                data.d
            )));
        }
    }
    let members: Vec<u32> = (0..data.n as u32).filter(|&i| data.w[i as usize] > 0.0).collect();
    if members.is_empty() {
        return Err(Error::Data("all sample weights are zero".into()));
    }
    let mut g = Grower {
        data,
        presorted,
        params: *params,
        rng,
        owner: vec![u32::MAX; data.n],
        nodes: Vec::new(),
        scratch: Vec::new(),
    };
    g.grow(members, 0);
    Ok(Tree { nodes: g.nodes })
}

/// Classification tree; leaves hold the fraction of human samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub hyperparameters: TreeParams,
    pub n_features: usize,
    pub tree: Tree,
}

impl TreeModel {
    pub fn predict(&self, x: &[f64]) -> (Label, f64) {
        let score = self.tree.predict(x);
        (Label::from_score(score), score)
    }
}

pub fn targets(data: &LabeledDataset) -> Vec<f64> {
    data.labels().iter().map(|l| l.target()).collect()
}

pub fn fit_decision_tree(data: &LabeledDataset, params: &TreeParams) -> Result<TreeModel> {
    if data.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    let y = targets(data);
    let w = vec![1.0; data.len()];
    let view = TrainingView {
        x: data.features(),
        n: data.len(),
        d: data.n_features(),
        y: &y,
        w: &w,
    };
    let presorted = Presorted::new(view.x, view.n, view.d);
    let tree = grow_tree(&view, &presorted, &TreeParams { max_features: None, ..*params }, None)?;
    Ok(TreeModel {
        hyperparameters: *params,
        n_features: data.n_features(),
        tree,
    })
}
