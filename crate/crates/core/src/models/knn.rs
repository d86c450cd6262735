//! Brute-force k-nearest-neighbour voting on standardized features.

use serde::{Deserialize, Serialize};

use super::linear::{check_dim, Standardizer};
use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        KnnParams { k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub hyperparameters: KnnParams,
    pub standardizer: Standardizer,
    /// Standardized training rows, row-major.
    pub points: Vec<f64>,
    pub labels: Vec<Label>,
}

pub fn fit_knn(data: &LabeledDataset, params: &KnnParams) -> Result<KnnModel> {
    if params.k == 0 || params.k > data.len() {
        return Err(Error::Config(format!(
            "k must lie in [1, {}], got {}",
            data.len(),
            params.k
        )));
    }
    let standardizer = Standardizer::fit(data);
    let points = data.rows().flat_map(|r| standardizer.apply(r)).collect();
    Ok(KnnModel {
        hyperparameters: *params,
        standardizer,
        points,
        labels: data.labels().to_vec(),
    })
}

impl KnnModel {
    /// Indices of the `k` nearest training points, nearest first; equal
    /// distances keep training order.
    pub fn neighbours(&self, x: &[f64]) -> Result<Vec<usize>> {
        let d = self.standardizer.dim();
        check_dim(d, x)?;
        let q = self.standardizer.apply(x);
        let mut dist: Vec<(f64, usize)> = self
            .points
            .chunks_exact(d)
            .enumerate()
            .map(|(i, p)| (p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let k = self.hyperparameters.k;
        let by_distance = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, by_distance);
            dist.truncate(k);
        }
        dist.sort_by(by_distance);
        Ok(dist.into_iter().map(|(_, i)| i).collect())
    }

    /// Majority label of the neighbours; a split vote goes to the nearest.
    /// The score is the human share of the vote.
    pub fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        let nn = self.neighbours(x)?;
        let humans = nn.iter().filter(|&&i| self.labels[i].is_human()).count();
        let robots = nn.len() - humans;
        let label = match humans.cmp(&robots) {
            std::cmp::Ordering::Greater => Label::Human,
            std::cmp::Ordering::Less => Label::Robot,
            std::cmp::Ordering::Equal => self.labels[nn[0]],
        };
        Ok((label, humans as f64 / nn.len() as f64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn memorizes_with_one_neighbour() {
        let rows: Vec<Vec<f64>> = (0..30).map(|i| vec![(i * 17 % 31) as f64, (i * 5 % 7) as f64]).collect();
        let labels: Vec<Label> = (0..30).map(|i| Label::from_bool(i % 3 == 0)).collect();
        let data = LabeledDataset::from_rows(&rows, labels.clone()).unwrap();
        let m = fit_knn(&data, &KnnParams { k: 1 }).unwrap();
        for (r, l) in rows.iter().zip(labels) {
            assert_eq!(m.predict(r).unwrap().0, l);
        }
    }

    #[test]
    fn three_nearest_of_five() {
        // Standardization keeps the ordering of distances along one axis.
        let rows = vec![vec![0.0], vec![1.0], vec![2.5], vec![6.0], vec![10.0]];
        let labels = vec![Label::Human, Label::Robot, Label::Robot, Label::Human, Label::Human];
        let data = LabeledDataset::from_rows(&rows, labels.clone()).unwrap();
        let m = fit_knn(&data, &KnnParams { k: 3 }).unwrap();
        for q in [0.2, 1.9, 4.0, 7.5, 9.0] {
            let mut order: Vec<usize> = (0..5).collect();
            order.sort_by(|&a, &b| (rows[a][0] - q).abs().total_cmp(&(rows[b][0] - q).abs()));
            let humans = order[..3].iter().filter(|&&i| labels[i].is_human()).count();
            assert_eq!(m.predict(&[q]).unwrap().0, Label::from_bool(humans >= 2), "query {q}");
        }
    }

    #[test]
    fn split_vote_follows_nearest() {
        let rows = vec![vec![0.0], vec![1.0], vec![3.0], vec![4.0]];
        let labels = vec![Label::Robot, Label::Human, Label::Robot, Label::Human];
        let data = LabeledDataset::from_rows(&rows, labels).unwrap();
        let m = fit_knn(&data, &KnnParams { k: 2 }).unwrap();
        assert_eq!(m.predict(&[0.9]).unwrap(), (Label::Human, 0.5));
        assert_eq!(m.predict(&[0.1]).unwrap(), (Label::Robot, 0.5));
    }

    #[test]
    fn k_larger_than_training_set() {
        let data = LabeledDataset::from_rows(&[vec![0.0], vec![1.0]], vec![Label::Human, Label::Robot]).unwrap();
        assert!(fit_knn(&data, &KnnParams { k: 3 }).is_err());
    }
}
