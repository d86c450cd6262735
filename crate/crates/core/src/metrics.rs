//! Binary classification metrics. Human is the positive class.

use serde::{Deserialize, Serialize};

use crate::dataset::Label;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// Human predicted human.
    pub tp: u64,
    /// Robot predicted human.
    pub fp: u64,
    /// Human predicted robot.
    pub fn_: u64,
    /// Robot predicted robot.
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: impl IntoIterator<Item = (Label, Label)>) -> Self {
        let mut cm = ConfusionMatrix::default();
        for (truth, predicted) in pairs {
            cm.record(truth, predicted);
        }
        cm
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Human, Label::Human) => self.tp += 1,
            (Label::Human, Label::Robot) => self.fn_ += 1,
            (Label::Robot, Label::Human) => self.fp += 1,
            (Label::Robot, Label::Robot) => self.tn += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.total())
    }

    /// Row-normalized rates: `[[human→human, human→robot], [robot→human, robot→robot]]`.
    pub fn rates(&self) -> [[f64; 2]; 2] {
        let human = self.tp + self.fn_;
        let robot = self.fp + self.tn;
        [
            [ratio(self.tp, human), ratio(self.fn_, human)],
            [ratio(self.fp, robot), ratio(self.tn, robot)],
        ]
    }

    pub fn to_csv(&self) -> String {
        let r = self.rates();
        format!(
            "true,predicted,count,rate\n\
             human,human,{},{:.6}\n\
             human,robot,{},{:.6}\n\
             robot,human,{},{:.6}\n\
             robot,robot,{},{:.6}\n",
            self.tp, r[0][0], self.fn_, r[0][1], self.fp, r[1][0], self.tn, r[1][1]
        )
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Fraction of equal pairs.
pub fn accuracy(truth: &[Label], predicted: &[Label]) -> f64 {
    assert_eq!(truth.len(), predicted.len());
    if truth.is_empty() {
        return 0.0;
    }
    let hits = truth.iter().zip(predicted).filter(|(a, b)| a == b).count();
    hits as f64 / truth.len() as f64
}

/// Nearest-rank percentile of `values` (`q` in [0, 100]).
pub fn percentile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((q / 100.0) * v.len() as f64).ceil().max(1.0) as usize;
    v[rank.min(v.len()) - 1]
}

/// Least-squares non-decreasing fit by pool-adjacent-violators, equal
/// weights.
pub fn isotonic_fit(values: &[f64]) -> Vec<f64> {
    // Each block is (sum, count); adjacent blocks merge while means decrease.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(values.len());
    for &v in values {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, n1) = blocks[blocks.len() - 1];
            let (s0, n0) = blocks[blocks.len() - 2];
            if s0 / n0 as f64 <= s1 / n1 as f64 {
                break;
            }
            blocks.pop();
            *blocks.last_mut().unwrap() = (s0 + s1, n0 + n1);
        }
    }
    blocks
        .iter()
        .flat_map(|&(s, n)| std::iter::repeat_n(s / n as f64, n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::*;

    #[test]
    fn counts_and_rates() {
        let cm = ConfusionMatrix::from_pairs([
            (Human, Human),
            (Human, Human),
            (Human, Robot),
            (Robot, Robot),
        ]);
        assert_eq!((cm.tp, cm.fn_, cm.fp, cm.tn), (2, 1, 0, 1));
        assert_eq!(cm.accuracy(), 0.75);
        let r = cm.rates();
        assert!((r[0][0] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r[1], [0.0, 1.0]);
    }

    #[test]
    fn perfect_predictions_are_diagonal() {
        let truth = [Human, Robot, Robot, Human];
        let cm = ConfusionMatrix::from_pairs(truth.iter().map(|&t| (t, t)));
        assert_eq!(cm.fp + cm.fn_, 0);
        assert_eq!(cm.accuracy(), 1.0);
        assert_eq!(accuracy(&truth, &truth), 1.0);
    }

    #[test]
    fn nearest_rank_percentiles() {
        let v = [5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert_eq!(percentile(&v, 100.0), 5.0);
        assert_eq!(percentile(&v, 0.0), 1.0);
    }

    #[test]
    fn isotonic_pools_violators() {
        assert_eq!(isotonic_fit(&[1.0, 3.0, 2.0, 4.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(isotonic_fit(&[3.0, 2.0, 1.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(isotonic_fit(&[0.5, 0.6]), vec![0.5, 0.6]);
        assert!(isotonic_fit(&[]).is_empty());
    }

    #[test]
    fn isotonic_beats_every_monotone_grid_candidate() {
        let y = [0.7, 0.9, 0.6, 0.8, 0.85, 0.82, 0.95];
        let fit = isotonic_fit(&y);
        assert!(fit.windows(2).all(|w| w[0] <= w[1]));
        let sse = |f: &[f64]| f.iter().zip(&y).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        // Brute force over non-decreasing sequences on a 0.05 grid.
        let grid: Vec<f64> = (10..=20).map(|i| i as f64 * 0.05).collect();
        let mut best = f64::INFINITY;
        let mut stack = vec![(Vec::<f64>::new(), 0usize)];
        while let Some((seq, lo)) = stack.pop() {
            if seq.len() == y.len() {
                best = best.min(sse(&seq));
                continue;
            }
            for (i, &g) in grid.iter().enumerate().skip(lo) {
                let mut next = seq.clone();
                next.push(g);
                stack.push((next, i));
            }
        }
        assert!(sse(&fit) <= best + 1e-12);
    }
}
