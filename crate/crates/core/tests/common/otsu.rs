/// Σ ω_j (μ_j − μ_T)² computed directly from the histogram.
pub fn variance(hist: &[u64], cuts: &[usize]) -> f64 {
    let n: f64 = hist.iter().map(|&h| h as f64).sum();
    let mu_t: f64 = hist.iter().enumerate().map(|(i, &h)| i as f64 * h as f64).sum::<f64>() / n;
    let mut edges = vec![0];
    edges.extend_from_slice(cuts);
    edges.push(hist.len());
    let mut total = 0.0;
    for w in edges.windows(2) {
        let mut count = 0.0;
        let mut sum = 0.0;
        for (i, &h) in hist.iter().enumerate().take(w[1]).skip(w[0]) {
            count += h as f64;
            sum += i as f64 * h as f64;
        }
        if count > 0.0 {
            total += count / n * (sum / count - mu_t).powi(2);
        }
    }
    total
}

/// Every strictly increasing tuple in [1, len-1], visited in lexicographic
/// order; a later tuple only wins by a clear margin.
pub fn brute_force(hist: &[u64], k: usize) -> (Vec<usize>, f64) {
    fn rec(
        hist: &[u64],
        k: usize,
        cur: &mut Vec<usize>,
        best: &mut Option<(Vec<usize>, f64)>,
    ) {
        if cur.len() == k {
            let v = variance(hist, cur);
            let better = match best {
                None => true,
                Some((_, b)) => v > *b + 1e-12 * b.abs(),
            };
            if better {
                *best = Some((cur.clone(), v));
            }
            return;
        }
        let from = cur.last().map_or(1, |&t| t + 1);
        for t in from..hist.len() {
            cur.push(t);
            rec(hist, k, cur, best);
            cur.pop();
        }
    }
    let mut best = None;
    rec(hist, k, &mut Vec::new(), &mut best);
    best.unwrap()
}

