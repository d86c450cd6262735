//! Multi-level Otsu thresholding of range-Doppler maps.
//!
//! A map is split into 10 intensity levels by the 9 thresholds that maximize
//! the between-class variance of its histogram; the lower 5 levels are
//! treated as background.

use std::path::Path;

use crate::error::{Error, Result};
use crate::rdmap::{write_pgm_to, RDMap, MAP_SIZE};

pub const LEVELS: usize = 10;
/// Levels at or above this index are kept as target.
pub const FIRST_RETAINED_LEVEL: u8 = 5;

/// Relative slack under which two between-class sums count as a tie.
const TIE_TOLERANCE: f64 = 1e-12;

/// Histogram of 8-bit intensities.
pub fn histogram(pixels: &[u8]) -> [u64; 256] {
    let mut h = [0u64; 256];
    for &p in pixels {
        h[p as usize] += 1;
    }
    h
}

/// Cumulative count and first-moment tables, `len + 1` entries each.
struct Moments {
    count: Vec<f64>,
    moment: Vec<f64>,
}

impl Moments {
    fn new(hist: &[u64]) -> Self {
        let mut count = vec![0.0; hist.len() + 1];
        let mut moment = vec![0.0; hist.len() + 1];
        for (i, &h) in hist.iter().enumerate() {
            count[i + 1] = count[i] + h as f64;
            moment[i + 1] = moment[i] + (i as u64 * h) as f64;
        }
        Moments { count, moment }
    }

    /// `S²/P` of the class covering bins `[lo, hi)`; zero for an empty class.
    fn score(&self, lo: usize, hi: usize) -> f64 {
        let p = self.count[hi] - self.count[lo];
        if p == 0.0 {
            return 0.0;
        }
        let s = self.moment[hi] - self.moment[lo];
        s * s / p
    }
}

/// Between-class variance of the classes cut by `thresholds`.
pub fn between_class_variance(hist: &[u64], thresholds: &[usize]) -> f64 {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let mean = hist.iter().enumerate().map(|(i, &h)| (i as u64 * h) as f64).sum::<f64>() / n;
    let mut bounds = vec![0];
    bounds.extend_from_slice(thresholds);
    bounds.push(hist.len());
    bounds
        .windows(2)
        .map(|w| {
            let p: u64 = hist[w[0]..w[1]].iter().sum();
            if p == 0 {
                return 0.0;
            }
            let mu = hist[w[0]..w[1]]
                .iter()
                .enumerate()
                .map(|(i, &h)| ((w[0] + i) as u64 * h) as f64)
                .sum::<f64>()
                / p as f64;
            p as f64 / n * (mu - mean).powi(2)
        })
        .sum()
}

/// The `k` thresholds, strictly increasing in `[1, len - 1]`, that maximize
/// the between-class variance. Intensity `x` belongs to class `j` when
/// exactly `j` thresholds are `<= x`. Among equally good placements the
/// lexicographically smallest is returned.
pub fn multi_otsu(hist: &[u64], k: usize) -> Result<Vec<usize>> {
    let len = hist.len();
    let populated = hist.iter().filter(|&&h| h > 0).count();
    if k == 0 || k >= len {
        return Err(Error::Degenerate(format!(
            "cannot place {k} thresholds in a {len}-bin histogram"
        )));
    }
    if populated < k + 1 {
        return Err(Error::Degenerate(format!(
            "{k} thresholds need at least {} populated bins, found {populated}",
            k + 1
        )));
    }
    let m = Moments::new(hist);

    // best[j][s]: best score of classes j..=k when class j starts at bin s.
    // Class j may start at s in [j, len - (k - j) - 1].
    let mut best = vec![vec![f64::NEG_INFINITY; len]; k + 1];
    for s in k..len {
        best[k][s] = m.score(s, len);
    }
    for j in (1..k).rev() {
        for s in j..len - (k - j) {
            let mut b = f64::NEG_INFINITY;
            for t in s + 1..len - (k - j) + 1 {
                b = b.max(m.score(s, t) + best[j + 1][t]);
            }
            best[j][s] = b;
        }
    }
    let optimum = (1..len - k + 1)
        .map(|t| m.score(0, t) + best[1][t])
        .fold(f64::NEG_INFINITY, f64::max);
    let slack = TIE_TOLERANCE * optimum.abs();

    // Walk forward taking the smallest threshold that stays optimal.
    let mut thresholds = Vec::with_capacity(k);
    let (mut start, mut target) = (0, optimum);
    for j in 1..=k {
        let last = len - (k - j);
        let t = (start + 1..last)
            .find(|&t| m.score(start, t) + best[j][t] >= target - slack)
            .expect("an optimal continuation exists");
        target -= m.score(start, t);
        thresholds.push(t);
        start = t;
    }
    Ok(thresholds)
}

/// Result of splitting a map into 10 levels.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMask {
    /// Row-major levels 0..=9, same layout as the map.
    pub levels: Vec<u8>,
    /// Source intensities.
    pub intensities: Vec<u8>,
    /// Nine strictly increasing thresholds.
    pub thresholds: Vec<u8>,
    /// Set when the map had fewer than 10 distinct intensities and equal-width
    /// levels were used instead.
    pub fallback: bool,
}

impl LevelMask {
    pub fn is_retained(&self, i: usize) -> bool {
        self.levels[i] >= FIRST_RETAINED_LEVEL
    }

    pub fn retained_count(&self) -> usize {
        self.levels.iter().filter(|&&l| l >= FIRST_RETAINED_LEVEL).count()
    }

    /// `(range bin, Doppler bin, intensity)` of every retained pixel.
    pub fn retained(&self) -> impl Iterator<Item = (usize, usize, u8)> + '_ {
        self.levels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l >= FIRST_RETAINED_LEVEL)
            .map(|(i, _)| (i / MAP_SIZE, i % MAP_SIZE, self.intensities[i]))
    }

    /// Debug image with each pixel at `level · 28`.
    pub fn write_debug_pgm(&self, path: &Path) -> Result<()> {
        let pixels: Vec<u8> = self.levels.iter().map(|&l| l * 28).collect();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        write_pgm_to(&pixels, MAP_SIZE, MAP_SIZE, std::io::BufWriter::new(file))
            .map_err(|e| Error::io(path, e))
    }
}

/// Equal-width thresholds: intensity `x` is at level `x·10/256`.
pub fn equal_width_thresholds() -> Vec<u8> {
    (1..LEVELS).map(|j| (256 * j).div_ceil(LEVELS) as u8).collect()
}

pub fn quantize_and_denoise(map: &RDMap) -> LevelMask {
    let pixels = map.pixels();
    let hist = histogram(pixels);
    let distinct = hist.iter().filter(|&&h| h > 0).count();
    let (thresholds, fallback) = if distinct >= LEVELS {
        let t = multi_otsu(&hist, LEVELS - 1).expect("enough distinct intensities");
        (t.into_iter().map(|x| x as u8).collect(), false)
    } else {
        (equal_width_thresholds(), true)
    };
    let mut lookup = [0u8; 256];
    for (x, level) in lookup.iter_mut().enumerate() {
        *level = thresholds.iter().filter(|&&t| t as usize <= x).count() as u8;
    }
    LevelMask {
        levels: pixels.iter().map(|&p| lookup[p as usize]).collect(),
        intensities: pixels.to_vec(),
        thresholds,
        fallback,
    }
}
