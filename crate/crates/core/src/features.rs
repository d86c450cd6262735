//! Spread statistics of the retained target pixels.
//!
//! Seven numbers describe how a target is distributed over the map without
//! reference to where it is: the extent and spread along each axis and the
//! range/Doppler covariance, all in bin units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::otsu::LevelMask;

pub const FEATURE_COUNT: usize = 7;
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] =
    ["d_extent", "r_extent", "sigma_v", "sigma_r", "var_v", "var_r", "cov_rv"];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureVector {
    pub d_extent: f64,
    pub r_extent: f64,
    pub sigma_v: f64,
    pub sigma_r: f64,
    pub var_v: f64,
    pub var_r: f64,
    pub cov_rv: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; FEATURE_COUNT] {
        [
            self.d_extent,
            self.r_extent,
            self.sigma_v,
            self.sigma_r,
            self.var_v,
            self.var_r,
            self.cov_rv,
        ]
    }
}

/// How retained pixels are weighted in the moments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Weighting {
    /// Proportional to pixel intensity.
    #[default]
    Intensity,
    Uniform,
}

/// Features of a set of weighted `(range bin, Doppler bin, weight)` points.
pub fn point_features(points: &[(f64, f64, f64)]) -> Result<FeatureVector> {
    let total: f64 = points.iter().map(|p| p.2).sum();
    if points.is_empty() || total <= 0.0 {
        return Err(Error::EmptyTarget("no retained pixels".into()));
    }
    let (mut r_min, mut r_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut d_min, mut d_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut mean_r, mut mean_d) = (0.0, 0.0);
    for &(r, d, w) in points {
        let w = w / total;
        r_min = r_min.min(r);
        r_max = r_max.max(r);
        d_min = d_min.min(d);
        d_max = d_max.max(d);
        mean_r += w * r;
        mean_d += w * d;
    }
    let (mut var_r, mut var_d, mut cov) = (0.0, 0.0, 0.0);
    for &(r, d, w) in points {
        let w = w / total;
        let (dr, dd) = (r - mean_r, d - mean_d);
        var_r += w * dr * dr;
        var_d += w * dd * dd;
        cov += w * dr * dd;
    }
    let sigma_r = var_r.sqrt();
    let sigma_v = var_d.sqrt();
    let bound = sigma_r * sigma_v;
    Ok(FeatureVector {
        d_extent: d_max - d_min,
        r_extent: r_max - r_min,
        sigma_v,
        sigma_r,
        var_v: sigma_v * sigma_v,
        var_r: sigma_r * sigma_r,
        cov_rv: cov.clamp(-bound, bound),
    })
}

pub fn extract_features(mask: &LevelMask, weighting: Weighting) -> Result<FeatureVector> {
    let points: Vec<(f64, f64, f64)> = mask
        .retained()
        .map(|(r, d, intensity)| {
            let w = match weighting {
                Weighting::Intensity => intensity as f64,
                Weighting::Uniform => 1.0,
            };
            (r as f64, d as f64, w)
        })
        .collect();
    point_features(&points)
}

/// Concatenates `b` consecutive frame vectors in temporal order.
pub fn buffer_concat(frames: &[FeatureVector], b: usize) -> Result<Vec<f64>> {
    if b == 0 || frames.len() != b {
        return Err(Error::Data(format!(
            "buffer of size {b} needs {b} frames, got {}",
            frames.len()
        )));
    }
    Ok(frames.iter().flat_map(|f| f.to_array()).collect())
}

/// Stride-1 buffers over one experiment. `frames` holds
/// `(frame_index, features)` in temporal order; a buffer is only formed from
/// `b` frames with consecutive indices. Returns `(first frame index, values)`.
pub fn sliding_buffers(frames: &[(u32, FeatureVector)], b: usize) -> Result<Vec<(u32, Vec<f64>)>> {
    if b == 0 {
        return Err(Error::Config("buffer size must be positive".into()));
    }
    let mut out = Vec::new();
    for window in frames.windows(b) {
        let consecutive = window.windows(2).all(|w| w[1].0 == w[0].0 + 1);
        if consecutive {
            let fv: Vec<FeatureVector> = window.iter().map(|x| x.1).collect();
            out.push((window[0].0, buffer_concat(&fv, b)?));
        }
    }
    Ok(out)
}
