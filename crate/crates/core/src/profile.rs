//! Position-free profile vectors.
//!
//! A map is averaged down to a Doppler profile and a range profile. Each
//! profile is rotated so its power centroid sits at index 256, then the
//! middle 256 samples of both are joined into one 512-element vector.

use crate::error::{Error, Result};
use crate::rdmap::{RDMap, MAP_SIZE};

pub const PROFILE_LEN: usize = MAP_SIZE;
pub const CENTER: usize = MAP_SIZE / 2;
const CROP: usize = 128;

/// `(doppler_profile, range_profile)`: column means and row means.
pub fn profiles(map: &RDMap) -> (Vec<f64>, Vec<f64>) {
    let mut cols = vec![0u64; MAP_SIZE];
    let mut rows = vec![0u64; MAP_SIZE];
    for (r, row) in map.pixels().chunks(MAP_SIZE).enumerate() {
        for (d, &p) in row.iter().enumerate() {
            cols[d] += p as u64;
            rows[r] += p as u64;
        }
    }
    let mean = |v: Vec<u64>| v.into_iter().map(|s| s as f64 / MAP_SIZE as f64).collect();
    (mean(cols), mean(rows))
}

/// Rounded power centroid, halves rounding up.
pub fn centroid(profile: &[f64]) -> Result<usize> {
    let total: f64 = profile.iter().sum();
    if !(total > 0.0) {
        return Err(Error::EmptyTarget("profile has no mass".into()));
    }
    let weighted: f64 = profile.iter().enumerate().map(|(i, &p)| i as f64 * p).sum();
    Ok((weighted / total + 0.5).floor() as usize)
}

/// Circularly rotates the profile so its centroid lands on index 256.
pub fn center_shift(profile: &[f64]) -> Result<Vec<f64>> {
    let n = profile.len();
    let c = centroid(profile)?;
    let shift = (CENTER + n - c % n) % n;
    let mut out = vec![0.0; n];
    for (i, &p) in profile.iter().enumerate() {
        out[(i + shift) % n] = p;
    }
    Ok(out)
}

/// Middle halves of both profiles, Doppler first.
pub fn crop_concat(doppler: &[f64], range: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * (PROFILE_LEN - 2 * CROP));
    out.extend_from_slice(&doppler[CROP..PROFILE_LEN - CROP]);
    out.extend_from_slice(&range[CROP..PROFILE_LEN - CROP]);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileVector {
    pub values: Vec<f64>,
    /// Share of the centred profiles' total mass kept by the crop.
    pub energy_fraction: f64,
}

/// Profiles, centring and crop in one step. With `normalize` the vector is
/// scaled to unit sum.
pub fn restructure(map: &RDMap, normalize: bool) -> Result<ProfileVector> {
    let (dp, rp) = profiles(map);
    let dp = center_shift(&dp)?;
    let rp = center_shift(&rp)?;
    let full: f64 = dp.iter().sum::<f64>() + rp.iter().sum::<f64>();
    let mut values = crop_concat(&dp, &rp);
    let kept: f64 = values.iter().sum();
    if normalize && kept > 0.0 {
        values.iter_mut().for_each(|v| *v /= kept);
    }
    Ok(ProfileVector {
        values,
        energy_fraction: kept / full,
    })
}
