//! Point-scatterer simulation of dechirped FMCW frames.
//!
//! Each scatterer contributes a complex tone whose fast-time frequency encodes
//! its range and whose chirp-to-chirp phase advance encodes its radial
//! velocity:
//!
//! ```text
//! s[n, p] = Σ_k A_k · exp(j2π [ 2B·R_k(p)/(c·Ns) · n  +  2·fc·v_k·Tp/c · p ]) + noise
//! ```
//!
//! `R_k(p)` is the scatterer range during chirp `p`. By default it stays at
//! `R_k` for the whole frame. With range migration enabled it moves by
//! `v_k·Tp` per chirp around `R_k`, the range at the middle of the frame,
//! which also couples velocity into the slow-time phase and moves the
//! Doppler peak by about `B·v·Tp/c` cycles per chirp.

mod cube_file;
mod human;
mod robot;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::radar::{derive_params, DerivedParams, RadarConfig, SPEED_OF_LIGHT};
use crate::rng::{rng_from_seed, substream_seed};

pub use cube_file::{read_cube, read_cube_from, write_cube, write_cube_to, CUBE_MAGIC};
pub use human::{human_scatterers, simulate_human, GaitParams, GaitPhase};
pub use robot::{robot_scatterers, simulate_robot, RobotParams, TrapezoidProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scatterer {
    /// Range at mid-frame, m.
    pub range: f64,
    /// Radial velocity, m/s; positive moves away from the radar.
    pub radial_velocity: f64,
    pub amplitude: f64,
}

impl Scatterer {
    pub fn new(range: f64, radial_velocity: f64, amplitude: f64) -> Self {
        Scatterer {
            range,
            radial_velocity,
            amplitude,
        }
    }
}

/// One frame of complex beat samples, `Ns × Np`, stored chirp by chirp.
#[derive(Debug, Clone, PartialEq)]
pub struct ChirpCube {
    samples: Vec<Complex64>,
    samples_per_chirp: usize,
    chirps: usize,
    pub config: RadarConfig,
    pub frame_index: u32,
}

impl ChirpCube {
    pub fn new(
        config: RadarConfig,
        samples_per_chirp: usize,
        chirps: usize,
        samples: Vec<Complex64>,
        frame_index: u32,
    ) -> Result<Self> {
        if samples_per_chirp == 0 || chirps == 0 {
            return Err(Error::Data("cube dimensions must be positive".into()));
        }
        if samples.len() != samples_per_chirp * chirps {
            return Err(Error::Data(format!(
                "cube {samples_per_chirp}x{chirps} needs {} samples, got {}",
                samples_per_chirp * chirps,
                samples.len()
            )));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Data("cube contains non-finite samples".into()));
        }
        Ok(ChirpCube {
            samples,
            samples_per_chirp,
            chirps,
            config,
            frame_index,
        })
    }

    pub fn zeros(config: RadarConfig, samples_per_chirp: usize, chirps: usize) -> Self {
        ChirpCube {
            samples: vec![Complex64::new(0.0, 0.0); samples_per_chirp * chirps],
            samples_per_chirp,
            chirps,
            config,
            frame_index: 0,
        }
    }

    pub fn samples_per_chirp(&self) -> usize {
        self.samples_per_chirp
    }

    pub fn chirps(&self) -> usize {
        self.chirps
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [Complex64] {
        &mut self.samples
    }

    pub fn chirp(&self, p: usize) -> &[Complex64] {
        &self.samples[p * self.samples_per_chirp..(p + 1) * self.samples_per_chirp]
    }

    pub fn at(&self, n: usize, p: usize) -> Complex64 {
        self.samples[p * self.samples_per_chirp + n]
    }

    pub fn mean_power(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Elementwise sum of two cubes of equal shape.
    pub fn add(&self, other: &ChirpCube) -> Result<ChirpCube> {
        if self.samples_per_chirp != other.samples_per_chirp || self.chirps != other.chirps {
            return Err(Error::Data("cannot add cubes of different shapes".into()));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ChirpCube {
            samples,
            ..self.clone()
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubeOptions {
    /// Signal-to-noise ratio relative to the mean signal power; `None` is
    /// noiseless.
    pub snr_db: Option<f64>,
    pub range_migration: bool,
}

impl Default for CubeOptions {
    fn default() -> Self {
        CubeOptions {
            snr_db: Some(20.0),
            range_migration: false,
        }
    }
}

impl CubeOptions {
    pub fn noiseless() -> Self {
        CubeOptions {
            snr_db: None,
            range_migration: false,
        }
    }
}

fn check_scatterers(scatterers: &[Scatterer], cfg: &RadarConfig, params: &DerivedParams) -> Result<()> {
    if scatterers.is_empty() {
        return Err(Error::Data("at least one scatterer is required".into()));
    }
    for s in scatterers {
        let ok_range = s.range.is_finite() && (0.0..=cfg.max_range).contains(&s.range);
        let ok_velocity =
            s.radial_velocity.is_finite() && s.radial_velocity.abs() <= params.max_velocity;
        let ok_amp = s.amplitude.is_finite() && s.amplitude >= 0.0;
        if !(ok_range && ok_velocity && ok_amp) {
            return Err(Error::Data(format!(
                "scatterer {s:?} outside [0, {}] m x [-{v}, {v}] m/s",
                cfg.max_range,
                v = params.max_velocity
            )));
        }
    }
    Ok(())
}

/// Synthesizes one frame. Noise, if any, is drawn from a generator seeded
/// with `seed`.
pub fn point_scatterer_cube_with(
    cfg: &RadarConfig,
    scatterers: &[Scatterer],
    opts: &CubeOptions,
    seed: u64,
) -> Result<ChirpCube> {
    let params = derive_params(cfg)?;
    check_scatterers(scatterers, cfg, &params)?;
    let ns = params.samples_per_chirp;
    let np = params.chirps_per_frame;
    let tp = cfg.chirp_duration;
    let mid = (np as f64 - 1.0) / 2.0;

    let mut samples = vec![Complex64::new(0.0, 0.0); ns * np];
    for s in scatterers {
        // Cycles per chirp of the Doppler term.
        let doppler = 2.0 * cfg.carrier_frequency * s.radial_velocity * tp / SPEED_OF_LIGHT;
        for p in 0..np {
            let range = if opts.range_migration {
                s.range + s.radial_velocity * (p as f64 - mid) * tp
            } else {
                s.range
            };
            // Cycles per fast-time sample of the beat tone.
            let beat = 2.0 * cfg.bandwidth * range / (SPEED_OF_LIGHT * ns as f64);
            let slow = (doppler * p as f64).rem_euclid(1.0);
            let chirp = &mut samples[p * ns..(p + 1) * ns];
            for (n, z) in chirp.iter_mut().enumerate() {
                let cycles = (slow + beat * n as f64).rem_euclid(1.0);
                let (sin, cos) = (std::f64::consts::TAU * cycles).sin_cos();
                *z += Complex64::new(s.amplitude * cos, s.amplitude * sin);
            }
        }
    }

    if let Some(snr_db) = opts.snr_db {
        if !snr_db.is_finite() {
            return Err(Error::Config(format!("snr_db must be finite, got {snr_db}")));
        }
        let signal_power = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / samples.len() as f64;
        let noise_power = signal_power / 10f64.powf(snr_db / 10.0);
        let sigma = (noise_power / 2.0).sqrt();
        let mut rng = rng_from_seed(seed);
        for z in samples.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *z += Complex64::new(sigma * re, sigma * im);
        }
    }

    ChirpCube::new(*cfg, ns, np, samples, 0)
}

/// [`point_scatterer_cube_with`] without range migration.
pub fn point_scatterer_cube(
    cfg: &RadarConfig,
    scatterers: &[Scatterer],
    snr_db: Option<f64>,
    seed: u64,
) -> Result<ChirpCube> {
    point_scatterer_cube_with(
        cfg,
        scatterers,
        &CubeOptions {
            snr_db,
            range_migration: false,
        },
        seed,
    )
}

/// Frames of one simulated experiment.
#[derive(Debug, Clone)]
pub struct SimulatedRun {
    pub label: Label,
    pub frames: Vec<ChirpCube>,
    /// Per-frame noise seeds, aligned with `frames`.
    pub seeds: Vec<u64>,
    /// Requested frames that were dropped because the target left the
    /// usable range window.
    pub truncated: usize,
}

/// Builds frames `0..n` in parallel; frame `k` gets noise substream
/// `substream_seed(seed, k)`. Stops at the first frame for which
/// `scatterers_at` returns `None`.
pub(crate) fn simulate_frames<F>(
    cfg: &RadarConfig,
    n_frames: usize,
    seed: u64,
    label: Label,
    opts: CubeOptions,
    scatterers_at: F,
) -> Result<SimulatedRun>
where
    F: Fn(usize) -> Option<Vec<Scatterer>> + Sync,
{
    use rayon::prelude::*;
    let mut scenes = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        match scatterers_at(k) {
            Some(s) => scenes.push(s),
            None => break,
        }
    }
    let truncated = n_frames - scenes.len();
    if truncated > 0 {
        log::warn!("{label} run truncated: {truncated} of {n_frames} frames left the range window");
    }
    let seeds: Vec<u64> = (0..scenes.len() as u64).map(|k| substream_seed(seed, k)).collect();
    let frames = scenes
        .par_iter()
        .zip(seeds.par_iter())
        .enumerate()
        .map(|(k, (s, &frame_seed))| {
            let mut cube = point_scatterer_cube_with(cfg, s, &opts, frame_seed)?;
            cube.frame_index = k as u32;
            Ok(cube)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulatedRun {
        label,
        frames,
        seeds,
        truncated,
    })
}
