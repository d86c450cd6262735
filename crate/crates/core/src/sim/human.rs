//! Walking human as a set of body-part scatterers.
//!
//! Each leg swings once per gait cycle. The two swing windows are half a
//! cycle apart and each lasts `(1 - stance_fraction) / 2` of the cycle, so the
//! time with neither leg swinging is `stance_fraction` of the cycle. Inside a
//! window the swing level is `sin(π·τ/w)^1.5`; limbs move at
//! `vb + (v_peak - vb)·level` (feet) or with `0.7·v_peak` as the peak (legs).
//! Arms swing continuously and in opposition at `vb ± 0.35·(v_peak - vb)`.

use serde::{Deserialize, Serialize};

use super::{simulate_frames, CubeOptions, Scatterer, SimulatedRun};
use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::radar::{derive_params, RadarConfig};

/// Smallest distance kept between the torso and either end of the range window.
pub(crate) const RANGE_MARGIN: f64 = 0.3;
const MAX_FOOT_VELOCITY: f64 = 4.5;
const MAX_ASPECT_DEG: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaitParams {
    /// Walking speed, m/s; negative walks toward the radar.
    pub bulk_velocity: f64,
    /// Peak foot speed during swing, m/s, same direction as the body.
    pub peak_foot_velocity: f64,
    /// Duration of one full gait cycle (two steps), s.
    pub gait_period: f64,
    pub stance_fraction: f64,
    /// Angle between the walking direction and the radar line of sight, rad.
    pub aspect_angle: f64,
    pub snr_db: Option<f64>,
    /// Torso range at t = 0, m.
    pub start_range: f64,
    /// Gait cycle position at t = 0, in cycles.
    pub gait_phase: f64,
    /// Scales body dimensions and limb reflectivity.
    pub body_scale: f64,
}

impl Default for GaitParams {
    fn default() -> Self {
        GaitParams {
            bulk_velocity: 1.2,
            peak_foot_velocity: 4.0,
            gait_period: 1.1,
            stance_fraction: 0.6,
            aspect_angle: 0.0,
            snr_db: Some(20.0),
            start_range: 1.0,
            gait_phase: 0.0,
            body_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaitPhase {
    Swing,
    Stance,
}

impl GaitParams {
    pub fn validate(&self) -> Result<()> {
        let vb = self.bulk_velocity.abs();
        let vp = self.peak_foot_velocity;
        let checks = [
            (vb.is_finite(), "bulk_velocity must be finite"),
            (
                vp.is_finite() && vp > vb && vp <= MAX_FOOT_VELOCITY,
                "peak_foot_velocity must exceed |bulk_velocity| and be at most 4.5 m/s",
            ),
            (
                self.gait_period.is_finite() && self.gait_period > 0.0,
                "gait_period must be positive",
            ),
            (
                self.stance_fraction > 0.0 && self.stance_fraction < 1.0,
                "stance_fraction must lie in (0, 1)",
            ),
            (
                self.aspect_angle.abs() < MAX_ASPECT_DEG.to_radians(),
                "aspect_angle must be within ±80°",
            ),
            (
                self.body_scale.is_finite() && self.body_scale > 0.0 && self.body_scale <= 1.1,
                "body_scale must lie in (0, 1.1]",
            ),
            (
                self.gait_phase.is_finite() && self.start_range.is_finite(),
                "gait_phase and start_range must be finite",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Config(msg.into()));
            }
        }
        Ok(())
    }

    fn swing_window(&self) -> f64 {
        (1.0 - self.stance_fraction) / 2.0
    }

    fn cycle_position(&self, t: f64) -> f64 {
        (t / self.gait_period + self.gait_phase).rem_euclid(1.0)
    }

    /// Time since the start of the leg's swing window, in cycles.
    fn leg_position(&self, leg: usize, t: f64) -> f64 {
        (self.cycle_position(t) - 0.5 * leg as f64).rem_euclid(1.0)
    }

    /// Swing level in [0, 1] of leg 0 or 1 at time `t`.
    pub fn swing_level(&self, leg: usize, t: f64) -> f64 {
        let tau = self.leg_position(leg, t);
        let w = self.swing_window();
        if tau < w {
            (std::f64::consts::PI * tau / w).sin().max(0.0).powf(1.5)
        } else {
            0.0
        }
    }

    /// Stance means neither leg is inside its swing window.
    pub fn phase_at(&self, t: f64) -> GaitPhase {
        let w = self.swing_window();
        if (0..2).any(|leg| self.leg_position(leg, t) < w) {
            GaitPhase::Swing
        } else {
            GaitPhase::Stance
        }
    }

    /// Torso range at time `t`.
    pub fn torso_range(&self, t: f64) -> f64 {
        self.start_range + self.bulk_velocity * self.aspect_angle.cos() * t
    }

    /// Foot position along the walking direction relative to the torso.
    fn foot_offset(&self, leg: usize, t: f64) -> f64 {
        let stride = 0.5 * self.body_scale;
        let tau = self.leg_position(leg, t);
        let w = self.swing_window();
        if tau < w {
            -0.5 * stride * (std::f64::consts::PI * tau / w).cos()
        } else {
            0.5 * stride - stride * (tau - w) / (1.0 - w)
        }
    }
}

/// Scatterers of the body at time `t`, or `None` once the torso has left the
/// usable range window.
pub fn human_scatterers(cfg: &RadarConfig, gait: &GaitParams, t: f64) -> Option<Vec<Scatterer>> {
    let torso = gait.torso_range(t);
    if !(RANGE_MARGIN..=cfg.max_range - RANGE_MARGIN).contains(&torso) {
        return None;
    }
    let (sin, cos) = gait.aspect_angle.sin_cos();
    let dir = if gait.bulk_velocity < 0.0 { -1.0 } else { 1.0 };
    let vb = gait.bulk_velocity;
    let vp = dir * gait.peak_foot_velocity;
    let k = gait.body_scale;
    // Along-track offset `a` and lateral offset `l` projected on the line of sight.
    let at = |a: f64, l: f64, v: f64, amp: f64| Scatterer::new(torso + dir * a * cos + l * sin, v * cos, amp);

    let mut out = Vec::with_capacity(10);
    for (a, amp) in [(-0.08, 0.8), (0.0, 1.0), (0.08, 0.8)] {
        out.push(at(a * k, 0.0, vb, amp));
    }
    out.push(at(0.03 * k, 0.0, vb, 0.4));

    let arm = (std::f64::consts::TAU * gait.cycle_position(t)).sin();
    for side in [1.0, -1.0] {
        let v = vb + side * 0.35 * (vp - vb) * arm;
        out.push(at(side * 0.15 * k * arm, side * 0.22 * k, v, 0.3 * k));
    }
    for leg in 0..2 {
        let s = gait.swing_level(leg, t);
        let lateral = if leg == 0 { -0.1 } else { 0.1 } * k;
        let offset = gait.foot_offset(leg, t);
        out.push(at(0.6 * offset, lateral, vb + (0.7 * vp - vb) * s, 0.4 * k));
        out.push(at(offset, lateral, vb + (vp - vb) * s, 0.2 * k));
    }
    Some(out)
}

/// Simulates `n_frames` consecutive frames; each frame samples the body at
/// its mid-frame instant.
pub fn simulate_human(
    cfg: &RadarConfig,
    gait: &GaitParams,
    n_frames: usize,
    seed: u64,
) -> Result<SimulatedRun> {
    gait.validate()?;
    let frame = derive_params(cfg)?.frame_duration;
    let opts = CubeOptions {
        snr_db: gait.snr_db,
        range_migration: false,
    };
    simulate_frames(cfg, n_frames, seed, Label::Human, opts, |k| {
        human_scatterers(cfg, gait, (k as f64 + 0.5) * frame)
    })
}
