//! Rigid robot: every scatterer moves with one shared velocity that follows
//! a sequence of trapezoidal moves.

use serde::{Deserialize, Serialize};

use super::human::RANGE_MARGIN;
use super::{simulate_frames, CubeOptions, Scatterer, SimulatedRun};
use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::radar::{derive_params, RadarConfig};

/// Consecutive moves, each `(cruise velocity, duration)`, ramping linearly
/// from and back to rest over `ramp` seconds. After the last move the robot
/// stays still.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrapezoidProfile {
    pub moves: Vec<(f64, f64)>,
    pub ramp: f64,
}

impl TrapezoidProfile {
    pub fn constant(velocity: f64, duration: f64) -> Self {
        TrapezoidProfile {
            moves: vec![(velocity, duration)],
            ramp: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ramp.is_finite() && self.ramp >= 0.0) {
            return Err(Error::Config("ramp must be non-negative".into()));
        }
        for &(v, d) in &self.moves {
            if !(v.is_finite() && d.is_finite() && d > 0.0) {
                return Err(Error::Config(format!("invalid move ({v} m/s, {d} s)")));
            }
        }
        Ok(())
    }

    pub fn peak_speed(&self) -> f64 {
        self.moves.iter().map(|m| m.0.abs()).fold(0.0, f64::max)
    }

    /// Fraction of cruise velocity reached at `tau` into a move of length `d`,
    /// and its integral from the start of the move.
    fn shape(&self, tau: f64, d: f64) -> (f64, f64) {
        let r = self.ramp.min(d / 2.0);
        if r == 0.0 {
            return (1.0, tau);
        }
        if tau <= r {
            (tau / r, tau * tau / (2.0 * r))
        } else if tau <= d - r {
            (1.0, r / 2.0 + (tau - r))
        } else {
            let rest = d - tau;
            (rest / r, d - r - rest * rest / (2.0 * r))
        }
    }

    /// Velocity and displacement at time `t`.
    pub fn state_at(&self, t: f64) -> (f64, f64) {
        let mut start = 0.0;
        let mut travelled = 0.0;
        for &(v, d) in &self.moves {
            if t < start + d {
                let (f, area) = self.shape((t - start).max(0.0), d);
                return (v * f, travelled + v * area);
            }
            travelled += v * self.shape(d, d).1;
            start += d;
        }
        (0.0, travelled)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotParams {
    pub profile: TrapezoidProfile,
    pub n_scatterers: usize,
    /// Spread of the scatterers along the direction of motion, m.
    pub extent: f64,
    pub aspect_angle: f64,
    pub snr_db: Option<f64>,
    pub start_range: f64,
    /// Amplitude of the strongest scatterer.
    pub reflectivity: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        RobotParams {
            profile: TrapezoidProfile {
                moves: vec![(0.8, 2.0), (-0.8, 2.0)],
                ramp: 0.5,
            },
            n_scatterers: 4,
            extent: 0.5,
            aspect_angle: 0.0,
            snr_db: Some(20.0),
            start_range: 2.0,
            reflectivity: 1.0,
        }
    }
}

impl RobotParams {
    pub fn validate(&self, cfg: &RadarConfig) -> Result<()> {
        self.profile.validate()?;
        let vmax = derive_params(cfg)?.max_velocity;
        if self.aspect_angle.abs() >= 80f64.to_radians() {
            return Err(Error::Config("aspect_angle must be within ±80°".into()));
        }
        if self.profile.peak_speed() > vmax * self.aspect_angle.cos() {
            return Err(Error::Config(format!(
                "robot speed {} exceeds vmax·cos(aspect) = {}",
                self.profile.peak_speed(),
                vmax * self.aspect_angle.cos()
            )));
        }
        if self.n_scatterers == 0 {
            return Err(Error::Config("robot needs at least one scatterer".into()));
        }
        if !(self.extent >= 0.0 && self.extent <= 2.0 * RANGE_MARGIN) {
            return Err(Error::Config("extent must lie in [0, 0.6] m".into()));
        }
        if !(self.reflectivity.is_finite() && self.reflectivity > 0.0 && self.start_range.is_finite()) {
            return Err(Error::Config("reflectivity must be positive".into()));
        }
        Ok(())
    }
}

/// Scatterers at time `t`, or `None` once the body centre leaves the usable
/// range window.
pub fn robot_scatterers(cfg: &RadarConfig, robot: &RobotParams, t: f64) -> Option<Vec<Scatterer>> {
    let cos = robot.aspect_angle.cos();
    let (v, travelled) = robot.profile.state_at(t);
    let centre = robot.start_range + travelled * cos;
    if !(RANGE_MARGIN..=cfg.max_range - RANGE_MARGIN).contains(&centre) {
        return None;
    }
    let n = robot.n_scatterers;
    Some(
        (0..n)
            .map(|k| {
                let along = if n == 1 {
                    0.0
                } else {
                    robot.extent * (k as f64 / (n - 1) as f64 - 0.5)
                };
                let amp = robot.reflectivity / (1.0 + 0.5 * k as f64);
                Scatterer::new(centre + along * cos, v * cos, amp)
            })
            .collect(),
    )
}

pub fn simulate_robot(
    cfg: &RadarConfig,
    robot: &RobotParams,
    n_frames: usize,
    seed: u64,
) -> Result<SimulatedRun> {
    robot.validate(cfg)?;
    let frame = derive_params(cfg)?.frame_duration;
    let opts = CubeOptions {
        snr_db: robot.snr_db,
        range_migration: false,
    };
    simulate_frames(cfg, n_frames, seed, Label::Robot, opts, |k| {
        robot_scatterers(cfg, robot, (k as f64 + 0.5) * frame)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trapezoid_velocity_and_displacement() {
        let p = TrapezoidProfile {
            moves: vec![(1.0, 3.0), (-2.0, 1.0)],
            ramp: 0.5,
        };
        assert_eq!(p.state_at(0.25).0, 0.5);
        assert_eq!(p.state_at(1.5).0, 1.0);
        assert!((p.state_at(3.0).1 - 2.5).abs() < 1e-12);
        // Second move: 1 s long, ramps meet in the middle.
        assert!((p.state_at(3.5).0 + 2.0).abs() < 1e-12);
        assert!((p.state_at(4.0).1 - (2.5 - 1.0)).abs() < 1e-12);
        assert_eq!(p.state_at(10.0), (0.0, 1.5));
    }

    #[test]
    fn displacement_integrates_velocity() {
        let p = RobotParams::default().profile;
        let dt = 1e-4;
        let mut x = 0.0;
        for i in 0..40_000 {
            let t = (i as f64 + 0.5) * dt;
            x += p.state_at(t).0 * dt;
            if i % 5000 == 4999 {
                assert!((x - p.state_at(t + dt / 2.0).1).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn rigid_body_shares_velocity() {
        let s = robot_scatterers(&RadarConfig::default(), &RobotParams::default(), 1.0).unwrap();
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|x| x.radial_velocity == s[0].radial_velocity));
    }

    #[test]
    fn rejects_speed_above_projected_vmax() {
        let r = RobotParams {
            profile: TrapezoidProfile::constant(4.0, 1.0),
            aspect_angle: 60f64.to_radians(),
            ..RobotParams::default()
        };
        assert!(r.validate(&RadarConfig::default()).is_err());
    }
}
