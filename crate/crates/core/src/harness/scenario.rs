//! Synthetic experiment plans: walking subjects and two kinds of robot.
//!
//! Every experiment is one continuous recording of a single target. Human
//! subjects keep their gait (speed, foot speed, cadence, size) across their
//! runs and alternate between walking away from and toward the radar. The
//! "platform" robot drives long, slow moves; the "arm" robot makes short,
//! faster moves separated by pauses. Aspect angles are drawn per run.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::radar::{derive_params, RadarConfig};
use crate::rng::{substream, substream_seed, SimRng};
use crate::sim::{simulate_human, simulate_robot, GaitParams, RobotParams, SimulatedRun, TrapezoidProfile};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub radar: RadarConfig,
    pub subjects: usize,
    pub runs_per_subject: usize,
    pub human_frames: usize,
    /// Runs of each robot kind.
    pub runs_per_robot: usize,
    pub robot_frames: usize,
    pub snr_db: f64,
    /// Aspect angles are uniform in `±max_aspect_deg`.
    pub max_aspect_deg: f64,
}

impl Default for DatasetConfig {
    /// 30 human runs of 34 frames and 10 robot runs of 102 frames: 2040
    /// frames, balanced.
    fn default() -> Self {
        DatasetConfig {
            radar: RadarConfig::default(),
            subjects: 10,
            runs_per_subject: 3,
            human_frames: 34,
            runs_per_robot: 5,
            robot_frames: 102,
            snr_db: 20.0,
            max_aspect_deg: 60.0,
        }
    }
}

pub const DATASET_KEYS: [&str; 7] = [
    "subjects",
    "runs_per_subject",
    "human_frames",
    "runs_per_robot",
    "robot_frames",
    "snr_db",
    "max_aspect_deg",
];

impl DatasetConfig {
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        self.radar.apply(kv)?;
        kv.read_into("subjects", &mut self.subjects)?;
        kv.read_into("runs_per_subject", &mut self.runs_per_subject)?;
        kv.read_into("human_frames", &mut self.human_frames)?;
        kv.read_into("runs_per_robot", &mut self.runs_per_robot)?;
        kv.read_into("robot_frames", &mut self.robot_frames)?;
        kv.read_into("snr_db", &mut self.snr_db)?;
        kv.read_into("max_aspect_deg", &mut self.max_aspect_deg)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.radar.validate()?;
        if !self.snr_db.is_finite() {
            return Err(Error::Config("snr_db must be finite".into()));
        }
        if !(0.0..80.0).contains(&self.max_aspect_deg) {
            return Err(Error::Config("max_aspect_deg must lie in [0, 80)".into()));
        }
        Ok(())
    }

    pub fn total_frames(&self) -> usize {
        self.subjects * self.runs_per_subject * self.human_frames
            + 2 * self.runs_per_robot * self.robot_frames
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scenario {
    Human(GaitParams),
    Robot(RobotParams),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub id: u32,
    pub label: Label,
    pub scenario: Scenario,
    pub frames: usize,
    /// Master seed of the run's noise.
    pub seed: u64,
}

#[derive(Clone, Copy)]
struct RobotKind {
    scatterers: usize,
    extent: f64,
    speed: (f64, f64),
    move_time: (f64, f64),
    pause: (f64, f64),
}

const PLATFORM: RobotKind = RobotKind {
    scatterers: 4,
    extent: 0.5,
    speed: (0.3, 1.0),
    move_time: (1.0, 2.0),
    pause: (0.2, 0.6),
};

const ARM: RobotKind = RobotKind {
    scatterers: 3,
    extent: 0.25,
    speed: (0.5, 1.5),
    move_time: (0.4, 0.9),
    pause: (0.1, 0.4),
};

const RAMP: f64 = 0.5;

fn uniform(rng: &mut SimRng, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..hi)
}

/// Moves covering `duration`, each heading back toward the starting point.
fn robot_moves(kind: &RobotKind, duration: f64, rng: &mut SimRng) -> TrapezoidProfile {
    let mut profile = TrapezoidProfile {
        moves: Vec::new(),
        ramp: RAMP,
    };
    let mut elapsed = 0.0;
    let initial = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
    while elapsed < duration {
        let (_, offset) = profile.state_at(elapsed);
        let direction = if offset == 0.0 { initial } else { -offset.signum() };
        let speed = uniform(rng, kind.speed);
        let time = uniform(rng, kind.move_time);
        profile.moves.push((direction * speed, time));
        let pause = uniform(rng, kind.pause);
        profile.moves.push((0.0, pause));
        elapsed += time + pause;
    }
    profile
}

/// Lays out every experiment of the dataset. Parameters come from one
/// sequential stream; each run's noise has its own substream.
pub fn plan_experiments(cfg: &DatasetConfig, seed: u64) -> Result<Vec<ExperimentPlan>> {
    cfg.validate()?;
    let derived = derive_params(&cfg.radar)?;
    let mut rng = substream(seed, 0);
    let max_aspect = cfg.max_aspect_deg.to_radians();
    let aspect = |rng: &mut SimRng| {
        if max_aspect == 0.0 {
            0.0
        } else {
            rng.random_range(-max_aspect..max_aspect)
        }
    };
    let mut plans = Vec::new();
    let mut push = |label, scenario, frames| {
        let id = plans.len() as u32;
        plans.push(ExperimentPlan {
            id,
            label,
            scenario,
            frames,
            seed: substream_seed(seed, 1 + id as u64),
        });
    };

    let walk_margin = 1.0f64.min(cfg.radar.max_range / 4.0);
    for _ in 0..cfg.subjects {
        let speed = uniform(&mut rng, (0.9, 1.4));
        let foot = uniform(&mut rng, (3.6, 4.5));
        let period = uniform(&mut rng, (1.0, 1.2));
        let scale = uniform(&mut rng, (0.9, 1.1));
        for run in 0..cfg.runs_per_subject {
            let away = run % 2 == 0;
            let gait = GaitParams {
                bulk_velocity: if away { speed } else { -speed },
                peak_foot_velocity: foot,
                gait_period: period,
                stance_fraction: 0.6,
                aspect_angle: aspect(&mut rng),
                snr_db: Some(cfg.snr_db),
                start_range: if away {
                    walk_margin
                } else {
                    cfg.radar.max_range - walk_margin
                },
                gait_phase: rng.random_range(0.0..1.0),
                body_scale: scale,
            };
            push(Label::Human, Scenario::Human(gait), cfg.human_frames);
        }
    }

    let duration = cfg.robot_frames as f64 * derived.frame_duration;
    for kind in [PLATFORM, ARM] {
        for _ in 0..cfg.runs_per_robot {
            let profile = robot_moves(&kind, duration, &mut rng);
            let robot = RobotParams {
                profile,
                n_scatterers: kind.scatterers,
                extent: kind.extent,
                aspect_angle: aspect(&mut rng),
                snr_db: Some(cfg.snr_db),
                start_range: cfg.radar.max_range / 2.0 + uniform(&mut rng, (-0.3, 0.3)),
                reflectivity: 1.0,
            };
            push(Label::Robot, Scenario::Robot(robot), cfg.robot_frames);
        }
    }
    Ok(plans)
}

pub fn simulate_experiment(radar: &RadarConfig, plan: &ExperimentPlan) -> Result<SimulatedRun> {
    match &plan.scenario {
        Scenario::Human(gait) => simulate_human(radar, gait, plan.frames, plan.seed),
        Scenario::Robot(robot) => simulate_robot(radar, robot, plan.frames, plan.seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{human_scatterers, robot_scatterers};

    #[test]
    fn default_layout() {
        let cfg = DatasetConfig::default();
        let plans = plan_experiments(&cfg, 1).unwrap();
        assert_eq!(plans.len(), 40);
        assert_eq!(cfg.total_frames(), 2040);
        let humans = plans.iter().filter(|p| p.label == Label::Human).count();
        assert_eq!(humans, 30);
        assert!(plans.iter().enumerate().all(|(i, p)| p.id as usize == i));
    }

    #[test]
    fn no_run_leaves_the_range_window() {
        let cfg = DatasetConfig::default();
        let frame = derive_params(&cfg.radar).unwrap().frame_duration;
        for seed in 0..5 {
            for plan in plan_experiments(&cfg, seed).unwrap() {
                for k in 0..plan.frames {
                    let t = (k as f64 + 0.5) * frame;
                    let present = match &plan.scenario {
                        Scenario::Human(g) => human_scatterers(&cfg.radar, g, t).is_some(),
                        Scenario::Robot(r) => robot_scatterers(&cfg.radar, r, t).is_some(),
                    };
                    assert!(present, "seed {seed} experiment {} frame {k}", plan.id);
                }
            }
        }
    }

    #[test]
    fn plans_are_seeded() {
        let cfg = DatasetConfig::default();
        assert_eq!(plan_experiments(&cfg, 3).unwrap(), plan_experiments(&cfg, 3).unwrap());
        assert_ne!(plan_experiments(&cfg, 3).unwrap(), plan_experiments(&cfg, 4).unwrap());
    }

    #[test]
    fn robot_moves_cover_the_run() {
        let mut rng = substream(5, 0);
        for kind in [PLATFORM, ARM] {
            let p = robot_moves(&kind, 6.5, &mut rng);
            assert!(p.moves.iter().map(|m| m.1).sum::<f64>() >= 6.5);
            assert!(p.peak_speed() <= kind.speed.1);
            p.validate().unwrap();
        }
    }

    #[test]
    fn reads_overrides() {
        let mut cfg = DatasetConfig::default();
        cfg.apply(&KeyValues::parse("subjects = 4\nsnr_db = 10\nbandwidth = 1e9").unwrap()).unwrap();
        assert_eq!((cfg.subjects, cfg.snr_db, cfg.radar.bandwidth), (4, 10.0, 1e9));
    }
}
