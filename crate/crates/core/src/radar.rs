//! FMCW design equations.
//!
//! A [`RadarConfig`] holds the chosen waveform; [`derive_params`] turns it into
//! the quantities the rest of the pipeline needs: range resolution, samples per
//! chirp, unambiguous velocity and chirps per frame.

use serde::{Deserialize, Serialize};

use crate::config::KeyValues;
use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Upper bound on chirps per frame accepted by [`derive_params`].
pub const MAX_CHIRPS_PER_FRAME: u64 = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadarConfig {
    /// Hz
    pub carrier_frequency: f64,
    /// Hz
    pub bandwidth: f64,
    /// s
    pub chirp_duration: f64,
    /// m
    pub max_range: f64,
    /// m/s
    pub velocity_resolution: f64,
}

impl Default for RadarConfig {
    /// 25 GHz carrier, 2 GHz sweep in 0.5 ms, 5 m room, 0.1 m/s resolution.
    fn default() -> Self {
        RadarConfig {
            carrier_frequency: 25e9,
            bandwidth: 2e9,
            chirp_duration: 0.5e-3,
            max_range: 5.0,
            velocity_resolution: 0.1,
        }
    }
}

pub const RADAR_KEYS: [&str; 5] = [
    "carrier_frequency",
    "bandwidth",
    "chirp_duration",
    "max_range",
    "velocity_resolution",
];

impl RadarConfig {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("carrier_frequency", self.carrier_frequency),
            ("bandwidth", self.bandwidth),
            ("chirp_duration", self.chirp_duration),
            ("max_range", self.max_range),
            ("velocity_resolution", self.velocity_resolution),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!(
                    "{name} must be finite and positive, got {value}"
                )));
            }
        }
        if self.carrier_frequency <= self.bandwidth {
            return Err(Error::Config(format!(
                "carrier frequency {} Hz must exceed bandwidth {} Hz",
                self.carrier_frequency, self.bandwidth
            )));
        }
        Ok(())
    }

    /// Applies any radar keys present in `kv` on top of `self`.
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        kv.read_into("carrier_frequency", &mut self.carrier_frequency)?;
        kv.read_into("bandwidth", &mut self.bandwidth)?;
        kv.read_into("chirp_duration", &mut self.chirp_duration)?;
        kv.read_into("max_range", &mut self.max_range)?;
        kv.read_into("velocity_resolution", &mut self.velocity_resolution)?;
        Ok(())
    }

    pub fn from_key_values(kv: &KeyValues) -> Result<Self> {
        let mut cfg = RadarConfig::default();
        cfg.apply(kv)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// m
    pub range_resolution: f64,
    pub samples_per_chirp: usize,
    /// m/s
    pub max_velocity: f64,
    /// Always a power of two.
    pub chirps_per_frame: usize,
    /// s
    pub frame_duration: f64,
}

/// Chirp count before rounding up to a power of two.
pub fn raw_chirps_per_frame(cfg: &RadarConfig) -> f64 {
    SPEED_OF_LIGHT / (2.0 * cfg.carrier_frequency * cfg.chirp_duration * cfg.velocity_resolution)
}

pub fn derive_params(cfg: &RadarConfig) -> Result<DerivedParams> {
    cfg.validate()?;
    let c = SPEED_OF_LIGHT;
    let range_resolution = c / (2.0 * cfg.bandwidth);
    let samples_per_chirp = (2.0 * cfg.bandwidth * cfg.max_range / c).ceil();
    let max_velocity = c / (4.0 * cfg.carrier_frequency * cfg.chirp_duration);

    let raw = raw_chirps_per_frame(cfg);
    if !raw.is_finite() || raw > MAX_CHIRPS_PER_FRAME as f64 {
        return Err(Error::Config(format!(
            "{raw:.1} chirps per frame exceeds the cap of {MAX_CHIRPS_PER_FRAME}"
        )));
    }
    let chirps_per_frame = (raw.ceil() as u64).max(1).next_power_of_two();
    if samples_per_chirp > u32::MAX as f64 {
        return Err(Error::Config(format!(
            "{samples_per_chirp} samples per chirp is not representable"
        )));
    }

    Ok(DerivedParams {
        range_resolution,
        samples_per_chirp: samples_per_chirp as usize,
        max_velocity,
        chirps_per_frame: chirps_per_frame as usize,
        frame_duration: chirps_per_frame as f64 * cfg.chirp_duration,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn default_config_matches_reported_design() {
        let p = derive_params(&RadarConfig::default()).unwrap();
        assert!(rel(p.range_resolution, 0.075) < 0.01);
        assert_eq!(p.samples_per_chirp, 67);
        assert!(rel(p.max_velocity, 6.0) < 0.01);
        assert_eq!(p.chirps_per_frame, 128);
        assert!((p.frame_duration - 0.064).abs() < 1e-15);
    }

    #[test]
    fn own_formulas_hold_exactly() {
        let cfg = RadarConfig::default();
        let p = derive_params(&cfg).unwrap();
        assert_eq!(p.range_resolution, SPEED_OF_LIGHT / 4e9);
        assert_eq!(p.max_velocity, SPEED_OF_LIGHT / (4.0 * 25e9 * 0.5e-3));
    }

    #[test]
    fn doubling_bandwidth_halves_resolution() {
        let cfg = RadarConfig::default();
        let wide = RadarConfig {
            bandwidth: 4e9,
            carrier_frequency: 25e9,
            ..cfg
        };
        let a = derive_params(&cfg).unwrap();
        let b = derive_params(&wide).unwrap();
        assert_eq!(b.range_resolution * 2.0, a.range_resolution);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = RadarConfig::default();
        for bad in [
            RadarConfig { bandwidth: 0.0, ..base },
            RadarConfig { chirp_duration: -1.0, ..base },
            RadarConfig { max_range: f64::NAN, ..base },
            RadarConfig { carrier_frequency: 1e9, ..base },
            RadarConfig { velocity_resolution: 1e-6, ..base },
        ] {
            assert!(matches!(derive_params(&bad), Err(Error::Config(_))), "{bad:?}");
        }
    }

    #[test]
    fn reads_key_value_files() {
        let kv = KeyValues::parse("bandwidth = 1e9\nmax_range = 10 # m\n").unwrap();
        let cfg = RadarConfig::from_key_values(&kv).unwrap();
        assert_eq!(cfg.bandwidth, 1e9);
        assert_eq!(cfg.max_range, 10.0);
        assert_eq!(cfg.carrier_frequency, 25e9);
    }

    proptest! {
        #[test]
        fn derived_invariants(
            fc in 1e9f64..100e9,
            bw_frac in 0.01f64..0.9,
            tp in 1e-5f64..1e-2,
            rmax in 0.5f64..200.0,
            vres in 0.01f64..1.0,
        ) {
            let cfg = RadarConfig {
                carrier_frequency: fc,
                bandwidth: fc * bw_frac,
                chirp_duration: tp,
                max_range: rmax,
                velocity_resolution: vres,
            };
            let raw = raw_chirps_per_frame(&cfg);
            match derive_params(&cfg) {
                Ok(p) => {
                    let unity = p.range_resolution * 2.0 * cfg.bandwidth / SPEED_OF_LIGHT;
                    prop_assert!((unity - 1.0).abs() <= f64::EPSILON);
                    prop_assert!(p.chirps_per_frame.is_power_of_two());
                    let np = p.chirps_per_frame as f64;
                    prop_assert!(np >= raw && (np < 2.0 * raw || np == 1.0));
                    prop_assert_eq!(p.frame_duration, np * tp);
                    prop_assert_eq!(derive_params(&cfg).unwrap(), p);
                }
                Err(_) => prop_assert!(raw > MAX_CHIRPS_PER_FRAME as f64),
            }
        }
    }
}
