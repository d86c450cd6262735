//! Binary cube files: `RDC1`, then little-endian `u32 Ns`, `u32 Np`,
//! `f64 fc`, `f64 B`, `f64 Tp` and `Ns·Np` interleaved `f32` pairs, one chirp
//! after another.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use super::ChirpCube;
use crate::error::{Error, Result};
use crate::radar::{RadarConfig, SPEED_OF_LIGHT};

pub const CUBE_MAGIC: &[u8; 4] = b"RDC1";

pub fn write_cube_to<W: Write>(cube: &ChirpCube, mut w: W) -> std::io::Result<()> {
    w.write_all(CUBE_MAGIC)?;
    w.write_all(&(cube.samples_per_chirp() as u32).to_le_bytes())?;
    w.write_all(&(cube.chirps() as u32).to_le_bytes())?;
    for x in [
        cube.config.carrier_frequency,
        cube.config.bandwidth,
        cube.config.chirp_duration,
    ] {
        w.write_all(&x.to_le_bytes())?;
    }
    for z in cube.samples() {
        w.write_all(&(z.re as f32).to_le_bytes())?;
        w.write_all(&(z.im as f32).to_le_bytes())?;
    }
    w.flush()
}

pub fn write_cube(cube: &ChirpCube, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_cube_to(cube, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Data(format!("truncated cube file: {e}")))?;
    Ok(buf)
}

/// Reads a cube. The file does not store the range limit or velocity
/// resolution, so they are recovered from `Ns` and `Np`.
pub fn read_cube_from<R: Read>(mut r: R) -> Result<ChirpCube> {
    if &take::<4, _>(&mut r)? != CUBE_MAGIC {
        return Err(Error::Data("not a cube file (bad magic)".into()));
    }
    let ns = u32::from_le_bytes(take(&mut r)?) as usize;
    let np = u32::from_le_bytes(take(&mut r)?) as usize;
    let fc = f64::from_le_bytes(take(&mut r)?);
    let bandwidth = f64::from_le_bytes(take(&mut r)?);
    let tp = f64::from_le_bytes(take(&mut r)?);
    if ns == 0 || np == 0 || ns.checked_mul(np).is_none_or(|n| n > 1 << 28) {
        return Err(Error::Data(format!("implausible cube shape {ns}x{np}")));
    }
    let config = RadarConfig {
        carrier_frequency: fc,
        bandwidth,
        chirp_duration: tp,
        max_range: ns as f64 * SPEED_OF_LIGHT / (2.0 * bandwidth),
        velocity_resolution: SPEED_OF_LIGHT / (2.0 * fc * tp * np as f64),
    };
    config.validate()?;
    let mut samples = Vec::with_capacity(ns * np);
    for _ in 0..ns * np {
        let re = f32::from_le_bytes(take(&mut r)?);
        let im = f32::from_le_bytes(take(&mut r)?);
        samples.push(Complex64::new(re as f64, im as f64));
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::Data(e.to_string()))? != 0 {
        return Err(Error::Data("trailing bytes after cube samples".into()));
    }
    ChirpCube::new(config, ns, np, samples, 0)
}

pub fn read_cube(path: &Path) -> Result<ChirpCube> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_cube_from(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radar::derive_params;
    use crate::sim::{point_scatterer_cube, Scatterer};

    #[test]
    fn round_trip_within_f32_precision() {
        let cfg = RadarConfig::default();
        let cube = point_scatterer_cube(&cfg, &[Scatterer::new(2.0, 1.5, 0.7)], Some(10.0), 3).unwrap();
        let mut bytes = Vec::new();
        write_cube_to(&cube, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 8 + 24 + 8 * 67 * 128);
        let back = read_cube_from(bytes.as_slice()).unwrap();
        assert_eq!((back.samples_per_chirp(), back.chirps()), (67, 128));
        for (a, b) in cube.samples().iter().zip(back.samples()) {
            assert!((a - b).norm() < 1e-6);
        }
        let d = derive_params(&back.config).unwrap();
        assert_eq!((d.samples_per_chirp, d.chirps_per_frame), (67, 128));
    }

    #[test]
    fn rejects_bad_files() {
        assert!(read_cube_from(&b"RDC2"[..]).is_err());
        assert!(read_cube_from(&b"RDC1\x01\0\0\0"[..]).is_err());
        let cube = ChirpCube::zeros(RadarConfig::default(), 2, 2);
        let mut bytes = Vec::new();
        write_cube_to(&cube, &mut bytes).unwrap();
        bytes.push(0);
        assert!(read_cube_from(bytes.as_slice()).is_err());
    }
}
