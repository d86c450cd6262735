//! Range-Doppler maps.
//!
//! Each chirp is Hann-windowed, zero-padded to 512 samples and transformed to
//! give range bins. Each range bin is then windowed across chirps,
//! zero-padded to 512 and transformed again; the Doppler axis is rotated so
//! zero velocity sits at bin 256. Power is shown on a 60 dB scale mapped to
//! 0..=255.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::radar::SPEED_OF_LIGHT;
use crate::sim::ChirpCube;

pub const MAP_SIZE: usize = 512;
pub const DOPPLER_CENTER: usize = MAP_SIZE / 2;
pub const DYNAMIC_RANGE_DB: f64 = 60.0;
pub const NETWORK_INPUT_SIZE: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct RDMap {
    /// Row-major, one row per range bin, one column per Doppler bin.
    pixels: Vec<u8>,
    /// Meters per range bin.
    pub range_bin: f64,
    /// m/s per Doppler bin.
    pub doppler_bin: f64,
    pub label: Option<Label>,
    pub experiment_id: Option<u32>,
    pub frame_index: u32,
}

impl RDMap {
    pub fn from_pixels(pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != MAP_SIZE * MAP_SIZE {
            return Err(Error::Data(format!(
                "map needs {} pixels, got {}",
                MAP_SIZE * MAP_SIZE,
                pixels.len()
            )));
        }
        Ok(RDMap {
            pixels,
            range_bin: f64::NAN,
            doppler_bin: f64::NAN,
            label: None,
            experiment_id: None,
            frame_index: 0,
        })
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, range: usize, doppler: usize) -> u8 {
        self.pixels[range * MAP_SIZE + doppler]
    }

    /// (range bin, Doppler bin) of the brightest pixel, first in row order.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &p) in self.pixels.iter().enumerate() {
            if p > self.pixels[best] {
                best = i;
            }
        }
        (best / MAP_SIZE, best % MAP_SIZE)
    }

    pub fn velocity_of(&self, doppler: usize) -> f64 {
        (doppler as f64 - DOPPLER_CENTER as f64) * self.doppler_bin
    }

    pub fn range_of(&self, range: usize) -> f64 {
        range as f64 * self.range_bin
    }
}

/// Symmetric Hann window of length `n`.
pub fn hann(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Windowed, zero-padded transform of `input` into `out` (length of the plan).
fn windowed_fft(
    fft: &Arc<dyn Fft<f64>>,
    input: impl Iterator<Item = Complex64>,
    window: &[f64],
    out: &mut [Complex64],
) {
    out.fill(Complex64::new(0.0, 0.0));
    for ((o, x), w) in out.iter_mut().zip(input).zip(window) {
        *o = x * w;
    }
    fft.process(out);
}

/// Linear power of the 512×512 map before the dB scale, rows = range.
pub fn rd_power(cube: &ChirpCube) -> Result<Vec<f64>> {
    let ns = cube.samples_per_chirp();
    let np = cube.chirps();
    if ns > MAP_SIZE || np > MAP_SIZE {
        return Err(Error::Data(format!(
            "cube {ns}x{np} exceeds the {MAP_SIZE}-point transforms"
        )));
    }
    if cube
        .samples()
        .iter()
        .any(|z| !(z.re.is_finite() && z.im.is_finite()))
    {
        return Err(Error::Data("cube contains non-finite samples".into()));
    }
    let fft = FftPlanner::new().plan_fft_forward(MAP_SIZE);
    let range_window = hann(ns);
    let doppler_window = hann(np);

    // range_spec[p * 512 + r]
    let mut range_spec = vec![Complex64::new(0.0, 0.0); np * MAP_SIZE];
    for (p, out) in range_spec.chunks_mut(MAP_SIZE).enumerate() {
        windowed_fft(&fft, cube.chirp(p).iter().copied(), &range_window, out);
    }

    let mut power = vec![0.0; MAP_SIZE * MAP_SIZE];
    let mut line = vec![Complex64::new(0.0, 0.0); MAP_SIZE];
    for r in 0..MAP_SIZE {
        let column = (0..np).map(|p| range_spec[p * MAP_SIZE + r]);
        windowed_fft(&fft, column, &doppler_window, &mut line);
        let row = &mut power[r * MAP_SIZE..(r + 1) * MAP_SIZE];
        for (d, px) in row.iter_mut().enumerate() {
            *px = line[(d + DOPPLER_CENTER) % MAP_SIZE].norm_sqr();
        }
    }
    Ok(power)
}

/// Maps power to a pixel: `peak` is 255, `peak - 60 dB` and below are 0.
pub fn quantize_power(power: f64, peak: f64) -> u8 {
    if peak <= 0.0 || power <= 0.0 {
        return 0;
    }
    let db = 10.0 * (power / peak).log10();
    let level = 255.0 * (db + DYNAMIC_RANGE_DB) / DYNAMIC_RANGE_DB;
    level.round().clamp(0.0, 255.0) as u8
}

pub fn compute_rd_map(cube: &ChirpCube) -> Result<RDMap> {
    let power = rd_power(cube)?;
    let peak = power.iter().copied().fold(0.0, f64::max);
    let pixels = power.iter().map(|&p| quantize_power(p, peak)).collect();
    let cfg = &cube.config;
    Ok(RDMap {
        pixels,
        range_bin: SPEED_OF_LIGHT * cube.samples_per_chirp() as f64
            / (2.0 * cfg.bandwidth * MAP_SIZE as f64),
        doppler_bin: SPEED_OF_LIGHT
            / (2.0 * cfg.carrier_frequency * cfg.chirp_duration * MAP_SIZE as f64),
        label: None,
        experiment_id: None,
        frame_index: cube.frame_index,
    })
}

/// Integer overlap weights between `from` unit cells and `to` output cells
/// over the same extent. Entry `(input, weight)` lists per output cell; the
/// weights of each output cell sum to `from`.
fn box_weights(from: usize, to: usize) -> Vec<Vec<(usize, u64)>> {
    // Input cell j spans [to·j, to·(j+1)), output cell i spans [from·i, from·(i+1)).
    (0..to)
        .map(|i| {
            let (lo, hi) = (from * i, from * (i + 1));
            (lo / to..hi.div_ceil(to))
                .filter_map(|j| {
                    let overlap = hi.min(to * (j + 1)).saturating_sub(lo.max(to * j));
                    (overlap > 0).then_some((j, overlap as u64))
                })
                .collect()
        })
        .collect()
}

/// Area-average downsampling of the map to `size × size`, scaled to [0, 1].
pub fn downsample(map: &RDMap, size: usize) -> Vec<f32> {
    let w = box_weights(MAP_SIZE, size);
    let norm = (MAP_SIZE * MAP_SIZE) as f64 * 255.0;
    // Horizontal pass first, exact in integers.
    let mut rows = vec![0u64; MAP_SIZE * size];
    for r in 0..MAP_SIZE {
        let src = &map.pixels[r * MAP_SIZE..(r + 1) * MAP_SIZE];
        for (c, taps) in w.iter().enumerate() {
            rows[r * size + c] = taps.iter().map(|&(j, k)| k * src[j] as u64).sum();
        }
    }
    let mut out = vec![0f32; size * size];
    for (r, taps) in w.iter().enumerate() {
        for c in 0..size {
            let acc: u64 = taps.iter().map(|&(j, k)| k * rows[j * size + c]).sum();
            out[r * size + c] = (acc as f64 / norm) as f32;
        }
    }
    out
}

/// The 200×200 network input.
pub fn to_network_input(map: &RDMap) -> Vec<f32> {
    downsample(map, NETWORK_INPUT_SIZE)
}

pub fn write_pgm_to<W: Write>(pixels: &[u8], width: usize, height: usize, mut w: W) -> std::io::Result<()> {
    write!(w, "P5\n{width} {height}\n255\n")?;
    w.write_all(pixels)?;
    w.flush()
}

pub fn write_pgm(map: &RDMap, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_pgm_to(&map.pixels, MAP_SIZE, MAP_SIZE, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Parses a binary 8-bit PGM, returning `(width, height, pixels)`.
pub fn read_pgm_from<R: Read>(mut r: R) -> Result<(usize, usize, Vec<u8>)> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| Error::Data(format!("reading PGM: {e}")))?;
    let mut pos = 0;
    let mut fields = Vec::new();
    while fields.len() < 4 {
        while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
            if bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                pos += 1;
            }
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Data("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::Data(format!("unsupported PGM magic {:?}", fields[0])));
    }
    let num = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| Error::Data(format!("bad PGM header field {s:?}")))
    };
    let (width, height, maxval) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
    if maxval != 255 {
        return Err(Error::Data(format!("PGM maxval must be 255, got {maxval}")));
    }
    let raster = bytes.get(pos..).unwrap_or_default();
    if raster.len() != width * height {
        return Err(Error::Data(format!(
            "PGM raster has {} bytes, expected {}",
            raster.len(),
            width * height
        )));
    }
    Ok((width, height, raster.to_vec()))
}

/// Reads a 512×512 map. Axis scales are not stored in the file and are left
/// as NaN.
pub fn read_pgm(path: &Path) -> Result<RDMap> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let (w, h, pixels) = read_pgm_from(BufReader::new(file))?;
    if (w, h) != (MAP_SIZE, MAP_SIZE) {
        return Err(Error::Data(format!("map must be {MAP_SIZE}x{MAP_SIZE}, got {w}x{h}")));
    }
    RDMap::from_pixels(pixels)
}
