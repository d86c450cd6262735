//! Per-frame model inputs and the datasets assembled from them.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{ExperimentSummary, Manifest, ManifestRow, MANIFEST_FILE};
use super::scenario::{plan_experiments, simulate_experiment, DatasetConfig, ExperimentPlan};
use crate::config::KeyValues;
use crate::convnet::Example;
use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::features::{extract_features, sliding_buffers, FeatureVector, Weighting};
use crate::otsu::quantize_and_denoise;
use crate::profile::restructure;
use crate::rdmap::{compute_rd_map, read_pgm, to_network_input, write_pgm, RDMap};
use crate::sim::write_cube;

/// The first frames of each experiment keep their full map so inference
/// latency can be measured from the map onward.
pub const KEPT_MAPS_PER_EXPERIMENT: u32 = 2;

/// Tolerated gap between class shares before a warning.
const BALANCE_TOLERANCE: f64 = 0.05;

/// Everything the learners need from one range-Doppler map.
#[derive(Debug, Clone)]
pub struct Frame {
    pub experiment_id: u32,
    pub frame_index: u32,
    pub label: Label,
    pub features: FeatureVector,
    pub profile: Vec<f64>,
    pub image: Vec<f32>,
    pub map: Option<RDMap>,
}

/// Identifies one model input: the frame it starts at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct SampleKey {
    pub experiment_id: u32,
    pub frame_index: u32,
}

/// How features and profiles are derived from a map.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrameOptions {
    pub weighting: Weighting,
    /// Scale each profile vector to unit sum.
    pub normalize_profiles: bool,
}

pub const FRAME_KEYS: [&str; 2] = ["feature_weighting", "normalize_profiles"];

impl FrameOptions {
    pub fn apply(&mut self, kv: &KeyValues) -> Result<()> {
        if let Some(w) = kv.get::<String>("feature_weighting")? {
            self.weighting = match w.as_str() {
                "intensity" => Weighting::Intensity,
                "uniform" => Weighting::Uniform,
                other => {
                    return Err(Error::Config(format!(
                        "`feature_weighting` must be `intensity` or `uniform`, got `{other}`"
                    )))
                }
            };
        }
        kv.read_into("normalize_profiles", &mut self.normalize_profiles)
    }
}

/// Derives all inputs from a map carrying its label and experiment id.
pub fn process_map(map: RDMap, opts: FrameOptions) -> Result<Frame> {
    let (label, experiment_id) = match (map.label, map.experiment_id) {
        (Some(l), Some(e)) => (l, e),
        _ => return Err(Error::Data("map lacks label or experiment id".into())),
    };
    let mask = quantize_and_denoise(&map);
    let features = extract_features(&mask, opts.weighting)?;
    let profile = restructure(&map, opts.normalize_profiles)?.values;
    let image = to_network_input(&map);
    let frame_index = map.frame_index;
    let keep = frame_index < KEPT_MAPS_PER_EXPERIMENT;
    Ok(Frame {
        experiment_id,
        frame_index,
        label,
        features,
        profile,
        image,
        map: keep.then_some(map),
    })
}

/// Drops frames without target energy; they carry no class evidence.
fn keep_targets(processed: Vec<Result<Frame>>) -> Result<Vec<Frame>> {
    let mut frames = Vec::with_capacity(processed.len());
    let mut dropped = 0;
    for p in processed {
        match p {
            Ok(f) => frames.push(f),
            Err(Error::EmptyTarget(_)) => dropped += 1,
            Err(e) => return Err(e),
        }
    }
    if dropped > 0 {
        warn!("{dropped} frames without target energy were excluded");
    }
    Ok(frames)
}

fn check_balance(human: usize, robot: usize) {
    let total = (human + robot) as f64;
    let gap = (human as f64 - robot as f64).abs() / total;
    if gap > 2.0 * BALANCE_TOLERANCE {
        warn!("class imbalance: {human} human vs {robot} robot frames");
    }
}

fn maps_of_experiment(cfg: &DatasetConfig, plan: &ExperimentPlan) -> Result<Vec<RDMap>> {
    let run = simulate_experiment(&cfg.radar, plan)?;
    run
        .frames
        .par_iter()
        .map(|cube| {
            let mut map = compute_rd_map(cube)?;
            map.label = Some(plan.label);
            map.experiment_id = Some(plan.id);
            Ok(map)
        })
        .collect()
}

/// Simulates the whole dataset in memory, sorted by experiment and frame.
pub fn generate_frames(cfg: &DatasetConfig, seed: u64, opts: FrameOptions) -> Result<Vec<Frame>> {
    let plans = plan_experiments(cfg, seed)?;
    let mut frames = Vec::with_capacity(cfg.total_frames());
    for plan in &plans {
        let maps = maps_of_experiment(cfg, plan)?;
        let processed: Vec<Result<Frame>> = maps.into_par_iter().map(|m| process_map(m, opts)).collect();
        frames.extend(keep_targets(processed)?);
    }
    if frames.is_empty() {
        return Err(Error::Data("dataset configuration yields no frames".into()));
    }
    let human = frames.iter().filter(|f| f.label.is_human()).count();
    check_balance(human, frames.len() - human);
    info!("generated {} frames in {} experiments", frames.len(), plans.len());
    Ok(frames)
}

/// Simulates the dataset to `out`: one PGM per frame under `maps/`, the raw
/// frames under `cubes/` when `save_cubes` is set, and `manifest.csv`.
pub fn build_dataset(cfg: &DatasetConfig, seed: u64, out: &Path, save_cubes: bool) -> Result<Manifest> {
    let plans = plan_experiments(cfg, seed)?;
    if cfg.total_frames() == 0 {
        return Err(Error::Data("dataset configuration yields no frames; manifest would be empty".into()));
    }
    let maps_dir = out.join("maps");
    fs::create_dir_all(&maps_dir).map_err(|e| Error::io(&maps_dir, e))?;
    let cubes_dir = out.join("cubes");
    if save_cubes {
        fs::create_dir_all(&cubes_dir).map_err(|e| Error::io(&cubes_dir, e))?;
    }
    let mut rows = Vec::with_capacity(cfg.total_frames());
    for plan in &plans {
        let run = simulate_experiment(&cfg.radar, plan)?;
        let plan_rows = run
            .frames
            .par_iter()
            .zip(run.seeds.par_iter())
            .map(|(cube, &seed)| {
                let stem = format!("e{:03}_f{:03}", plan.id, cube.frame_index);
                if save_cubes {
                    write_cube(cube, &cubes_dir.join(format!("{stem}.rdc")))?;
                }
                let map = compute_rd_map(cube)?;
                let rel = Path::new("maps").join(format!("{stem}.pgm"));
                write_pgm(&map, &out.join(&rel))?;
                Ok(ManifestRow {
                    path: rel,
                    label: plan.label,
                    experiment_id: plan.id,
                    frame_index: cube.frame_index,
                    seed,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(plan_rows);
    }
    if rows.is_empty() {
        return Err(Error::Data("every run left the range window; manifest would be empty".into()));
    }
    let human = rows.iter().filter(|r| r.label.is_human()).count();
    check_balance(human, rows.len() - human);
    let manifest = Manifest::new(rows, out.to_path_buf());
    manifest.write(&out.join(MANIFEST_FILE))?;
    info!("wrote {} frames to {}", manifest.len(), out.display());
    Ok(manifest)
}

/// Reads and processes every map listed in the manifest.
pub fn load_frames(manifest: &Manifest, opts: FrameOptions) -> Result<Vec<Frame>> {
    manifest.experiments()?;
    let processed: Vec<Result<Frame>> = manifest
        .rows
        .par_iter()
        .map(|row| {
            let mut map = read_pgm(&manifest.resolve(row))?;
            map.label = Some(row.label);
            map.experiment_id = Some(row.experiment_id);
            map.frame_index = row.frame_index;
            process_map(map, opts)
        })
        .collect();
    let mut frames = keep_targets(processed)?;
    if frames.is_empty() {
        return Err(Error::Data("no frame in the manifest contains a target".into()));
    }
    frames.sort_by_key(|f| (f.experiment_id, f.frame_index));
    Ok(frames)
}

/// Experiment summaries of in-memory frames.
pub fn summarize(frames: &[Frame]) -> Vec<ExperimentSummary> {
    let mut out: Vec<ExperimentSummary> = Vec::new();
    for f in frames {
        match out.last_mut() {
            Some(e) if e.id == f.experiment_id => e.frames += 1,
            _ => out.push(ExperimentSummary {
                id: f.experiment_id,
                label: f.label,
                frames: 1,
            }),
        }
    }
    out
}

fn selected<'a>(frames: &'a [Frame], ids: &'a BTreeSet<u32>) -> impl Iterator<Item = &'a Frame> {
    frames.iter().filter(move |f| ids.contains(&f.experiment_id))
}

fn dataset(rows: Vec<f64>, d: usize, labels: Vec<Label>, keys: &[SampleKey]) -> Result<LabeledDataset> {
    let ids = keys.iter().map(|k| k.experiment_id).collect();
    LabeledDataset::new(rows, d, labels, ids)
}

/// Stride-1 buffers of `b` consecutive feature vectors within each selected
/// experiment. Frames must be sorted by experiment and frame index.
pub fn feature_dataset(frames: &[Frame], ids: &BTreeSet<u32>, b: usize) -> Result<(LabeledDataset, Vec<SampleKey>)> {
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut keys = Vec::new();
    let chosen: Vec<&Frame> = selected(frames, ids).collect();
    for group in chosen.chunk_by(|a, b| a.experiment_id == b.experiment_id) {
        let series: Vec<(u32, FeatureVector)> = group.iter().map(|f| (f.frame_index, f.features)).collect();
        for (start, row) in sliding_buffers(&series, b)? {
            values.extend(row);
            labels.push(group[0].label);
            keys.push(SampleKey {
                experiment_id: group[0].experiment_id,
                frame_index: start,
            });
        }
    }
    let d = b * crate::features::FEATURE_COUNT;
    Ok((dataset(values, d, labels, &keys)?, keys))
}

pub fn profile_dataset(frames: &[Frame], ids: &BTreeSet<u32>) -> Result<(LabeledDataset, Vec<SampleKey>)> {
    let chosen: Vec<&Frame> = selected(frames, ids).collect();
    let d = chosen.first().map_or(0, |f| f.profile.len());
    let values = chosen.iter().flat_map(|f| f.profile.iter().copied()).collect();
    let labels = chosen.iter().map(|f| f.label).collect();
    let keys: Vec<SampleKey> = chosen.iter().map(|f| key(f)).collect();
    Ok((dataset(values, d, labels, &keys)?, keys))
}

pub fn image_examples<'a>(frames: &'a [Frame], ids: &'a BTreeSet<u32>) -> (Vec<Example<'a>>, Vec<SampleKey>) {
    selected(frames, ids)
        .map(|f| {
            (
                Example {
                    input: &f.image,
                    label: f.label,
                },
                key(f),
            )
        })
        .unzip()
}

pub fn key(f: &Frame) -> SampleKey {
    SampleKey {
        experiment_id: f.experiment_id,
        frame_index: f.frame_index,
    }
}
