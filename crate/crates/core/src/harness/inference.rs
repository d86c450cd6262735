//! Applying a saved model to frames or to a single file.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use super::benchmark::{confusion, predict_dataset, PredictionRow};
use super::frames::{feature_dataset, profile_dataset, Frame, SampleKey};
use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::features::extract_features;
use crate::metrics::ConfusionMatrix;
use crate::models::{ClassifierModel, InputKind, ModelFile};
use crate::otsu::quantize_and_denoise;
use crate::profile::restructure;
use crate::rdmap::{compute_rd_map, read_pgm, to_network_input, RDMap};
use crate::sim::read_cube;

/// Builds the model's inputs for the selected experiments.
pub fn model_inputs(
    input: InputKind,
    frames: &[Frame],
    ids: &BTreeSet<u32>,
) -> Result<(LabeledDataset, Vec<SampleKey>)> {
    match input {
        InputKind::Features { buffer, .. } => feature_dataset(frames, ids, buffer),
        InputKind::Profile { .. } => profile_dataset(frames, ids),
        InputKind::Image => {
            let chosen: Vec<&Frame> = frames.iter().filter(|f| ids.contains(&f.experiment_id)).collect();
            let d = chosen.first().map_or(0, |f| f.image.len());
            let values = chosen.iter().flat_map(|f| f.image.iter().map(|&v| v as f64)).collect();
            let labels = chosen.iter().map(|f| f.label).collect();
            let keys: Vec<SampleKey> = chosen.iter().map(|f| super::frames::key(f)).collect();
            let exp = keys.iter().map(|k| k.experiment_id).collect();
            Ok((LabeledDataset::new(values, d, labels, exp)?, keys))
        }
    }
}

/// Confusion matrix and per-sample predictions of a saved model on the
/// selected experiments.
pub fn evaluate(
    file: &ModelFile,
    frames: &[Frame],
    ids: &BTreeSet<u32>,
) -> Result<(ConfusionMatrix, Vec<PredictionRow>)> {
    let (data, keys) = model_inputs(file.input, frames, ids)?;
    let predicted = predict_dataset(&file.model, &data)?;
    let buffer = match file.input {
        InputKind::Features { buffer, .. } => Some(buffer),
        _ => None,
    };
    let rows = keys
        .iter()
        .zip(data.labels())
        .zip(&predicted)
        .map(|((k, &label), &(p, score))| PredictionRow {
            model: file.model.kind().to_string(),
            buffer,
            split: "evaluated",
            experiment_id: k.experiment_id,
            frame_index: k.frame_index,
            label,
            predicted: p,
            score,
        })
        .collect();
    Ok((confusion(data.labels(), &predicted), rows))
}

/// Label, score and processing time of one map.
pub fn predict_map(model: &ClassifierModel, input: InputKind, map: &RDMap) -> Result<(Label, f64)> {
    match input {
        InputKind::Features { buffer: 1, weighting } => {
            let f = extract_features(&quantize_and_denoise(map), weighting)?;
            model.predict(&f.to_array())
        }
        InputKind::Features { buffer, .. } => Err(Error::Config(format!(
            "model needs {buffer} consecutive frames, a single file cannot be classified"
        ))),
        InputKind::Profile { normalize } => model.predict(&restructure(map, normalize)?.values),
        InputKind::Image => match model {
            ClassifierModel::ConvNet(net) => net.predict_image(&to_network_input(map)),
            other => {
                let x: Vec<f64> = to_network_input(map).iter().map(|&v| v as f64).collect();
                other.predict(&x)
            }
        },
    }
}

/// Classifies a range-Doppler map (`.pgm`) or a raw frame (`.rdc`). The
/// latency covers everything after the file is read: map computation for raw
/// frames, input preparation and the model.
pub fn predict_one(file: &ModelFile, path: &Path) -> Result<(Label, f64, Duration)> {
    let is_cube = path.extension().is_some_and(|e| e == "rdc");
    if is_cube {
        let cube = read_cube(path)?;
        let start = Instant::now();
        let map = compute_rd_map(&cube)?;
        let (label, score) = predict_map(&file.model, file.input, &map)?;
        Ok((label, score, start.elapsed()))
    } else {
        let map = read_pgm(path)?;
        let start = Instant::now();
        let (label, score) = predict_map(&file.model, file.input, &map)?;
        Ok((label, score, start.elapsed()))
    }
}
