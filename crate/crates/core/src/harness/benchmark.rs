//! The experiment suite: buffered classical models, ensembles on profiles,
//! the convolutional network, and inference latency.

use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::{Duration, Instant};

use log::{error, info};
use rayon::prelude::*;
use serde::Serialize;

use super::frames::{feature_dataset, image_examples, profile_dataset, Frame, FrameOptions, SampleKey};
use super::inference::predict_map;
use super::split::{Role, SplitPlan};
use super::training::{fit_convnet, fit_tabular, Hyperparameters, ModelKind};
use crate::convnet::{history_csv, EpochStats};
use crate::dataset::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::metrics::{percentile, ConfusionMatrix};
use crate::models::{ClassifierModel, ConvNetModel, InputKind, ModelFile};
use crate::rdmap::RDMap;

pub const CLASSICAL_CSV: &str = "classical_accuracy.csv";
pub const ENSEMBLE_CSV: &str = "ensemble_accuracy.csv";
pub const CONVNET_HISTORY_CSV: &str = "convnet_history.csv";
pub const CONVNET_CONFUSION_CSV: &str = "convnet_confusion.csv";
pub const PREDICTIONS_CSV: &str = "predictions.csv";
pub const LATENCY_CSV: &str = "latency.csv";
pub const SUMMARY_TXT: &str = "summary.txt";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Suites {
    pub classical: bool,
    pub ensemble: bool,
    pub convnet: bool,
    pub latency: bool,
}

impl Suites {
    pub fn all() -> Self {
        Suites {
            classical: true,
            ensemble: true,
            convnet: true,
            latency: true,
        }
    }
}

impl FromStr for Suites {
    type Err = Error;

    /// Comma-separated suite names, or `all`.
    fn from_str(s: &str) -> Result<Self> {
        let mut suites = Suites {
            classical: false,
            ensemble: false,
            convnet: false,
            latency: false,
        };
        for name in s.split(',').map(str::trim) {
            match name {
                "all" => suites = Suites::all(),
                "classical" => suites.classical = true,
                "ensemble" => suites.ensemble = true,
                "convnet" => suites.convnet = true,
                "latency" => suites.latency = true,
                other => return Err(Error::Config(format!("unknown suite `{other}`"))),
            }
        }
        Ok(suites)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkConfig {
    pub suites: Suites,
    /// Classical models run for every buffer length `1..=max_buffer`.
    pub max_buffer: usize,
    pub hyperparameters: Hyperparameters,
    /// Options the frames were derived with; recorded in timed models.
    pub inputs: FrameOptions,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            suites: Suites::all(),
            max_buffer: 10,
            hyperparameters: Hyperparameters::default(),
            inputs: FrameOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccuracyRow {
    pub model: String,
    pub buffer: Option<usize>,
    pub train_samples: usize,
    pub test_samples: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionRow {
    pub model: String,
    pub buffer: Option<usize>,
    pub split: &'static str,
    pub experiment_id: u32,
    pub frame_index: u32,
    pub label: Label,
    pub predicted: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatencyRow {
    pub path: String,
    pub frames: usize,
    pub median_ms: f64,
    pub p90_ms: f64,
    pub max_ms: f64,
}

#[derive(Debug, Clone)]
pub struct ConvNetReport {
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub train_accuracy: f64,
    pub test: ConfusionMatrix,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkReport {
    pub classical: Vec<AccuracyRow>,
    pub ensemble: Vec<AccuracyRow>,
    pub convnet: Option<ConvNetReport>,
    pub latency: Vec<LatencyRow>,
    pub predictions: Vec<PredictionRow>,
    /// `(suite, message)` for every suite that failed.
    pub failures: Vec<(String, String)>,
    /// Wall time of every suite that ran. Not written to the report files.
    pub elapsed: Vec<(&'static str, Duration)>,
}

impl BenchmarkReport {
    pub fn test_accuracy(&self, model: &str, buffer: Option<usize>) -> Option<f64> {
        if model == ModelKind::ConvNet.name() {
            return self.convnet.as_ref().map(|c| c.test.accuracy());
        }
        self.classical
            .iter()
            .chain(&self.ensemble)
            .find(|r| r.model == model && r.buffer == buffer)
            .map(|r| r.test_accuracy)
    }
}

/// Anything that labels one input vector.
pub trait Predictor: Sync {
    fn predict(&self, x: &[f64]) -> Result<(Label, f64)>;
}

impl Predictor for ClassifierModel {
    fn predict(&self, x: &[f64]) -> Result<(Label, f64)> {
        ClassifierModel::predict(self, x)
    }
}

/// Scores every row of `data`, in order.
pub fn predict_dataset(model: &dyn Predictor, data: &LabeledDataset) -> Result<Vec<(Label, f64)>> {
    (0..data.len())
        .into_par_iter()
        .map(|i| model.predict(data.row(i)))
        .collect()
}

pub fn confusion(truth: &[Label], predicted: &[(Label, f64)]) -> ConfusionMatrix {
    ConfusionMatrix::from_pairs(truth.iter().copied().zip(predicted.iter().map(|p| p.0)))
}

fn prediction_rows(
    model: &str,
    buffer: Option<usize>,
    role: Role,
    keys: &[SampleKey],
    truth: &[Label],
    predicted: &[(Label, f64)],
) -> Vec<PredictionRow> {
    keys.iter()
        .zip(truth)
        .zip(predicted)
        .map(|((k, &label), &(p, score))| PredictionRow {
            model: model.to_string(),
            buffer,
            split: role.as_str(),
            experiment_id: k.experiment_id,
            frame_index: k.frame_index,
            label,
            predicted: p,
            score,
        })
        .collect()
}

/// Fits `kind` on the training set and scores both sets.
fn fit_and_score(
    kind: ModelKind,
    buffer: Option<usize>,
    train: &(LabeledDataset, Vec<SampleKey>),
    test: &(LabeledDataset, Vec<SampleKey>),
    hp: &Hyperparameters,
) -> Result<(ClassifierModel, AccuracyRow, Vec<PredictionRow>)> {
    let model = fit_tabular(kind, &train.0, hp)?;
    let train_pred = predict_dataset(&model, &train.0)?;
    let test_pred = predict_dataset(&model, &test.0)?;
    let row = AccuracyRow {
        model: kind.name().to_string(),
        buffer,
        train_samples: train.0.len(),
        test_samples: test.0.len(),
        train_accuracy: confusion(train.0.labels(), &train_pred).accuracy(),
        test_accuracy: confusion(test.0.labels(), &test_pred).accuracy(),
    };
    let mut preds = prediction_rows(kind.name(), buffer, Role::Train, &train.1, train.0.labels(), &train_pred);
    preds.extend(prediction_rows(kind.name(), buffer, Role::Test, &test.1, test.0.labels(), &test_pred));
    Ok((model, row, preds))
}

fn classical_suite(
    frames: &[Frame],
    plan: &SplitPlan,
    cfg: &BenchmarkConfig,
) -> Result<(Vec<AccuracyRow>, Vec<PredictionRow>)> {
    let mut rows = Vec::new();
    let mut preds = Vec::new();
    for b in 1..=cfg.max_buffer {
        let train = feature_dataset(frames, &plan.train, b)?;
        let test = feature_dataset(frames, &plan.test, b)?;
        let results = ModelKind::CLASSICAL
            .par_iter()
            .map(|&kind| fit_and_score(kind, Some(b), &train, &test, &cfg.hyperparameters))
            .collect::<Result<Vec<_>>>()?;
        for (_, row, p) in results {
            info!("{} b={b}: test accuracy {:.4}", row.model, row.test_accuracy);
            rows.push(row);
            preds.extend(p);
        }
    }
    Ok((rows, preds))
}

struct EnsembleOutcome {
    rows: Vec<AccuracyRow>,
    predictions: Vec<PredictionRow>,
    boosting: ClassifierModel,
}

fn ensemble_suite(frames: &[Frame], plan: &SplitPlan, cfg: &BenchmarkConfig) -> Result<EnsembleOutcome> {
    let train = profile_dataset(frames, &plan.train)?;
    let test = profile_dataset(frames, &plan.test)?;
    let results = ModelKind::ENSEMBLE
        .par_iter()
        .map(|&kind| fit_and_score(kind, None, &train, &test, &cfg.hyperparameters))
        .collect::<Result<Vec<_>>>()?;
    let mut out = EnsembleOutcome {
        rows: Vec::new(),
        predictions: Vec::new(),
        boosting: results[1].0.clone(),
    };
    for (_, row, p) in results {
        info!(
            "{}: train accuracy {:.4}, test accuracy {:.4}",
            row.model, row.train_accuracy, row.test_accuracy
        );
        out.rows.push(row);
        out.predictions.extend(p);
    }
    Ok(out)
}

fn convnet_suite(
    frames: &[Frame],
    plan: &SplitPlan,
    cfg: &BenchmarkConfig,
) -> Result<(ConvNetReport, Vec<PredictionRow>, ConvNetModel)> {
    let (model, history) = fit_convnet(frames, plan, &cfg.hyperparameters)?;
    let mut preds = Vec::new();
    let mut score = |role: Role| -> Result<ConfusionMatrix> {
        let (examples, keys) = image_examples(frames, plan.ids(role));
        let predicted = examples
            .par_iter()
            .map(|e| model.predict_image(e.input))
            .collect::<Result<Vec<_>>>()?;
        let truth: Vec<Label> = examples.iter().map(|e| e.label).collect();
        preds.extend(prediction_rows(ModelKind::ConvNet.name(), None, role, &keys, &truth, &predicted));
        Ok(confusion(&truth, &predicted))
    };
    let train = score(Role::Train)?;
    let test = score(Role::Test)?;
    info!(
        "convnet: best epoch {}, train accuracy {:.4}, test accuracy {:.4}",
        model.best_epoch,
        train.accuracy(),
        test.accuracy()
    );
    let report = ConvNetReport {
        history,
        best_epoch: model.best_epoch,
        train_accuracy: train.accuracy(),
        test,
    };
    Ok((report, preds, model))
}

fn latency_row(path: &str, times: &[f64]) -> LatencyRow {
    LatencyRow {
        path: path.to_string(),
        frames: times.len(),
        median_ms: percentile(times, 50.0),
        p90_ms: percentile(times, 90.0),
        max_ms: percentile(times, 100.0),
    }
}

/// Wall-clock milliseconds from map to prediction, one frame at a time, for
/// each named model.
pub fn measure_latency(maps: &[&RDMap], models: &[(&str, &ModelFile)]) -> Result<Vec<LatencyRow>> {
    let mut rows = Vec::new();
    for (name, file) in models {
        let mut times = Vec::with_capacity(maps.len());
        for map in maps {
            let start = Instant::now();
            predict_map(&file.model, file.input, map)?;
            times.push(start.elapsed().as_secs_f64() * 1e3);
        }
        rows.push(latency_row(name, &times));
    }
    Ok(rows)
}

/// Runs the selected suites. A failing suite is recorded in
/// [`BenchmarkReport::failures`] and the others still run.
pub fn run_benchmark(frames: &[Frame], plan: &SplitPlan, cfg: &BenchmarkConfig) -> BenchmarkReport {
    let mut report = BenchmarkReport::default();
    let fail = |report: &mut BenchmarkReport, suite: &str, e: Error| {
        error!("{suite} suite failed: {e}");
        report.failures.push((suite.to_string(), e.to_string()));
    };
    let mut clock = Instant::now();
    let mut lap = |report: &mut BenchmarkReport, suite: &'static str| {
        report.elapsed.push((suite, clock.elapsed()));
        clock = Instant::now();
    };
    if cfg.suites.classical {
        match classical_suite(frames, plan, cfg) {
            Ok((rows, preds)) => {
                report.classical = rows;
                report.predictions.extend(preds);
            }
            Err(e) => fail(&mut report, "classical", e),
        }
        lap(&mut report, "classical");
    }
    let mut boosting = None;
    if cfg.suites.ensemble || cfg.suites.latency {
        match ensemble_suite(frames, plan, cfg) {
            Ok(out) => {
                if cfg.suites.ensemble {
                    report.ensemble = out.rows;
                    report.predictions.extend(out.predictions);
                }
                boosting = Some(ModelFile::new(
                    ModelKind::GradientBoosting.input(1, cfg.inputs),
                    out.boosting,
                ));
            }
            Err(e) => fail(&mut report, "ensemble", e),
        }
        lap(&mut report, "ensemble");
    }
    let mut network = None;
    if cfg.suites.convnet || cfg.suites.latency {
        match convnet_suite(frames, plan, cfg) {
            Ok((r, preds, model)) => {
                if cfg.suites.convnet {
                    report.convnet = Some(r);
                    report.predictions.extend(preds);
                }
                network = Some(ModelFile::new(InputKind::Image, ClassifierModel::ConvNet(model)));
            }
            Err(e) => fail(&mut report, "convnet", e),
        }
        lap(&mut report, "convnet");
    }
    if cfg.suites.latency {
        let maps: Vec<&RDMap> = frames
            .iter()
            .filter(|f| plan.test.contains(&f.experiment_id))
            .filter_map(|f| f.map.as_ref())
            .collect();
        if maps.is_empty() {
            fail(&mut report, "latency", Error::Data("no test maps kept for timing".into()));
        } else {
            let mut timed = Vec::new();
            if let Some(f) = &boosting {
                timed.push((ModelKind::GradientBoosting.name(), f));
            }
            if let Some(f) = &network {
                timed.push((ModelKind::ConvNet.name(), f));
            }
            match measure_latency(&maps, &timed) {
                Ok(rows) => report.latency = rows,
                Err(e) => fail(&mut report, "latency", e),
            }
        }
        lap(&mut report, "latency");
    }
    report
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Human-readable digest of the report.
pub fn summary_text(report: &BenchmarkReport) -> String {
    let mut s = String::new();
    if !report.classical.is_empty() {
        s.push_str("Classical models, test accuracy by buffer length\n");
        let max_b = report.classical.iter().filter_map(|r| r.buffer).max().unwrap_or(0);
        s.push_str(&format!("{:<22}", "model"));
        for b in 1..=max_b {
            s.push_str(&format!("{:>8}", format!("b={b}")));
        }
        s.push('\n');
        for kind in ModelKind::CLASSICAL {
            s.push_str(&format!("{:<22}", kind.name()));
            for b in 1..=max_b {
                match report.test_accuracy(kind.name(), Some(b)) {
                    Some(a) => s.push_str(&format!("{a:>8.4}")),
                    None => s.push_str(&format!("{:>8}", "-")),
                }
            }
            s.push('\n');
        }
        s.push('\n');
    }
    if !report.ensemble.is_empty() {
        s.push_str("Ensembles on profiles\n");
        for r in &report.ensemble {
            s.push_str(&format!(
                "{:<22} train {:.4}  test {:.4}\n",
                r.model, r.train_accuracy, r.test_accuracy
            ));
        }
        s.push('\n');
    }
    if let Some(c) = &report.convnet {
        let r = c.test.rates();
        s.push_str(&format!(
            "Convolutional network (best epoch {} of {})\n\
             train {:.4}  test {:.4}\n\
             confusion (rows true, columns predicted human/robot):\n\
             human {:>6} {:>6}   ({:.4} {:.4})\n\
             robot {:>6} {:>6}   ({:.4} {:.4})\n\n",
            c.best_epoch,
            c.history.len(),
            c.train_accuracy,
            c.test.accuracy(),
            c.test.tp,
            c.test.fn_,
            r[0][0],
            r[0][1],
            c.test.fp,
            c.test.tn,
            r[1][0],
            r[1][1],
        ));
    }
    if !report.latency.is_empty() {
        s.push_str("Inference latency from map to prediction\n");
        for l in &report.latency {
            s.push_str(&format!(
                "{:<22} median {:.2} ms  p90 {:.2} ms  max {:.2} ms  ({} frames)\n",
                l.path, l.median_ms, l.p90_ms, l.max_ms, l.frames
            ));
        }
        s.push('\n');
    }
    for (suite, msg) in &report.failures {
        s.push_str(&format!("FAILED {suite}: {msg}\n"));
    }
    s
}

/// Writes every CSV of the report plus the summary to `dir`.
pub fn write_report(report: &BenchmarkReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if !report.classical.is_empty() {
        write_csv(&dir.join(CLASSICAL_CSV), &report.classical)?;
    }
    if !report.ensemble.is_empty() {
        write_csv(&dir.join(ENSEMBLE_CSV), &report.ensemble)?;
    }
    if let Some(c) = &report.convnet {
        write_text(&dir.join(CONVNET_HISTORY_CSV), &history_csv(&c.history))?;
        write_text(&dir.join(CONVNET_CONFUSION_CSV), &c.test.to_csv())?;
    }
    if !report.latency.is_empty() {
        write_csv(&dir.join(LATENCY_CSV), &report.latency)?;
    }
    write_csv(&dir.join(PREDICTIONS_CSV), &report.predictions)?;
    write_text(&dir.join(SUMMARY_TXT), &summary_text(report))
}
