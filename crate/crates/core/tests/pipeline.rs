use std::collections::BTreeMap;
use std::fs;

use mdclass_core::convnet::Architecture;
use mdclass_core::dataset::Label;
use mdclass_core::harness::benchmark::{CLASSICAL_CSV, ENSEMBLE_CSV, PREDICTIONS_CSV};
use mdclass_core::harness::{
    build_dataset, evaluate, generate_frames, holdout_split, load_frames, plan_experiments, predict_one,
    run_benchmark, summarize, write_report, BenchmarkConfig, DatasetConfig, FrameOptions, ExperimentSummary, Hyperparameters,
    Manifest, ModelKind, SplitConfig, Suites, MANIFEST_FILE,
};
use mdclass_core::models::ModelFile;

fn small() -> DatasetConfig {
    DatasetConfig {
        subjects: 2,
        runs_per_subject: 2,
        human_frames: 12,
        runs_per_robot: 2,
        robot_frames: 12,
        ..DatasetConfig::default()
    }
}

fn quick_hyperparameters() -> Hyperparameters {
    let mut hp = Hyperparameters::default();
    hp.forest.trees = 10;
    hp.boosting.stages = 20;
    hp.architecture = Architecture {
        kernels: 4,
        dense_units: 8,
        ..Architecture::default()
    };
    hp.training.max_epochs = 2;
    hp.training.batch_size = 8;
    hp
}

#[test]
fn majority_baseline_is_chance_on_default_split() {
    for seed in 0..5 {
        let cfg = DatasetConfig::default();
        let experiments: Vec<ExperimentSummary> = plan_experiments(&cfg, seed)
            .unwrap()
            .iter()
            .map(|p| ExperimentSummary {
                id: p.id,
                label: p.label,
                frames: p.frames,
            })
            .collect();
        assert_eq!(experiments.iter().map(|e| e.frames).sum::<usize>(), cfg.total_frames());
        assert!(experiments.iter().filter(|e| e.label.is_human()).count() >= 10);
        assert!(experiments.iter().filter(|e| !e.label.is_human()).count() >= 4);
        let plan = holdout_split(&experiments, &SplitConfig { seed, ..SplitConfig::default() }).unwrap();
        let count = |ids: &std::collections::BTreeSet<u32>, human: bool| -> usize {
            experiments
                .iter()
                .filter(|e| ids.contains(&e.id) && e.label.is_human() == human)
                .map(|e| e.frames)
                .sum()
        };
        let majority_is_human = count(&plan.train, true) >= count(&plan.train, false);
        let hits = count(&plan.test, majority_is_human);
        let total = count(&plan.test, true) + count(&plan.test, false);
        let accuracy = hits as f64 / total as f64;
        assert!((accuracy - 0.5).abs() <= 0.03, "seed {seed}: {accuracy}");
    }
}

#[test]
fn same_seed_gives_byte_identical_maps() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = DatasetConfig {
        human_frames: 3,
        robot_frames: 3,
        ..small()
    };
    let ma = build_dataset(&cfg, 42, a.path(), false).unwrap();
    build_dataset(&cfg, 42, b.path(), false).unwrap();
    for row in &ma.rows {
        let x = fs::read(a.path().join(&row.path)).unwrap();
        let y = fs::read(b.path().join(&row.path)).unwrap();
        assert!(x == y, "{} differs", row.path.display());
    }
    assert_eq!(
        fs::read(a.path().join(MANIFEST_FILE)).unwrap(),
        fs::read(b.path().join(MANIFEST_FILE)).unwrap()
    );
}

#[test]
fn saved_models_reproduce_their_predictions() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = build_dataset(&small(), 3, dir.path(), true).unwrap();
    let frames = load_frames(&Manifest::read(&dir.path().join(MANIFEST_FILE)).unwrap(), FrameOptions::default()).unwrap();
    let plan = holdout_split(&summarize(&frames), &SplitConfig { seed: 1, ..SplitConfig::default() }).unwrap();
    let hp = quick_hyperparameters();
    for kind in [ModelKind::Knn, ModelKind::GradientBoosting, ModelKind::ConvNet] {
        let file = mdclass_core::harness::train_model(kind, &frames, &plan, 1, &hp, FrameOptions::default()).unwrap();
        let path = dir.path().join(format!("{kind}.json"));
        file.save(&path).unwrap();
        let loaded = ModelFile::load(&path).unwrap();
        assert_eq!(loaded, file);
        let (cm, rows) = evaluate(&loaded, &frames, &plan.test).unwrap();
        assert_eq!(cm.total() as usize, rows.len());
        // Single-file prediction agrees with the batch path, from a map and
        // from a raw frame.
        let row = &rows[0];
        let entry = manifest
            .rows
            .iter()
            .find(|r| r.experiment_id == row.experiment_id && r.frame_index == row.frame_index)
            .unwrap();
        let (label, score, _) = predict_one(&loaded, &manifest.resolve(entry)).unwrap();
        assert_eq!((label, score), (row.predicted, row.score), "{kind} from map");
        let cube = dir
            .path()
            .join("cubes")
            .join(entry.path.with_extension("rdc").file_name().unwrap());
        let (label, score, _) = predict_one(&loaded, &cube).unwrap();
        assert_eq!((label, score), (row.predicted, row.score), "{kind} from cube");
    }
}

#[derive(serde::Deserialize)]
struct Prediction {
    model: String,
    buffer: Option<usize>,
    split: String,
    label: Label,
    predicted: Label,
}

#[derive(serde::Deserialize)]
struct Accuracy {
    model: String,
    buffer: Option<usize>,
    test_accuracy: f64,
}

#[test]
fn reported_accuracies_follow_from_prediction_file() {
    let frames = generate_frames(&small(), 8, FrameOptions::default()).unwrap();
    let plan = holdout_split(&summarize(&frames), &SplitConfig { seed: 2, ..SplitConfig::default() }).unwrap();
    let cfg = BenchmarkConfig {
        suites: "classical,ensemble".parse::<Suites>().unwrap(),
        max_buffer: 10,
        hyperparameters: quick_hyperparameters(),
        inputs: FrameOptions::default(),
    };
    let report = run_benchmark(&frames, &plan, &cfg);
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let dir = tempfile::tempdir().unwrap();
    write_report(&report, dir.path()).unwrap();

    let mut tally: BTreeMap<(String, Option<usize>), (usize, usize)> = BTreeMap::new();
    let mut reader = csv::Reader::from_path(dir.path().join(PREDICTIONS_CSV)).unwrap();
    for p in reader.deserialize::<Prediction>() {
        let p = p.unwrap();
        if p.split == "test" {
            let t = tally.entry((p.model, p.buffer)).or_default();
            t.0 += usize::from(p.label == p.predicted);
            t.1 += 1;
        }
    }
    let mut per_model: BTreeMap<String, usize> = BTreeMap::new();
    for file in [CLASSICAL_CSV, ENSEMBLE_CSV] {
        let mut reader = csv::Reader::from_path(dir.path().join(file)).unwrap();
        for a in reader.deserialize::<Accuracy>() {
            let a = a.unwrap();
            let (hits, n) = tally[&(a.model.clone(), a.buffer)];
            assert_eq!(a.test_accuracy, hits as f64 / n as f64, "{} {:?}", a.model, a.buffer);
            *per_model.entry(a.model).or_default() += 1;
        }
    }
    for kind in ModelKind::CLASSICAL {
        assert_eq!(per_model[kind.name()], 10);
    }
    for kind in ModelKind::ENSEMBLE {
        assert_eq!(per_model[kind.name()], 1);
    }
}
