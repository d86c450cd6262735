//! `mdclass`: simulate radar frames, derive range-Doppler maps and train or
//! evaluate human/robot classifiers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use mdclass_core::config::KeyValues;
use mdclass_core::features::{sliding_buffers, FEATURE_COUNT};
use mdclass_core::harness::benchmark::summary_text;
use mdclass_core::harness::{
    build_dataset, evaluate, generate_frames, holdout_split, load_frames, predict_one, run_benchmark, summarize,
    train_model, write_report, Frame, Manifest, ModelKind, Role, Settings, SplitPlan, Suites,
};
use mdclass_core::models::ModelFile;
use mdclass_core::otsu::quantize_and_denoise;
use mdclass_core::radar::derive_params;
use mdclass_core::rdmap::{compute_rd_map, write_pgm};
use mdclass_core::sim::read_cube;
use mdclass_core::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "mdclass", version, about = "Human/robot classification from FMCW range-Doppler maps")]
struct Cli {
    /// Master seed; dataset, split and training seeds derive from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// `key = value` settings file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Single setting, overriding the file. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the frame parameters derived from the radar settings.
    Design,
    /// Simulate the labeled dataset: maps, manifest and optionally raw frames.
    Simulate {
        /// Also keep every raw frame as an `.rdc` file.
        #[arg(long)]
        cubes: bool,
    },
    /// Turn raw frames (`.rdc`) into range-Doppler maps (`.pgm`).
    Rdmap {
        #[arg(required = true)]
        cubes: Vec<PathBuf>,
        /// Also write the 10-level threshold image next to each map.
        #[arg(long)]
        levels: bool,
    },
    /// Export hand-crafted features of a dataset as CSV.
    Features {
        #[command(flatten)]
        data: ManifestArg,
        /// Consecutive frames per row.
        #[arg(long, default_value_t = 1)]
        buffer: usize,
    },
    /// Export restructured profile vectors of a dataset as CSV.
    Restructure {
        #[command(flatten)]
        data: ManifestArg,
    },
    /// Train one model on the training experiments of a dataset.
    Train {
        #[command(flatten)]
        data: ManifestArg,
        #[arg(long, value_parser = parse_kind)]
        model: ModelKind,
        /// Buffer length for feature-based models.
        #[arg(long, default_value_t = 1)]
        buffer: usize,
    },
    /// Score a saved model on one part of a dataset.
    Evaluate {
        #[command(flatten)]
        data: ManifestArg,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum, default_value_t = Part::Test)]
        split: Part,
    },
    /// Classify single maps or raw frames with a saved model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Run the experiment suite and write its metrics.
    Benchmark {
        /// Dataset to use; without it the dataset is simulated in memory.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Comma-separated: classical, ensemble, convnet, latency, or all.
        #[arg(long, default_value = "all")]
        suites: String,
    },
}

#[derive(Args, Debug)]
struct ManifestArg {
    /// Dataset manifest written by `simulate`.
    #[arg(long)]
    manifest: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Part {
    Train,
    Validation,
    Test,
    All,
}

fn parse_kind(s: &str) -> std::result::Result<ModelKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn settings(cli: &Cli) -> Result<(Settings, u64)> {
    let mut kv = match &cli.config {
        Some(path) => KeyValues::load(path)?,
        None => KeyValues::default(),
    };
    for item in &cli.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
        kv.set(k.trim(), v.trim());
    }
    Ok(Settings::from_key_values(&kv)?.seeded(cli.seed))
}

/// Writes to `--out` when given, else to standard output.
fn output(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn frames_and_plan(manifest: &Path, s: &Settings) -> Result<(Manifest, Vec<Frame>, SplitPlan)> {
    let manifest = Manifest::read(manifest)?;
    let frames = load_frames(&manifest, s.benchmark.inputs)?;
    let plan = holdout_split(&summarize(&frames), &s.split)?;
    Ok((manifest, frames, plan))
}

fn write_rows(w: &mut dyn Write, header: &str, rows: impl Iterator<Item = (u32, u32, String, Vec<f64>)>) -> Result<()> {
    let io = |e| Error::Data(format!("writing output: {e}"));
    writeln!(w, "{header}").map_err(io)?;
    for (experiment, frame, label, values) in rows {
        let cells: Vec<String> = values.iter().map(f64::to_string).collect();
        writeln!(w, "{experiment},{frame},{label},{}", cells.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn header(prefix: char, n: usize) -> String {
    let cols: Vec<String> = (1..=n).map(|i| format!("{prefix}{i}")).collect();
    format!("experiment_id,frame_index,label,{}", cols.join(","))
}

fn run(cli: &Cli) -> Result<()> {
    let (s, dataset_seed) = settings(cli)?;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Design => {
            let d = derive_params(&s.dataset.radar)?;
            let mut w = output(out)?;
            let text = format!(
                "range_resolution = {}\nsamples_per_chirp = {}\nmax_velocity = {}\nchirps_per_frame = {}\nframe_duration = {}\n",
                d.range_resolution, d.samples_per_chirp, d.max_velocity, d.chirps_per_frame, d.frame_duration
            );
            w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::Data(e.to_string()))?;
        }
        Command::Simulate { cubes } => {
            let dir = out.unwrap_or(Path::new("dataset"));
            let manifest = build_dataset(&s.dataset, dataset_seed, dir, *cubes)?;
            println!("{} frames written to {}", manifest.len(), dir.display());
        }
        Command::Rdmap { cubes, levels } => {
            let dir = out.unwrap_or(Path::new("."));
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            for path in cubes {
                let map = compute_rd_map(&read_cube(path)?)?;
                let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                let target = dir.join(format!("{stem}.pgm"));
                write_pgm(&map, &target)?;
                if *levels {
                    quantize_and_denoise(&map).write_debug_pgm(&dir.join(format!("{stem}_levels.pgm")))?;
                }
                println!("{}", target.display());
            }
        }
        Command::Features { data, buffer } => {
            let manifest = Manifest::read(&data.manifest)?;
            let frames = load_frames(&manifest, s.benchmark.inputs)?;
            let mut rows = Vec::new();
            for group in frames.chunk_by(|a, b| a.experiment_id == b.experiment_id) {
                let series: Vec<_> = group.iter().map(|f| (f.frame_index, f.features)).collect();
                for (start, values) in sliding_buffers(&series, *buffer)? {
                    rows.push((group[0].experiment_id, start, group[0].label.to_string(), values));
                }
            }
            write_rows(&mut *output(out)?, &header('f', buffer * FEATURE_COUNT), rows.into_iter())?;
        }
        Command::Restructure { data } => {
            let manifest = Manifest::read(&data.manifest)?;
            let frames = load_frames(&manifest, s.benchmark.inputs)?;
            let n = frames.first().map_or(0, |f| f.profile.len());
            let rows = frames
                .into_iter()
                .map(|f| (f.experiment_id, f.frame_index, f.label.to_string(), f.profile));
            write_rows(&mut *output(out)?, &header('p', n), rows)?;
        }
        Command::Train { data, model, buffer } => {
            let (_, frames, plan) = frames_and_plan(&data.manifest, &s)?;
            let hp = s.benchmark.hyperparameters;
            let file = train_model(*model, &frames, &plan, *buffer, &hp, s.benchmark.inputs)?;
            let target = out.unwrap_or(Path::new("model.json"));
            file.save(target)?;
            println!("{model} trained on {} experiments, saved to {}", plan.train.len(), target.display());
        }
        Command::Evaluate { data, model, split } => {
            let file = ModelFile::load(model)?;
            let (_, frames, plan) = frames_and_plan(&data.manifest, &s)?;
            let ids = match split {
                Part::Train => plan.ids(Role::Train).clone(),
                Part::Validation => plan.ids(Role::Validation).clone(),
                Part::Test => plan.ids(Role::Test).clone(),
                Part::All => summarize(&frames).iter().map(|e| e.id).collect(),
            };
            let (cm, rows) = evaluate(&file, &frames, &ids)?;
            print!("{}", cm.to_csv());
            println!("accuracy,{:.6}", cm.accuracy());
            if let Some(path) = out {
                let mut w = csv::Writer::from_path(path).map_err(Error::from)?;
                for r in &rows {
                    w.serialize(r).map_err(Error::from)?;
                }
                w.flush().map_err(|e| Error::io(path, e))?;
            }
        }
        Command::Predict { model, inputs } => {
            let file = ModelFile::load(model)?;
            println!("path,label,score,latency_ms");
            for path in inputs {
                let (label, score, elapsed) = predict_one(&file, path)?;
                println!("{},{label},{score:.6},{:.3}", path.display(), elapsed.as_secs_f64() * 1e3);
            }
        }
        Command::Benchmark { manifest, suites } => {
            let mut cfg = s.benchmark;
            cfg.suites = suites.parse::<Suites>()?;
            let frames = match manifest {
                Some(path) => load_frames(&Manifest::read(path)?, cfg.inputs)?,
                None => generate_frames(&s.dataset, dataset_seed, cfg.inputs)?,
            };
            let plan = holdout_split(&summarize(&frames), &s.split)?;
            info!(
                "split: {} train, {} validation, {} test experiments",
                plan.train.len(),
                plan.validation.len(),
                plan.test.len()
            );
            let report = run_benchmark(&frames, &plan, &cfg);
            let dir = out.unwrap_or(Path::new("results"));
            write_report(&report, dir)?;
            print!("{}", summary_text(&report));
            if let Some((suite, message)) = report.failures.first() {
                return Err(Error::Training(format!("{suite} suite failed: {message}")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
