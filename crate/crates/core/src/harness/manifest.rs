//! Dataset index: one CSV row per frame.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::Label;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestRow {
    /// Range-Doppler map, relative to the manifest's directory.
    pub path: PathBuf,
    pub label: Label,
    pub experiment_id: u32,
    pub frame_index: u32,
    /// Noise seed the frame was simulated with.
    pub seed: u64,
}

/// Frame count and class of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExperimentSummary {
    pub id: u32,
    pub label: Label,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub rows: Vec<ManifestRow>,
    /// Directory the row paths are relative to.
    pub root: PathBuf,
}

impl Manifest {
    pub fn new(rows: Vec<ManifestRow>, root: PathBuf) -> Self {
        Manifest { rows, root }
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn resolve(&self, row: &ManifestRow) -> PathBuf {
        self.root.join(&row.path)
    }

    /// Per-experiment summaries in id order. Fails when an experiment mixes
    /// labels or its frame indices are not `0..n` without gaps.
    pub fn experiments(&self) -> Result<Vec<ExperimentSummary>> {
        let mut by_id: BTreeMap<u32, (Label, Vec<u32>)> = BTreeMap::new();
        for row in &self.rows {
            let entry = by_id
                .entry(row.experiment_id)
                .or_insert_with(|| (row.label, Vec::new()));
            if entry.0 != row.label {
                return Err(Error::Data(format!(
                    "experiment {} has frames of both classes",
                    row.experiment_id
                )));
            }
            entry.1.push(row.frame_index);
        }
        by_id
            .into_iter()
            .map(|(id, (label, mut frames))| {
                frames.sort_unstable();
                if frames.iter().enumerate().any(|(i, &f)| f as usize != i) {
                    return Err(Error::Data(format!(
                        "experiment {id}: frame indices are not contiguous from 0"
                    )));
                }
                Ok(ExperimentSummary {
                    id,
                    label,
                    frames: frames.len(),
                })
            })
            .collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = csv::Writer::from_writer(file);
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a manifest; row paths resolve against the file's directory.
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let rows = csv::Reader::from_reader(file)
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestRow>, _>>()?;
        if rows.is_empty() {
            return Err(Error::Data(format!("{} lists no frames", path.display())));
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Manifest { rows, root })
    }
}
