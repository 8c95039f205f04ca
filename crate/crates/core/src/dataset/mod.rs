//! Labelled sample sets: folder ingestion, the synthetic radiograph
//! generator, train/test splitting and text persistence.

mod synthetic;
mod text;

use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::imaging::ColorImage;
use crate::pipeline::{process, PipelineSettings};
use crate::som::Label;

pub use synthetic::{generate_synthetic, SyntheticSpec};
pub use text::{
    read_features, read_model, read_params, write_features, write_model, write_params, FeatureFile,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub features: FeatureVector,
    pub label: Label,
}

impl LabeledSample {
    pub fn new(features: FeatureVector, label: Label) -> Self {
        Self { features, label }
    }

    pub fn source(&self) -> &str {
        &self.features.source_id
    }
}

/// Splits labelled samples into parallel feature and label lists.
pub fn unzip(samples: &[LabeledSample]) -> (Vec<FeatureVector>, Vec<Label>) {
    samples
        .iter()
        .map(|s| (s.features.clone(), s.label))
        .unzip()
}

/// Two-folder dataset layout: one directory per diagnosis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub normal_dir: PathBuf,
    pub sick_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(normal_dir: impl Into<PathBuf>, sick_dir: impl Into<PathBuf>) -> Self {
        Self {
            normal_dir: normal_dir.into(),
            sick_dir: sick_dir.into(),
        }
    }

    pub fn dir(&self, label: Label) -> &Path {
        match label {
            Label::Normal => &self.normal_dir,
            Label::Sick => &self.sick_dir,
        }
    }
}

/// A file that could not be turned into a sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    /// Normal samples first, then Sick, each in lexicographic path order.
    pub samples: Vec<LabeledSample>,
    pub skipped: Vec<SkippedFile>,
}

impl IngestReport {
    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }
}

fn is_raster(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "bmp"))
        .unwrap_or(false)
}

/// `<parent dir name>/<file name>`, independent of where the dataset lives.
fn source_id(path: &Path) -> String {
    let file = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    match path.parent().and_then(|p| p.file_name()) {
        Some(dir) => format!("{}/{}", dir.to_string_lossy(), file),
        None => file,
    }
}

fn list_rasters(dir: &Path) -> Result<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_raster(&path) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Runs every PNG/BMP in the manifest's folders through the feature pipeline.
/// Labels come from the containing folder. Undecodable files are reported in
/// [`IngestReport::skipped`] rather than failing the batch.
pub fn ingest(manifest: &DatasetManifest, settings: &PipelineSettings) -> Result<IngestReport> {
    let mut jobs = Vec::new();
    for label in Label::ALL {
        for path in list_rasters(manifest.dir(label))? {
            jobs.push((path, label));
        }
    }
    let results: Vec<_> = jobs
        .par_iter()
        .map(|(path, label)| {
            let sample = ColorImage::open(path)
                .and_then(|img| process(&img, settings, &source_id(path)))
                .map(|p| LabeledSample::new(p.features, *label));
            (path, sample)
        })
        .collect();

    let mut samples = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (path, result) in results {
        match result {
            Ok(s) => samples.push(s),
            Err(e) => skipped.push(SkippedFile {
                path: path.clone(),
                reason: e.to_string(),
            }),
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(IngestReport { samples, skipped })
}

/// Seeded stratified split. Each label keeps `round(n * train_fraction)`
/// samples for training; both halves retain the input order.
pub fn stratified_split(
    samples: &[LabeledSample],
    train_fraction: f64,
    seed: u64,
) -> Result<(Vec<LabeledSample>, Vec<LabeledSample>)> {
    if !(0.0..=1.0).contains(&train_fraction) {
        return Err(Error::InvalidConfig(
            "train fraction must lie in [0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut in_train = vec![false; samples.len()];
    for label in Label::ALL {
        let mut idx: Vec<usize> = (0..samples.len())
            .filter(|&i| samples[i].label == label)
            .collect();
        let n_train = (idx.len() as f64 * train_fraction).round() as usize;
        idx.shuffle(&mut rng);
        for &i in &idx[..n_train] {
            in_train[i] = true;
        }
    }
    let (train, test): (Vec<_>, Vec<_>) = samples.iter().zip(&in_train).partition(|(_, &t)| t);
    Ok((
        train.into_iter().map(|(s, _)| s.clone()).collect(),
        test.into_iter().map(|(s, _)| s.clone()).collect(),
    ))
}
