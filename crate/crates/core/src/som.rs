//! Winner-takes-all Kohonen map with a halving learning rate.
//!
//! There is no neighbourhood: each presented sample moves only its
//! best-matching row, `W_win <- W_win + alpha * (x - W_win)`. The learning rate
//! halves after every epoch and training stops after the configured number of
//! epochs, or earlier once an epoch moves no weight by more than
//! [`CONVERGENCE_EPSILON`].

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::FeatureVector;

/// Name of the weight-initialisation generator, recorded in model files.
pub const GENERATOR_NAME: &str = "chacha8";
pub const DEFAULT_EPOCHS: usize = 700;
pub const DEFAULT_ALPHA0: f64 = 0.1;
pub const DEFAULT_CLUSTERS: usize = 2;
/// Largest per-weight change below which an epoch counts as converged.
pub const CONVERGENCE_EPSILON: f64 = 1e-12;

/// Diagnosis class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Normal,
    Sick,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Normal, Label::Sick];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Normal => "Normal",
            Label::Sick => "Sick",
        }
    }

    /// Label taken by cluster `index` when no training sample settles it.
    pub fn fallback_for(index: usize) -> Label {
        if index == 0 {
            Label::Normal
        } else {
            Label::Sick
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "Normal" | "normal" => Ok(Label::Normal),
            "Sick" | "sick" => Ok(Label::Sick),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomConfig {
    pub clusters: usize,
    pub dims: usize,
    pub epochs: usize,
    pub alpha0: f64,
    pub seed: u64,
}

impl SomConfig {
    pub fn new(dims: usize) -> Self {
        Self {
            clusters: DEFAULT_CLUSTERS,
            dims,
            epochs: DEFAULT_EPOCHS,
            alpha0: DEFAULT_ALPHA0,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_epochs(mut self, epochs: usize) -> Self {
        self.epochs = epochs;
        self
    }

    pub fn with_alpha0(mut self, alpha0: f64) -> Self {
        self.alpha0 = alpha0;
        self
    }

    pub fn with_clusters(mut self, clusters: usize) -> Self {
        self.clusters = clusters;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.clusters < 2 {
            return Err(Error::InvalidConfig("at least 2 clusters required".into()));
        }
        if self.dims == 0 {
            return Err(Error::InvalidConfig(
                "feature dimension must be at least 1".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.alpha0 > 0.0 && self.alpha0 <= 1.0) {
            return Err(Error::InvalidConfig(
                "learning rate must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// Learning rate for each epoch: `alpha(t + 1) = 0.5 * alpha(t)`.
pub fn learning_rates(alpha0: f64, epochs: usize) -> impl Iterator<Item = f64> {
    std::iter::successors(Some(alpha0), |a| Some(0.5 * a)).take(epochs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SomModel {
    weights: Vec<f64>,
    label_map: Option<Vec<Label>>,
    config: SomConfig,
    trained_epochs: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingTrace {
    /// Learning rate used in each executed epoch.
    pub alphas: Vec<f64>,
    /// Sum of squared winner distances after each executed epoch.
    pub sse: Vec<f64>,
    /// Average quantization error of the final weights.
    pub final_avg: f64,
    /// Whether training ended on the no-change test before the epoch budget.
    pub stopped_early: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(w, x)| (w - x) * (w - x)).sum()
}

impl SomModel {
    /// Draws every weight uniformly from `[0, 1)` with a ChaCha8 stream seeded
    /// by `config.seed`, row by row.
    pub fn init_weights(config: SomConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let weights = (0..config.clusters * config.dims)
            .map(|_| rng.gen::<f64>())
            .collect();
        Ok(Self {
            weights,
            label_map: None,
            config,
            trained_epochs: 0,
        })
    }

    /// Rebuilds a model from stored parts. `weights` holds `clusters` rows.
    pub fn from_parts(
        config: SomConfig,
        weights: Vec<Vec<f64>>,
        label_map: Option<Vec<Label>>,
        trained_epochs: usize,
    ) -> Result<Self> {
        config.validate()?;
        if weights.len() != config.clusters {
            return Err(Error::DimensionMismatch {
                expected: config.clusters,
                actual: weights.len(),
            });
        }
        if let Some(row) = weights.iter().find(|r| r.len() != config.dims) {
            return Err(Error::DimensionMismatch {
                expected: config.dims,
                actual: row.len(),
            });
        }
        if let Some(map) = &label_map {
            if map.len() != config.clusters {
                return Err(Error::DimensionMismatch {
                    expected: config.clusters,
                    actual: map.len(),
                });
            }
        }
        Ok(Self {
            weights: weights.into_iter().flatten().collect(),
            label_map,
            config,
            trained_epochs,
        })
    }

    pub fn config(&self) -> &SomConfig {
        &self.config
    }

    pub fn clusters(&self) -> usize {
        self.config.clusters
    }

    pub fn dims(&self) -> usize {
        self.config.dims
    }

    pub fn trained_epochs(&self) -> usize {
        self.trained_epochs
    }

    pub fn label_map(&self) -> Option<&[Label]> {
        self.label_map.as_deref()
    }

    pub fn row(&self, cluster: usize) -> &[f64] {
        let k = self.config.dims;
        &self.weights[cluster * k..(cluster + 1) * k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.weights.chunks_exact(self.config.dims)
    }

    fn check_dims(&self, x: &FeatureVector) -> Result<()> {
        if x.len() != self.config.dims {
            return Err(Error::DimensionMismatch {
                expected: self.config.dims,
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Squared Euclidean distance between `x` and row `cluster`.
    pub fn distance(&self, x: &FeatureVector, cluster: usize) -> Result<f64> {
        self.check_dims(x)?;
        if cluster >= self.config.clusters {
            return Err(Error::ClusterOutOfRange {
                index: cluster,
                clusters: self.config.clusters,
            });
        }
        Ok(sq_dist(self.row(cluster), &x.values))
    }

    /// Squared distances from `x` to every row.
    pub fn distances(&self, x: &FeatureVector) -> Result<Vec<f64>> {
        self.check_dims(x)?;
        Ok(self.rows().map(|w| sq_dist(w, &x.values)).collect())
    }

    /// Index of the nearest row and its squared distance; ties go to the lowest index.
    pub fn best_match(&self, x: &FeatureVector) -> Result<(usize, f64)> {
        self.check_dims(x)?;
        Ok(self.best_match_unchecked(&x.values))
    }

    fn best_match_unchecked(&self, x: &[f64]) -> (usize, f64) {
        let mut best = (0, f64::INFINITY);
        for (j, w) in self.rows().enumerate() {
            let d = sq_dist(w, x);
            if d < best.1 {
                best = (j, d);
            }
        }
        best
    }

    pub fn find_winner(&self, x: &FeatureVector) -> Result<usize> {
        self.best_match(x).map(|(j, _)| j)
    }

    /// Moves the winner row toward `x` by the fraction `alpha`; other rows are
    /// untouched. Returns the largest absolute change of any weight.
    pub fn update_winner(&mut self, x: &FeatureVector, winner: usize, alpha: f64) -> Result<f64> {
        self.check_dims(x)?;
        if winner >= self.config.clusters {
            return Err(Error::ClusterOutOfRange {
                index: winner,
                clusters: self.config.clusters,
            });
        }
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidConfig(
                "learning rate must lie in (0, 1]".into(),
            ));
        }
        Ok(self.update_unchecked(&x.values, winner, alpha))
    }

    fn update_unchecked(&mut self, x: &[f64], winner: usize, alpha: f64) -> f64 {
        let k = self.config.dims;
        let keep = 1.0 - alpha;
        let mut max_change = 0.0f64;
        for (w, &xi) in self.weights[winner * k..(winner + 1) * k].iter_mut().zip(x) {
            // x - (1 - a)(x - w): alpha = 1 lands exactly on x, x == w stays put.
            let next = xi - keep * (xi - *w);
            max_change = max_change.max((next - *w).abs());
            *w = next;
        }
        max_change
    }

    /// Labels each cluster by majority vote of the training samples it wins.
    /// Clusters that win nothing, or split evenly, keep the fixed fallback
    /// (cluster 0 Normal, every other cluster Sick).
    pub fn assign_labels(&mut self, samples: &[FeatureVector], labels: &[Label]) -> Result<()> {
        if samples.len() != labels.len() {
            return Err(Error::LengthMismatch {
                samples: samples.len(),
                labels: labels.len(),
            });
        }
        let mut votes = vec![[0usize; 2]; self.config.clusters];
        for (x, &label) in samples.iter().zip(labels) {
            let j = self.find_winner(x)?;
            votes[j][label as usize] += 1;
        }
        let map = votes
            .iter()
            .enumerate()
            .map(|(j, &[normal, sick])| match normal.cmp(&sick) {
                std::cmp::Ordering::Greater => Label::Normal,
                std::cmp::Ordering::Less => Label::Sick,
                std::cmp::Ordering::Equal => Label::fallback_for(j),
            })
            .collect();
        self.label_map = Some(map);
        Ok(())
    }

    pub fn classify(&self, x: &FeatureVector) -> Result<Label> {
        let map = self.label_map.as_ref().ok_or(Error::UntrainedModel)?;
        Ok(map[self.find_winner(x)?])
    }

    /// Sum over samples of the squared distance to the winning row.
    pub fn sse(&self, samples: &[FeatureVector]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::NoSamples);
        }
        samples
            .iter()
            .map(|x| self.best_match(x).map(|(_, d)| d))
            .sum()
    }

    /// Mean Euclidean distance from each sample to its winning row.
    pub fn avg_quantization_error(&self, samples: &[FeatureVector]) -> Result<f64> {
        if samples.is_empty() {
            return Err(Error::NoSamples);
        }
        let total: f64 = samples
            .iter()
            .map(|x| self.best_match(x).map(|(_, d)| d.sqrt()))
            .sum::<Result<f64>>()?;
        Ok(total / samples.len() as f64)
    }
}

/// Trains a fresh model on `samples`, presented in order every epoch.
pub fn train(samples: &[FeatureVector], config: SomConfig) -> Result<(SomModel, TrainingTrace)> {
    if samples.is_empty() {
        return Err(Error::NoSamples);
    }
    config.validate()?;
    if let Some(bad) = samples.iter().find(|s| s.len() != config.dims) {
        return Err(Error::DimensionMismatch {
            expected: config.dims,
            actual: bad.len(),
        });
    }
    if samples.len() < config.clusters {
        return Err(Error::TooFewSamples {
            needed: config.clusters,
            actual: samples.len(),
        });
    }

    let mut model = SomModel::init_weights(config)?;
    let mut trace = TrainingTrace::default();
    for alpha in learning_rates(model.config.alpha0, model.config.epochs) {
        let mut epoch_change = 0.0f64;
        for x in samples {
            let (winner, _) = model.best_match_unchecked(&x.values);
            epoch_change = epoch_change.max(model.update_unchecked(&x.values, winner, alpha));
        }
        model.trained_epochs += 1;
        trace.alphas.push(alpha);
        trace.sse.push(model.sse(samples)?);
        if epoch_change <= CONVERGENCE_EPSILON {
            trace.stopped_early = model.trained_epochs < model.config.epochs;
            break;
        }
    }
    trace.final_avg = model.avg_quantization_error(samples)?;
    Ok((model, trace))
}
