//! Osteoarthritis screening on hand radiographs with a winner-takes-all
//! self-organizing map.
//!
//! The pipeline resamples each radiograph to 150x200, averages it to
//! grayscale, applies a multiplicative contrast stretch, separates bone from
//! background with an iterative mean-split threshold and summarizes the bone
//! pixels as a histogram plus mean intensity and area. Feature dimensions are
//! min-max scaled and clustered by a two-unit Kohonen map whose clusters are
//! then labelled Normal or Sick.

pub mod dataset;
pub mod error;
pub mod features;
pub mod imaging;
pub mod pipeline;
pub mod som;

pub use error::{Error, ErrorClass, Result};
pub use features::{FeatureVector, Histogram, NormalizationParams};
pub use imaging::{BinaryImage, ColorImage, ContrastMode, ContrastSetting, GrayImage};
pub use pipeline::PipelineSettings;
pub use som::{Label, SomConfig, SomModel, TrainingTrace};
