//! Translation of fast convolution-method STEM simulations into predictions
//! of multislice-quality images.
//!
//! The multislice method produces accurate scanning transmission electron
//! microscopy images at a high computational price; the convolution method is
//! fast but too coarse for quantitative work. This crate trains models that
//! map the cheap rendering to the expensive one and measures how well they do:
//!
//! - [`imaging`]: intensity-image representation, 16-bit PNG I/O, and the
//!   scaling between intensity space and model space.
//! - [`synthdata`]: deterministic synthetic paired-image generator used as a
//!   verifiable stand-in for a nanoparticle simulation dataset.
//! - [`metrics`]: fractional RMSE (percent) and SSIM, with per-dataset
//!   aggregation.
//! - [`baselines`]: identity pass-through and neighborhood polynomial
//!   regression.
//! - [`gan`]: conditional GAN translator (U-Net generator, patch
//!   discriminator) with a deterministic CPU training loop.
//! - [`experiments`]: k-fold cross-validation, first-fold grid search,
//!   epoch-stability scoring, and persistent run records.
//! - [`plotting`]: epoch-curve charts (SVG) and side-by-side triptychs (PNG).
//! - [`cli`]: the `conv2multi` command-line surface.

pub mod baselines;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod gan;
pub mod imaging;
pub mod metrics;
pub mod plotting;
mod rng;
pub mod synthdata;

pub use error::{Error, Result};
pub use imaging::{Dataset, ImagePair, IntensityImage, DEFAULT_INTENSITY_CEILING};
pub use metrics::{MetricsReport, PairMetrics};
pub use synthdata::SynthConfig;
