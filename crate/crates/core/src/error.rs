use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes across the library, one named variant per condition.
#[derive(Debug, Error)]
pub enum Error {
    // ---- imaging ----
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to decode png {path}: {message}")]
    PngDecode { path: PathBuf, message: String },
    #[error("failed to encode png {path}: {message}")]
    PngEncode { path: PathBuf, message: String },
    #[error("png {path} is not single-channel grayscale (color type {color_type})")]
    MultiChannelPng { path: PathBuf, color_type: String },
    #[error("png {path} has unsupported bit depth {bits} (expected 8 or 16)")]
    UnsupportedBitDepth { path: PathBuf, bits: u8 },
    #[error("invalid image dimensions {width}x{height}")]
    InvalidDimensions { width: usize, height: usize },
    #[error("intensity ceiling must be positive, got {0}")]
    InvalidIntensityCeiling(f64),
    #[error("intensity {value} lies outside [0, {ceiling}]")]
    IntensityOutOfRange { value: f64, ceiling: f64 },
    #[error("value buffer holds {got} entries, expected {expected}")]
    ValueCountMismatch { got: usize, expected: usize },
    #[error("image dimensions differ: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: usize,
        a_height: usize,
        b_width: usize,
        b_height: usize,
    },
    #[error("pair {id}: conv and multi images are incompatible ({reason})")]
    IncompatiblePair { id: String, reason: String },
    #[error("duplicate pair id {0}")]
    DuplicateId(String),
    #[error("dataset contains no pairs")]
    EmptyDataset,
    #[error("dataset images must be square, pair {id} is {width}x{height}")]
    NonSquareImage {
        id: String,
        width: usize,
        height: usize,
    },
    #[error("dataset images must share one size, pair {id} is {got} (expected {expected})")]
    MixedImageSizes {
        id: String,
        got: usize,
        expected: usize,
    },

    // ---- synthdata ----
    #[error("invalid synthesis config: {0}")]
    InvalidSynthConfig(String),
    #[error("coefficient vector holds {got} entries, expected {expected} for the requested basis")]
    CoefficientCountMismatch { got: usize, expected: usize },

    // ---- metrics ----
    #[error("actual image has zero intensity standard deviation; fractional RMSE is undefined")]
    ConstantActualImage,
    #[error("ssim window {window} does not fit a {width}x{height} image")]
    SsimWindowTooLarge {
        window: usize,
        width: usize,
        height: usize,
    },
    #[error("window size must be odd, got {0}")]
    WindowNotOdd(usize),
    #[error("no prediction with id {0} exists in the dataset")]
    UnknownPairId(String),
    #[error("no predictions were supplied")]
    EmptyPredictions,

    // ---- baselines ----
    #[error("polynomial degree must be at least 1, got {0}")]
    InvalidDegree(usize),
    #[error("{samples_per_image} samples per image cannot determine {required} polynomial terms")]
    UnderdeterminedFit {
        samples_per_image: usize,
        required: usize,
    },
    #[error("least-squares solve failed: {0}")]
    LeastSquaresFailed(String),

    // ---- gan ----
    #[error("image size {0} is not a power of two >= 16")]
    ImageSizeNotPowerOfTwo(usize),
    #[error("input is {got}x{got} but the model expects {expected}x{expected}")]
    ModelSizeMismatch { got: usize, expected: usize },
    #[error("grid shapes differ: {a:?} vs {b:?}")]
    GridShapeMismatch { a: Vec<usize>, b: Vec<usize> },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("training batch is empty")]
    EmptyBatch,
    #[error("checkpoint at {path} is unusable: {message}")]
    CorruptCheckpoint { path: PathBuf, message: String },

    // ---- experiments ----
    #[error("cannot split {n_items} items into {k} folds")]
    NotEnoughItems { n_items: usize, k: usize },
    #[error("fold count must be at least 2, got {0}")]
    TooFewFolds(usize),
    #[error("fold plan covers {plan} items but the dataset holds {dataset}")]
    FoldPlanMismatch { plan: usize, dataset: usize },
    #[error("grid axis {0} is empty")]
    EmptyGridAxis(&'static str),
    #[error("epoch curve has {len} entries, need at least {tail} for the tail window")]
    CurveTooShort { len: usize, tail: usize },
    #[error("no run named {0}")]
    RunNotFound(String),
    #[error("run record {run_id} failed validation: {message}")]
    CorruptRunRecord { run_id: String, message: String },

    // ---- cli / config ----
    #[error("unknown configuration key {0}")]
    UnknownConfigKey(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid grid file: {0}")]
    InvalidGridFile(String),
    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for errors that stem from how the program was invoked rather
    /// than from runtime conditions; the CLI maps these to exit code 2.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument(_)
                | Error::UnknownConfigKey(_)
                | Error::InvalidConfig(_)
                | Error::InvalidGridFile(_)
        )
    }
}
