//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    // ---- audio ----
    #[error("cannot read {path}: {source}")]
    WavIo {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: not a RIFF/WAVE file")]
    WavNotRiff { path: PathBuf },
    #[error("{path}: malformed WAV: {detail}")]
    WavMalformed { path: PathBuf, detail: String },
    #[error("{path}: unsupported WAV encoding (format code {format}, {bits} bits); only PCM 16-bit is supported")]
    WavUnsupportedEncoding {
        path: PathBuf,
        format: u16,
        bits: u16,
    },
    #[error("{path}: unsupported channel count {channels}; only mono and stereo are supported")]
    WavUnsupportedChannels { path: PathBuf, channels: u16 },
    #[error("{path}: zero-length audio")]
    WavZeroLength { path: PathBuf },
    #[error("signal too short: {len} samples, need at least {min}")]
    SignalTooShort { len: usize, min: usize },
    #[error("invalid framing parameters: frame {frame_ms} ms, hop {hop_ms} ms")]
    BadFraming { frame_ms: f64, hop_ms: f64 },

    // ---- segmentation / assembly ----
    #[error("segment list invalid: {0}")]
    BadSegments(String),
    #[error("both speech and disfluency streams are empty")]
    BothStreamsEmpty,

    // ---- dataset ----
    #[error("malformed dataset CSV at line {line}: {detail}")]
    MalformedCsv { line: usize, detail: String },
    #[error("duplicate feature name: {0}")]
    DuplicateFeature(String),
    #[error("unknown class label: {0:?}")]
    UnknownLabel(String),

    // ---- selection ----
    #[error("no features survive the U-test filter at alpha={alpha}; increase alpha")]
    NoFeaturesSurvive { alpha: f64 },
    #[error("requested top-{k} features but only {d} are available")]
    TopKTooLarge { k: usize, d: usize },

    // ---- classifiers ----
    #[error("SMO did not converge within {iterations} iterations")]
    SmoNonConvergence { iterations: usize },
    #[error("training loss became non-finite (learning-rate divergence?)")]
    NonFiniteLoss,
    #[error("input dimension {got} does not match model dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("grid {rows}x{cols} is smaller than the {kernel}x{kernel} convolution kernel")]
    GridTooSmall {
        rows: usize,
        cols: usize,
        kernel: usize,
    },
    #[error("malformed model file at line {line}: {detail}")]
    MalformedModel { line: usize, detail: String },

    // ---- evaluation ----
    #[error("class {label} has {count} members, fewer than k={k} folds")]
    ClassTooSmall {
        label: String,
        count: usize,
        k: usize,
    },
    #[error("k={k} folds invalid for {n} samples")]
    BadFoldCount { k: usize, n: usize },
    #[error("prediction/truth length mismatch: {predicted} vs {truth}")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("fold {fold}: {source}")]
    FoldFailed {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    // ---- cli / config ----
    #[error("bad config entry {key:?}: {detail}")]
    BadConfig { key: String, detail: String },
    #[error("{path}: {detail}")]
    BadInput { path: PathBuf, detail: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
