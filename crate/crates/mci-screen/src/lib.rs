//! Speech-based screening pipeline for Mild Cognitive Impairment (MCI).
//!
//! The library turns a directory of WAV recordings of a verbal-fluency task
//! into a cross-validated classification report. The stages, each usable on
//! its own:
//!
//! 1. [`audio`] — WAV loading, resampling to the canonical 22050 Hz, framing.
//! 2. [`segmentation`] — energy/ZCR voice-activity detection that splits each
//!    recording into a *speech* stream and a *disfluency* (pause/non-speech)
//!    stream.
//! 3. [`features`] — classical descriptors (pitch, jitter, shimmer, HNR,
//!    formants, ...), cepstral families (MFCC, LPCC, PLP with Δ/ΔΔ), and
//!    non-linear measures (Shannon entropy, Higuchi fractal dimension,
//!    multiscale permutation entropy).
//! 4. [`assembly`] — statistical functionals over every frame track, producing
//!    one named feature vector per recording (~900 features over both streams).
//! 5. [`selection`] — Mann-Whitney U filter (p < 0.1) followed by linear-SVM
//!    recursive feature elimination down to a top-k set, plus min-max
//!    normalization.
//! 6. [`classifiers`] — k-NN, linear SVM (SMO), MLP, and a small CNN behind a
//!    single train/predict contract.
//! 7. [`evaluation`] — stratified k-fold cross-validation reporting the
//!    Classification Error Rate (CER, %).
//!
//! [`synth`] generates a deterministic synthetic corpus with class-conditional
//! pause statistics so the whole pipeline can be exercised end to end without
//! clinical data, and [`pipeline`] wires the stages together behind a flat
//! key-value configuration.
//!
//! See the crate `examples/` directory for one runnable example per stage,
//! and the `mci-screen` binary for the command-line surface.

pub mod assembly;
pub mod audio;
pub mod classifiers;
pub mod dataset;
pub mod dsp;
mod error;
pub mod evaluation;
pub mod features;
pub mod pipeline;
pub mod segmentation;
pub mod selection;
pub mod synth;

pub use error::{Error, Result};
