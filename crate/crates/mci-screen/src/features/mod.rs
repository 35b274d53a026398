//! Acoustic feature extractors, grouped into the three families used by the
//! pipeline: classical descriptors, perceptual (cepstral) coefficients, and
//! non-linear dynamics measures.

pub mod classical;
pub mod nonlinear;
pub mod perceptual;
