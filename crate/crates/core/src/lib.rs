//! Simulation kernels for radar/communication spectral coexistence with
//! sub-Nyquist receivers.
//!
//! The comm side senses occupied bands from modulated-wideband-converter
//! samples ([`mwc`], [`sensing`]); the radar side picks interference-free
//! transmit bands ([`bands`]) and recovers a delay-Doppler map from their
//! Fourier coefficients ([`radar`]). [`signal`] synthesizes both sides.

pub mod bands;
pub mod chisq;
pub mod error;
pub mod freqset;
pub mod grid;
pub mod linalg;
pub mod mwc;
pub mod radar;
pub mod rng;
pub mod sensing;
pub mod signal;

pub use error::{Error, Result};
pub use freqset::{FrequencyInterval, FrequencySet};
pub use grid::{compute_n_slices, GridSpec};
pub use linalg::CMat;
