//! Slepian quantum noise spectroscopy of multiplicative amplitude noise.

pub mod bayes;
pub mod dpss;
pub mod dtft;
pub mod error;
pub mod estimate;
pub mod filter;
pub mod psd;
pub mod quad;
pub mod rng;
pub mod scenario;
pub mod sim;
pub mod ssqm;
pub mod synth;
pub mod waveform;

pub use error::{Error, Result};
