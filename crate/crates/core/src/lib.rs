//! Baseband simulation of radio-fingerprint anonymization.
//!
//! The crate models the full path from bits to verdicts: a BPSK modulator
//! with per-device impairment fingerprints, additive obfuscation noise on
//! the I/Q axes, wired and wireless channel models, a carrier/timing
//! recovery receiver, constellation density imaging, compact trainable
//! models (classifier and sparse autoencoder), and a hash-scheduled noise
//! disclosure protocol with majority voting.
//!
//! All sample-domain code is generic over the working scalar (`f32` or
//! `f64`) through [`Scalar`]; the aliases below fix the common choices.
//! Configuration values stay `f64` regardless of the sample type.

pub mod channel;
pub mod dsp;
pub mod error;
pub mod imaging;
pub mod iq;
pub mod learn;
pub mod protocol;
pub mod receiver;
pub mod rfchain;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Complex baseband sample, single precision.
pub type Sample32 = num_complex::Complex<f32>;
/// Complex baseband sample, double precision.
pub type Sample64 = num_complex::Complex<f64>;
/// Sample frame, single precision.
pub type Frame32 = iq::IQFrame<f32>;
/// Sample frame, double precision.
pub type Frame64 = iq::IQFrame<f64>;
/// Symbol stream, single precision.
pub type Symbols32 = iq::SymbolStream<f32>;
/// Symbol stream, double precision.
pub type Symbols64 = iq::SymbolStream<f64>;
