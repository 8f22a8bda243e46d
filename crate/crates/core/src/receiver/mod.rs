//! Software receiver: gain control, carrier recovery, matched filtering,
//! timing recovery, and demapping.
//!
//! [`receive`] chains the stages in that order. The matched-filter output is
//! decimated to two samples per symbol before the Gardner loop when the
//! oversampling factor allows it, which is enough for the half-symbol
//! midpoint taps the timing detector needs.

mod agc;
mod costas;
mod demod;
mod gardner;

pub use agc::{agc, AgcConfig};
pub use costas::{costas, CarrierLock, CostasConfig};
pub use demod::{demap, demap_and_ber, BerReport, ALIGN_THRESHOLD};
pub use gardner::gardner;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::iq::{IQFrame, SymbolStream};
use crate::rfchain::{matched_filter, PulseConfig};
use crate::scalar::Scalar;

/// Settings for the full receive chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReceiverConfig {
    pub pulse: PulseConfig,
    pub agc: AgcConfig,
    pub costas: CostasConfig,
    /// Gardner loop gain in samples per unit timing error.
    pub timing_gain: f64,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        Self {
            pulse: PulseConfig::default(),
            agc: AgcConfig::default(),
            costas: CostasConfig::default(),
            timing_gain: 0.1,
        }
    }
}

/// Output of the receive chain.
pub struct Reception<S: Scalar> {
    pub symbols: SymbolStream<S>,
    /// Carrier offset estimate in Hz.
    pub cfo_hz: f64,
    /// Final AGC gain, handy for diagnosing level problems.
    pub agc_gain: f64,
}

/// Runs the full chain on a received frame and returns one complex value
/// per symbol, still carrying the BPSK 180-degree ambiguity.
pub fn receive<S: Scalar>(frame: &IQFrame<S>, cfg: &ReceiverConfig) -> Result<Reception<S>> {
    let (leveled, agc_gain) = agc(frame.samples(), &cfg.agc)?;
    let lock = costas(&leveled, &cfg.costas)?;
    let cfo_hz = lock.freq * frame.sample_rate() / (2.0 * std::f64::consts::PI);

    let filtered = matched_filter(
        &IQFrame::new(lock.samples, frame.sample_rate())?,
        &cfg.pulse,
    )?;

    let sps = cfg.pulse.samples_per_symbol;
    let (stream, eff_sps) = if sps % 2 == 0 && sps >= 4 {
        let dec: Vec<_> = filtered.samples().iter().step_by(2).copied().collect();
        (dec, sps as f64 / 2.0)
    } else {
        (filtered.samples().to_vec(), sps as f64)
    };

    let symbols = gardner(&stream, eff_sps, cfg.timing_gain)?;
    let symbol_rate = frame.sample_rate() / sps as f64;
    Ok(Reception {
        symbols: SymbolStream::new(symbols, symbol_rate)?,
        cfo_hz,
        agc_gain,
    })
}
