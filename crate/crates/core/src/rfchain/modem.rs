//! Bit source and BPSK symbol mapping.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iq::SymbolStream;
use crate::scalar::Scalar;

/// Settings for the BPSK modulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationConfig {
    /// Symbols per second on the air.
    pub symbol_rate: f64,
    /// Samples per symbol after pulse shaping.
    pub samples_per_symbol: usize,
    /// Carrier amplitude assigned to each bit.
    pub tx_amplitude: f64,
}

impl Default for ModulationConfig {
    fn default() -> Self {
        Self {
            symbol_rate: 250_000.0,
            samples_per_symbol: 4,
            tx_amplitude: 0.7,
        }
    }
}

impl ModulationConfig {
    /// Checks field ranges.
    pub fn validate(&self) -> Result<()> {
        if !(self.symbol_rate > 0.0 && self.symbol_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "symbol_rate must be positive, got {}",
                self.symbol_rate
            )));
        }
        if self.samples_per_symbol == 0 {
            return Err(Error::InvalidConfig(
                "samples_per_symbol must be at least 1".into(),
            ));
        }
        if !(self.tx_amplitude > 0.0 && self.tx_amplitude.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tx_amplitude must be positive, got {}",
                self.tx_amplitude
            )));
        }
        Ok(())
    }
}

/// Maps bits onto antipodal BPSK symbols.
///
/// Bit 0 becomes `+a`, any nonzero bit becomes `-a`, where `a` is
/// `cfg.tx_amplitude`. The imaginary part is zero.
pub fn modulate<S: Scalar>(bits: &[u8], cfg: &ModulationConfig) -> Result<SymbolStream<S>> {
    cfg.validate()?;
    if bits.is_empty() {
        return Err(Error::EmptyInput("modulate"));
    }
    let a = S::from_f64(cfg.tx_amplitude);
    let zero = S::zero();
    let symbols = bits
        .iter()
        .map(|&b| {
            if b == 0 {
                Complex::new(a, zero)
            } else {
                Complex::new(-a, zero)
            }
        })
        .collect();
    SymbolStream::new(symbols, cfg.symbol_rate)
}

/// Periodic test-source bits: bytes `0..=255` repeated, unpacked MSB first.
///
/// The pattern repeats every 2048 bits, which at one bit per BPSK symbol
/// gives a 2048-symbol period.
pub fn counter_bits(n: usize) -> Vec<u8> {
    let mut bits = Vec::with_capacity(n);
    let mut byte = 0u8;
    'outer: loop {
        for k in (0..8).rev() {
            if bits.len() == n {
                break 'outer;
            }
            bits.push((byte >> k) & 1);
        }
        byte = byte.wrapping_add(1);
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maps_bits_to_antipodal_symbols() {
        let cfg = ModulationConfig::default();
        let s = modulate::<f64>(&[0, 1, 0], &cfg).unwrap();
        let sym = s.symbols();
        assert_eq!(sym[0], Complex::new(0.7, 0.0));
        assert_eq!(sym[1], Complex::new(-0.7, 0.0));
        assert_eq!(sym[2], Complex::new(0.7, 0.0));
        assert_eq!(s.symbol_rate(), 250_000.0);
    }

    #[test]
    fn rejects_empty_bits() {
        let cfg = ModulationConfig::default();
        assert!(modulate::<f64>(&[], &cfg).is_err());
    }

    #[test]
    fn counter_bits_repeat_every_2048() {
        let bits = counter_bits(2048 * 2 + 16);
        assert_eq!(&bits[..8], &[0, 0, 0, 0, 0, 0, 0, 0], "byte 0");
        assert_eq!(&bits[8..16], &[0, 0, 0, 0, 0, 0, 0, 1], "byte 1");
        for k in 0..2064 {
            assert_eq!(bits[k], bits[k + 2048], "period mismatch at bit {k}");
        }
    }

    #[test]
    fn symbol_count_matches_bit_count() {
        let cfg = ModulationConfig::default();
        let bits = counter_bits(1000);
        let s = modulate::<f32>(&bits, &cfg).unwrap();
        assert_eq!(s.len(), 1000);
        for c in s.symbols() {
            assert_eq!(c.re.abs(), 0.7f32);
            assert_eq!(c.im, 0.0f32);
        }
    }
}
