//! Complex-baseband containers.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A block of complex baseband samples with a rate annotation.
///
/// Invariants enforced on construction: at least one sample, every value
/// finite, positive sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IQFrame<S: Scalar> {
    samples: Vec<Complex<S>>,
    sample_rate: f64,
}

impl<S: Scalar> IQFrame<S> {
    /// Wraps samples after validating the frame invariants.
    pub fn new(samples: Vec<Complex<S>>, sample_rate: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("IQFrame"));
        }
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "sample_rate must be positive and finite, got {sample_rate}"
            )));
        }
        if let Some(i) = samples
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Borrow the sample block.
    pub fn samples(&self) -> &[Complex<S>] {
        &self.samples
    }

    /// Samples per second.
    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    /// Number of samples.
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false: empty frames cannot be constructed.
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of |x|^2 over the frame, computed in f64.
    pub fn mean_power(&self) -> f64 {
        crate::dsp::mean_power(&self.samples)
    }

    /// Consume the frame, returning the sample block.
    pub fn into_samples(self) -> Vec<Complex<S>> {
        self.samples
    }
}

/// A block of symbol-spaced complex values with a symbol-rate annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolStream<S: Scalar> {
    symbols: Vec<Complex<S>>,
    symbol_rate: f64,
}

impl<S: Scalar> SymbolStream<S> {
    /// Wraps symbols after validating: nonempty, finite, positive rate.
    pub fn new(symbols: Vec<Complex<S>>, symbol_rate: f64) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyInput("SymbolStream"));
        }
        if !(symbol_rate > 0.0 && symbol_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "symbol_rate must be positive and finite, got {symbol_rate}"
            )));
        }
        if let Some(i) = symbols
            .iter()
            .position(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            symbols,
            symbol_rate,
        })
    }

    /// Borrow the symbol block.
    pub fn symbols(&self) -> &[Complex<S>] {
        &self.symbols
    }

    /// Symbols per second.
    pub fn symbol_rate(&self) -> f64 {
        self.symbol_rate
    }

    /// Number of symbols.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    /// Always false: empty streams cannot be constructed.
    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Mean of |x|^2 over the stream, computed in f64.
    pub fn mean_power(&self) -> f64 {
        crate::dsp::mean_power(&self.symbols)
    }

    /// Consume the stream, returning the symbol block.
    pub fn into_symbols(self) -> Vec<Complex<S>> {
        self.symbols
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(IQFrame::<f64>::new(vec![], 1.0).is_err());
        let bad = vec![Complex::new(0.0f64, f64::NAN)];
        match IQFrame::new(bad, 1.0) {
            Err(Error::NonFinite(0)) => {}
            other => panic!("expected NonFinite(0), got {other:?}"),
        }
        assert!(IQFrame::new(vec![Complex::new(1.0f64, 0.0)], 0.0).is_err());
    }

    #[test]
    fn mean_power_of_unit_circle_points_is_one() {
        let s: Vec<_> = (0..8)
            .map(|k| {
                let a = k as f64 * std::f64::consts::FRAC_PI_4;
                Complex::new(a.cos(), a.sin())
            })
            .collect();
        let f = IQFrame::new(s, 10.0).unwrap();
        assert!((f.mean_power() - 1.0).abs() < 1e-12);
    }
}
