//! Second-order Costas loop for BPSK carrier recovery.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Loop settings: normalized bandwidth in cycles per sample and damping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostasConfig {
    pub loop_bw: f64,
    pub damping: f64,
}

impl Default for CostasConfig {
    fn default() -> Self {
        Self {
            loop_bw: 0.01,
            damping: 0.707,
        }
    }
}

impl CostasConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.loop_bw > 0.0 && self.loop_bw < 0.5) {
            return Err(Error::InvalidConfig(
                "costas loop_bw must be in (0, 0.5)".into(),
            ));
        }
        if !(self.damping > 0.0 && self.damping.is_finite()) {
            return Err(Error::InvalidConfig("costas damping must be positive".into()));
        }
        Ok(())
    }

    /// Proportional and integral gains of the digital PLL.
    pub fn loop_gains(&self) -> (f64, f64) {
        let theta = self.loop_bw;
        let d = self.damping;
        let denom = 1.0 + 2.0 * d * theta + theta * theta;
        (4.0 * d * theta / denom, 4.0 * theta * theta / denom)
    }
}

/// Result of carrier recovery.
pub struct CarrierLock<S: Scalar> {
    /// De-rotated samples.
    pub samples: Vec<Complex<S>>,
    /// Final frequency estimate in radians per sample. For BPSK the phase
    /// carries a 180-degree ambiguity which the demapper resolves later.
    pub freq: f64,
}

/// Tracks carrier phase and frequency, returning the de-rotated stream.
///
/// The error detector is the product of the in-phase and quadrature parts,
/// which is zero (modulo pi) when the constellation sits on the real axis.
pub fn costas<S: Scalar>(x: &[Complex<S>], cfg: &CostasConfig) -> Result<CarrierLock<S>> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyInput("costas"));
    }
    let (alpha, beta) = cfg.loop_gains();
    const FREQ_LIMIT: f64 = 0.1;

    let mut phase = 0.0f64;
    let mut freq = 0.0f64;
    let mut out = Vec::with_capacity(x.len());
    for s in x {
        let (sin, cos) = phase.sin_cos();
        let re = s.re.into_f64();
        let im = s.im.into_f64();
        let yr = re * cos + im * sin;
        let yi = im * cos - re * sin;
        out.push(Complex::new(S::from_f64(yr), S::from_f64(yi)));

        let e = (yr * yi).clamp(-1.0, 1.0);
        freq = (freq + beta * e).clamp(-FREQ_LIMIT, FREQ_LIMIT);
        phase += freq + alpha * e;
        if phase > std::f64::consts::PI {
            phase -= 2.0 * std::f64::consts::PI;
        } else if phase < -std::f64::consts::PI {
            phase += 2.0 * std::f64::consts::PI;
        }
    }
    Ok(CarrierLock { samples: out, freq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfchain::{modulate, pulse_shape, ModulationConfig, PulseConfig};
    use crate::seed::derive_rng;
    use rand::Rng;

    fn shaped_bpsk(n_bits: usize, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = derive_rng(seed, &[7]);
        let bits: Vec<u8> = (0..n_bits).map(|_| rng.random_range(0..2u8)).collect();
        let sym = modulate::<f64>(&bits, &ModulationConfig::default()).unwrap();
        pulse_shape(&sym, &PulseConfig::default())
            .unwrap()
            .into_samples()
    }

    fn rotate(x: &[Complex<f64>], w: f64, phi0: f64) -> Vec<Complex<f64>> {
        x.iter()
            .enumerate()
            .map(|(n, s)| s * Complex::from_polar(1.0, phi0 + w * n as f64))
            .collect()
    }

    #[test]
    fn recovers_a_carrier_frequency_offset() {
        let x = shaped_bpsk(6000, 3);
        let w = 2.0 * std::f64::consts::PI * 200.0 / 1e6;
        let rx = rotate(&x, w, 0.4);
        let lock = costas(&rx, &CostasConfig::default()).unwrap();
        assert!(
            (lock.freq - w).abs() < 0.1 * w,
            "freq estimate {} vs true {w}",
            lock.freq
        );
        let tail = &lock.samples[lock.samples.len() / 2..];
        let (mut pi, mut pq) = (0.0, 0.0);
        for s in tail {
            pi += s.re * s.re;
            pq += s.im * s.im;
        }
        assert!(
            pq < 0.01 * pi,
            "quadrature power {pq} should be far below in-phase {pi}"
        );
    }

    #[test]
    fn removes_a_static_phase() {
        let x = shaped_bpsk(2000, 4);
        let rx = rotate(&x, 0.0, std::f64::consts::FRAC_PI_8);
        let lock = costas(&rx, &CostasConfig::default()).unwrap();
        let tail = &lock.samples[lock.samples.len() / 2..];
        let (mut pi, mut pq) = (0.0, 0.0);
        for s in tail {
            pi += s.re * s.re;
            pq += s.im * s.im;
        }
        assert!(pq < 0.01 * pi);
    }

    #[test]
    fn gains_are_positive_and_small() {
        let (a, b) = CostasConfig::default().loop_gains();
        assert!(a > 0.0 && a < 0.1);
        assert!(b > 0.0 && b < a);
    }
}
