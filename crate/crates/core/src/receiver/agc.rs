//! Automatic gain control.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Gain-loop settings. The loop drives the mean sample magnitude toward
/// `target` with a per-sample multiplicative update of relative size `step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgcConfig {
    pub target: f64,
    pub step: f64,
}

impl Default for AgcConfig {
    fn default() -> Self {
        Self {
            target: 1.0,
            step: 1e-3,
        }
    }
}

impl AgcConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.target > 0.0 && self.target.is_finite()) {
            return Err(Error::InvalidConfig("agc target must be positive".into()));
        }
        if !(self.step > 0.0 && self.step < 1.0) {
            return Err(Error::InvalidConfig("agc step must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Normalizes amplitude, returning the scaled samples and the final gain.
///
/// The gain is seeded from the mean magnitude of the first block so that
/// heavily attenuated inputs do not spend the whole frame converging, then
/// tracked multiplicatively: `g *= 1 + step * (target - |g*x|) / target`.
pub fn agc<S: Scalar>(x: &[Complex<S>], cfg: &AgcConfig) -> Result<(Vec<Complex<S>>, f64)> {
    cfg.validate()?;
    if x.is_empty() {
        return Err(Error::EmptyInput("agc"));
    }
    let warm = x.len().min(1024);
    let mean_mag: f64 = x[..warm]
        .iter()
        .map(|s| {
            let re = s.re.into_f64();
            let im = s.im.into_f64();
            (re * re + im * im).sqrt()
        })
        .sum::<f64>()
        / warm as f64;
    if mean_mag == 0.0 {
        return Err(Error::ZeroPower("agc: input"));
    }

    let mut g = cfg.target / mean_mag;
    let mut out = Vec::with_capacity(x.len());
    for s in x {
        let re = s.re.into_f64() * g;
        let im = s.im.into_f64() * g;
        out.push(Complex::new(S::from_f64(re), S::from_f64(im)));
        let mag = (re * re + im * im).sqrt();
        g *= 1.0 + cfg.step * (cfg.target - mag) / cfg.target;
        g = g.max(f64::MIN_POSITIVE);
    }
    Ok((out, g))
}
