//! Obfuscation noise: four families matched in per-axis standard deviation.
//!
//! Each kind is parameterized so that both the I and Q axes carry variance
//! `sigma^2`, which makes curves comparable across kinds:
//!
//! * Gaussian: `N(0, sigma^2)`.
//! * Uniform: `[-sigma * sqrt(3), +sigma * sqrt(3))`.
//! * Laplacian: scale `sigma / sqrt(2)` (excess kurtosis 3).
//! * Impulse: Bernoulli-Gaussian, spike probability [`IMPULSE_RHO`] with
//!   conditional std `sigma / sqrt(rho)`.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::iq::SymbolStream;
use crate::scalar::Scalar;

/// Spike probability of the impulse (Bernoulli-Gaussian) kind.
pub const IMPULSE_RHO: f64 = 0.05;

/// Noise family injected on the I/Q axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    /// No injection at all.
    None,
    Gaussian,
    Uniform,
    Laplacian,
    Impulse,
}

impl NoiseKind {
    /// Stable lowercase name, used in file names and reports.
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::None => "none",
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Uniform => "uniform",
            NoiseKind::Laplacian => "laplacian",
            NoiseKind::Impulse => "impulse",
        }
    }

    /// All injectable kinds (excludes `None`).
    pub fn all() -> [NoiseKind; 4] {
        [
            NoiseKind::Gaussian,
            NoiseKind::Uniform,
            NoiseKind::Laplacian,
            NoiseKind::Impulse,
        ]
    }
}

/// A noise kind plus its per-axis standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub sigma: f64,
}

impl NoiseSpec {
    /// Convenience constructor.
    pub fn new(kind: NoiseKind, sigma: f64) -> Self {
        Self { kind, sigma }
    }

    /// Checks that sigma is finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise sigma must be finite and >= 0, got {}",
                self.sigma
            )));
        }
        Ok(())
    }
}

/// One real noise draw with std `sigma`.
fn draw<R: Rng>(kind: NoiseKind, sigma: f64, rng: &mut R) -> f64 {
    match kind {
        NoiseKind::None => 0.0,
        NoiseKind::Gaussian => {
            let n: f64 = StandardNormal.sample(rng);
            sigma * n
        }
        NoiseKind::Uniform => {
            let u: f64 = rng.random();
            (u - 0.5) * 2.0 * 3f64.sqrt() * sigma
        }
        NoiseKind::Laplacian => {
            // Difference of two exponentials with scale sigma / sqrt(2).
            let b = sigma / 2f64.sqrt();
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            b * ((1.0 - u2).ln() - (1.0 - u1).ln())
        }
        NoiseKind::Impulse => {
            let u: f64 = rng.random();
            if u < IMPULSE_RHO {
                let n: f64 = StandardNormal.sample(rng);
                sigma / IMPULSE_RHO.sqrt() * n
            } else {
                0.0
            }
        }
    }
}

/// I.i.d. complex noise samples, independent per axis.
pub fn sample_noise<S: Scalar, R: Rng>(
    spec: NoiseSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Complex<S>>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::EmptyInput("sample_noise"));
    }
    Ok((0..n)
        .map(|_| {
            let i = draw(spec.kind, spec.sigma, rng);
            let q = draw(spec.kind, spec.sigma, rng);
            Complex::new(S::from_f64(i), S::from_f64(q))
        })
        .collect())
}

/// Adds noise to each symbol.
///
/// `sigma == 0` or kind `None` returns the input values unchanged and does
/// not touch the rng, so the zero setting is bit-exact.
pub fn inject_noise<S: Scalar, R: Rng>(
    s: &SymbolStream<S>,
    spec: NoiseSpec,
    rng: &mut R,
) -> Result<SymbolStream<S>> {
    spec.validate()?;
    if spec.kind == NoiseKind::None || spec.sigma == 0.0 {
        return Ok(s.clone());
    }
    let noise = sample_noise::<S, R>(spec, s.len(), rng)?;
    let out = s
        .symbols()
        .iter()
        .zip(&noise)
        .map(|(a, n)| a + n)
        .collect();
    SymbolStream::new(out, s.symbol_rate())
}
