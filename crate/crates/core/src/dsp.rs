//! Small signal-processing primitives shared by the chain.

use num_complex::Complex;

use crate::scalar::Scalar;

/// Full convolution of a complex signal with real taps.
///
/// Output length is `x.len() + h.len() - 1`; for symmetric taps the group
/// delay is `(h.len() - 1) / 2` samples.
pub fn convolve_full<S: Scalar>(x: &[Complex<S>], h: &[S]) -> Vec<Complex<S>> {
    let n = x.len();
    let m = h.len();
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let mut out = vec![Complex::new(S::zero(), S::zero()); n + m - 1];
    for (i, &xi) in x.iter().enumerate() {
        if xi.re == S::zero() && xi.im == S::zero() {
            continue;
        }
        for (j, &hj) in h.iter().enumerate() {
            out[i + j] = out[i + j] + xi * hj;
        }
    }
    out
}

/// Four-point Lagrange (cubic) interpolation at fractional position `pos`.
///
/// Requires `1.0 <= pos <= len - 3` so the four-sample window fits; integer
/// positions return the stored sample exactly.
pub fn cubic_interp<S: Scalar>(y: &[Complex<S>], pos: f64) -> Complex<S> {
    let base = pos.floor();
    let mu = pos - base;
    let i = base as usize;
    debug_assert!(i >= 1 && i + 2 < y.len(), "interpolation window out of range");
    if mu == 0.0 {
        return y[i];
    }
    // Lagrange weights for samples at offsets -1, 0, 1, 2.
    let m = S::from_f64(mu);
    let one = S::one();
    let two = S::from_f64(2.0);
    let six = S::from_f64(6.0);
    let w0 = -m * (m - one) * (m - two) / six;
    let w1 = (m + one) * (m - one) * (m - two) / two;
    let w2 = -m * (m + one) * (m - two) / two;
    let w3 = m * (m + one) * (m - one) / six;
    y[i - 1] * w0 + y[i] * w1 + y[i + 1] * w2 + y[i + 2] * w3
}

/// Delays a signal by a fractional number of samples via cubic interpolation.
///
/// Output has the same length; the first and last couple of samples are
/// edge-clamped.
pub fn fractional_delay<S: Scalar>(x: &[Complex<S>], delay: f64) -> Vec<Complex<S>> {
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let pos = k as f64 - delay;
        if pos < 1.0 || pos > (n - 3) as f64 {
            let idx = pos.round().clamp(0.0, (n - 1) as f64) as usize;
            out.push(x[idx]);
        } else {
            out.push(cubic_interp(x, pos));
        }
    }
    out
}

/// Mean of |x|^2, accumulated in f64.
pub fn mean_power<S: Scalar>(x: &[Complex<S>]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let acc: f64 = x
        .iter()
        .map(|c| {
            let re = c.re.into_f64();
            let im = c.im.into_f64();
            re * re + im * im
        })
        .sum();
    acc / x.len() as f64
}

/// Converts decibels to a power ratio.
pub fn db_to_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts decibels to an amplitude ratio.
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Converts a power ratio to decibels.
pub fn power_to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn convolution_with_unit_impulse_reproduces_taps() {
        let x = vec![c(1.0, 0.0)];
        let h = vec![0.25, 0.5, 0.25];
        let y = convolve_full(&x, &h);
        assert_eq!(y.len(), 3);
        for (yi, hi) in y.iter().zip(&h) {
            assert_eq!(yi.re, *hi);
            assert_eq!(yi.im, 0.0);
        }
    }

    #[test]
    fn convolution_length_is_full() {
        let x = vec![c(1.0, 0.0); 5];
        let h = vec![1.0, 1.0];
        assert_eq!(convolve_full(&x, &h).len(), 6);
    }

    #[test]
    fn cubic_interp_is_exact_on_integers_and_cubics() {
        // y = t^3 sampled on integers; cubic interpolation must be exact.
        let y: Vec<_> = (0..8).map(|t| c((t as f64).powi(3), 0.0)).collect();
        assert_eq!(cubic_interp(&y, 3.0), y[3]);
        let v = cubic_interp(&y, 3.25);
        assert!((v.re - 3.25f64.powi(3)).abs() < 1e-9, "got {}", v.re);
    }

    #[test]
    fn fractional_delay_shifts_a_ramp() {
        let x: Vec<_> = (0..32).map(|t| c(t as f64, 0.0)).collect();
        let y = fractional_delay(&x, 0.5);
        // interior samples of a linear ramp shift exactly
        assert!((y[10].re - 9.5).abs() < 1e-9);
    }

    #[test]
    fn db_round_trips() {
        assert!((db_to_power(30.0) - 1000.0).abs() < 1e-9);
        assert!((db_to_amplitude(30.0) - 10f64.powf(1.5)).abs() < 1e-9);
        assert!((power_to_db(100.0) - 20.0).abs() < 1e-12);
    }
}
