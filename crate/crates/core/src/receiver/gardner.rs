//! Gardner symbol-timing recovery with cubic interpolation.

use num_complex::Complex;

use crate::dsp::cubic_interp;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Recovers one sample per symbol from an oversampled, matched-filtered
/// stream.
///
/// `samples_per_symbol` may be fractional. The timing error for each strobe
/// is `Re[(y_k - y_{k-1}) * conj(y_mid)]`, where `y_mid` sits halfway between
/// consecutive strobes; a positive error means the strobes run late, so the
/// next one is pulled earlier by `gain * error` samples.
pub fn gardner<S: Scalar>(
    x: &[Complex<S>],
    samples_per_symbol: f64,
    gain: f64,
) -> Result<Vec<Complex<S>>> {
    if !(samples_per_symbol >= 2.0) {
        return Err(Error::InvalidConfig(
            "gardner needs at least 2 samples per symbol".into(),
        ));
    }
    if !(gain > 0.0 && gain < samples_per_symbol) {
        return Err(Error::InvalidConfig("gardner gain out of range".into()));
    }
    let sps = samples_per_symbol;
    let need = (4.0 * sps) as usize + 4;
    if x.len() < need {
        return Err(Error::TooShort {
            what: "gardner input",
            need,
            got: x.len(),
        });
    }

    let limit = (x.len() - 3) as f64;
    let mut out = Vec::with_capacity((x.len() as f64 / sps) as usize + 1);
    let mut strobe = sps;
    let mut prev_strobe = strobe;
    let mut prev: Option<Complex<S>> = None;
    while strobe < limit {
        let cur = cubic_interp(x, strobe);
        if let Some(p) = prev {
            let mid = cubic_interp(x, 0.5 * (prev_strobe + strobe));
            let diff = cur - p;
            let e = (diff.re.into_f64() * mid.re.into_f64()
                + diff.im.into_f64() * mid.im.into_f64())
            .clamp(-2.0, 2.0);
            prev_strobe = strobe;
            strobe += sps - gain * e;
            // a grossly early correction would re-sample the same symbol
            if strobe < prev_strobe + 0.5 * sps {
                strobe = prev_strobe + 0.5 * sps;
            }
        } else {
            prev_strobe = strobe;
            strobe += sps;
        }
        out.push(cur);
        prev = Some(cur);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp::fractional_delay;
    use crate::rfchain::{matched_filter, modulate, pulse_shape, ModulationConfig, PulseConfig};
    use crate::seed::derive_rng;
    use rand::Rng;

    fn cascade_waveform(n_bits: usize, delay: f64) -> Vec<Complex<f64>> {
        let mut rng = derive_rng(11, &[n_bits as u64]);
        let bits: Vec<u8> = (0..n_bits).map(|_| rng.random_range(0..2u8)).collect();
        let sym = modulate::<f64>(&bits, &ModulationConfig::default()).unwrap();
        let pc = PulseConfig::default();
        let tx = pulse_shape(&sym, &pc).unwrap();
        let rx = matched_filter(&tx, &pc).unwrap();
        fractional_delay(rx.samples(), delay)
    }

    #[test]
    fn locks_onto_a_fractionally_delayed_stream() {
        let x = cascade_waveform(800, 1.3);
        let syms = gardner(&x, 4.0, 0.1).unwrap();
        assert!(syms.len() > 700);
        let tail = &syms[100..syms.len() - 20];
        let mags: Vec<f64> = tail.iter().map(|s| s.norm()).collect();
        let mean: f64 = mags.iter().sum::<f64>() / mags.len() as f64;
        let var: f64 = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / mags.len() as f64;
        // at the symbol peaks the cascade has no ISI, so magnitudes are flat
        assert!(
            var.sqrt() < 0.05 * mean,
            "magnitude spread {} vs mean {mean}",
            var.sqrt()
        );
        assert!(
            (mean - 0.7).abs() < 0.05,
            "peak magnitude {mean} should sit near the symbol amplitude"
        );
    }

    #[test]
    fn handles_two_samples_per_symbol() {
        let full = cascade_waveform(800, 0.6);
        let half: Vec<_> = full.iter().step_by(2).copied().collect();
        let syms = gardner(&half, 2.0, 0.1).unwrap();
        let tail = &syms[100..syms.len() - 20];
        let mags: Vec<f64> = tail.iter().map(|s| s.norm()).collect();
        let mean: f64 = mags.iter().sum::<f64>() / mags.len() as f64;
        let var: f64 = mags.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / mags.len() as f64;
        assert!(var.sqrt() < 0.05 * mean);
    }

    #[test]
    fn rejects_short_input() {
        let x = vec![Complex::new(1.0f64, 0.0); 8];
        assert!(matches!(
            gardner(&x, 4.0, 0.1),
            Err(Error::TooShort { .. })
        ));
    }
}
