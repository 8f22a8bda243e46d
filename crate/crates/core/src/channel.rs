//! Wired and wireless link models plus reference-based SNR measurement.
//!
//! Processing order in [`propagate`]: attenuation, multipath fading (wireless
//! only), carrier offset and static phase rotation, additive white Gaussian
//! noise at the configured SNR. A wired link is a pure attenuator with
//! optional AWGN; a wireless link adds a three-tap line-of-sight-dominated
//! delay profile whose echo gains drift slowly over the fading coherence
//! length.

use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::{db_to_amplitude, db_to_power, mean_power, power_to_db};
use crate::error::{Error, Result};
use crate::iq::IQFrame;
use crate::scalar::Scalar;

/// Physical medium of the link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkKind {
    Wired,
    Wireless,
}

impl LinkKind {
    /// Stable lowercase name, used in file names and reports.
    pub fn name(self) -> &'static str {
        match self {
            LinkKind::Wired => "wired",
            LinkKind::Wireless => "wireless",
        }
    }
}

/// One multipath echo: delay in samples and complex gain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tap {
    pub delay: usize,
    pub gain_re: f64,
    pub gain_im: f64,
}

impl Tap {
    fn gain(&self) -> Complex<f64> {
        Complex::new(self.gain_re, self.gain_im)
    }
}

/// Link configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    pub kind: LinkKind,
    /// Power attenuation in dB (30 dB scales amplitude by 10^-1.5).
    pub attenuation_db: f64,
    /// Receiver-side AWGN level as SNR in dB relative to the signal power
    /// after attenuation and fading; `None` disables the noise.
    pub awgn_snr_db: Option<f64>,
    /// Carrier frequency offset in Hz.
    pub cfo_hz: f64,
    /// Static carrier phase in radians.
    pub static_phase: f64,
    /// Echo profile; must be empty for wired links and nonempty for
    /// wireless. Gains are normalized to unit total power on use.
    pub multipath: Vec<Tap>,
    /// Correlation length of the echo-gain drift, in samples.
    pub fading_coherence: f64,
}

impl ChannelConfig {
    /// Straight cable with an attenuator: 30 dB, no rotation, optional AWGN.
    pub fn wired(awgn_snr_db: Option<f64>) -> Self {
        Self {
            kind: LinkKind::Wired,
            attenuation_db: 30.0,
            awgn_snr_db,
            cfo_hz: 0.0,
            static_phase: 0.0,
            multipath: Vec::new(),
            fading_coherence: 1.0,
        }
    }

    /// Indoor-style wireless link: dominant line of sight with echoes at
    /// -10 dB and -15 dB, 200 Hz carrier offset, slow echo drift.
    pub fn wireless(awgn_snr_db: Option<f64>) -> Self {
        Self {
            kind: LinkKind::Wireless,
            attenuation_db: 30.0,
            awgn_snr_db,
            cfo_hz: 200.0,
            static_phase: 0.4,
            multipath: vec![
                Tap {
                    delay: 0,
                    gain_re: 1.0,
                    gain_im: 0.0,
                },
                Tap {
                    delay: 2,
                    gain_re: db_to_amplitude(-10.0) * 0.6,
                    gain_im: db_to_amplitude(-10.0) * 0.8,
                },
                Tap {
                    delay: 5,
                    gain_re: -db_to_amplitude(-15.0) * 0.8,
                    gain_im: db_to_amplitude(-15.0) * 0.6,
                },
            ],
            fading_coherence: 10_000.0,
        }
    }

    /// Checks the kind/profile pairing and field ranges.
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            LinkKind::Wired if !self.multipath.is_empty() => {
                return Err(Error::InvalidConfig(
                    "wired links take no multipath taps".into(),
                ));
            }
            LinkKind::Wireless if self.multipath.is_empty() => {
                return Err(Error::InvalidConfig(
                    "wireless links need at least one tap".into(),
                ));
            }
            _ => {}
        }
        if !self.attenuation_db.is_finite() {
            return Err(Error::InvalidConfig("attenuation_db must be finite".into()));
        }
        if let Some(snr) = self.awgn_snr_db {
            if !snr.is_finite() {
                return Err(Error::InvalidConfig("awgn_snr_db must be finite".into()));
            }
        }
        if !(self.fading_coherence >= 1.0) {
            return Err(Error::InvalidConfig(
                "fading_coherence must be at least 1 sample".into(),
            ));
        }
        Ok(())
    }
}

/// Pushes a frame through the link.
///
/// Stages whose parameters are neutral (0 dB attenuation, zero offsets, no
/// AWGN) are skipped entirely, so an all-neutral wired config returns the
/// input samples bit-exactly.
pub fn propagate<S: Scalar, R: Rng>(
    frame: &IQFrame<S>,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<IQFrame<S>> {
    cfg.validate()?;
    let mut samples = frame.samples().to_vec();

    if cfg.attenuation_db != 0.0 {
        let scale = S::from_f64(db_to_amplitude(-cfg.attenuation_db));
        for s in &mut samples {
            *s = *s * scale;
        }
    }

    if cfg.kind == LinkKind::Wireless {
        samples = fade(&samples, cfg, rng);
    }

    if cfg.cfo_hz != 0.0 || cfg.static_phase != 0.0 {
        let w = 2.0 * std::f64::consts::PI * cfg.cfo_hz / frame.sample_rate();
        for (n, s) in samples.iter_mut().enumerate() {
            let ph = cfg.static_phase + w * n as f64;
            let rot = Complex::new(S::from_f64(ph.cos()), S::from_f64(ph.sin()));
            *s = *s * rot;
        }
    }

    if let Some(snr_db) = cfg.awgn_snr_db {
        let p_sig = mean_power(&samples);
        if p_sig == 0.0 {
            return Err(Error::ZeroPower("propagate: cannot set AWGN level"));
        }
        let p_noise = p_sig / db_to_power(snr_db);
        let axis_std = (p_noise / 2.0).sqrt();
        for s in &mut samples {
            let ni: f64 = StandardNormal.sample(rng);
            let nq: f64 = StandardNormal.sample(rng);
            *s = *s + Complex::new(S::from_f64(axis_std * ni), S::from_f64(axis_std * nq));
        }
    }

    IQFrame::new(samples, frame.sample_rate())
}

/// Tapped delay line with slowly drifting echo gains.
///
/// The line-of-sight tap is held constant; each echo gain is modulated by a
/// complex AR(1) process with the configured coherence length, normalized so
/// the long-run average output power matches the static profile.
fn fade<S: Scalar, R: Rng>(x: &[Complex<S>], cfg: &ChannelConfig, rng: &mut R) -> Vec<Complex<S>> {
    let total: f64 = cfg.multipath.iter().map(|t| t.gain().norm_sqr()).sum();
    let norm = total.sqrt();
    let base: Vec<(usize, Complex<f64>)> = cfg
        .multipath
        .iter()
        .map(|t| (t.delay, t.gain() / norm))
        .collect();

    const DRIFT: f64 = 0.2; // relative echo drift amplitude
    let a = (-1.0 / cfg.fading_coherence).exp();
    let b = (1.0 - a * a).sqrt();
    // average power of 1 + DRIFT * j with unit-variance complex j
    let power_fix = 1.0 / (1.0 + DRIFT * DRIFT).sqrt();

    let mut jitter: Vec<Complex<f64>> = base.iter().map(|_| Complex::new(0.0, 0.0)).collect();
    let mut out = vec![Complex::new(S::zero(), S::zero()); x.len()];
    for n in 0..x.len() {
        for (k, &(delay, g0)) in base.iter().enumerate() {
            if n < delay {
                continue;
            }
            let g = if k == 0 {
                g0
            } else {
                let wi: f64 = StandardNormal.sample(rng);
                let wq: f64 = StandardNormal.sample(rng);
                let w = Complex::new(wi / 2f64.sqrt(), wq / 2f64.sqrt());
                jitter[k] = jitter[k] * a + w * b;
                g0 * (Complex::new(1.0, 0.0) + jitter[k] * DRIFT) * power_fix
            };
            let gs = Complex::new(S::from_f64(g.re), S::from_f64(g.im));
            out[n] = out[n] + x[n - delay] * gs;
        }
    }
    out
}

/// Signal-to-noise ratio of `received` against a clean reference, in dB.
///
/// The residual `received - reference` is treated as noise. A zero-power
/// residual returns `f64::INFINITY`; a zero-power reference is an error.
pub fn measure_snr<S: Scalar>(received: &IQFrame<S>, reference: &IQFrame<S>) -> Result<f64> {
    if received.len() != reference.len() {
        return Err(Error::InvalidConfig(format!(
            "length mismatch: received {} vs reference {}",
            received.len(),
            reference.len()
        )));
    }
    let p_ref = reference.mean_power();
    if p_ref == 0.0 {
        return Err(Error::ZeroPower("measure_snr: reference"));
    }
    let p_res: f64 = received
        .samples()
        .iter()
        .zip(reference.samples())
        .map(|(r, c)| {
            let d = *r - *c;
            let re = d.re.into_f64();
            let im = d.im.into_f64();
            re * re + im * im
        })
        .sum::<f64>()
        / received.len() as f64;
    if p_res == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(power_to_db(p_ref / p_res))
}
