//! End-to-end transmit/receive chain checks: the obfuscation noise must not
//! cost the link its error-free operation, and its SNR price must match the
//! closed form.

use hideprint_core::channel::{measure_snr, propagate, ChannelConfig};
use hideprint_core::iq::{IQFrame, SymbolStream};
use hideprint_core::receiver::{demap_and_ber, receive, ReceiverConfig};
use hideprint_core::rfchain::{
    apply_fingerprint, counter_bits, inject_noise, make_fingerprint, modulate, pulse_shape,
    ModulationConfig, NoiseKind, NoiseSpec, PulseConfig,
};
use hideprint_core::seed::derive_rng;
use num_complex::Complex;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

const BITS: usize = 100_000;

/// Full path from bits to a BER report over a wired link.
fn run_chain(sigma: f64, snr_db: f64, seed: u64) -> (hideprint_core::receiver::BerReport, usize) {
    let bits = counter_bits(BITS);
    let mod_cfg = ModulationConfig::default();
    let pulse = PulseConfig::default();

    let tx = modulate::<f64>(&bits, &mod_cfg).unwrap();
    let fp = make_fingerprint(3, 77, 0.005).unwrap();
    let mut rng = derive_rng(seed, &[0xc4a1]);
    let marked = apply_fingerprint(&tx, &fp, &mut rng).unwrap();
    let noisy = inject_noise(&marked, NoiseSpec::new(NoiseKind::Gaussian, sigma), &mut rng).unwrap();
    let shaped = pulse_shape(&noisy, &pulse).unwrap();

    let link = ChannelConfig::wired(Some(snr_db));
    let received = propagate(&shaped, &link, &mut rng).unwrap();

    let rx = receive(&received, &ReceiverConfig::default()).unwrap();
    let report = demap_and_ber(rx.symbols.symbols(), &bits, 400).unwrap();
    (report, rx.symbols.len())
}

#[test]
fn obfuscated_wired_link_stays_error_free() {
    for (sigma, seed) in [(0.0, 1u64), (0.02, 2), (0.05, 3)] {
        let (report, n_symbols) = run_chain(sigma, 20.0, seed);
        assert!(
            n_symbols > BITS - 200,
            "sigma {sigma}: only {n_symbols} symbols recovered"
        );
        assert_eq!(
            report.errors, 0,
            "sigma {sigma}: {} errors in {} compared bits",
            report.errors, report.compared
        );
        assert!(report.compared > BITS - 1_000);
    }
}

#[test]
fn obfuscated_wireless_link_keeps_ber_low() {
    let bits = counter_bits(40_000);
    let tx = modulate::<f64>(&bits, &ModulationConfig::default()).unwrap();
    let fp = make_fingerprint(5, 77, 0.005).unwrap();
    let mut rng = derive_rng(11, &[0xc4a2]);
    let marked = apply_fingerprint(&tx, &fp, &mut rng).unwrap();
    let noisy =
        inject_noise(&marked, NoiseSpec::new(NoiseKind::Gaussian, 0.02), &mut rng).unwrap();
    let shaped = pulse_shape(&noisy, &PulseConfig::default()).unwrap();
    let received = propagate(&shaped, &ChannelConfig::wireless(Some(20.0)), &mut rng).unwrap();
    let rx = receive(&received, &ReceiverConfig::default()).unwrap();
    let report = demap_and_ber(rx.symbols.symbols(), &bits, 400).unwrap();
    assert!(
        report.ber() < 1e-3,
        "BER {} ({} errors / {} bits)",
        report.ber(),
        report.errors,
        report.compared
    );
}

#[test]
fn snr_cost_of_obfuscation_matches_the_closed_form() {
    // Unit-power antipodal symbols over a 15 dB link. Injecting sigma per
    // axis adds 2*sigma^2 to the noise floor, so the SNR drop must be
    // 10*log10(1 + 2 sigma^2 / P_n).
    let n = 1_000_000usize;
    let snr_db = 15.0;
    let sigma = 0.02;
    let p_noise = 10f64.powf(-snr_db / 10.0);

    let mut rng = derive_rng(21, &[0x534e]);
    let symbols: Vec<Complex<f64>> = (0..n)
        .map(|_| {
            let s: f64 = if rng.random::<bool>() { 1.0 } else { -1.0 };
            Complex::new(s, 0.0)
        })
        .collect();
    let per_axis = (p_noise / 2.0).sqrt();
    let link_noise: Vec<Complex<f64>> = (0..n)
        .map(|_| {
            let i: f64 = StandardNormal.sample(&mut rng);
            let q: f64 = StandardNormal.sample(&mut rng);
            Complex::new(i * per_axis, q * per_axis)
        })
        .collect();

    let reference = IQFrame::new(symbols.clone(), 1e6).unwrap();
    let clean: Vec<Complex<f64>> = symbols
        .iter()
        .zip(&link_noise)
        .map(|(s, w)| s + w)
        .collect();
    let snr_clean = measure_snr(&IQFrame::new(clean, 1e6).unwrap(), &reference).unwrap();

    let stream = SymbolStream::new(symbols.clone(), 250e3).unwrap();
    let mut inj_rng = derive_rng(22, &[0x534e]);
    let injected = inject_noise(&stream, NoiseSpec::new(NoiseKind::Gaussian, sigma), &mut inj_rng)
        .unwrap();
    let dirty: Vec<Complex<f64>> = injected
        .symbols()
        .iter()
        .zip(&link_noise)
        .map(|(s, w)| s + w)
        .collect();
    let snr_dirty = measure_snr(&IQFrame::new(dirty, 1e6).unwrap(), &reference).unwrap();

    let drop = snr_clean - snr_dirty;
    let expected = 10.0 * (1.0 + 2.0 * sigma * sigma / p_noise).log10();
    assert!(
        (drop - expected).abs() < 0.02,
        "measured drop {drop:.4} dB, expected {expected:.4} dB"
    );
    // The paper-scale anchor: about a tenth of a decibel.
    assert!((expected - 0.1085).abs() < 5e-4);
}

#[test]
fn recovered_cfo_estimate_is_reported() {
    let bits = counter_bits(20_000);
    let tx = modulate::<f64>(&bits, &ModulationConfig::default()).unwrap();
    let shaped = pulse_shape(&tx, &PulseConfig::default()).unwrap();
    let mut cfg = ChannelConfig::wired(None);
    cfg.cfo_hz = 150.0;
    let mut rng = derive_rng(31, &[0xcf0]);
    let received = propagate(&shaped, &cfg, &mut rng).unwrap();
    let rx = receive(&received, &ReceiverConfig::default()).unwrap();
    assert!(
        (rx.cfo_hz - 150.0).abs() < 30.0,
        "CFO estimate {} Hz",
        rx.cfo_hz
    );
    let report = demap_and_ber(rx.symbols.symbols(), &bits, 400).unwrap();
    assert_eq!(report.errors, 0);
}
