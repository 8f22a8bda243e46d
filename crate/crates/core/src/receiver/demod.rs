//! Hard-decision demapping and bit-error accounting.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Minimum normalized correlation for a trusted alignment.
pub const ALIGN_THRESHOLD: f64 = 0.3;

const BLOCK: usize = 200;
const OFFSET_SLACK: isize = 4;

/// Sign-slices symbols to bits: positive in-phase means bit 0.
pub fn demap<S: Scalar>(symbols: &[Complex<S>]) -> Vec<u8> {
    symbols
        .iter()
        .map(|s| if s.re >= S::zero() { 0 } else { 1 })
        .collect()
}

/// Outcome of aligning recovered symbols against the transmitted bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BerReport {
    pub errors: usize,
    pub compared: usize,
    /// Index into the reference stream matching the first compared symbol.
    pub offset: usize,
    /// The carrier loop locked 180 degrees off and the slicer output was
    /// inverted before counting.
    pub inverted: bool,
    /// Peak normalized correlation of the initial alignment.
    pub peak_corr: f64,
    /// Mid-stream alignment changes. Timing recovery on a long fading
    /// capture occasionally slips a whole symbol; the error count tracks
    /// the realigned stream instead of charging the rest of the capture.
    pub realignments: usize,
}

impl BerReport {
    pub fn ber(&self) -> f64 {
        if self.compared == 0 {
            return 0.0;
        }
        self.errors as f64 / self.compared as f64
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Lock {
    offset: isize,
    inverted: bool,
}

/// Errors over `soft[lo..hi]` with reference index `lock.offset + k`.
fn count_errors(soft: &[f64], pm: &[f64], lock: Lock, lo: usize, hi: usize) -> (usize, usize) {
    let mut errors = 0;
    let mut compared = 0;
    for k in lo..hi {
        let r = lock.offset + k as isize;
        if r < 0 || r as usize >= pm.len() {
            continue;
        }
        let mut v = soft[k];
        if lock.inverted {
            v = -v;
        }
        if v * pm[r as usize] < 0.0 || v == 0.0 && pm[r as usize] != 0.0 {
            errors += 1;
        }
        compared += 1;
    }
    (errors, compared)
}

fn block_corr(soft: &[f64], pm: &[f64], offset: isize, lo: usize, hi: usize) -> Option<f64> {
    let mut acc = 0.0;
    let mut pow = 0.0;
    let mut n = 0usize;
    for k in lo..hi {
        let r = offset + k as isize;
        if r < 0 || r as usize >= pm.len() {
            continue;
        }
        acc += soft[k] * pm[r as usize];
        pow += soft[k] * soft[k];
        n += 1;
    }
    if n < 32 || pow == 0.0 {
        return None;
    }
    Some(acc / (n as f64 * (pow / n as f64).sqrt()))
}

/// Aligns recovered symbols to the reference bits and counts errors.
///
/// The first `settle` symbols are dropped to let the receiver loops
/// converge. An initial full search slides a window of slicer soft values
/// along the antipodal reference and picks the lag with the largest
/// absolute normalized correlation; a negative peak flips the slicer to
/// undo the carrier loop's 180-degree ambiguity, and a peak below
/// [`ALIGN_THRESHOLD`] fails. The remainder of the stream is then tracked
/// block by block, allowing the lag to move a few symbols to follow timing
/// slips, with each change refined to the exact symbol by splitting the
/// surrounding stretch where the error count is lowest.
pub fn demap_and_ber<S: Scalar>(
    symbols: &[Complex<S>],
    reference: &[u8],
    settle: usize,
) -> Result<BerReport> {
    if reference.is_empty() {
        return Err(Error::EmptyInput("demap_and_ber: reference"));
    }
    if symbols.len() <= settle + 64 {
        return Err(Error::TooShort {
            what: "demap_and_ber: symbols after settling",
            need: settle + 65,
            got: symbols.len(),
        });
    }
    let soft: Vec<f64> = symbols[settle..].iter().map(|s| s.re.into_f64()).collect();
    let rms = (soft.iter().map(|v| v * v).sum::<f64>() / soft.len() as f64).sqrt();
    if rms == 0.0 {
        return Err(Error::ZeroPower("demap_and_ber: symbols"));
    }
    let pm: Vec<f64> = reference
        .iter()
        .map(|&b| if b == 0 { 1.0 } else { -1.0 })
        .collect();

    let window = soft.len().min(1024);
    if pm.len() < window {
        return Err(Error::TooShort {
            what: "demap_and_ber: reference",
            need: window,
            got: pm.len(),
        });
    }
    let mut best_lag = 0usize;
    let mut best = 0.0f64;
    for lag in 0..=(pm.len() - window) {
        let mut acc = 0.0;
        for k in 0..window {
            acc += pm[lag + k] * soft[k];
        }
        if acc.abs() > best.abs() {
            best = acc;
            best_lag = lag;
        }
    }
    let peak = best / (window as f64 * rms);
    if peak.abs() < ALIGN_THRESHOLD {
        return Err(Error::AlignmentFailed {
            corr: peak.abs(),
            threshold: ALIGN_THRESHOLD,
        });
    }
    let initial = Lock {
        offset: best_lag as isize,
        inverted: peak < 0.0,
    };

    // Per-block locks, each constrained near its predecessor.
    let n_blocks = soft.len().div_ceil(BLOCK);
    let mut locks = vec![initial; n_blocks];
    for b in 1..n_blocks {
        let (lo, hi) = (b * BLOCK, ((b + 1) * BLOCK).min(soft.len()));
        let prev = locks[b - 1];
        let mut chosen = prev;
        let mut top = 0.0f64;
        for d in -OFFSET_SLACK..=OFFSET_SLACK {
            if let Some(c) = block_corr(&soft, &pm, prev.offset + d, lo, hi) {
                if c.abs() > top.abs() {
                    top = c;
                    chosen = Lock {
                        offset: prev.offset + d,
                        inverted: c < 0.0,
                    };
                }
            }
        }
        locks[b] = if top.abs() >= ALIGN_THRESHOLD {
            chosen
        } else {
            prev
        };
    }

    let mut errors = 0usize;
    let mut compared = 0usize;
    let mut realignments = 0usize;
    let mut b = 0usize;
    while b < n_blocks {
        let lock = locks[b];
        let lo = b * BLOCK;
        if b + 1 < n_blocks && locks[b + 1] != lock {
            // a slip happened inside this stretch: split the two blocks
            // wherever the combined error count is smallest
            realignments += 1;
            let next = locks[b + 1];
            let hi = ((b + 2) * BLOCK).min(soft.len());
            let mut best_split = (usize::MAX, lo);
            for q in lo..=hi {
                let (e1, _) = count_errors(&soft, &pm, lock, lo, q);
                let (e2, _) = count_errors(&soft, &pm, next, q, hi);
                if e1 + e2 < best_split.0 {
                    best_split = (e1 + e2, q);
                }
            }
            let q = best_split.1;
            let (e1, c1) = count_errors(&soft, &pm, lock, lo, q);
            let (e2, c2) = count_errors(&soft, &pm, next, q, hi);
            errors += e1 + e2;
            compared += c1 + c2;
            b += 2;
        } else {
            let hi = ((b + 1) * BLOCK).min(soft.len());
            let (e, c) = count_errors(&soft, &pm, lock, lo, hi);
            errors += e;
            compared += c;
            b += 1;
        }
    }

    Ok(BerReport {
        errors,
        compared,
        offset: best_lag,
        inverted: initial.inverted,
        peak_corr: peak.abs(),
        realignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_rng;
    use rand::Rng;

    fn bits(n: usize, seed: u64) -> Vec<u8> {
        let mut rng = derive_rng(seed, &[13]);
        (0..n).map(|_| rng.random_range(0..2u8)).collect()
    }

    fn symbols_from(bits: &[u8], amp: f64) -> Vec<Complex<f64>> {
        bits.iter()
            .map(|&b| Complex::new(if b == 0 { amp } else { -amp }, 0.0))
            .collect()
    }

    #[test]
    fn perfect_symbols_give_zero_errors() {
        let b = bits(4000, 1);
        let s = symbols_from(&b, 0.7);
        let r = demap_and_ber(&s, &b, 100).unwrap();
        assert_eq!(r.errors, 0);
        assert_eq!(r.offset, 100);
        assert!(!r.inverted);
        assert_eq!(r.compared, 3900);
        assert_eq!(r.realignments, 0);
    }

    #[test]
    fn finds_a_shifted_alignment() {
        let b = bits(4000, 2);
        let s = symbols_from(&b[37..], 0.7);
        let r = demap_and_ber(&s, &b, 0).unwrap();
        assert_eq!(r.offset, 37);
        assert_eq!(r.errors, 0);
    }

    #[test]
    fn resolves_an_inverted_carrier() {
        let b = bits(4000, 3);
        let mut s = symbols_from(&b, 0.7);
        for v in &mut s {
            *v = -*v;
        }
        let r = demap_and_ber(&s, &b, 0).unwrap();
        assert!(r.inverted);
        assert_eq!(r.errors, 0);
    }

    #[test]
    fn counts_injected_bit_errors() {
        let b = bits(4000, 4);
        let mut s = symbols_from(&b, 0.7);
        for k in [100usize, 901, 1702] {
            s[k] = -s[k];
        }
        let r = demap_and_ber(&s, &b, 0).unwrap();
        assert_eq!(r.errors, 3);
        assert_eq!(r.realignments, 0);
    }

    #[test]
    fn a_dropped_symbol_costs_one_realignment_not_half_the_stream() {
        let b = bits(6000, 7);
        let mut s = symbols_from(&b, 0.7);
        s.remove(2500);
        let r = demap_and_ber(&s, &b, 0).unwrap();
        assert_eq!(r.realignments, 1);
        assert!(r.errors <= 1, "errors {}", r.errors);
        assert!(r.compared > 5500);
    }

    #[test]
    fn a_duplicated_symbol_is_tracked_too() {
        let b = bits(6000, 8);
        let mut s = symbols_from(&b, 0.7);
        let dup = s[3100];
        s.insert(3100, dup);
        let r = demap_and_ber(&s, &b, 0).unwrap();
        assert_eq!(r.realignments, 1);
        assert!(r.errors <= 1, "errors {}", r.errors);
    }

    #[test]
    fn a_midstream_carrier_flip_is_contained() {
        let b = bits(6000, 9);
        let mut s = symbols_from(&b, 0.7);
        for v in &mut s[4200..] {
            *v = -*v;
        }
        let r = demap_and_ber(&s, &b, 0).unwrap();
        assert_eq!(r.realignments, 1);
        assert!(r.errors <= 1, "errors {}", r.errors);
    }

    #[test]
    fn random_noise_fails_alignment() {
        let b = bits(4000, 5);
        let mut rng = derive_rng(6, &[13]);
        let s: Vec<Complex<f64>> = (0..2000)
            .map(|_| Complex::new(rng.random_range(-1.0..1.0), 0.0))
            .collect();
        assert!(matches!(
            demap_and_ber(&s, &b, 0),
            Err(Error::AlignmentFailed { .. })
        ));
    }
}
