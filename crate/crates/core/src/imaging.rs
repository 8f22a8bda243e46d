//! Constellation imaging: turns demodulated symbols into small grayscale
//! density images.
//!
//! The pipeline per image: take a fixed-size chunk of symbols, fold the
//! left half-plane over (BPSK carries no information in the sign, and
//! folding doubles the density per cluster), trim per-axis quantile tails
//! to stabilize the bounding box against outliers, then histogram into a
//! square grid with counts saturating at a cap.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Settings for image formation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImagingConfig {
    /// Symbols consumed per image.
    pub chunk_symbols: usize,
    /// Image width and height in pixels.
    pub image_size: usize,
    /// Count at which a pixel saturates.
    pub pixel_cap: u32,
    /// Per-axis lower quantile dropped before the bounding box is taken.
    pub trim_lower: f64,
    /// Per-axis upper quantile kept; everything above is dropped.
    pub trim_upper: f64,
}

impl Default for ImagingConfig {
    fn default() -> Self {
        Self {
            chunk_symbols: 100_000,
            image_size: 64,
            pixel_cap: 255,
            trim_lower: 0.005,
            trim_upper: 0.995,
        }
    }
}

impl ImagingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chunk_symbols == 0 {
            return Err(Error::InvalidConfig("chunk_symbols must be positive".into()));
        }
        if self.image_size < 2 {
            return Err(Error::InvalidConfig("image_size must be at least 2".into()));
        }
        if self.pixel_cap == 0 || self.pixel_cap > 255 {
            return Err(Error::InvalidConfig("pixel_cap must be in 1..=255".into()));
        }
        if !(0.0..0.5).contains(&self.trim_lower)
            || !(0.5..=1.0).contains(&self.trim_upper)
            || self.trim_lower >= self.trim_upper
        {
            return Err(Error::InvalidConfig(
                "trim quantiles must satisfy 0 <= lower < 0.5 <= upper <= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Axis-aligned bounds of the trimmed point cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub i_min: f64,
    pub i_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

/// A rendered constellation density image plus its provenance counters.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstellationImage {
    pub size: usize,
    pub cap: u32,
    /// Row-major pixels; row 0 is the highest quadrature bin.
    pub pixels: Vec<u8>,
    pub bounds: BBox,
    /// Points that survived trimming and were binned.
    pub retained: usize,
    /// Points before trimming.
    pub total: usize,
}

/// Sidecar metadata stored next to each PGM file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub size: usize,
    pub cap: u32,
    pub bounds: BBox,
    pub retained: usize,
    pub total: usize,
}

/// Splits symbols into non-overlapping chunks of `chunk_symbols`, discarding
/// the remainder. Fails if not even one chunk fits.
pub fn chunk_symbols<'a, S: Scalar>(
    symbols: &'a [Complex<S>],
    cfg: &ImagingConfig,
) -> Result<Vec<&'a [Complex<S>]>> {
    cfg.validate()?;
    if symbols.len() < cfg.chunk_symbols {
        return Err(Error::TooShort {
            what: "chunk_symbols",
            need: cfg.chunk_symbols,
            got: symbols.len(),
        });
    }
    Ok(symbols.chunks_exact(cfg.chunk_symbols).collect())
}

/// Folds symbols with a negative in-phase part through the origin, so both
/// BPSK clusters land on top of each other.
pub fn mirror_fold<S: Scalar>(symbols: &[Complex<S>]) -> Vec<(f64, f64)> {
    symbols
        .iter()
        .map(|s| {
            let i = s.re.into_f64();
            let q = s.im.into_f64();
            if i < 0.0 {
                (-i, -q)
            } else {
                (i, q)
            }
        })
        .collect()
}

fn quantile_bounds(values: &mut [f64], lower: f64, upper: f64) -> Result<(f64, f64)> {
    let n = values.len();
    let k_lo = (lower * n as f64).floor() as usize;
    let k_hi = ((1.0 - upper) * n as f64).floor() as usize;
    if k_lo + k_hi >= n {
        return Err(Error::InvalidConfig(
            "trim quantiles remove every point".into(),
        ));
    }
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((values[k_lo], values[n - 1 - k_hi]))
}

/// Drops per-axis quantile tails and returns the surviving points with their
/// bounding box. Each axis discards the `floor(lower * n)` smallest and the
/// symmetric count of largest values; the bounds themselves are inclusive.
pub fn trim_quantiles(points: &[(f64, f64)], cfg: &ImagingConfig) -> Result<(Vec<(f64, f64)>, BBox)> {
    if points.is_empty() {
        return Err(Error::EmptyInput("trim_quantiles"));
    }
    let mut is: Vec<f64> = points.iter().map(|p| p.0).collect();
    let mut qs: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (i_min, i_max) = quantile_bounds(&mut is, cfg.trim_lower, cfg.trim_upper)?;
    let (q_min, q_max) = quantile_bounds(&mut qs, cfg.trim_lower, cfg.trim_upper)?;
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|&&(i, q)| i >= i_min && i <= i_max && q >= q_min && q <= q_max)
        .copied()
        .collect();
    Ok((
        kept,
        BBox {
            i_min,
            i_max,
            q_min,
            q_max,
        },
    ))
}

/// Histograms points over `bounds` into a saturating grayscale image.
///
/// Bins are half-open except the last, which also takes the upper edge. A
/// degenerate axis (zero span) sends every point to bin zero on that axis.
pub fn to_image(points: &[(f64, f64)], bounds: BBox, total: usize, cfg: &ImagingConfig) -> Result<ConstellationImage> {
    cfg.validate()?;
    if points.is_empty() {
        return Err(Error::EmptyInput("to_image"));
    }
    let size = cfg.image_size;
    let bin = |v: f64, lo: f64, hi: f64| -> usize {
        let span = hi - lo;
        if span <= 0.0 {
            return 0;
        }
        (((v - lo) / span * size as f64) as usize).min(size - 1)
    };
    let mut counts = vec![0u32; size * size];
    for &(i, q) in points {
        let bi = bin(i, bounds.i_min, bounds.i_max);
        let bq = bin(q, bounds.q_min, bounds.q_max);
        let row = size - 1 - bq;
        counts[row * size + bi] = (counts[row * size + bi] + 1).min(cfg.pixel_cap);
    }
    let pixels = counts.iter().map(|&c| c as u8).collect();
    Ok(ConstellationImage {
        size,
        cap: cfg.pixel_cap,
        pixels,
        bounds,
        retained: points.len(),
        total,
    })
}

/// Full single-chunk pipeline: fold, trim, histogram.
pub fn image_chunk<S: Scalar>(chunk: &[Complex<S>], cfg: &ImagingConfig) -> Result<ConstellationImage> {
    let folded = mirror_fold(chunk);
    let (kept, bounds) = trim_quantiles(&folded, cfg)?;
    if kept.is_empty() {
        return Err(Error::EmptyInput("image_chunk: all points trimmed"));
    }
    to_image(&kept, bounds, folded.len(), cfg)
}

/// Renders every full chunk of a symbol stream.
pub fn images_from_symbols<S: Scalar>(
    symbols: &[Complex<S>],
    cfg: &ImagingConfig,
) -> Result<Vec<ConstellationImage>> {
    chunk_symbols(symbols, cfg)?
        .into_iter()
        .map(|c| image_chunk(c, cfg))
        .collect()
}

/// Flattens an image to row-major values in `[0, 1]`, dividing by the cap.
pub fn image_to_unit_vec(img: &ConstellationImage) -> Vec<f64> {
    img.pixels
        .iter()
        .map(|&p| p as f64 / img.cap as f64)
        .collect()
}

/// Writes a binary PGM (P5) plus a `.json` sidecar with the metadata the
/// pixel payload cannot carry.
pub fn write_image(img: &ConstellationImage, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    write!(f, "P5\n{} {}\n255\n", img.size, img.size)?;
    f.write_all(&img.pixels)?;
    let meta = ImageMeta {
        size: img.size,
        cap: img.cap,
        bounds: img.bounds,
        retained: img.retained,
        total: img.total,
    };
    let sidecar = path.with_extension("json");
    fs::write(sidecar, serde_json::to_string_pretty(&meta)?)?;
    Ok(())
}

/// Reads an image written by [`write_image`], including the sidecar.
pub fn read_image(path: &Path) -> Result<ConstellationImage> {
    let mut raw = Vec::new();
    fs::File::open(path)?.read_to_end(&mut raw)?;
    let bad = |m: &str| Error::InvalidConfig(format!("{}: {m}", path.display()));

    let mut pos = 0usize;
    let mut token = |raw: &[u8]| -> Result<String> {
        while pos < raw.len() && (raw[pos] as char).is_whitespace() {
            pos += 1;
        }
        if pos < raw.len() && raw[pos] == b'#' {
            while pos < raw.len() && raw[pos] != b'\n' {
                pos += 1;
            }
        }
        let start = pos;
        while pos < raw.len() && !(raw[pos] as char).is_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::InvalidConfig("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&raw[start..pos]).into_owned())
    };
    if token(&raw)? != "P5" {
        return Err(bad("not a binary PGM"));
    }
    let w: usize = token(&raw)?.parse().map_err(|_| bad("bad width"))?;
    let h: usize = token(&raw)?.parse().map_err(|_| bad("bad height"))?;
    let maxval: usize = token(&raw)?.parse().map_err(|_| bad("bad maxval"))?;
    if w != h || maxval != 255 {
        return Err(bad("expected square 8-bit image"));
    }
    pos += 1; // single whitespace after maxval
    if raw.len() < pos + w * h {
        return Err(bad("truncated pixel payload"));
    }
    let pixels = raw[pos..pos + w * h].to_vec();

    let meta: ImageMeta = serde_json::from_str(&fs::read_to_string(path.with_extension("json"))?)?;
    if meta.size != w {
        return Err(bad("sidecar size disagrees with header"));
    }
    Ok(ConstellationImage {
        size: w,
        cap: meta.cap,
        pixels,
        bounds: meta.bounds,
        retained: meta.retained,
        total: meta.total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::derive_rng;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gauss_cloud(n: usize, di: f64, dq: f64, sigma: f64, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = derive_rng(seed, &[31]);
        (0..n)
            .map(|_| {
                let ni: f64 = StandardNormal.sample(&mut rng);
                let nq: f64 = StandardNormal.sample(&mut rng);
                let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                Complex::new(sign * (0.7 + di + sigma * ni), dq + sigma * nq)
            })
            .collect()
    }

    // 95% of the mass on a single spot, the rest spread wide enough to set
    // the bounding box but sparse enough to survive trimming
    fn spiked_cloud(n: usize, seed: u64) -> Vec<Complex<f64>> {
        let mut rng = derive_rng(seed, &[32]);
        (0..n)
            .map(|_| {
                if rng.random::<f64>() < 0.95 {
                    Complex::new(0.7, 0.0)
                } else {
                    Complex::new(rng.random_range(0.2..1.2), rng.random_range(-0.5..0.5))
                }
            })
            .collect()
    }

    #[test]
    fn chunking_floors_and_rejects_short_input() {
        let cfg = ImagingConfig {
            chunk_symbols: 1000,
            ..ImagingConfig::default()
        };
        let s = vec![Complex::new(1.0f64, 0.0); 2500];
        let chunks = chunk_symbols(&s, &cfg).unwrap();
        assert_eq!(chunks.len(), 2);
        let short = vec![Complex::new(1.0f64, 0.0); 999];
        assert!(matches!(
            chunk_symbols(&short, &cfg),
            Err(Error::TooShort { .. })
        ));
    }

    #[test]
    fn folding_flips_both_components() {
        let s = vec![
            Complex::new(-0.5f64, 0.25),
            Complex::new(0.5, 0.25),
            Complex::new(0.0, -1.0),
        ];
        let f = mirror_fold(&s);
        assert_eq!(f[0], (0.5, -0.25));
        assert_eq!(f[1], (0.5, 0.25));
        assert_eq!(f[2], (0.0, -1.0));
    }

    #[test]
    fn trim_keeps_exactly_the_inner_band_when_tails_are_disjoint() {
        // I = k, Q = (k + 500) mod 1000: the 5-point tails of either axis
        // touch different points, so exactly 2% is removed overall.
        let n = 1000;
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|k| (k as f64, ((k + 500) % 1000) as f64))
            .collect();
        let cfg = ImagingConfig::default();
        let (kept, bb) = trim_quantiles(&pts, &cfg).unwrap();
        assert_eq!(kept.len(), 980);
        assert_eq!(bb.i_min, 5.0);
        assert_eq!(bb.i_max, 994.0);
        assert_eq!(bb.q_min, 5.0);
        assert_eq!(bb.q_max, 994.0);
    }

    #[test]
    fn trim_on_a_gaussian_cloud_keeps_close_to_the_nominal_fraction() {
        let cloud = gauss_cloud(100_000, 0.0, 0.0, 0.05, 1);
        let folded = mirror_fold(&cloud);
        let (kept, _) = trim_quantiles(&folded, &ImagingConfig::default()).unwrap();
        assert!(
            (98_000..=98_100).contains(&kept.len()),
            "kept {}",
            kept.len()
        );
    }

    #[test]
    fn gaussian_cluster_keeps_every_count_below_the_cap() {
        // binning a Gaussian blob over its own trimmed box peaks around
        // 100 counts per pixel at this chunk size, independent of sigma
        let cloud = gauss_cloud(100_000, 0.0, 0.0, 0.05, 2);
        let img = image_chunk(&cloud, &ImagingConfig::default()).unwrap();
        assert_eq!(img.size, 64);
        assert_eq!(img.pixels.len(), 4096);
        let max = *img.pixels.iter().max().unwrap();
        assert!((60..220).contains(&max), "peak count {max}");
        let mass: u64 = img.pixels.iter().map(|&p| p as u64).sum();
        assert_eq!(mass, img.retained as u64, "nothing saturated, so the image mass is the retained count");
        assert_eq!(img.total, 100_000);
        assert!(img.retained >= 98_000);
    }

    #[test]
    fn concentrated_mass_saturates_at_the_cap() {
        let cloud = spiked_cloud(100_000, 6);
        let img = image_chunk(&cloud, &ImagingConfig::default()).unwrap();
        assert_eq!(*img.pixels.iter().max().unwrap(), 255);
        let mass: u64 = img.pixels.iter().map(|&p| p as u64).sum();
        assert!(mass < img.retained as u64);
    }

    #[test]
    fn coincident_points_land_in_a_single_bin() {
        let s = vec![Complex::new(0.7f64, 0.1); 500];
        let img = image_chunk(
            &s,
            &ImagingConfig {
                chunk_symbols: 500,
                ..ImagingConfig::default()
            },
        )
        .unwrap();
        let nonzero: Vec<u8> = img.pixels.iter().copied().filter(|&p| p > 0).collect();
        assert_eq!(nonzero.len(), 1);
        assert_eq!(nonzero[0], 255);
    }

    #[test]
    fn spread_data_counts_every_retained_point() {
        // 50x50 grid of distinct locations, 4 points each: no pixel reaches
        // the cap so the image mass equals the retained count.
        let mut s = Vec::new();
        for k in 0..2500 {
            let x = 0.5 + 0.01 * (k % 50) as f64;
            let y = -0.25 + 0.01 * (k / 50) as f64;
            for _ in 0..4 {
                s.push(Complex::new(x, y));
            }
        }
        let cfg = ImagingConfig {
            chunk_symbols: s.len(),
            ..ImagingConfig::default()
        };
        let img = image_chunk(&s, &cfg).unwrap();
        let mass: u64 = img.pixels.iter().map(|&p| p as u64).sum();
        assert_eq!(mass, img.retained as u64);
    }

    #[test]
    fn pgm_roundtrip_preserves_pixels_and_meta() {
        let cloud = gauss_cloud(100_000, 0.003, -0.002, 0.04, 3);
        let img = image_chunk(&cloud, &ImagingConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img_000.pgm");
        write_image(&img, &path).unwrap();
        let back = read_image(&path).unwrap();
        assert_eq!(back, img);
    }

    #[test]
    fn unit_vec_is_scaled_by_the_cap() {
        let img = image_chunk(&spiked_cloud(100_000, 4), &ImagingConfig::default()).unwrap();
        let v = image_to_unit_vec(&img);
        assert_eq!(v.len(), 4096);
        let max = v.iter().cloned().fold(0.0f64, f64::max);
        assert_eq!(max, 1.0, "a saturated pixel maps to exactly one");
        assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));

        let soft = image_chunk(&gauss_cloud(100_000, 0.0, 0.0, 0.05, 4), &ImagingConfig::default())
            .unwrap();
        let v = image_to_unit_vec(&soft);
        let max = v.iter().cloned().fold(0.0f64, f64::max);
        assert!(max < 1.0 && max > 0.2, "unsaturated peak {max}");
    }

    #[test]
    fn empty_input_is_the_only_imaging_error() {
        let none: Vec<Complex<f64>> = Vec::new();
        assert!(matches!(
            image_chunk(
                &none,
                &ImagingConfig {
                    chunk_symbols: 1,
                    ..ImagingConfig::default()
                }
            ),
            Err(Error::EmptyInput(_))
        ));
    }
}
