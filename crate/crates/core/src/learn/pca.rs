//! Principal component projection for visualizing feature separability,
//! plus a silhouette score to quantify cluster separation.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed::derive_rng;

const POWER_ITERS: usize = 300;
const RANK_TOL: f64 = 1e-12;

/// Top-k principal component decomposition of a sample matrix.
pub struct PcaProjection {
    /// Per-sample coordinates, `[n, k]`.
    pub coords: Array2<f64>,
    /// Unit feature-space directions, `[k, d]`.
    pub components: Array2<f64>,
    /// Column means removed before the analysis.
    pub mean: Array1<f64>,
    /// Fraction of total variance captured per component.
    pub explained: Vec<f64>,
}

impl PcaProjection {
    /// Projects rows back into feature space from their coordinates.
    pub fn reconstruct(&self) -> Array2<f64> {
        let mut out = self.coords.dot(&self.components);
        out += &self.mean;
        out
    }
}

/// Largest eigenpair of a symmetric PSD matrix by power iteration, with a
/// deterministic seeded start. The sign convention is fixed later from the
/// feature-space direction.
fn top_eigenpair(m: &Array2<f64>, tag: u64) -> (f64, Array1<f64>) {
    let n = m.nrows();
    let mut rng = derive_rng(0x504341, &[tag, n as u64]);
    let mut v: Array1<f64> = Array1::from_shape_fn(n, |_| rng.random_range(-1.0..1.0));
    let norm = v.dot(&v).sqrt();
    if norm > 0.0 {
        v /= norm;
    }
    for _ in 0..POWER_ITERS {
        let w = m.dot(&v);
        let norm = w.dot(&w).sqrt();
        if norm <= f64::MIN_POSITIVE {
            return (0.0, v);
        }
        let w = w / norm;
        let delta = (&w - &v).mapv(f64::abs).sum();
        v = w;
        if delta < 1e-13 {
            break;
        }
    }
    let lambda = v.dot(&m.dot(&v));
    (lambda, v)
}

/// Flips the pair so the largest-magnitude entry of the feature direction is
/// positive, making the output deterministic rather than sign-ambiguous.
fn canonicalize(direction: &mut Array1<f64>, coords: &mut Array1<f64>) {
    let mut best = 0usize;
    for (i, v) in direction.iter().enumerate() {
        if v.abs() > direction[best].abs() {
            best = i;
        }
    }
    if direction[best] < 0.0 {
        direction.mapv_inplace(|v| -v);
        coords.mapv_inplace(|v| -v);
    }
}

/// Projects samples onto their top `k` principal components.
///
/// Works on whichever Gram matrix is smaller (`X Xᵀ` or `Xᵀ X`), so both
/// many-samples and many-features inputs stay cheap. Components beyond the
/// numerical rank come back as zeros.
pub fn pca_project(x: &Array2<f64>, k: usize) -> Result<PcaProjection> {
    let (n, d) = x.dim();
    if n < 3 {
        return Err(Error::TooShort {
            what: "PCA sample set",
            need: 3,
            got: n,
        });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("need at least one component".into()));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(0));
    }
    let mean = x.mean_axis(Axis(0)).expect("n >= 3");
    let xc = x - &mean;
    let mut coords = Array2::zeros((n, k));
    let mut components = Array2::zeros((k, d));
    let mut explained = vec![0.0; k];

    let feature_side = d <= n;
    let mut gram = if feature_side {
        xc.t().dot(&xc)
    } else {
        xc.dot(&xc.t())
    };
    let total: f64 = gram.diag().sum();
    if total <= 0.0 {
        return Ok(PcaProjection {
            coords,
            components,
            mean,
            explained,
        });
    }

    for j in 0..k {
        let (lambda, u) = top_eigenpair(&gram, j as u64);
        if lambda / total <= RANK_TOL {
            break;
        }
        let (mut direction, mut scores) = if feature_side {
            (u.clone(), xc.dot(&u))
        } else {
            let dir = xc.t().dot(&u) / lambda.sqrt();
            (dir, u.mapv(|v| v * lambda.sqrt()))
        };
        canonicalize(&mut direction, &mut scores);
        components.row_mut(j).assign(&direction);
        coords.column_mut(j).assign(&scores);
        explained[j] = lambda / total;
        // Deflate so the next iteration finds the following eigenpair.
        let outer = Array2::from_shape_fn(gram.dim(), |(r, c)| lambda * u[r] * u[c]);
        gram -= &outer;
    }
    Ok(PcaProjection {
        coords,
        components,
        mean,
        explained,
    })
}

/// Mean silhouette score of a labeled embedding: near 1 for tight separated
/// clusters, near 0 for overlapping ones. Singleton clusters score 0.
pub fn silhouette(coords: &Array2<f64>, labels: &[usize]) -> Result<f64> {
    let n = coords.nrows();
    if n == 0 {
        return Err(Error::EmptyInput("silhouette embedding"));
    }
    if labels.len() != n {
        return Err(Error::InvalidConfig(format!(
            "{n} rows but {} labels",
            labels.len()
        )));
    }
    let n_clusters = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_clusters];
    for &l in labels {
        counts[l] += 1;
    }
    if counts.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::InvalidConfig(
            "silhouette needs at least two clusters".into(),
        ));
    }
    let mut total = 0.0;
    for i in 0..n {
        if counts[labels[i]] == 1 {
            continue;
        }
        let mut sums = vec![0.0; n_clusters];
        for j in 0..n {
            if i == j {
                continue;
            }
            let diff = &coords.row(i) - &coords.row(j);
            sums[labels[j]] += diff.dot(&diff).sqrt();
        }
        let own = labels[i];
        let a = sums[own] / (counts[own] - 1) as f64;
        let b = (0..n_clusters)
            .filter(|&c| c != own && counts[c] > 0)
            .map(|c| sums[c] / counts[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn planar_data_in_ten_dims_reconstructs_exactly() {
        // Two orthonormal directions spanning the even and odd coordinates.
        let u1: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.2f64.sqrt() } else { 0.0 }).collect();
        let u2: Vec<f64> = (0..10).map(|i| if i % 2 == 1 { 0.2f64.sqrt() } else { 0.0 }).collect();
        let mut rng = derive_rng(1, &[0x706c]);
        let n = 60;
        let mut x = Array2::zeros((n, 10));
        for r in 0..n {
            let a: f64 = rng.random_range(-3.0..3.0);
            let b: f64 = rng.random_range(-1.0..1.0);
            for c in 0..10 {
                x[[r, c]] = 0.5 + a * u1[c] + b * u2[c];
            }
        }
        let p = pca_project(&x, 2).unwrap();
        let recon = p.reconstruct();
        let err = (&recon - &x).mapv(|e| e * e).sum() / x.mapv(|e| e * e).sum();
        assert!(err < 1e-20, "relative reconstruction error {err}");
        assert!(p.explained[0] + p.explained[1] > 1.0 - 1e-12);
    }

    #[test]
    fn isotropic_noise_spreads_variance_evenly() {
        let mut rng = derive_rng(2, &[0x69736f]);
        let d = 20;
        let x = Array2::from_shape_fn((2000, d), |_| StandardNormal.sample(&mut rng));
        let p = pca_project(&x, 2).unwrap();
        let top2 = p.explained[0] + p.explained[1];
        assert!(
            (top2 - 2.0 / d as f64).abs() < 0.04,
            "top-2 explained fraction {top2}"
        );
        assert!(p.explained[0] < 0.08);
    }

    #[test]
    fn rank_one_data_zeroes_the_second_component() {
        let dir = [0.6, 0.0, 0.8, 0.0];
        let mut x = Array2::zeros((40, 4));
        for r in 0..40 {
            let t = r as f64 - 20.0;
            for c in 0..4 {
                x[[r, c]] = 1.0 + t * dir[c];
            }
        }
        let p = pca_project(&x, 2).unwrap();
        assert!(p.explained[0] > 1.0 - 1e-12);
        assert_eq!(p.explained[1], 0.0);
        assert!(p.coords.column(1).iter().all(|&v| v == 0.0));
        assert!(p.components.row(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_rows_project_to_the_origin() {
        let x = Array2::from_elem((5, 3), 2.5);
        let p = pca_project(&x, 2).unwrap();
        assert!(p.coords.iter().all(|&v| v == 0.0));
        assert_eq!(p.explained, vec![0.0, 0.0]);
    }

    #[test]
    fn projection_is_deterministic() {
        let mut rng = derive_rng(4, &[0x646574]);
        let x = Array2::from_shape_fn((30, 6), |_| rng.random_range(0.0..1.0));
        let a = pca_project(&x, 2).unwrap();
        let b = pca_project(&x, 2).unwrap();
        assert_eq!(a.coords, b.coords);
        assert_eq!(a.components, b.components);
    }

    #[test]
    fn two_far_blobs_score_a_high_silhouette() {
        let mut rng = derive_rng(5, &[0x626c]);
        let n = 40;
        let mut x = Array2::zeros((n, 5));
        let mut labels = Vec::with_capacity(n);
        for r in 0..n {
            let cluster = r % 2;
            for c in 0..5 {
                let noise: f64 = StandardNormal.sample(&mut rng);
                x[[r, c]] = 10.0 * cluster as f64 + 0.1 * noise;
            }
            labels.push(cluster);
        }
        let p = pca_project(&x, 2).unwrap();
        let s = silhouette(&p.coords, &labels).unwrap();
        assert!(s > 0.9, "silhouette {s}");
    }

    #[test]
    fn shuffled_labels_on_one_blob_score_near_zero() {
        let mut rng = derive_rng(6, &[0x7368]);
        let x = Array2::from_shape_fn((60, 4), |_| StandardNormal.sample(&mut rng));
        let labels: Vec<usize> = (0..60).map(|_| rng.random_range(0..2)).collect();
        let s = silhouette(&x, &labels).unwrap();
        assert!(s.abs() < 0.15, "silhouette {s}");
    }

    #[test]
    fn degenerate_inputs_are_rejected() {
        let x = Array2::from_elem((2, 3), 1.0);
        assert!(matches!(
            pca_project(&x, 2),
            Err(Error::TooShort { .. })
        ));
        let x = Array2::from_elem((5, 3), 1.0);
        assert!(silhouette(&x, &[0; 5]).is_err());
    }
}
