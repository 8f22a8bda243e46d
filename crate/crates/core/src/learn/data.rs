//! Labeled feature matrices and split helpers.

use ndarray::Array2;
use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::seed::derive_rng;

/// Rows of features with one class label each.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub x: Array2<f64>,
    pub y: Vec<usize>,
    pub n_classes: usize,
}

impl Dataset {
    pub fn new(x: Array2<f64>, y: Vec<usize>, n_classes: usize) -> Result<Self> {
        if x.nrows() == 0 {
            return Err(Error::EmptyInput("dataset"));
        }
        if x.nrows() != y.len() {
            return Err(Error::InvalidConfig(format!(
                "{} rows but {} labels",
                x.nrows(),
                y.len()
            )));
        }
        if n_classes == 0 || y.iter().any(|&c| c >= n_classes) {
            return Err(Error::InvalidConfig("label outside class range".into()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(0));
        }
        Ok(Self { x, y, n_classes })
    }

    pub fn len(&self) -> usize {
        self.x.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_len(&self) -> usize {
        self.x.ncols()
    }

    /// Copies the given rows into a new matrix (gathers a batch).
    pub fn gather(&self, idx: &[usize]) -> (Array2<f64>, Vec<usize>) {
        let mut x = Array2::zeros((idx.len(), self.feature_len()));
        let mut y = Vec::with_capacity(idx.len());
        for (r, &i) in idx.iter().enumerate() {
            x.row_mut(r).assign(&self.x.row(i));
            y.push(self.y[i]);
        }
        (x, y)
    }
}

/// Splits per class so both halves keep the label mix, shuffling with a
/// seed-derived stream. `test_frac` of each class (rounded down, at least
/// one sample when the class has two or more) goes to the second dataset.
pub fn split_stratified(ds: &Dataset, test_frac: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(0.0 < test_frac && test_frac < 1.0) {
        return Err(Error::InvalidConfig("test_frac must be in (0, 1)".into()));
    }
    let mut rng = derive_rng(seed, &[0x5354]);
    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in 0..ds.n_classes {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.y[i] == class).collect();
        members.shuffle(&mut rng);
        let mut n_test = (members.len() as f64 * test_frac) as usize;
        if n_test == 0 && members.len() >= 2 {
            n_test = 1;
        }
        test_idx.extend_from_slice(&members[..n_test]);
        train_idx.extend_from_slice(&members[n_test..]);
    }
    if train_idx.is_empty() || test_idx.is_empty() {
        return Err(Error::InvalidConfig(
            "split produced an empty partition".into(),
        ));
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    let (xa, ya) = ds.gather(&train_idx);
    let (xb, yb) = ds.gather(&test_idx);
    Ok((
        Dataset::new(xa, ya, ds.n_classes)?,
        Dataset::new(xb, yb, ds.n_classes)?,
    ))
}
