//! Evaluation metrics: confusion matrices, per-class error rates, and ROC
//! analysis for the one-class detector.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Multiclass evaluation summary.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub n: usize,
    pub accuracy: f64,
    /// `confusion[[truth, predicted]]` counts.
    pub confusion: Array2<usize>,
    /// Per class: fraction of other-class samples predicted as this class.
    pub fpr: Vec<f64>,
    /// Per class: fraction of this class's samples predicted as another.
    pub fnr: Vec<f64>,
    /// Optional 2-D embedding of the evaluated samples, for plotting.
    pub projection: Option<Array2<f64>>,
}

pub fn evaluate(truth: &[usize], predicted: &[usize], n_classes: usize) -> Result<EvalReport> {
    if truth.is_empty() {
        return Err(Error::EmptyInput("evaluation set"));
    }
    if truth.len() != predicted.len() {
        return Err(Error::InvalidConfig(format!(
            "{} labels but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    if n_classes == 0 {
        return Err(Error::InvalidConfig("need at least one class".into()));
    }
    let mut confusion = Array2::zeros((n_classes, n_classes));
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= n_classes || p >= n_classes {
            return Err(Error::InvalidConfig(format!(
                "label {t}/{p} outside {n_classes} classes"
            )));
        }
        confusion[[t, p]] += 1;
    }
    let n = truth.len();
    let hits: usize = (0..n_classes).map(|c| confusion[[c, c]]).sum();
    let mut fpr = vec![0.0; n_classes];
    let mut fnr = vec![0.0; n_classes];
    for c in 0..n_classes {
        let class_total: usize = confusion.row(c).sum();
        let predicted_c: usize = confusion.column(c).sum();
        let fp = predicted_c - confusion[[c, c]];
        let negatives = n - class_total;
        fpr[c] = if negatives > 0 {
            fp as f64 / negatives as f64
        } else {
            0.0
        };
        fnr[c] = if class_total > 0 {
            (class_total - confusion[[c, c]]) as f64 / class_total as f64
        } else {
            0.0
        };
    }
    Ok(EvalReport {
        n,
        accuracy: hits as f64 / n as f64,
        confusion,
        fpr,
        fnr,
        projection: None,
    })
}

/// One operating point of a detector sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// Sweeps the decision threshold over the observed scores, flagging a sample
/// positive when `score >= threshold`. Higher scores must mean "more likely
/// positive". Returns points from (0,0) at an unattainable threshold down to
/// (1,1), with tied scores grouped.
pub fn roc_curve(scores: &[f64], positive: &[bool]) -> Result<Vec<RocPoint>> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("ROC scores"));
    }
    if scores.len() != positive.len() {
        return Err(Error::InvalidConfig(format!(
            "{} scores but {} labels",
            scores.len(),
            positive.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    let pos_total = positive.iter().filter(|p| **p).count();
    let neg_total = positive.len() - pos_total;
    if pos_total == 0 || neg_total == 0 {
        return Err(Error::InvalidConfig(
            "ROC needs both positive and negative samples".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if positive[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg_total as f64,
            tpr: tp as f64 / pos_total as f64,
        });
    }
    Ok(points)
}

/// Area under the curve by the trapezoid rule over FPR.
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[0].tpr + w[1].tpr) / 2.0)
        .sum()
}

/// The sweep point maximizing TPR - FPR; ties resolve to the strictest
/// threshold.
pub fn best_operating_point(points: &[RocPoint]) -> Option<RocPoint> {
    points
        .iter()
        .skip(1)
        .fold(None, |best: Option<RocPoint>, p| match best {
            Some(b) if b.tpr - b.fpr >= p.tpr - p.fpr => Some(b),
            _ => Some(*p),
        })
}

/// Error rates of the fixed rule `score >= threshold ⇒ positive`.
pub fn fpr_fnr_at(scores: &[f64], positive: &[bool], threshold: f64) -> Result<(f64, f64)> {
    if scores.is_empty() {
        return Err(Error::EmptyInput("scores"));
    }
    if scores.len() != positive.len() {
        return Err(Error::InvalidConfig(format!(
            "{} scores but {} labels",
            scores.len(),
            positive.len()
        )));
    }
    let mut fp = 0usize;
    let mut fun = 0usize;
    let mut pos = 0usize;
    for (&s, &is_pos) in scores.iter().zip(positive) {
        let flagged = s >= threshold;
        if is_pos {
            pos += 1;
            if !flagged {
                fun += 1;
            }
        } else if flagged {
            fp += 1;
        }
    }
    let neg = scores.len() - pos;
    let fpr = if neg > 0 { fp as f64 / neg as f64 } else { 0.0 };
    let fnr = if pos > 0 { fun as f64 / pos as f64 } else { 0.0 };
    Ok((fpr, fnr))
}
