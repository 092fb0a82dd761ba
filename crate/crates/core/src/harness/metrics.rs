//! Multi-class F1 scores over a node mask.

use crate::error::{Error, Result};

/// `(tp, fp, fn)` per class over the nodes of `mask`.
fn class_counts(
    pred: &[usize],
    truth: &[Option<usize>],
    mask: &[usize],
    classes: usize,
) -> Result<Vec<(usize, usize, usize)>> {
    if mask.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut counts = vec![(0, 0, 0); classes];
    for &v in mask {
        let y = truth.get(v).copied().flatten().ok_or(Error::Unlabeled(v))?;
        let p = pred[v];
        if p >= classes || y >= classes {
            return Err(Error::LabelOutOfRange {
                node: v,
                label: p.max(y),
                classes,
            });
        }
        if p == y {
            counts[y].0 += 1;
        } else {
            counts[p].1 += 1;
            counts[y].2 += 1;
        }
    }
    Ok(counts)
}

/// Per-class F1 averaged with weights proportional to class support in `mask`.
/// A class with no true, predicted or missed nodes contributes 0.
pub fn weighted_f1(
    pred: &[usize],
    truth: &[Option<usize>],
    mask: &[usize],
    classes: usize,
) -> Result<f64> {
    let counts = class_counts(pred, truth, mask, classes)?;
    let total = mask.len() as f64;
    Ok(counts
        .iter()
        .map(|&(tp, fp, fn_)| {
            let support = (tp + fn_) as f64;
            let denom = 2 * tp + fp + fn_;
            if denom == 0 {
                0.0
            } else {
                support / total * (2 * tp) as f64 / denom as f64
            }
        })
        .sum())
}

/// F1 from global counts; equals accuracy for single-label prediction.
pub fn micro_f1(
    pred: &[usize],
    truth: &[Option<usize>],
    mask: &[usize],
    classes: usize,
) -> Result<f64> {
    let counts = class_counts(pred, truth, mask, classes)?;
    let tp: usize = counts.iter().map(|c| c.0).sum();
    Ok(tp as f64 / mask.len() as f64)
}
