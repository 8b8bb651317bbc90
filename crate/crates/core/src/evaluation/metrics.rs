//! Accuracy, macro F-measure and confusion matrices.

use crate::error::{Error, Result};

fn check<T>(pred: &[T], truth: &[T]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!("{} predictions, {} labels", pred.len(), truth.len())));
    }
    if pred.is_empty() {
        return Err(Error::InsufficientData("no predictions".into()));
    }
    Ok(())
}

pub fn accuracy<T: PartialEq>(pred: &[T], truth: &[T]) -> Result<f64> {
    check(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// `m[t][p]` counts samples of true class `t` predicted as `p`. Labels not in
/// `classes` are an error.
pub fn confusion<T: PartialEq + std::fmt::Debug>(pred: &[T], truth: &[T], classes: &[T]) -> Result<Vec<Vec<u64>>> {
    check(pred, truth)?;
    let pos = |l: &T| {
        classes
            .iter()
            .position(|c| c == l)
            .ok_or_else(|| Error::InvalidConfig(format!("label {l:?} not in class list")))
    };
    let mut m = vec![vec![0u64; classes.len()]; classes.len()];
    for (p, t) in pred.iter().zip(truth) {
        m[pos(t)?][pos(p)?] += 1;
    }
    Ok(m)
}

pub fn accuracy_from_confusion(m: &[Vec<u64>]) -> f64 {
    let total: u64 = m.iter().flatten().sum();
    let diag: u64 = (0..m.len()).map(|i| m[i][i]).sum();
    diag as f64 / total as f64
}

/// Unweighted mean of per-class F1; a class with `P + R = 0` scores 0.
pub fn macro_f_from_confusion(m: &[Vec<u64>]) -> f64 {
    let c = m.len();
    if c == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 0..c {
        let tp = m[k][k] as f64;
        let predicted: u64 = (0..c).map(|t| m[t][k]).sum();
        let actual: u64 = m[k].iter().sum();
        let p = if predicted > 0 { tp / predicted as f64 } else { 0.0 };
        let r = if actual > 0 { tp / actual as f64 } else { 0.0 };
        if p + r > 0.0 {
            sum += 2.0 * p * r / (p + r);
        }
    }
    sum / c as f64
}

pub fn macro_f_measure<T: PartialEq + std::fmt::Debug>(pred: &[T], truth: &[T], classes: &[T]) -> Result<f64> {
    Ok(macro_f_from_confusion(&confusion(pred, truth, classes)?))
}
