//! Linear discriminant analysis for inspecting class separability.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Ridge added to the within-class scatter, relative to its mean diagonal.
pub const LDA_RIDGE: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct Lda {
    /// Unit-norm directions, most discriminative first.
    pub directions: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Each input row projected on every direction.
    pub projected: Vec<Vec<f64>>,
}

impl Lda {
    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.directions
            .iter()
            .map(|w| w.iter().zip(row).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Directions maximizing between- over within-class scatter. Returns at most
/// `min(classes - 1, d)` components.
pub fn lda_project(x: &[Vec<f64>], y: &[usize], n_components: usize) -> Result<Lda> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!("lda: {} rows, {} labels", x.len(), y.len())));
    }
    let Some(first) = x.first() else {
        return Err(Error::InsufficientData("lda: no rows".into()));
    };
    let d = first.len();
    if d == 0 || x.iter().any(|r| r.len() != d) {
        return Err(Error::ShapeMismatch("lda: ragged or empty rows".into()));
    }
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_classes];
    let mut sums = vec![DVector::<f64>::zeros(d); n_classes];
    for (r, &c) in x.iter().zip(y) {
        counts[c] += 1;
        sums[c] += DVector::from_row_slice(r);
    }
    let present: Vec<usize> = (0..n_classes).filter(|&c| counts[c] > 0).collect();
    if present.len() < 2 {
        return Err(Error::InsufficientData("lda: needs two classes".into()));
    }
    if present.iter().any(|&c| counts[c] < 2) {
        return Err(Error::InsufficientData("lda: needs two samples per class".into()));
    }
    let means: Vec<DVector<f64>> = sums.iter().zip(&counts).map(|(s, &n)| s / (n.max(1) as f64)).collect();
    let grand = sums.iter().fold(DVector::zeros(d), |a, s| a + s) / x.len() as f64;

    let mut sw = DMatrix::<f64>::zeros(d, d);
    for (r, &c) in x.iter().zip(y) {
        let v = DVector::from_row_slice(r) - &means[c];
        sw += &v * v.transpose();
    }
    let mut sb = DMatrix::<f64>::zeros(d, d);
    for &c in &present {
        let v = &means[c] - &grand;
        sb += (&v * v.transpose()) * counts[c] as f64;
    }
    let scale = sw.trace() / d as f64;
    let ridge = if scale > 0.0 { LDA_RIDGE * scale } else { LDA_RIDGE };
    for i in 0..d {
        sw[(i, i)] += ridge;
    }

    // S_W = L L^T turns S_W^-1 S_B into the symmetric L^-1 S_B L^-T.
    let chol = sw.cholesky().ok_or_else(|| Error::Singular("lda: within-class scatter".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("lda: cholesky factor".into()))?;
    let m = &l_inv * &sb * l_inv.transpose();
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let k = n_components.min(present.len() - 1).min(d);
    let l_inv_t = l_inv.transpose();
    let mut directions = Vec::with_capacity(k);
    let mut eigenvalues = Vec::with_capacity(k);
    for &j in order.iter().take(k) {
        let mut w = &l_inv_t * eig.eigenvectors.column(j);
        let norm = w.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Singular("lda: degenerate direction".into()));
        }
        w /= norm;
        if let Some(lead) = w.iter().find(|v| v.abs() > 1e-12) {
            if *lead < 0.0 {
                w = -w;
            }
        }
        directions.push(w.iter().copied().collect::<Vec<_>>());
        eigenvalues.push(eig.eigenvalues[j]);
    }
    let mut lda = Lda {
        directions,
        eigenvalues,
        projected: Vec::new(),
    };
    lda.projected = x.iter().map(|r| lda.project(r)).collect();
    Ok(lda)
}

/// Between-class over within-class variance of one-dimensional scores.
pub fn separability_ratio(scores: &[f64], y: &[usize]) -> f64 {
    let n_classes = y.iter().max().map_or(0, |m| m + 1);
    let mut sum = vec![0.0; n_classes];
    let mut cnt = vec![0usize; n_classes];
    for (&s, &c) in scores.iter().zip(y) {
        sum[c] += s;
        cnt[c] += 1;
    }
    let grand = scores.iter().sum::<f64>() / scores.len() as f64;
    let mean: Vec<f64> = sum.iter().zip(&cnt).map(|(s, &n)| if n > 0 { s / n as f64 } else { 0.0 }).collect();
    let between: f64 = (0..n_classes).map(|c| cnt[c] as f64 * (mean[c] - grand).powi(2)).sum();
    let within: f64 = scores.iter().zip(y).map(|(&s, &c)| (s - mean[c]).powi(2)).sum();
    if within > 0.0 {
        between / within
    } else {
        f64::INFINITY
    }
}
