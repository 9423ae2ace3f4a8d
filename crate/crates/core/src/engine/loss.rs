//! Losses evaluated from logits.

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Batch loss and its gradient with respect to the logits.
#[derive(Debug, Clone)]
pub struct LossOutput<T> {
    pub loss: f64,
    pub grad: Tensor<T>,
}

/// Multi-label cross-entropy after a sigmoid, averaged over the `m`
/// categories of each example and then over the batch:
///
/// `L = 1/N Σ_i 1/m Σ_j [−y log p − (1−y) log(1−p)]`, `p = σ(z)`.
///
/// Each term is computed as `max(z, 0) − z·y + log(1 + e^{−|z|})`, which
/// stays finite for saturated logits. The gradient is `(σ(z) − y)/(m·N)`.
pub fn multilabel_bce<T: Scalar>(logits: &Tensor<T>, targets: &Tensor<T>) -> Result<LossOutput<T>> {
    if logits.dims() != targets.dims() || logits.rank() != 2 {
        return Err(Error::InvalidShape(format!(
            "bce logits {:?} vs targets {:?}",
            logits.dims(),
            targets.dims()
        )));
    }
    let (n, m) = (logits.dims()[0], logits.dims()[1]);
    let scale = 1.0 / (n * m) as f64;
    let mut total = 0.0f64;
    let mut grad = Vec::with_capacity(logits.len());
    for (&z, &y) in logits.data().iter().zip(targets.data()) {
        let (z, y) = (z.to_f64(), y.to_f64());
        total += z.max(0.0) - z * y + (-z.abs()).exp().ln_1p();
        grad.push(T::from_f64((super::sigmoid_scalar(z) - y) * scale));
    }
    Ok(LossOutput {
        loss: total * scale,
        grad: Tensor::new(logits.dims().to_vec(), grad)?,
    })
}

/// Mean softmax cross-entropy for single-label targets (class indices).
pub fn softmax_cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<LossOutput<T>> {
    let [n, k] = logits.dims()[..] else {
        return Err(Error::InvalidShape(format!("softmax logits {:?}", logits.dims())));
    };
    if labels.len() != n {
        return Err(Error::InvalidShape(format!("{} labels for batch {n}", labels.len())));
    }
    let mut total = 0.0;
    let mut grad = Vec::with_capacity(n * k);
    for (row, &y) in logits.data().chunks_exact(k).zip(labels) {
        if y >= k {
            return Err(Error::InvalidInput(format!("label {y} out of range {k}")));
        }
        let mx = row.iter().map(|v| v.to_f64()).fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|v| (v.to_f64() - mx).exp()).sum();
        let lse = mx + sum.ln();
        total += lse - row[y].to_f64();
        for (j, v) in row.iter().enumerate() {
            let p = (v.to_f64() - lse).exp();
            let t = if j == y { 1.0 } else { 0.0 };
            grad.push(T::from_f64((p - t) / n as f64));
        }
    }
    Ok(LossOutput {
        loss: total / n as f64,
        grad: Tensor::new(vec![n, k], grad)?,
    })
}

/// `λ·Σw²` over the given weights, with gradient `2λw` accumulated into
/// `grads` (same order as `weights`).
pub fn l2_penalty<T: Scalar>(weights: &[&Tensor<T>], grads: &mut [&mut Tensor<T>], lambda: f64) -> f64 {
    assert!(lambda >= 0.0, "l2 lambda must be non-negative");
    if lambda == 0.0 {
        return 0.0;
    }
    let mut total = 0.0;
    let two_l = T::from_f64(2.0 * lambda);
    for (w, g) in weights.iter().zip(grads.iter_mut()) {
        for (wv, gv) in w.data().iter().zip(g.data_mut()) {
            total += wv.to_f64() * wv.to_f64();
            *gv += two_l * *wv;
        }
    }
    lambda * total
}
