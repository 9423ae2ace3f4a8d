//! Per-channel batch normalization over the last axis.

use serde::{Deserialize, Serialize};

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BatchNormConfig {
    pub epsilon: f64,
    /// Weight on the old running statistic.
    pub momentum: f64,
}

impl Default for BatchNormConfig {
    fn default() -> Self {
        BatchNormConfig {
            epsilon: 1e-3,
            momentum: 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Values kept from a forward pass for the backward pass.
#[derive(Debug, Clone)]
pub struct BatchNormCache<T> {
    pub xhat: Vec<T>,
    pub inv_std: Vec<T>,
    pub mode: Mode,
}

fn channels<T: Scalar>(x: &Tensor<T>, gamma: &Tensor<T>) -> Result<usize> {
    let c = *x.dims().last().unwrap();
    if gamma.len() != c {
        return Err(Error::InvalidShape(format!(
            "batchnorm has {} channels, input has {c}",
            gamma.len()
        )));
    }
    Ok(c)
}

/// Forward pass. In train mode, normalizes with batch statistics and folds
/// them into `running_mean`/`running_var`; in infer mode uses the running
/// statistics unchanged.
#[allow(clippy::too_many_arguments)]
pub fn batchnorm_forward<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running_mean: &mut Tensor<T>,
    running_var: &mut Tensor<T>,
    mode: Mode,
    cfg: BatchNormConfig,
) -> Result<(Tensor<T>, BatchNormCache<T>)> {
    let c = channels(x, gamma)?;
    let eps = T::from_f64(cfg.epsilon);
    let (mean, var) = match mode {
        Mode::Train => {
            if x.batch() < 2 {
                return Err(Error::InvalidInput(
                    "batchnorm in train mode needs a batch of at least 2".into(),
                ));
            }
            let count = (x.len() / c) as f64;
            let mut mean = vec![0.0f64; c];
            for row in x.data().chunks_exact(c) {
                for (m, &v) in mean.iter_mut().zip(row) {
                    *m += v.to_f64();
                }
            }
            mean.iter_mut().for_each(|m| *m /= count);
            let mut var = vec![0.0f64; c];
            for row in x.data().chunks_exact(c) {
                for ((s, &v), m) in var.iter_mut().zip(row).zip(&mean) {
                    let d = v.to_f64() - m;
                    *s += d * d;
                }
            }
            var.iter_mut().for_each(|s| *s /= count);
            let mom = cfg.momentum;
            for ch in 0..c {
                let rm = &mut running_mean.data_mut()[ch];
                *rm = T::from_f64(mom * rm.to_f64() + (1.0 - mom) * mean[ch]);
                let rv = &mut running_var.data_mut()[ch];
                *rv = T::from_f64(mom * rv.to_f64() + (1.0 - mom) * var[ch]);
            }
            (
                mean.into_iter().map(T::from_f64).collect::<Vec<_>>(),
                var.into_iter().map(T::from_f64).collect::<Vec<_>>(),
            )
        }
        Mode::Infer => (running_mean.data().to_vec(), running_var.data().to_vec()),
    };
    let inv_std: Vec<T> = var.iter().map(|&v| T::ONE / (v + eps).sqrt()).collect();
    let mut xhat = Vec::with_capacity(x.len());
    let mut y = Vec::with_capacity(x.len());
    for row in x.data().chunks_exact(c) {
        for ch in 0..c {
            let h = (row[ch] - mean[ch]) * inv_std[ch];
            xhat.push(h);
            y.push(gamma.data()[ch] * h + beta.data()[ch]);
        }
    }
    Ok((
        Tensor::new(x.dims().to_vec(), y)?,
        BatchNormCache {
            xhat,
            inv_std,
            mode,
        },
    ))
}

/// Inference-only forward that touches no state.
pub fn batchnorm_infer<T: Scalar>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    running_mean: &Tensor<T>,
    running_var: &Tensor<T>,
    cfg: BatchNormConfig,
) -> Result<Tensor<T>> {
    let c = channels(x, gamma)?;
    let eps = T::from_f64(cfg.epsilon);
    let scale: Vec<T> = (0..c)
        .map(|ch| gamma.data()[ch] / (running_var.data()[ch] + eps).sqrt())
        .collect();
    let mut y = Vec::with_capacity(x.len());
    for row in x.data().chunks_exact(c) {
        for ch in 0..c {
            y.push((row[ch] - running_mean.data()[ch]) * scale[ch] + beta.data()[ch]);
        }
    }
    Tensor::new(x.dims().to_vec(), y)
}

#[derive(Debug, Clone)]
pub struct BatchNormGrads<T> {
    pub grad_x: Tensor<T>,
    pub grad_gamma: Tensor<T>,
    pub grad_beta: Tensor<T>,
}

pub fn batchnorm_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    gamma: &Tensor<T>,
    cache: &BatchNormCache<T>,
) -> Result<BatchNormGrads<T>> {
    let c = channels(grad_out, gamma)?;
    if cache.xhat.len() != grad_out.len() {
        return Err(Error::InvalidShape("batchnorm cache does not match grad".into()));
    }
    let gd = grad_out.data();
    let mut dgamma = vec![T::ZERO; c];
    let mut dbeta = vec![T::ZERO; c];
    for (row, xr) in gd.chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
        for ch in 0..c {
            dbeta[ch] += row[ch];
            dgamma[ch] += row[ch] * xr[ch];
        }
    }
    let g = gamma.data();
    let dx: Vec<T> = match cache.mode {
        Mode::Infer => gd
            .chunks_exact(c)
            .flat_map(|row| (0..c).map(move |ch| row[ch] * g[ch] * cache.inv_std[ch]))
            .collect(),
        Mode::Train => {
            let m = T::from_f64((gd.len() / c) as f64);
            let mut out = Vec::with_capacity(gd.len());
            for (row, xr) in gd.chunks_exact(c).zip(cache.xhat.chunks_exact(c)) {
                for ch in 0..c {
                    // dx = g·inv_std/M · (M·dy − Σdy − x̂·Σ(dy·x̂))
                    let v = g[ch] * cache.inv_std[ch] / m
                        * (m * row[ch] - dbeta[ch] - xr[ch] * dgamma[ch]);
                    out.push(v);
                }
            }
            out
        }
    };
    Ok(BatchNormGrads {
        grad_x: Tensor::new(grad_out.dims().to_vec(), dx)?,
        grad_gamma: Tensor::new(vec![c], dgamma)?,
        grad_beta: Tensor::new(vec![c], dbeta)?,
    })
}
