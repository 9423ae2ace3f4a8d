//! Adam with bias correction and an exponential per-epoch learning-rate
//! schedule.

use serde::{Deserialize, Serialize};

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// `lr(epoch) = initial · decay^epoch`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay: f64,
}

impl LrSchedule {
    pub fn at_epoch(&self, epoch: usize) -> f64 {
        self.initial * self.decay.powi(epoch as i32)
    }
}

/// First and second moments per parameter, in parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub config: AdamConfig,
    pub t: u64,
    pub m: Vec<Tensor<T>>,
    pub v: Vec<Tensor<T>>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new<'a>(params: impl IntoIterator<Item = &'a Tensor<T>>, config: AdamConfig) -> Self {
        let (m, v) = params
            .into_iter()
            .map(|p| (Tensor::zeros(p.dims()), Tensor::zeros(p.dims())))
            .unzip();
        AdamState { config, t: 0, m, v }
    }

    /// One bias-corrected update of every parameter.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>], grads: &[&Tensor<T>], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::InvalidShape(format!(
                "adam tracks {} tensors, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let AdamConfig { beta1, beta2, epsilon } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let (b1, b2) = (T::from_f64(beta1), T::from_f64(beta2));
        let (ob1, ob2) = (T::from_f64(1.0 - beta1), T::from_f64(1.0 - beta2));
        let (ic1, ic2) = (T::from_f64(1.0 / c1), T::from_f64(1.0 / c2));
        let (lr, eps) = (T::from_f64(lr), T::from_f64(epsilon));
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            if p.dims() != g.dims() || p.dims() != self.m[i].dims() {
                return Err(Error::InvalidShape(format!(
                    "adam slot {i}: param {:?}, grad {:?}, state {:?}",
                    p.dims(),
                    g.dims(),
                    self.m[i].dims()
                )));
            }
            let m = self.m[i].data_mut();
            let v = self.v[i].data_mut();
            for (((w, &gv), mv), vv) in p.data_mut().iter_mut().zip(g.data()).zip(m).zip(v) {
                *mv = b1 * *mv + ob1 * gv;
                *vv = b2 * *vv + ob2 * gv * gv;
                let mh = *mv * ic1;
                let vh = *vv * ic2;
                *w -= lr * mh / (vh.sqrt() + eps);
            }
        }
        Ok(())
    }
}
