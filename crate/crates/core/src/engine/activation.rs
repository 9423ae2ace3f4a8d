use rand::Rng;

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

pub fn relu<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(|v| v.max(T::ZERO))
}

/// Gradient through ReLU given the forward *output*.
pub fn relu_backward<T: Scalar>(y: &Tensor<T>, grad_out: &Tensor<T>) -> Tensor<T> {
    let mut g = grad_out.clone();
    for (gv, &yv) in g.data_mut().iter_mut().zip(y.data()) {
        if yv <= T::ZERO {
            *gv = T::ZERO;
        }
    }
    g
}

pub fn sigmoid_scalar<T: Scalar>(z: T) -> T {
    if z >= T::ZERO {
        T::ONE / (T::ONE + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::ONE + e)
    }
}

pub fn sigmoid<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    x.map(sigmoid_scalar)
}

/// Gradient through the sigmoid given the forward *output*.
pub fn sigmoid_backward<T: Scalar>(y: &Tensor<T>, grad_out: &Tensor<T>) -> Tensor<T> {
    let mut g = grad_out.clone();
    for (gv, &yv) in g.data_mut().iter_mut().zip(y.data()) {
        *gv *= yv * (T::ONE - yv);
    }
    g
}

/// Inverted-dropout keep mask: each entry is `1/(1-rate)` with probability
/// `1 - rate`, else 0.
pub fn dropout_mask<T: Scalar, R: Rng + ?Sized>(n: usize, rate: f64, rng: &mut R) -> Result<Vec<T>> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidConfig(format!("dropout rate {rate} outside [0, 1)")));
    }
    let scale = T::from_f64(1.0 / (1.0 - rate));
    Ok((0..n)
        .map(|_| if rng.gen::<f64>() >= rate { scale } else { T::ZERO })
        .collect())
}

pub fn apply_mask<T: Scalar>(x: &Tensor<T>, mask: &[T]) -> Tensor<T> {
    let mut y = x.clone();
    for (v, &m) in y.data_mut().iter_mut().zip(mask) {
        *v *= m;
    }
    y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn sigmoid_midpoint_and_tails() {
        assert_eq!(sigmoid_scalar(0.0f64), 0.5);
        assert!(sigmoid_scalar(-800.0f64) >= 0.0);
        assert_eq!(sigmoid_scalar(800.0f64), 1.0);
    }

    #[test]
    fn dropout_preserves_expectation() {
        let mut rng = seed::rng(3, "dropout");
        let m: Vec<f64> = dropout_mask(200_000, 0.3, &mut rng).unwrap();
        let mean = m.iter().sum::<f64>() / m.len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
        assert!(dropout_mask::<f64, _>(3, 1.0, &mut rng).is_err());
    }
}
