use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Max-pool output plus the flat input index that won each window.
#[derive(Debug, Clone)]
pub struct PoolOutput<T> {
    pub output: Tensor<T>,
    pub argmax: Vec<usize>,
}

/// Unpadded max pooling with floor semantics. Ties go to the first element
/// in row-major scan order of the window.
pub fn maxpool2d_forward<T: Scalar>(x: &Tensor<T>, size: usize, stride: usize) -> Result<PoolOutput<T>> {
    let (n, h, w, c) = x.nhwc()?;
    if size == 0 || stride == 0 {
        return Err(Error::InvalidShape("pool size and stride must be >= 1".into()));
    }
    if h < size || w < size {
        return Err(Error::InvalidShape(format!(
            "{size}x{size} pool does not fit {h}x{w} input"
        )));
    }
    let (oh, ow) = ((h - size) / stride + 1, (w - size) / stride + 1);
    let xd = x.data();
    let mut out = Vec::with_capacity(n * oh * ow * c);
    let mut argmax = Vec::with_capacity(n * oh * ow * c);
    for b in 0..n {
        for oy in 0..oh {
            for ox in 0..ow {
                for ch in 0..c {
                    let mut best = usize::MAX;
                    for ky in 0..size {
                        for kx in 0..size {
                            let i = ((b * h + oy * stride + ky) * w + ox * stride + kx) * c + ch;
                            if best == usize::MAX || xd[i] > xd[best] {
                                best = i;
                            }
                        }
                    }
                    out.push(xd[best]);
                    argmax.push(best);
                }
            }
        }
    }
    Ok(PoolOutput {
        output: Tensor::new(vec![n, oh, ow, c], out)?,
        argmax,
    })
}

pub fn maxpool2d_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    argmax: &[usize],
    input_dims: &[usize],
) -> Result<Tensor<T>> {
    if grad_out.len() != argmax.len() {
        return Err(Error::InvalidShape(format!(
            "pool grad has {} entries, forward produced {}",
            grad_out.len(),
            argmax.len()
        )));
    }
    let mut dx = Tensor::zeros(input_dims);
    let d = dx.data_mut();
    for (&i, &g) in argmax.iter().zip(grad_out.data()) {
        d[i] += g;
    }
    Ok(dx)
}
