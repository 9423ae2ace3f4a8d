//! 2-D cross-correlation over NHWC batches via im2col + GEMM.
//! Weights are laid out (kernel_h, kernel_w, in_channels, out_channels).

use std::borrow::Cow;

use serde::{Deserialize, Serialize};

use super::{Scalar, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    Same,
    Valid,
}

/// Output extent and leading pad along one spatial axis.
pub fn conv_out_dim(input: usize, kernel: usize, stride: usize, padding: Padding) -> (usize, usize) {
    match padding {
        Padding::Valid => {
            if input < kernel {
                (0, 0)
            } else {
                ((input - kernel) / stride + 1, 0)
            }
        }
        Padding::Same => {
            let out = input.div_ceil(stride);
            let total = ((out - 1) * stride + kernel).saturating_sub(input);
            (out, total / 2)
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Geometry {
    n: usize,
    h: usize,
    w: usize,
    cin: usize,
    kh: usize,
    kw: usize,
    cout: usize,
    stride: usize,
    oh: usize,
    ow: usize,
    pad_top: usize,
    pad_left: usize,
}

impl Geometry {
    fn new<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, stride: usize, padding: Padding) -> Result<Self> {
        let (n, h, wd, cin) = x.nhwc()?;
        let [kh, kw, wcin, cout] = w.dims()[..] else {
            return Err(Error::InvalidShape(format!(
                "conv weight must be (kh, kw, cin, cout), got {:?}",
                w.dims()
            )));
        };
        if wcin != cin {
            return Err(Error::InvalidShape(format!(
                "conv weight expects {wcin} input channels, input has {cin}"
            )));
        }
        if stride == 0 {
            return Err(Error::InvalidShape("conv stride must be >= 1".into()));
        }
        let (oh, pad_top) = conv_out_dim(h, kh, stride, padding);
        let (ow, pad_left) = conv_out_dim(wd, kw, stride, padding);
        if oh == 0 || ow == 0 {
            return Err(Error::InvalidShape(format!(
                "{kh}x{kw} kernel does not fit {h}x{wd} input"
            )));
        }
        Ok(Geometry {
            n,
            h,
            w: wd,
            cin,
            kh,
            kw,
            cout,
            stride,
            oh,
            ow,
            pad_top,
            pad_left,
        })
    }

    fn patch(&self) -> usize {
        self.kh * self.kw * self.cin
    }

    fn rows(&self) -> usize {
        self.n * self.oh * self.ow
    }

    /// im2col is the identity when every output position reads a
    /// contiguous unpadded slice in (ky, kx, c) order.
    fn col_is_input(&self) -> bool {
        let no_pad = self.pad_top == 0 && self.pad_left == 0;
        let pointwise = self.kh == 1 && self.kw == 1 && self.stride == 1;
        let full = self.oh == 1 && self.ow == 1 && self.kh == self.h && self.kw == self.w;
        no_pad && (pointwise || full)
    }

    /// Input coordinate for output `o` and kernel offset `k`, if in bounds.
    fn src(o: usize, k: usize, stride: usize, pad: usize, extent: usize) -> Option<usize> {
        let p = (o * stride + k).checked_sub(pad)?;
        (p < extent).then_some(p)
    }

    fn im2col<'a, T: Scalar>(&self, x: &'a [T]) -> Cow<'a, [T]> {
        if self.col_is_input() {
            return Cow::Borrowed(x);
        }
        let patch = self.patch();
        let mut col = vec![T::ZERO; self.rows() * patch];
        for b in 0..self.n {
            let img = &x[b * self.h * self.w * self.cin..];
            for oy in 0..self.oh {
                for ox in 0..self.ow {
                    let row = ((b * self.oh + oy) * self.ow + ox) * patch;
                    for ky in 0..self.kh {
                        let Some(iy) = Self::src(oy, ky, self.stride, self.pad_top, self.h) else {
                            continue;
                        };
                        for kx in 0..self.kw {
                            let Some(ix) = Self::src(ox, kx, self.stride, self.pad_left, self.w)
                            else {
                                continue;
                            };
                            let s = (iy * self.w + ix) * self.cin;
                            let d = row + (ky * self.kw + kx) * self.cin;
                            col[d..d + self.cin].copy_from_slice(&img[s..s + self.cin]);
                        }
                    }
                }
            }
        }
        Cow::Owned(col)
    }

    fn col2im<T: Scalar>(&self, col: &[T], dx: &mut [T]) {
        let patch = self.patch();
        for b in 0..self.n {
            let img = &mut dx[b * self.h * self.w * self.cin..];
            for oy in 0..self.oh {
                for ox in 0..self.ow {
                    let row = ((b * self.oh + oy) * self.ow + ox) * patch;
                    for ky in 0..self.kh {
                        let Some(iy) = Self::src(oy, ky, self.stride, self.pad_top, self.h) else {
                            continue;
                        };
                        for kx in 0..self.kw {
                            let Some(ix) = Self::src(ox, kx, self.stride, self.pad_left, self.w)
                            else {
                                continue;
                            };
                            let s = (iy * self.w + ix) * self.cin;
                            let d = row + (ky * self.kw + kx) * self.cin;
                            for c in 0..self.cin {
                                img[s + c] += col[d + c];
                            }
                        }
                    }
                }
            }
        }
    }
}

pub fn conv2d_forward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    b: &Tensor<T>,
    stride: usize,
    padding: Padding,
) -> Result<Tensor<T>> {
    let g = Geometry::new(x, w, stride, padding)?;
    if b.len() != g.cout {
        return Err(Error::InvalidShape(format!(
            "conv bias has {} entries for {} output channels",
            b.len(),
            g.cout
        )));
    }
    let col = g.im2col(x.data());
    let rows = g.rows();
    let mut out = Vec::with_capacity(rows * g.cout);
    for _ in 0..rows {
        out.extend_from_slice(b.data());
    }
    T::gemm(rows, g.patch(), g.cout, T::ONE, &col, false, w.data(), false, T::ONE, &mut out);
    Tensor::new(vec![g.n, g.oh, g.ow, g.cout], out)
}

#[derive(Debug, Clone)]
pub struct ConvGrads<T> {
    pub grad_x: Tensor<T>,
    pub grad_w: Tensor<T>,
    pub grad_b: Tensor<T>,
}

pub fn conv2d_backward<T: Scalar>(
    x: &Tensor<T>,
    w: &Tensor<T>,
    grad_out: &Tensor<T>,
    stride: usize,
    padding: Padding,
) -> Result<ConvGrads<T>> {
    let g = Geometry::new(x, w, stride, padding)?;
    if grad_out.dims() != [g.n, g.oh, g.ow, g.cout] {
        return Err(Error::InvalidShape(format!(
            "conv grad_out {:?} does not match forward output {:?}",
            grad_out.dims(),
            [g.n, g.oh, g.ow, g.cout]
        )));
    }
    let rows = g.rows();
    let patch = g.patch();
    let go = grad_out.data();

    let mut grad_b = vec![T::ZERO; g.cout];
    for r in go.chunks_exact(g.cout) {
        for (acc, &v) in grad_b.iter_mut().zip(r) {
            *acc += v;
        }
    }

    let col = g.im2col(x.data());
    let mut grad_w = vec![T::ZERO; patch * g.cout];
    T::gemm(patch, rows, g.cout, T::ONE, &col, true, go, false, T::ZERO, &mut grad_w);
    drop(col);

    let mut grad_col = vec![T::ZERO; rows * patch];
    T::gemm(rows, g.cout, patch, T::ONE, go, false, w.data(), true, T::ZERO, &mut grad_col);
    let grad_x = if g.col_is_input() {
        grad_col
    } else {
        let mut dx = vec![T::ZERO; x.len()];
        g.col2im(&grad_col, &mut dx);
        dx
    };

    Ok(ConvGrads {
        grad_x: Tensor::new(x.dims().to_vec(), grad_x)?,
        grad_w: Tensor::new(w.dims().to_vec(), grad_w)?,
        grad_b: Tensor::new(vec![g.cout], grad_b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn center_one_kernel_is_identity() {
        let x = Tensor::<f64>::from_f64(&[1, 4, 5, 1], &(0..20).map(|i| i as f64).collect::<Vec<_>>())
            .unwrap();
        let mut k = vec![0.0; 9];
        k[4] = 1.0;
        let w = Tensor::from_f64(&[3, 3, 1, 1], &k).unwrap();
        let b = Tensor::zeros(&[1]);
        let y = conv2d_forward(&x, &w, &b, 1, Padding::Same).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn ones_valid_sums_to_nine() {
        let x = Tensor::<f64>::filled(&[1, 4, 4, 1], 1.0);
        let w = Tensor::filled(&[3, 3, 1, 1], 1.0);
        let y = conv2d_forward(&x, &w, &Tensor::zeros(&[1]), 1, Padding::Valid).unwrap();
        assert_eq!(y.dims(), &[1, 2, 2, 1]);
        assert!(y.data().iter().all(|&v| v == 9.0));
    }

    #[test]
    fn full_extent_valid_conv_collapses_to_one_position() {
        let x = Tensor::<f32>::filled(&[1, 6, 4, 8], 0.5);
        let w = Tensor::filled(&[6, 4, 8, 16], 0.1);
        let y = conv2d_forward(&x, &w, &Tensor::zeros(&[16]), 1, Padding::Valid).unwrap();
        assert_eq!(y.dims(), &[1, 1, 1, 16]);
    }

    #[test]
    fn same_padding_keeps_dims_and_valid_shrinks() {
        assert_eq!(conv_out_dim(100, 3, 1, Padding::Same), (100, 1));
        assert_eq!(conv_out_dim(7, 3, 2, Padding::Valid), (3, 0));
        assert_eq!(conv_out_dim(2, 3, 1, Padding::Valid), (0, 0));
    }

    #[test]
    fn channel_mismatch_is_shape_error() {
        let x = Tensor::<f32>::zeros(&[1, 4, 4, 2]);
        let w = Tensor::zeros(&[3, 3, 3, 1]);
        assert!(matches!(
            conv2d_forward(&x, &w, &Tensor::zeros(&[1]), 1, Padding::Same),
            Err(Error::InvalidShape(_))
        ));
    }

    #[test]
    fn zero_grad_out_gives_zero_grads() {
        let x = Tensor::<f64>::filled(&[2, 5, 5, 2], 0.3);
        let w = Tensor::filled(&[3, 3, 2, 3], -0.2);
        let go = Tensor::zeros(&[2, 5, 5, 3]);
        let g = conv2d_backward(&x, &w, &go, 1, Padding::Same).unwrap();
        assert!(g.grad_x.data().iter().all(|&v| v == 0.0));
        assert!(g.grad_w.data().iter().all(|&v| v == 0.0));
        assert!(g.grad_b.data().iter().all(|&v| v == 0.0));
    }
}
