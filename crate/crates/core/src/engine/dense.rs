use super::{Scalar, Tensor};
use crate::error::{Error, Result};

fn check<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>) -> Result<(usize, usize, usize)> {
    let [n, fin] = x.dims()[..] else {
        return Err(Error::InvalidShape(format!("dense input must be (batch, features), got {:?}", x.dims())));
    };
    let [win, fout] = w.dims()[..] else {
        return Err(Error::InvalidShape(format!("dense weight must be (in, out), got {:?}", w.dims())));
    };
    if win != fin {
        return Err(Error::InvalidShape(format!(
            "dense weight expects {win} inputs, got {fin}"
        )));
    }
    Ok((n, fin, fout))
}

/// `y = x·W + b` with `x: (batch, in)`, `W: (in, out)`.
pub fn dense_forward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>> {
    let (n, fin, fout) = check(x, w)?;
    if b.len() != fout {
        return Err(Error::InvalidShape(format!("dense bias has {} entries for {fout} outputs", b.len())));
    }
    let mut out = Vec::with_capacity(n * fout);
    for _ in 0..n {
        out.extend_from_slice(b.data());
    }
    T::gemm(n, fin, fout, T::ONE, x.data(), false, w.data(), false, T::ONE, &mut out);
    Tensor::new(vec![n, fout], out)
}

#[derive(Debug, Clone)]
pub struct DenseGrads<T> {
    pub grad_x: Tensor<T>,
    pub grad_w: Tensor<T>,
    pub grad_b: Tensor<T>,
}

pub fn dense_backward<T: Scalar>(x: &Tensor<T>, w: &Tensor<T>, grad_out: &Tensor<T>) -> Result<DenseGrads<T>> {
    let (n, fin, fout) = check(x, w)?;
    if grad_out.dims() != [n, fout] {
        return Err(Error::InvalidShape(format!(
            "dense grad_out {:?}, expected {:?}",
            grad_out.dims(),
            [n, fout]
        )));
    }
    let go = grad_out.data();
    let mut gx = vec![T::ZERO; n * fin];
    T::gemm(n, fout, fin, T::ONE, go, false, w.data(), true, T::ZERO, &mut gx);
    let mut gw = vec![T::ZERO; fin * fout];
    T::gemm(fin, n, fout, T::ONE, x.data(), true, go, false, T::ZERO, &mut gw);
    let mut gb = vec![T::ZERO; fout];
    for row in go.chunks_exact(fout) {
        for (a, &v) in gb.iter_mut().zip(row) {
            *a += v;
        }
    }
    Ok(DenseGrads {
        grad_x: Tensor::new(vec![n, fin], gx)?,
        grad_w: Tensor::new(vec![fin, fout], gw)?,
        grad_b: Tensor::new(vec![fout], gb)?,
    })
}
