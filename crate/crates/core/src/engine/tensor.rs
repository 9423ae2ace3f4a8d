use super::Scalar;
use crate::error::{Error, Result};

/// Dense row-major tensor. Image batches use (batch, height, width, channels).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    dims: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(dims: Vec<usize>, data: Vec<T>) -> Result<Self> {
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("zero extent in {dims:?}")));
        }
        let n: usize = dims.iter().product();
        if n != data.len() {
            return Err(Error::InvalidShape(format!(
                "dims {dims:?} need {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        Tensor {
            dims: dims.to_vec(),
            data: vec![T::ZERO; dims.iter().product()],
        }
    }

    pub fn filled(dims: &[usize], v: T) -> Self {
        Tensor {
            dims: dims.to_vec(),
            data: vec![v; dims.iter().product()],
        }
    }

    pub fn from_f64(dims: &[usize], data: &[f64]) -> Result<Self> {
        Self::new(dims.to_vec(), data.iter().map(|&v| T::from_f64(v)).collect())
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    /// Extent of the leading (batch) axis.
    pub fn batch(&self) -> usize {
        self.dims[0]
    }

    pub fn reshape(self, dims: &[usize]) -> Result<Self> {
        Self::new(dims.to_vec(), self.data)
    }

    /// (N, H, W, C) of a rank-4 tensor.
    pub fn nhwc(&self) -> Result<(usize, usize, usize, usize)> {
        match self.dims[..] {
            [n, h, w, c] => Ok((n, h, w, c)),
            _ => Err(Error::InvalidShape(format!(
                "expected (batch, height, width, channels), got {:?}",
                self.dims
            ))),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn fill(&mut self, v: T) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    /// Fails with a `NonFinite` error naming `what` if any entry is NaN/Inf.
    pub fn check_finite(&self, what: &str) -> Result<()> {
        match self.data.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::NonFinite(format!("{what} (flat index {i})"))),
        }
    }

    pub fn cast<U: Scalar>(&self) -> Tensor<U> {
        Tensor {
            dims: self.dims.clone(),
            data: self.data.iter().map(|&v| U::from_f64(v.to_f64())).collect(),
        }
    }

    /// Rows `start..end` along the batch axis.
    pub fn slice_batch(&self, start: usize, end: usize) -> Result<Self> {
        let per: usize = self.dims[1..].iter().product();
        if start >= end || end > self.dims[0] {
            return Err(Error::InvalidShape(format!(
                "batch slice {start}..{end} of {}",
                self.dims[0]
            )));
        }
        let mut dims = self.dims.clone();
        dims[0] = end - start;
        Self::new(dims, self.data[start * per..end * per].to_vec())
    }

    /// Stacks equally-shaped examples along a new leading batch axis.
    pub fn stack(items: &[&[T]], item_dims: &[usize]) -> Result<Self> {
        let per: usize = item_dims.iter().product();
        let mut data = Vec::with_capacity(per * items.len());
        for it in items {
            if it.len() != per {
                return Err(Error::InvalidShape(format!(
                    "stack item has {} values, expected {per}",
                    it.len()
                )));
            }
            data.extend_from_slice(it);
        }
        let mut dims = vec![items.len()];
        dims.extend_from_slice(item_dims);
        Self::new(dims, data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dims_must_match_count() {
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 5]).is_err());
        assert!(Tensor::<f32>::new(vec![2, 0], vec![]).is_err());
    }

    #[test]
    fn finite_check_reports_position() {
        let t = Tensor::<f64>::new(vec![3], vec![1.0, f64::NAN, 0.0]).unwrap();
        let e = t.check_finite("probe").unwrap_err().to_string();
        assert!(e.contains("probe") && e.contains("1"));
    }

    #[test]
    fn batch_slicing() {
        let t = Tensor::<f32>::new(vec![3, 2], vec![0., 1., 2., 3., 4., 5.]).unwrap();
        let s = t.slice_batch(1, 3).unwrap();
        assert_eq!(s.dims(), &[2, 2]);
        assert_eq!(s.data(), &[2., 3., 4., 5.]);
    }
}
