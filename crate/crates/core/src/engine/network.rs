//! A sequential network realized from a list of [`LayerSpec`]s.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use super::activation::{apply_mask, dropout_mask, relu, relu_backward, sigmoid, sigmoid_backward};
use super::batchnorm::{
    batchnorm_backward, batchnorm_forward, batchnorm_infer, BatchNormCache, BatchNormConfig, Mode,
};
use super::conv::{conv2d_backward, conv2d_forward};
use super::dense::{dense_backward, dense_forward};
use super::pool::{maxpool2d_backward, maxpool2d_forward};
use super::{LayerSpec, Scalar, Tensor};
use crate::error::{Error, Result};

/// A trainable array with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param<T> {
    pub name: String,
    pub value: Tensor<T>,
    pub grad: Tensor<T>,
    /// Whether L2 weight decay applies (conv/dense weights only).
    pub decay: bool,
}

impl<T: Scalar> Param<T> {
    fn new(name: String, value: Tensor<T>, decay: bool) -> Self {
        let grad = Tensor::zeros(value.dims());
        Param {
            name,
            value,
            grad,
            decay,
        }
    }
}

#[derive(Debug, Clone)]
enum LayerState<T> {
    Conv { w: Param<T>, b: Param<T> },
    Dense { w: Param<T>, b: Param<T> },
    BatchNorm {
        gamma: Param<T>,
        beta: Param<T>,
        mean: Tensor<T>,
        var: Tensor<T>,
    },
    Stateless,
}

#[derive(Debug, Clone)]
enum Cache<T> {
    Input(Tensor<T>),
    Output(Tensor<T>),
    Pool { argmax: Vec<usize>, in_dims: Vec<usize> },
    BatchNorm(BatchNormCache<T>),
    Mask(Vec<T>),
    Dims(Vec<usize>),
    None,
}

/// Per-layer values recorded by [`Network::forward_train`].
#[derive(Debug, Clone)]
pub struct Trace<T> {
    caches: Vec<Cache<T>>,
}

/// Forward-mode counters, for asserting which mode a code path used.
#[derive(Debug, Default)]
pub struct ModeCounters {
    pub train: AtomicU64,
    pub infer: AtomicU64,
}

#[derive(Debug)]
pub struct Network<T> {
    layers: Vec<LayerSpec>,
    input_shape: Vec<usize>,
    shapes: Vec<Vec<usize>>,
    state: Vec<LayerState<T>>,
    bn: BatchNormConfig,
    counters: ModeCounters,
}

impl<T: Scalar> Clone for Network<T> {
    fn clone(&self) -> Self {
        Network {
            layers: self.layers.clone(),
            input_shape: self.input_shape.clone(),
            shapes: self.shapes.clone(),
            state: self.state.clone(),
            bn: self.bn,
            counters: ModeCounters::default(),
        }
    }
}

/// Per-example output shape after every layer.
pub fn infer_layer_shapes(layers: &[LayerSpec], input: &[usize]) -> Result<Vec<Vec<usize>>> {
    let mut cur = input.to_vec();
    let mut out = Vec::with_capacity(layers.len());
    for (i, l) in layers.iter().enumerate() {
        cur = l.output_shape(&cur).map_err(|msg| Error::Spec {
            layer: i,
            name: l.to_string(),
            msg,
        })?;
        out.push(cur.clone());
    }
    Ok(out)
}

fn he_uniform<T: Scalar, R: Rng + ?Sized>(dims: &[usize], fan_in: usize, rng: &mut R) -> Tensor<T> {
    let limit = (6.0 / fan_in as f64).sqrt();
    let n = dims.iter().product();
    let data = (0..n).map(|_| T::from_f64(rng.gen_range(-limit..limit))).collect();
    Tensor::new(dims.to_vec(), data).expect("dims match count")
}

impl<T: Scalar> Network<T> {
    /// Realizes `layers` with He-uniform conv/dense weights, zero biases and
    /// identity batchnorm (gamma 1, beta 0, running mean 0, variance 1).
    pub fn build<R: Rng + ?Sized>(
        layers: &[LayerSpec],
        input_shape: &[usize],
        bn: BatchNormConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let shapes = infer_layer_shapes(layers, input_shape)?;
        let mut state = Vec::with_capacity(layers.len());
        let mut prev = input_shape.to_vec();
        for (i, l) in layers.iter().enumerate() {
            let tag = format!("{i:02}_{}", l.kind());
            let s = match *l {
                LayerSpec::Conv2d {
                    kernel_h,
                    kernel_w,
                    out_channels,
                    ..
                } => {
                    let cin = prev[2];
                    let fan_in = kernel_h * kernel_w * cin;
                    let dims = [kernel_h, kernel_w, cin, out_channels];
                    LayerState::Conv {
                        w: Param::new(format!("{tag}.weight"), he_uniform(&dims, fan_in, rng), true),
                        b: Param::new(format!("{tag}.bias"), Tensor::zeros(&[out_channels]), false),
                    }
                }
                LayerSpec::Dense { units } => {
                    let fan_in: usize = prev.iter().product();
                    LayerState::Dense {
                        w: Param::new(
                            format!("{tag}.weight"),
                            he_uniform(&[fan_in, units], fan_in, rng),
                            true,
                        ),
                        b: Param::new(format!("{tag}.bias"), Tensor::zeros(&[units]), false),
                    }
                }
                LayerSpec::BatchNorm => {
                    let c = *prev.last().unwrap();
                    LayerState::BatchNorm {
                        gamma: Param::new(format!("{tag}.gamma"), Tensor::filled(&[c], T::ONE), false),
                        beta: Param::new(format!("{tag}.beta"), Tensor::zeros(&[c]), false),
                        mean: Tensor::zeros(&[c]),
                        var: Tensor::filled(&[c], T::ONE),
                    }
                }
                _ => LayerState::Stateless,
            };
            state.push(s);
            prev = shapes[i].clone();
        }
        Ok(Network {
            layers: layers.to_vec(),
            input_shape: input_shape.to_vec(),
            shapes,
            state,
            bn,
            counters: ModeCounters::default(),
        })
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    /// Per-example output shape of every layer.
    pub fn shapes(&self) -> &[Vec<usize>] {
        &self.shapes
    }

    pub fn counters(&self) -> &ModeCounters {
        &self.counters
    }

    /// Index one past the last layer producing logits (excludes a trailing sigmoid).
    pub fn logits_end(&self) -> usize {
        match self.layers.last() {
            Some(LayerSpec::Sigmoid) => self.layers.len() - 1,
            _ => self.layers.len(),
        }
    }

    pub fn params(&self) -> impl Iterator<Item = &Param<T>> {
        self.state.iter().flat_map(|s| match s {
            LayerState::Conv { w, b } | LayerState::Dense { w, b } => vec![w, b],
            LayerState::BatchNorm { gamma, beta, .. } => vec![gamma, beta],
            LayerState::Stateless => vec![],
        })
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut Param<T>> {
        self.state.iter_mut().flat_map(|s| match s {
            LayerState::Conv { w, b } | LayerState::Dense { w, b } => vec![w, b],
            LayerState::BatchNorm { gamma, beta, .. } => vec![gamma, beta],
            LayerState::Stateless => vec![],
        })
    }

    /// Non-trainable state (batchnorm running statistics).
    pub fn buffers(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (i, s) in self.state.iter().enumerate() {
            if let LayerState::BatchNorm { mean, var, .. } = s {
                let tag = format!("{i:02}_batchnorm");
                out.push((format!("{tag}.running_mean"), mean));
                out.push((format!("{tag}.running_var"), var));
            }
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.params().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.grad.fill(T::ZERO);
        }
    }

    /// Every parameter and buffer by name.
    pub fn named_tensors(&self) -> BTreeMap<String, Tensor<T>> {
        let mut m: BTreeMap<String, Tensor<T>> =
            self.params().map(|p| (p.name.clone(), p.value.clone())).collect();
        for (n, t) in self.buffers() {
            m.insert(n, t.clone());
        }
        m
    }

    /// Overwrites parameters and buffers; every name must be present with
    /// the expected shape.
    pub fn load_named(&mut self, tensors: &BTreeMap<String, Tensor<T>>) -> Result<()> {
        let fetch = |name: &str, dims: &[usize]| -> Result<Tensor<T>> {
            let t = tensors
                .get(name)
                .ok_or_else(|| Error::CheckpointMismatch(format!("missing tensor {name}")))?;
            if t.dims() != dims {
                return Err(Error::CheckpointMismatch(format!(
                    "{name}: checkpoint {:?}, network {:?}",
                    t.dims(),
                    dims
                )));
            }
            Ok(t.clone())
        };
        for (i, s) in self.state.iter_mut().enumerate() {
            match s {
                LayerState::Conv { w, b } | LayerState::Dense { w, b } => {
                    w.value = fetch(&w.name, w.value.dims())?;
                    b.value = fetch(&b.name, b.value.dims())?;
                }
                LayerState::BatchNorm {
                    gamma,
                    beta,
                    mean,
                    var,
                } => {
                    gamma.value = fetch(&gamma.name, gamma.value.dims())?;
                    beta.value = fetch(&beta.name, beta.value.dims())?;
                    let tag = format!("{i:02}_batchnorm");
                    *mean = fetch(&format!("{tag}.running_mean"), mean.dims())?;
                    *var = fetch(&format!("{tag}.running_var"), var.dims())?;
                    if var.data().iter().any(|&v| v <= T::ZERO) {
                        return Err(Error::CheckpointMismatch(format!(
                            "{tag}.running_var has non-positive entries"
                        )));
                    }
                }
                LayerState::Stateless => {}
            }
        }
        let known = self.params().count() + self.buffers().len();
        if tensors.len() != known {
            return Err(Error::CheckpointMismatch(format!(
                "checkpoint has {} tensors, network has {known}",
                tensors.len()
            )));
        }
        Ok(())
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        if x.dims().len() != self.input_shape.len() + 1 || x.dims()[1..] != self.input_shape[..] {
            return Err(Error::InvalidShape(format!(
                "network expects (batch, {:?}), got {:?}",
                self.input_shape,
                x.dims()
            )));
        }
        Ok(())
    }

    fn as_flat(x: Tensor<T>) -> Result<Tensor<T>> {
        if x.rank() == 2 {
            return Ok(x);
        }
        let n = x.batch();
        let per = x.len() / n;
        x.reshape(&[n, per])
    }

    /// Inference-mode forward through layers `0..end`. Uses running
    /// batchnorm statistics and disables dropout; mutates nothing.
    pub fn infer_until(&self, x: &Tensor<T>, end: usize) -> Result<Tensor<T>> {
        self.check_input(x)?;
        self.counters.infer.fetch_add(1, Ordering::Relaxed);
        let mut cur = x.clone();
        for (l, s) in self.layers[..end].iter().zip(&self.state) {
            cur = match (l, s) {
                (LayerSpec::Conv2d { stride, padding, .. }, LayerState::Conv { w, b }) => {
                    conv2d_forward(&cur, &w.value, &b.value, *stride, *padding)?
                }
                (LayerSpec::Dense { .. }, LayerState::Dense { w, b }) => {
                    dense_forward(&Self::as_flat(cur)?, &w.value, &b.value)?
                }
                (
                    LayerSpec::BatchNorm,
                    LayerState::BatchNorm {
                        gamma,
                        beta,
                        mean,
                        var,
                    },
                ) => batchnorm_infer(&cur, &gamma.value, &beta.value, mean, var, self.bn)?,
                (LayerSpec::MaxPool2d { size, stride }, _) => maxpool2d_forward(&cur, *size, *stride)?.output,
                (LayerSpec::Relu, _) => relu(&cur),
                (LayerSpec::Sigmoid, _) => sigmoid(&cur),
                (LayerSpec::Dropout { .. }, _) => cur,
                (LayerSpec::Flatten, _) => Self::as_flat(cur)?,
                _ => unreachable!("layer state built from the same spec"),
            };
        }
        Ok(cur)
    }

    pub fn infer(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.infer_until(x, self.layers.len())
    }

    /// Train-mode forward through layers `0..end`, updating batchnorm
    /// running statistics and sampling dropout masks from `rng`. Any
    /// non-finite activation fails with an error naming the layer.
    pub fn forward_train<R: Rng + ?Sized>(
        &mut self,
        x: &Tensor<T>,
        end: usize,
        rng: &mut R,
    ) -> Result<(Tensor<T>, Trace<T>)> {
        self.check_input(x)?;
        self.counters.train.fetch_add(1, Ordering::Relaxed);
        let mut cur = x.clone();
        let mut caches = Vec::with_capacity(end);
        for (i, (l, s)) in self.layers[..end].iter().zip(self.state.iter_mut()).enumerate() {
            let (next, cache) = match (l, s) {
                (LayerSpec::Conv2d { stride, padding, .. }, LayerState::Conv { w, b }) => {
                    let y = conv2d_forward(&cur, &w.value, &b.value, *stride, *padding)?;
                    (y, Cache::Input(cur))
                }
                (LayerSpec::Dense { .. }, LayerState::Dense { w, b }) => {
                    let in_dims = cur.dims().to_vec();
                    let flat = Self::as_flat(cur)?;
                    let y = dense_forward(&flat, &w.value, &b.value)?;
                    caches.push(Cache::Dims(in_dims));
                    (y, Cache::Input(flat))
                }
                (
                    LayerSpec::BatchNorm,
                    LayerState::BatchNorm {
                        gamma,
                        beta,
                        mean,
                        var,
                    },
                ) => {
                    let (y, c) =
                        batchnorm_forward(&cur, &gamma.value, &beta.value, mean, var, Mode::Train, self.bn)?;
                    (y, Cache::BatchNorm(c))
                }
                (LayerSpec::MaxPool2d { size, stride }, _) => {
                    let p = maxpool2d_forward(&cur, *size, *stride)?;
                    (
                        p.output,
                        Cache::Pool {
                            argmax: p.argmax,
                            in_dims: cur.dims().to_vec(),
                        },
                    )
                }
                (LayerSpec::Relu, _) => {
                    let y = relu(&cur);
                    (y.clone(), Cache::Output(y))
                }
                (LayerSpec::Sigmoid, _) => {
                    let y = sigmoid(&cur);
                    (y.clone(), Cache::Output(y))
                }
                (LayerSpec::Dropout { rate }, _) => {
                    let mask = dropout_mask(cur.len(), *rate, rng)?;
                    (apply_mask(&cur, &mask), Cache::Mask(mask))
                }
                (LayerSpec::Flatten, _) => {
                    let d = cur.dims().to_vec();
                    (Self::as_flat(cur)?, Cache::Dims(d))
                }
                _ => unreachable!("layer state built from the same spec"),
            };
            next.check_finite(&format!("layer {i} ({l})"))?;
            if !matches!(l, LayerSpec::Dense { .. }) {
                caches.push(Cache::None);
            }
            caches.push(cache);
            cur = next;
        }
        Ok((cur, Trace { caches }))
    }

    /// Backpropagates `grad_out` through the layers recorded in `trace`,
    /// accumulating parameter gradients. Returns the input gradient.
    pub fn backward(&mut self, trace: Trace<T>, grad_out: Tensor<T>) -> Result<Tensor<T>> {
        let n_layers = trace.caches.len() / 2;
        let mut caches = trace.caches;
        let mut g = grad_out;
        for i in (0..n_layers).rev() {
            let cache = caches.pop().expect("two cache slots per layer");
            let aux = caches.pop().expect("two cache slots per layer");
            let l = &self.layers[i];
            g = match (l, &mut self.state[i], cache) {
                (LayerSpec::Conv2d { stride, padding, .. }, LayerState::Conv { w, b }, Cache::Input(x)) => {
                    let cg = conv2d_backward(&x, &w.value, &g, *stride, *padding)?;
                    add_into(&mut w.grad, &cg.grad_w);
                    add_into(&mut b.grad, &cg.grad_b);
                    cg.grad_x
                }
                (LayerSpec::Dense { .. }, LayerState::Dense { w, b }, Cache::Input(x)) => {
                    let dg = dense_backward(&x, &w.value, &g)?;
                    add_into(&mut w.grad, &dg.grad_w);
                    add_into(&mut b.grad, &dg.grad_b);
                    let Cache::Dims(in_dims) = aux else {
                        unreachable!("dense records its input dims")
                    };
                    dg.grad_x.reshape(&in_dims)?
                }
                (LayerSpec::BatchNorm, LayerState::BatchNorm { gamma, beta, .. }, Cache::BatchNorm(c)) => {
                    let bg = batchnorm_backward(&g, &gamma.value, &c)?;
                    add_into(&mut gamma.grad, &bg.grad_gamma);
                    add_into(&mut beta.grad, &bg.grad_beta);
                    bg.grad_x
                }
                (LayerSpec::MaxPool2d { .. }, _, Cache::Pool { argmax, in_dims }) => {
                    maxpool2d_backward(&g, &argmax, &in_dims)?
                }
                (LayerSpec::Relu, _, Cache::Output(y)) => relu_backward(&y, &g),
                (LayerSpec::Sigmoid, _, Cache::Output(y)) => sigmoid_backward(&y, &g),
                (LayerSpec::Dropout { .. }, _, Cache::Mask(m)) => apply_mask(&g, &m),
                (LayerSpec::Flatten, _, Cache::Dims(d)) => g.reshape(&d)?,
                _ => return Err(Error::InvalidShape(format!("trace does not match layer {i}"))),
            };
        }
        Ok(g)
    }
}

fn add_into<T: Scalar>(acc: &mut Tensor<T>, g: &Tensor<T>) {
    for (a, &v) in acc.data_mut().iter_mut().zip(g.data()) {
        *a += v;
    }
}
