use std::fmt;

use serde::{Deserialize, Serialize};

use super::Padding;

/// One layer of a sequential network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv2d {
        kernel_h: usize,
        kernel_w: usize,
        out_channels: usize,
        stride: usize,
        padding: Padding,
    },
    MaxPool2d {
        size: usize,
        stride: usize,
    },
    BatchNorm,
    /// Fully connected; inputs of any rank are flattened per example.
    Dense {
        units: usize,
    },
    Relu,
    Sigmoid,
    Dropout {
        rate: f64,
    },
    Flatten,
}

impl LayerSpec {
    pub fn conv(kernel_h: usize, kernel_w: usize, out_channels: usize, padding: Padding) -> Self {
        LayerSpec::Conv2d {
            kernel_h,
            kernel_w,
            out_channels,
            stride: 1,
            padding,
        }
    }

    pub fn pool2() -> Self {
        LayerSpec::MaxPool2d { size: 2, stride: 2 }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::MaxPool2d { .. } => "maxpool2d",
            LayerSpec::BatchNorm => "batchnorm",
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Relu => "relu",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::Dropout { .. } => "dropout",
            LayerSpec::Flatten => "flatten",
        }
    }

    /// Checks the layer's own hyperparameters.
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            LayerSpec::Conv2d {
                kernel_h,
                kernel_w,
                out_channels,
                stride,
                ..
            } => {
                if kernel_h == 0 || kernel_w == 0 || out_channels == 0 {
                    return Err("conv kernel extents must be positive".into());
                }
                if stride == 0 {
                    return Err("conv stride must be >= 1".into());
                }
            }
            LayerSpec::MaxPool2d { size, stride } => {
                if size == 0 || stride == 0 {
                    return Err("pool size and stride must be >= 1".into());
                }
            }
            LayerSpec::Dense { units } if units == 0 => return Err("dense units must be positive".into()),
            LayerSpec::Dropout { rate } if !(0.0..1.0).contains(&rate) => {
                return Err(format!("dropout rate {rate} outside [0, 1)"))
            }
            _ => {}
        }
        Ok(())
    }

    /// Per-example output shape for a per-example input shape
    /// (`[h, w, c]` for feature maps, `[features]` once flattened).
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        self.validate()?;
        let spatial = || -> Result<(usize, usize, usize), String> {
            match input {
                &[h, w, c] => Ok((h, w, c)),
                _ => Err(format!("{} needs a (h, w, c) input, got {input:?}", self.kind())),
            }
        };
        match *self {
            LayerSpec::Conv2d {
                kernel_h,
                kernel_w,
                out_channels,
                stride,
                padding,
            } => {
                let (h, w, _) = spatial()?;
                let (oh, _) = super::conv_out_dim(h, kernel_h, stride, padding);
                let (ow, _) = super::conv_out_dim(w, kernel_w, stride, padding);
                if oh == 0 || ow == 0 {
                    return Err(format!("{kernel_h}x{kernel_w} kernel does not fit {h}x{w} input"));
                }
                Ok(vec![oh, ow, out_channels])
            }
            LayerSpec::MaxPool2d { size, stride } => {
                let (h, w, c) = spatial()?;
                if h < size || w < size {
                    return Err(format!("{size}x{size} pool does not fit {h}x{w} input"));
                }
                Ok(vec![(h - size) / stride + 1, (w - size) / stride + 1, c])
            }
            LayerSpec::Dense { units } => Ok(vec![units]),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
            _ => Ok(input.to_vec()),
        }
    }

    pub fn is_trainable(&self) -> bool {
        matches!(
            self,
            LayerSpec::Conv2d { .. } | LayerSpec::Dense { .. } | LayerSpec::BatchNorm
        )
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Conv2d {
                kernel_h,
                kernel_w,
                out_channels,
                stride,
                padding,
            } => {
                let pad = match padding {
                    Padding::Same => "same",
                    Padding::Valid => "valid",
                };
                write!(f, "conv2d {kernel_h}*{kernel_w}*{out_channels} /{stride} {pad}")
            }
            LayerSpec::MaxPool2d { size, stride } => write!(f, "maxpool2d {size}*{size} /{stride}"),
            LayerSpec::Dense { units } => write!(f, "dense {units}"),
            LayerSpec::Dropout { rate } => write!(f, "dropout {rate}"),
            other => f.write_str(other.kind()),
        }
    }
}
