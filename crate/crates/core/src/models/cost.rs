use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::NetworkSpec;
use crate::engine::LayerSpec;
use crate::error::{Error, Result};

/// How arithmetic is tallied. Only conv and dense layers are counted;
/// bias adds, normalization, activations and pooling are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlopConvention {
    /// One multiply-accumulate = 1.
    Mac,
    /// One multiply-accumulate = 2 (a multiply and an add).
    MulPlusAdd,
}

impl FlopConvention {
    pub fn name(self) -> &'static str {
        match self {
            FlopConvention::Mac => "mac",
            FlopConvention::MulPlusAdd => "mul_plus_add",
        }
    }
}

impl fmt::Display for FlopConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FlopConvention {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mac" => Ok(FlopConvention::Mac),
            "mul_plus_add" => Ok(FlopConvention::MulPlusAdd),
            _ => Err(Error::InvalidConfig(format!("unknown flop convention {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerCost {
    pub index: usize,
    pub output_shape: Vec<usize>,
    pub params: u64,
    pub macs: u64,
}

/// Per-layer trainable parameter and MAC counts for one example.
pub fn layer_costs(spec: &NetworkSpec) -> Result<Vec<LayerCost>> {
    let shapes = spec.infer_shapes()?;
    let mut prev = spec.input_shape.clone();
    let mut out = Vec::with_capacity(spec.layers.len());
    for (i, (l, shape)) in spec.layers.iter().zip(&shapes).enumerate() {
        let (params, macs) = match *l {
            LayerSpec::Conv2d {
                kernel_h,
                kernel_w,
                out_channels,
                ..
            } => {
                let patch = (kernel_h * kernel_w * prev[2]) as u64;
                let positions = (shape[0] * shape[1]) as u64;
                (
                    patch * out_channels as u64 + out_channels as u64,
                    positions * patch * out_channels as u64,
                )
            }
            LayerSpec::Dense { units } => {
                let fan_in = prev.iter().product::<usize>() as u64;
                (fan_in * units as u64 + units as u64, fan_in * units as u64)
            }
            LayerSpec::BatchNorm => (2 * *shape.last().unwrap() as u64, 0),
            _ => (0, 0),
        };
        out.push(LayerCost {
            index: i,
            output_shape: shape.clone(),
            params,
            macs,
        });
        prev = shape.clone();
    }
    Ok(out)
}

/// Trainable values: conv/dense weights and biases, batchnorm gamma and beta.
pub fn count_parameters(spec: &NetworkSpec) -> Result<u64> {
    Ok(layer_costs(spec)?.iter().map(|c| c.params).sum())
}

pub fn count_flops(spec: &NetworkSpec, convention: FlopConvention) -> Result<u64> {
    let macs: u64 = layer_costs(spec)?.iter().map(|c| c.macs).sum();
    Ok(match convention {
        FlopConvention::Mac => macs,
        FlopConvention::MulPlusAdd => 2 * macs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Padding;

    fn spec(layers: Vec<LayerSpec>, input: Vec<usize>) -> NetworkSpec {
        NetworkSpec {
            name: "t".into(),
            input_shape: input,
            layers,
            embedding_layer: 0,
        }
    }

    #[test]
    fn single_dense_layer() {
        let s = spec(vec![LayerSpec::Dense { units: 10_998 }], vec![128]);
        assert_eq!(count_parameters(&s).unwrap(), 1_418_742);
    }

    #[test]
    fn empty_spec_counts_zero() {
        let s = spec(vec![], vec![100, 64, 1]);
        assert_eq!(count_parameters(&s).unwrap(), 0);
        assert_eq!(count_flops(&s, FlopConvention::Mac).unwrap(), 0);
    }

    #[test]
    fn small_valid_conv_macs() {
        let s = spec(vec![LayerSpec::conv(3, 3, 1, Padding::Valid)], vec![4, 4, 1]);
        assert_eq!(count_flops(&s, FlopConvention::Mac).unwrap(), 36);
        assert_eq!(count_flops(&s, FlopConvention::MulPlusAdd).unwrap(), 72);
    }

    #[test]
    fn conv_cost_is_linear_in_height() {
        let layers = vec![
            LayerSpec::conv(3, 3, 8, Padding::Same),
            LayerSpec::conv(3, 3, 4, Padding::Same),
        ];
        let a = layer_costs(&spec(layers.clone(), vec![10, 6, 2])).unwrap();
        let b = layer_costs(&spec(layers, vec![20, 6, 2])).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(2 * x.macs, y.macs);
        }
    }
}
