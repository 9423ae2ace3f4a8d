use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{EMBEDDING_WIDTH, HEAD_WIDTH, INPUT_SHAPE};
use crate::engine::{infer_layer_shapes, BatchNormConfig, LayerSpec, Network, Padding, Scalar};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    VggishBase,
    VggishBn,
    VggishFullconv,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::VggishBase, Variant::VggishBn, Variant::VggishFullconv];

    pub fn name(self) -> &'static str {
        match self {
            Variant::VggishBase => "vggish_base",
            Variant::VggishBn => "vggish_bn",
            Variant::VggishFullconv => "vggish_fullconv",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant {s:?}")))
    }
}

/// Size knobs. The defaults give the full-size network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VariantOptions {
    /// Divides every trunk width (conv channels and the 4096-wide layers).
    /// The 128-unit embedding and the head are not divided.
    pub width_divisor: usize,
    pub head_width: usize,
}

impl Default for VariantOptions {
    fn default() -> Self {
        VariantOptions {
            width_divisor: 1,
            head_width: HEAD_WIDTH,
        }
    }
}

impl VariantOptions {
    /// Trunk widths divided by 8.
    pub fn tiny() -> Self {
        VariantOptions {
            width_divisor: 8,
            ..Default::default()
        }
    }
}

/// A sequential network definition plus its embedding tap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub name: String,
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    /// Index of the layer whose output is the 128-d embedding.
    pub embedding_layer: usize,
}

impl NetworkSpec {
    /// Per-layer per-example output shapes.
    pub fn infer_shapes(&self) -> Result<Vec<Vec<usize>>> {
        infer_layer_shapes(&self.layers, &self.input_shape)
    }

    /// Checks the structural invariants: shapes infer end to end, the tap
    /// yields a 128-wide feature and the network ends in dense + sigmoid.
    pub fn validate(&self) -> Result<()> {
        let shapes = self.infer_shapes()?;
        let err = |layer: usize, msg: String| Error::Spec {
            layer,
            name: self.layers.get(layer).map(|l| l.to_string()).unwrap_or_default(),
            msg,
        };
        let tap = shapes
            .get(self.embedding_layer)
            .ok_or_else(|| err(self.embedding_layer, "embedding tap out of range".into()))?;
        if tap.iter().product::<usize>() != EMBEDDING_WIDTH || *tap.last().unwrap() != EMBEDDING_WIDTH {
            return Err(err(self.embedding_layer, format!("embedding shape {tap:?} is not 128 wide")));
        }
        let n = self.layers.len();
        match self.layers[..] {
            [.., LayerSpec::Dense { .. }, LayerSpec::Sigmoid] => Ok(()),
            _ => Err(err(n.saturating_sub(1), "network must end in dense + sigmoid".into())),
        }
    }

    pub fn head_width(&self) -> usize {
        self.layers
            .iter()
            .rev()
            .find_map(|l| match l {
                LayerSpec::Dense { units } => Some(*units),
                _ => None,
            })
            .unwrap_or(0)
    }

    /// Output shape of the pre-bottleneck feature map (the last max pool).
    pub fn trunk_output_shape(&self) -> Result<Vec<usize>> {
        let shapes = self.infer_shapes()?;
        let i = self
            .layers
            .iter()
            .rposition(|l| matches!(l, LayerSpec::MaxPool2d { .. }))
            .ok_or_else(|| Error::InvalidConfig("network has no pooling trunk".into()))?;
        Ok(shapes[i].clone())
    }

    /// Realizes the spec with freshly initialized parameters.
    pub fn realize<T: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Network<T>> {
        Network::build(&self.layers, &self.input_shape, BatchNormConfig::default(), rng)
    }
}

pub fn build_variant(variant: Variant, opts: VariantOptions) -> Result<NetworkSpec> {
    if opts.width_divisor == 0 || opts.head_width == 0 {
        return Err(Error::InvalidConfig("width divisor and head width must be positive".into()));
    }
    let w = |c: usize| (c / opts.width_divisor).max(1);
    let bn = variant != Variant::VggishBase;
    let mut layers = Vec::new();
    let conv = |layers: &mut Vec<LayerSpec>, kh: usize, kw: usize, c: usize, pad: Padding| {
        layers.push(LayerSpec::conv(kh, kw, c, pad));
        layers.push(LayerSpec::Relu);
        if bn {
            layers.push(LayerSpec::BatchNorm);
        }
    };
    for block in [&[64][..], &[128], &[256, 256], &[512, 512]] {
        for &c in block {
            conv(&mut layers, 3, 3, w(c), Padding::Same);
        }
        layers.push(LayerSpec::pool2());
    }
    let embedding_layer = match variant {
        Variant::VggishBase | Variant::VggishBn => {
            layers.push(LayerSpec::Flatten);
            for units in [w(4096), w(4096), EMBEDDING_WIDTH] {
                layers.push(LayerSpec::Dense { units });
                layers.push(LayerSpec::Relu);
            }
            layers.len() - 1
        }
        Variant::VggishFullconv => {
            conv(&mut layers, 6, 4, w(4096), Padding::Valid);
            conv(&mut layers, 1, 1, w(4096), Padding::Valid);
            conv(&mut layers, 1, 1, EMBEDDING_WIDTH, Padding::Valid);
            layers.len() - 1
        }
    };
    layers.push(LayerSpec::Dense { units: opts.head_width });
    layers.push(LayerSpec::Sigmoid);
    let spec = NetworkSpec {
        name: if opts == VariantOptions::default() {
            variant.name().to_string()
        } else {
            format!("{}(width/{}, head {})", variant.name(), opts.width_divisor, opts.head_width)
        },
        input_shape: INPUT_SHAPE.to_vec(),
        layers,
        embedding_layer,
    };
    spec.validate()?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_roundtrip() {
        for v in Variant::ALL {
            assert_eq!(v.name().parse::<Variant>().unwrap(), v);
        }
        assert!("resnet50".parse::<Variant>().is_err());
    }

    #[test]
    fn base_has_no_batchnorm() {
        let s = build_variant(Variant::VggishBase, Default::default()).unwrap();
        assert!(!s.layers.contains(&LayerSpec::BatchNorm));
    }

    #[test]
    fn every_variant_ends_in_head_and_sigmoid() {
        for v in Variant::ALL {
            let s = build_variant(v, Default::default()).unwrap();
            let n = s.layers.len();
            assert_eq!(s.layers[n - 2], LayerSpec::Dense { units: 10_998 });
            assert_eq!(s.layers[n - 1], LayerSpec::Sigmoid);
            assert_eq!(s.head_width(), 10_998);
        }
    }

    #[test]
    fn fullconv_shape_chain() {
        let s = build_variant(Variant::VggishFullconv, Default::default()).unwrap();
        let shapes = s.infer_shapes().unwrap();
        let spatial: Vec<(usize, usize)> = s
            .layers
            .iter()
            .zip(&shapes)
            .filter(|(l, _)| matches!(l, LayerSpec::MaxPool2d { .. } | LayerSpec::Conv2d { .. }))
            .map(|(_, sh)| (sh[0], sh[1]))
            .collect();
        let mut uniq = spatial.clone();
        uniq.dedup();
        assert_eq!(uniq, vec![(100, 64), (50, 32), (25, 16), (12, 8), (6, 4), (1, 1)]);
        assert_eq!(s.trunk_output_shape().unwrap(), vec![6, 4, 512]);
        assert_eq!(shapes[s.embedding_layer], vec![1, 1, 128]);
    }

    #[test]
    fn tiny_keeps_embedding_width() {
        let s = build_variant(Variant::VggishFullconv, VariantOptions::tiny()).unwrap();
        assert_eq!(s.trunk_output_shape().unwrap(), vec![6, 4, 64]);
        assert_eq!(s.infer_shapes().unwrap()[s.embedding_layer], vec![1, 1, 128]);
    }

    #[test]
    fn broken_spec_names_layer() {
        let mut s = build_variant(Variant::VggishFullconv, Default::default()).unwrap();
        s.input_shape = vec![50, 32, 1];
        match s.validate() {
            Err(Error::Spec { name, .. }) => assert!(name.contains("6*4"), "{name}"),
            other => panic!("{other:?}"),
        }
    }
}
