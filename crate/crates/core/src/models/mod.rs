//! VGGish-family network definitions with shape inference and cost
//! accounting.
//!
//! Three cumulative variants are provided:
//!
//! * `vggish_base`: the classical VGG-like trunk (64, 128, 2×256, 2×512
//!   channels of 3×3 convs, four 2×2 max pools) and a dense 4096-4096-128
//!   head.
//! * `vggish_bn`: batch normalization after every conv activation.
//! * `vggish_fullconv`: the dense head replaced by a 6×4×4096 valid conv,
//!   a 1×1×4096 conv and a 1×1×128 conv, each followed by ReLU and batch
//!   normalization.
//!
//! All variants end in a 10,998-unit dense layer with a sigmoid. The label
//! count also appears as 10,988 in the source description of the dataset;
//! the head width follows the 10,998 figure.

mod cost;
mod describe;
mod variant;

pub use cost::{count_flops, count_parameters, layer_costs, FlopConvention, LayerCost};
pub use describe::{describe, table_rows};
pub use variant::{build_variant, NetworkSpec, Variant, VariantOptions};

/// Width of the final multi-label head.
pub const HEAD_WIDTH: usize = 10_998;
/// Width of the embedding bottleneck.
pub const EMBEDDING_WIDTH: usize = 128;
/// Per-example network input: 100 time steps × 64 mel bins × 1 channel.
pub const INPUT_SHAPE: [usize; 3] = [100, 64, 1];
/// Parameter count reported for the fully convolutional model.
pub const REPORTED_PARAMETERS: f64 = 73.54e6;
/// FLOP count reported for the fully convolutional model (convention unknown).
pub const REPORTED_FLOPS: f64 = 360.72e6;
