//! Minimal differentiable tensor engine: the layers, losses and optimizer
//! needed to train VGGish-family networks on CPU.

mod activation;
mod batchnorm;
mod checkpoint;
mod conv;
mod dense;
mod layer;
mod loss;
mod network;
mod optim;
mod pool;
mod scalar;
mod tensor;

pub use activation::{apply_mask, dropout_mask, relu, relu_backward, sigmoid, sigmoid_backward, sigmoid_scalar};
pub use batchnorm::{
    batchnorm_backward, batchnorm_forward, batchnorm_infer, BatchNormCache, BatchNormConfig, BatchNormGrads, Mode,
};
pub use checkpoint::{Checkpoint, StoredTensor, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use conv::{conv2d_backward, conv2d_forward, conv_out_dim, ConvGrads, Padding};
pub use dense::{dense_backward, dense_forward, DenseGrads};
pub use layer::LayerSpec;
pub use loss::{l2_penalty, multilabel_bce, softmax_cross_entropy, LossOutput};
pub use network::{infer_layer_shapes, ModeCounters, Network, Param, Trace};
pub use optim::{AdamConfig, AdamState, LrSchedule};
pub use pool::{maxpool2d_backward, maxpool2d_forward, PoolOutput};
pub use scalar::{Dtype, Scalar};
pub use tensor::Tensor;
