//! Forward and backward passes for the network's operators.
//!
//! All operators are stride 1 with zero padding, so every output has as many
//! rows as its input. Backward functions return fresh gradient tensors; the
//! caller owns accumulation into parameter gradients.

mod activation;
mod autocorr;
mod conv;
mod dense;
mod dropout;

pub use activation::{relu, relu_backward, softmax_rows, softmax_xent_backward};
pub use autocorr::{
    autocorr_backward, autocorr_forward, autocorr_tensor, b_storage_shape, AutoCorrCache,
    AutoCorrGrads,
};
pub use conv::{
    conv1d_backward, conv1d_forward, AutoCorrKernelSpec, ConvCache, ConvGrads, ConvKernelSpec,
};
pub use dense::{width1_conv, width1_conv_backward, Width1Grads};
pub use dropout::{dropout, dropout_backward, DropoutMask};
