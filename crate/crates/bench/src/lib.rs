//! Benchmark fixtures shared by the bench targets.

use acnn_core::layers::{b_storage_shape, ConvKernelSpec};
use acnn_core::{Rng, Tensor};

/// Random input and kernels for one operator call.
pub struct Fixture {
    pub x: Tensor,
    pub spec: ConvKernelSpec,
    pub a: Tensor,
    pub b_kernel: Tensor,
    pub bias: Tensor,
    pub upstream: Tensor,
}

impl Fixture {
    pub fn new(n: usize, m: usize, ell: usize, r: usize, channels: usize) -> Self {
        let mut rng = Rng::new(42);
        let spec = ConvKernelSpec::new(ell, r, m, channels).expect("valid spec");
        Self {
            x: rng.uniform_tensor(&[n, m], 1.0),
            a: rng.uniform_tensor(&spec.a_shape(), 0.1),
            b_kernel: rng.uniform_tensor(&b_storage_shape(&spec), 0.1),
            bias: rng.uniform_tensor(&[channels], 0.1),
            upstream: rng.uniform_tensor(&[n, channels], 1.0),
            spec,
        }
    }
}
