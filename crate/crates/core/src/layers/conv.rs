//! Stride-1, zero-padded 1D convolution over word positions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{axpy, dot, Tensor};

/// Window geometry shared by convolution and auto-correlation kernels.
///
/// The window at position `t` covers rows `t - ell ..= t + r`, so it is
/// `ell + r + 1` rows wide and always contains the target word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvKernelSpec {
    pub ell: usize,
    pub r: usize,
    pub in_dim: usize,
    pub out_channels: usize,
}

/// Auto-correlation kernels use the same geometry plus a `(w, w, m)` B kernel.
pub type AutoCorrKernelSpec = ConvKernelSpec;

impl ConvKernelSpec {
    pub fn new(ell: usize, r: usize, in_dim: usize, out_channels: usize) -> Result<Self> {
        let spec = Self {
            ell,
            r,
            in_dim,
            out_channels,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.out_channels == 0 {
            return Err(Error::Config(format!("degenerate kernel spec {self:?}")));
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.ell + self.r + 1
    }

    pub fn a_shape(&self) -> [usize; 3] {
        [self.out_channels, self.width(), self.in_dim]
    }

    pub fn b_shape(&self) -> [usize; 4] {
        let w = self.width();
        [self.out_channels, w, w, self.in_dim]
    }

    /// Window offsets `lo..=hi` that land inside a length-`n` sequence at position `t`.
    pub(crate) fn valid_offsets(&self, t: usize, n: usize) -> (usize, usize) {
        let lo = self.ell.saturating_sub(t);
        let hi = (self.width() - 1).min(n - 1 + self.ell - t);
        (lo, hi)
    }
}

pub(crate) fn check_input(x: &Tensor, spec: &ConvKernelSpec) -> Result<usize> {
    if x.rank() != 2 {
        return Err(Error::Shape(format!("layer input must be (n, m), got {:?}", x.shape())));
    }
    if x.shape()[1] != spec.in_dim {
        return Err(Error::Shape(format!(
            "input width {} but kernel expects {}",
            x.shape()[1],
            spec.in_dim
        )));
    }
    Ok(x.rows())
}

pub(crate) fn check_a_b(spec: &ConvKernelSpec, a: &Tensor, b: &Tensor) -> Result<()> {
    if a.shape() != spec.a_shape() {
        return Err(Error::Shape(format!(
            "A kernel {:?}, expected {:?}",
            a.shape(),
            spec.a_shape()
        )));
    }
    if b.shape() != [spec.out_channels] {
        return Err(Error::Shape(format!(
            "bias {:?}, expected [{}]",
            b.shape(),
            spec.out_channels
        )));
    }
    Ok(())
}

/// First-order window term plus bias, written into `out` (n, c).
pub(crate) fn linear_window_term(x: &Tensor, spec: &ConvKernelSpec, a: &Tensor, b: &Tensor) -> Tensor {
    let n = x.rows();
    let m = spec.in_dim;
    let c = spec.out_channels;
    let w = spec.width();
    let mut out = Tensor::zeros(&[n, c]).expect("n, c positive");
    let xd = x.data();
    let ad = a.data();
    for t in 0..n {
        let (lo, hi) = spec.valid_offsets(t, n);
        let first_row = t + lo - spec.ell;
        let xs = &xd[first_row * m..(first_row + hi - lo + 1) * m];
        let row = out.row_mut(t);
        for (u, o) in row.iter_mut().enumerate().take(c) {
            let k0 = (u * w + lo) * m;
            let ks = &ad[k0..k0 + xs.len()];
            *o = b.data()[u] + dot(ks, xs);
        }
    }
    out
}

/// Saved input for [`conv1d_backward`].
#[derive(Debug, Clone)]
pub struct ConvCache {
    pub spec: ConvKernelSpec,
    pub input: Tensor,
}

#[derive(Debug, Clone)]
pub struct ConvGrads {
    pub x: Tensor,
    pub a: Tensor,
    pub b: Tensor,
}

/// `out[t, u] = A[u] . X[t-ell ..= t+r] + b[u]` with zero rows outside the sequence.
pub fn conv1d_forward(
    x: &Tensor,
    spec: &ConvKernelSpec,
    a: &Tensor,
    b: &Tensor,
) -> Result<(Tensor, ConvCache)> {
    spec.validate()?;
    check_input(x, spec)?;
    check_a_b(spec, a, b)?;
    let out = linear_window_term(x, spec, a, b);
    Ok((
        out,
        ConvCache {
            spec: *spec,
            input: x.clone(),
        },
    ))
}

/// Accumulates first-order window gradients into `dx`, `da`, `db`.
pub(crate) fn linear_window_backward(
    x: &Tensor,
    spec: &ConvKernelSpec,
    a: &Tensor,
    upstream: &Tensor,
    dx: &mut Tensor,
    da: &mut Tensor,
    db: &mut Tensor,
) {
    let n = x.rows();
    let m = spec.in_dim;
    let c = spec.out_channels;
    let w = spec.width();
    let xd = x.data();
    let ad = a.data();
    for t in 0..n {
        let (lo, hi) = spec.valid_offsets(t, n);
        let first_row = t + lo - spec.ell;
        let span = (hi - lo + 1) * m;
        let xs = &xd[first_row * m..first_row * m + span];
        for u in 0..c {
            let g = upstream.get2(t, u);
            if g == 0.0 {
                continue;
            }
            db.data_mut()[u] += g;
            let k0 = (u * w + lo) * m;
            axpy(g, xs, &mut da.data_mut()[k0..k0 + span]);
            axpy(g, &ad[k0..k0 + span], &mut dx.data_mut()[first_row * m..first_row * m + span]);
        }
    }
}

pub(crate) fn check_upstream(upstream: &Tensor, n: usize, c: usize) -> Result<()> {
    if upstream.shape() != [n, c] {
        return Err(Error::Shape(format!(
            "upstream gradient {:?}, expected [{n}, {c}]",
            upstream.shape()
        )));
    }
    Ok(())
}

pub fn conv1d_backward(cache: &ConvCache, a: &Tensor, upstream: &Tensor) -> Result<ConvGrads> {
    let spec = &cache.spec;
    let n = cache.input.rows();
    check_upstream(upstream, n, spec.out_channels)?;
    if a.shape() != spec.a_shape() {
        return Err(Error::Shape(format!("A kernel {:?} does not match cache", a.shape())));
    }
    let mut grads = ConvGrads {
        x: Tensor::zeros(cache.input.shape())?,
        a: Tensor::zeros(&spec.a_shape())?,
        b: Tensor::zeros(&[spec.out_channels])?,
    };
    linear_window_backward(
        &cache.input,
        spec,
        a,
        upstream,
        &mut grads.x,
        &mut grads.a,
        &mut grads.b,
    );
    Ok(grads)
}
