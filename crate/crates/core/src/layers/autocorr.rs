//! Auto-correlation operator: a convolution plus a learned contraction over
//! the pairwise Hadamard interactions of the window's input rows.
//!
//! For a window `i = t - ell ..= j = t + r`,
//!
//! ```text
//! out[t, u] = A[u] . X[i..=j] + B[u] . Xhat[i..=j, i..=j] + b[u]
//! Xhat[p, q, :] = x[p] * x[q]   (elementwise)
//! ```
//!
//! Only the `w x w` window of `Xhat` is ever formed, one pair at a time.
//! [`autocorr_tensor`] materialises the full `(n, n, m)` tensor for
//! diagnostics and tests.

use crate::error::{Error, Result};
use crate::layers::conv::{
    check_a_b, check_input, check_upstream, linear_window_backward, linear_window_term,
    AutoCorrKernelSpec,
};
use crate::tensor::{axpy, Tensor};

/// Full interaction tensor `Xhat[i, j, :] = x[i] * x[j]`.
pub fn autocorr_tensor(x: &Tensor) -> Result<Tensor> {
    if x.rank() != 2 {
        return Err(Error::Shape(format!("autocorr_tensor needs (n, m), got {:?}", x.shape())));
    }
    let (n, m) = (x.rows(), x.shape()[1]);
    let mut out = Tensor::zeros(&[n, n, m])?;
    let od = out.data_mut();
    for i in 0..n {
        for j in 0..n {
            let dst = &mut od[(i * n + j) * m..(i * n + j + 1) * m];
            for ((d, a), b) in dst.iter_mut().zip(x.row(i)).zip(x.row(j)) {
                *d = a * b;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct AutoCorrCache {
    pub spec: AutoCorrKernelSpec,
    pub input: Tensor,
}

#[derive(Debug, Clone)]
pub struct AutoCorrGrads {
    pub x: Tensor,
    pub a: Tensor,
    pub b_kernel: Tensor,
    pub bias: Tensor,
}

fn check_b_kernel(spec: &AutoCorrKernelSpec, b_kernel: &Tensor) -> Result<()> {
    // Tensor rank is capped at 3, so B is stored as (c * w, w, m).
    let [c, w, _, m] = spec.b_shape();
    if b_kernel.shape() != [c * w, w, m] {
        return Err(Error::Shape(format!(
            "B kernel {:?}, expected [{}, {w}, {m}]",
            b_kernel.shape(),
            c * w
        )));
    }
    Ok(())
}

/// Shape of the stored B kernel: `(out_channels * w, w, m)`, i.e. the
/// `(out_channels, w, w, m)` kernel with its two leading axes merged.
pub fn b_storage_shape(spec: &AutoCorrKernelSpec) -> [usize; 3] {
    let [c, w, _, m] = spec.b_shape();
    [c * w, w, m]
}

/// Second-order window term only (no A, no bias).
fn interaction_term(x: &Tensor, spec: &AutoCorrKernelSpec, b_kernel: &Tensor) -> Tensor {
    let n = x.rows();
    let m = spec.in_dim;
    let c = spec.out_channels;
    let w = spec.width();
    let bd = b_kernel.data();
    let mut out = Tensor::zeros(&[n, c]).expect("n, c positive");
    let mut h = vec![0.0; m];
    // Per-channel elementwise partial sums, reduced once per position.
    let mut partial = vec![0.0; c * m];
    for t in 0..n {
        let (lo, hi) = spec.valid_offsets(t, n);
        partial.fill(0.0);
        for a in lo..=hi {
            let xp = x.row(t + a - spec.ell);
            for b in lo..=hi {
                let xq = x.row(t + b - spec.ell);
                for ((hk, p), q) in h.iter_mut().zip(xp).zip(xq) {
                    *hk = p * q;
                }
                for (u, acc) in partial.chunks_exact_mut(m).enumerate() {
                    let k0 = ((u * w + a) * w + b) * m;
                    for ((s, bk), hk) in acc.iter_mut().zip(&bd[k0..k0 + m]).zip(&h) {
                        *s += bk * hk;
                    }
                }
            }
        }
        for (o, acc) in out.row_mut(t).iter_mut().zip(partial.chunks_exact(m)) {
            *o += acc.iter().sum::<f64>();
        }
    }
    out
}

/// Forward pass. With an all-zero `b_kernel` the result is bitwise equal to
/// [`conv1d_forward`](crate::layers::conv1d_forward) with the same `A` and bias.
pub fn autocorr_forward(
    x: &Tensor,
    spec: &AutoCorrKernelSpec,
    a: &Tensor,
    b_kernel: &Tensor,
    bias: &Tensor,
) -> Result<(Tensor, AutoCorrCache)> {
    spec.validate()?;
    check_input(x, spec)?;
    check_a_b(spec, a, bias)?;
    check_b_kernel(spec, b_kernel)?;
    let mut out = linear_window_term(x, spec, a, bias);
    let second = interaction_term(x, spec, b_kernel);
    for (o, s) in out.data_mut().iter_mut().zip(second.data()) {
        *o += s;
    }
    Ok((
        out,
        AutoCorrCache {
            spec: *spec,
            input: x.clone(),
        },
    ))
}

pub fn autocorr_backward(
    cache: &AutoCorrCache,
    a: &Tensor,
    b_kernel: &Tensor,
    upstream: &Tensor,
) -> Result<AutoCorrGrads> {
    let spec = &cache.spec;
    let x = &cache.input;
    let n = x.rows();
    let m = spec.in_dim;
    let c = spec.out_channels;
    let w = spec.width();
    check_upstream(upstream, n, c)?;
    check_a_b(spec, a, &Tensor::zeros(&[c])?)?;
    check_b_kernel(spec, b_kernel)?;

    let mut grads = AutoCorrGrads {
        x: Tensor::zeros(x.shape())?,
        a: Tensor::zeros(&spec.a_shape())?,
        b_kernel: Tensor::zeros(&b_storage_shape(spec))?,
        bias: Tensor::zeros(&[c])?,
    };
    linear_window_backward(x, spec, a, upstream, &mut grads.x, &mut grads.a, &mut grads.bias);

    let bd = b_kernel.data();
    let mut h = vec![0.0; m];
    let mut s = vec![0.0; m];
    for t in 0..n {
        let (lo, hi) = spec.valid_offsets(t, n);
        let g_row = upstream.row(t);
        if g_row.iter().all(|&g| g == 0.0) {
            continue;
        }
        for a_off in lo..=hi {
            let p = t + a_off - spec.ell;
            for b_off in lo..=hi {
                let q = t + b_off - spec.ell;
                let (xp, xq) = (x.row(p), x.row(q));
                for ((hk, xpk), xqk) in h.iter_mut().zip(xp).zip(xq) {
                    *hk = xpk * xqk;
                }
                s.fill(0.0);
                for (u, &g) in g_row.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    let k0 = ((u * w + a_off) * w + b_off) * m;
                    axpy(g, &h, &mut grads.b_kernel.data_mut()[k0..k0 + m]);
                    axpy(g, &bd[k0..k0 + m], &mut s);
                }
                // d(x_p * x_q)/dx_p = x_q and vice versa; p == q picks up both terms.
                let dx = grads.x.data_mut();
                for k in 0..m {
                    dx[p * m + k] += s[k] * x.data()[q * m + k];
                }
                for k in 0..m {
                    dx[q * m + k] += s[k] * x.data()[p * m + k];
                }
            }
        }
    }
    Ok(grads)
}
