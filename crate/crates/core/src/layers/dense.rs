//! Width-1 convolution: the same affine map applied at every position.

use crate::error::{Error, Result};
use crate::tensor::{axpy, dot, Tensor};

fn check(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<()> {
    if x.rank() != 2 || w.rank() != 2 || w.shape()[1] != x.shape()[1] {
        return Err(Error::Shape(format!(
            "width-1 conv input {:?} with weights {:?}",
            x.shape(),
            w.shape()
        )));
    }
    if b.shape() != [w.rows()] {
        return Err(Error::Shape(format!("bias {:?} for {} outputs", b.shape(), w.rows())));
    }
    Ok(())
}

/// `out[t, c] = W[c] . x[t] + b[c]`
pub fn width1_conv(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<Tensor> {
    check(x, w, b)?;
    let (n, c) = (x.rows(), w.rows());
    let mut out = Tensor::zeros(&[n, c])?;
    for t in 0..n {
        let xt = x.row(t);
        let row = out.row_mut(t);
        for (k, o) in row.iter_mut().enumerate() {
            *o = b.data()[k] + dot(w.row(k), xt);
        }
    }
    Ok(out)
}

pub struct Width1Grads {
    pub x: Tensor,
    pub w: Tensor,
    pub b: Tensor,
}

pub fn width1_conv_backward(x: &Tensor, w: &Tensor, upstream: &Tensor) -> Result<Width1Grads> {
    let (n, c) = (x.rows(), w.rows());
    if upstream.shape() != [n, c] {
        return Err(Error::Shape(format!("upstream {:?}, expected [{n}, {c}]", upstream.shape())));
    }
    let mut g = Width1Grads {
        x: Tensor::zeros(x.shape())?,
        w: Tensor::zeros(w.shape())?,
        b: Tensor::zeros(&[c])?,
    };
    for t in 0..n {
        for k in 0..c {
            let up = upstream.get2(t, k);
            g.b.data_mut()[k] += up;
            axpy(up, x.row(t), g.w.row_mut(k));
            axpy(up, w.row(k), g.x.row_mut(t));
        }
    }
    Ok(g)
}
