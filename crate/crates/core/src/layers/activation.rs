use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub fn relu(x: &Tensor) -> Tensor {
    x.map(|v| v.max(0.0))
}

/// Passes gradient where the forward input was strictly positive; the
/// subgradient at exactly zero is zero.
pub fn relu_backward(input: &Tensor, upstream: &Tensor) -> Result<Tensor> {
    if !input.same_shape(upstream) {
        return Err(Error::Shape(format!(
            "relu input {:?} vs upstream {:?}",
            input.shape(),
            upstream.shape()
        )));
    }
    let data = input
        .data()
        .iter()
        .zip(upstream.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::from_vec(input.shape(), data)
}

/// Row-wise softmax, stabilised by subtracting each row's maximum.
pub fn softmax_rows(x: &Tensor) -> Result<Tensor> {
    if x.rank() != 2 || x.shape()[1] < 2 {
        return Err(Error::Shape(format!("softmax needs (n, c>=2), got {:?}", x.shape())));
    }
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            z += *v;
        }
        for v in row.iter_mut() {
            *v /= z;
        }
    }
    Ok(out)
}

/// Gradient of `scale * sum_t -ln probs[t, label_t]` with respect to the
/// pre-softmax scores: `scale * (probs - onehot)`.
pub fn softmax_xent_backward(probs: &Tensor, labels: &[usize], scale: f64) -> Result<Tensor> {
    if probs.rank() != 2 || probs.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} labels for probabilities {:?}",
            labels.len(),
            probs.shape()
        )));
    }
    let c = probs.shape()[1];
    let mut g = probs.clone();
    for (t, &y) in labels.iter().enumerate() {
        if y >= c {
            return Err(Error::Index(format!("label {y} with {c} classes")));
        }
        let row = g.row_mut(t);
        row[y] -= 1.0;
        row.iter_mut().for_each(|v| *v *= scale);
    }
    Ok(g)
}
