use crate::error::{Error, Result};
use crate::layers::softmax_xent_backward;
use crate::model::{Network, ParamStore};
use crate::tensor::Tensor;

/// Sum over tokens of `-ln p(label)`.
pub fn nll_sum(probs: &Tensor, labels: &[usize]) -> Result<f64> {
    if probs.rank() != 2 || probs.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} labels for probabilities {:?}",
            labels.len(),
            probs.shape()
        )));
    }
    let c = probs.shape()[1];
    let mut total = 0.0;
    for (t, &y) in labels.iter().enumerate() {
        if y >= c {
            return Err(Error::Index(format!("label {y} with {c} classes")));
        }
        total -= probs.get2(t, y).ln();
    }
    Ok(total)
}

/// Mean negative log-likelihood and its gradient with respect to the
/// pre-softmax scores.
pub fn loss(probs: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let n = labels.len().max(1) as f64;
    let value = nll_sum(probs, labels)? / n;
    let grad = softmax_xent_backward(probs, labels, 1.0 / n)?;
    Ok((value, grad))
}

/// `l2_weight * sum(W^2)` over the output projection weights only.
pub fn l2_penalty(net: &Network, params: &ParamStore) -> f64 {
    net.config().l2_weight * params.value(net.output_weight_id()).sum_squares()
}

/// Adds `2 * l2_weight * W` to the output projection's gradient.
pub fn l2_backward(net: &Network, params: &mut ParamStore) -> Result<()> {
    let id = net.output_weight_id();
    let mut g = params.value(id).clone();
    g.scale(2.0 * net.config().l2_weight);
    params.grad_mut(id).add_assign(&g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build, ModelConfig};
    use crate::rng::Rng;

    #[test]
    fn perfect_and_uniform() {
        let one_hot = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(loss(&one_hot, &[0, 1]).unwrap().0, 0.0);
        let uniform = Tensor::filled(&[3, 2], 0.5).unwrap();
        let (l, _) = loss(&uniform, &[0, 1, 1]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn random_case_matches_per_token_oracle() {
        let mut rng = Rng::new(9);
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|_| {
                let p = 0.05 + 0.9 * rng.unit();
                vec![p, 1.0 - p]
            })
            .collect();
        let labels: Vec<usize> = (0..7).map(|_| rng.below(2)).collect();
        let probs = Tensor::from_rows(&rows).unwrap();
        let oracle: f64 = rows
            .iter()
            .zip(&labels)
            .map(|(r, &y)| -(r[y].ln()))
            .sum::<f64>()
            / 7.0;
        assert!((loss(&probs, &labels).unwrap().0 - oracle).abs() < 1e-14);
        assert!(loss(&probs, &labels[..3]).is_err());
    }

    #[test]
    fn penalty_on_output_weights_only() {
        let cfg = ModelConfig::toy(crate::model::Arch::Acnn);
        let (net, mut params) = build(&cfg, &mut Rng::new(2)).unwrap();
        let base = l2_penalty(&net, &params);
        params.value_mut(net.output_weight_id()).scale(2.0);
        assert!((l2_penalty(&net, &params) - 4.0 * base).abs() < 1e-12 * base.max(1.0));
        params.value_mut(net.output_weight_id()).fill(0.0);
        assert_eq!(l2_penalty(&net, &params), 0.0);
        params.value_mut(net.output_weight_id()).fill(1.0);
        params.zero_grads();
        l2_backward(&net, &mut params).unwrap();
        for (id, name) in params.names().iter().enumerate() {
            let nonzero = params.grad(id).max_abs() > 0.0;
            assert_eq!(nonzero, id == net.output_weight_id(), "{name}");
        }
    }
}
