use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Per-element multipliers applied by a training-mode dropout call:
/// `0` for dropped elements and `1 / (1 - rate)` for survivors.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMask(pub Vec<f64>);

impl DropoutMask {
    pub fn sample(len: usize, rate: f64, rng: &mut Rng) -> Result<Self> {
        check_rate(rate)?;
        let keep = 1.0 / (1.0 - rate);
        Ok(Self(
            (0..len)
                .map(|_| if rng.bernoulli(rate) { 0.0 } else { keep })
                .collect(),
        ))
    }

    pub fn apply(&self, x: &Tensor) -> Result<Tensor> {
        if self.0.len() != x.len() {
            return Err(Error::Shape(format!(
                "mask of {} for tensor {:?}",
                self.0.len(),
                x.shape()
            )));
        }
        let data = x.data().iter().zip(&self.0).map(|(v, k)| v * k).collect();
        Tensor::from_vec(x.shape(), data)
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate {rate} outside [0, 1)")));
    }
    Ok(())
}

/// Inverted dropout. Evaluation mode (and `rate == 0`) is the identity and
/// consumes no randomness.
pub fn dropout(
    x: &Tensor,
    rate: f64,
    rng: &mut Rng,
    training: bool,
) -> Result<(Tensor, Option<DropoutMask>)> {
    check_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok((x.clone(), None));
    }
    let mask = DropoutMask::sample(x.len(), rate, rng)?;
    Ok((mask.apply(x)?, Some(mask)))
}

pub fn dropout_backward(mask: Option<&DropoutMask>, upstream: &Tensor) -> Result<Tensor> {
    match mask {
        Some(m) => m.apply(upstream),
        None => Ok(upstream.clone()),
    }
}
