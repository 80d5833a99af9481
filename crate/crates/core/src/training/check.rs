use crate::error::Result;
use crate::gradcheck::{grad_check, GradCheckReport};
use crate::model::{Network, ParamStore};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::training::loss::{l2_backward, l2_penalty, loss};

/// Training objective for one sentence with dropout off: mean NLL plus L2.
pub fn sentence_objective(net: &Network, params: &ParamStore, ids: &[usize], labels: &[usize]) -> Result<f64> {
    let probs = net.forward(params, ids, false, &mut Rng::new(0))?;
    Ok(loss(&probs, labels)?.0 + l2_penalty(net, params))
}

/// Analytic gradients of [`sentence_objective`], one per parameter tensor.
pub fn sentence_gradients(
    net: &Network,
    params: &mut ParamStore,
    ids: &[usize],
    labels: &[usize],
) -> Result<Vec<Tensor>> {
    params.zero_grads();
    let trace = net.forward_trace(params, ids, false, &mut Rng::new(0))?;
    let (_, dscores) = loss(&trace.probs, labels)?;
    net.backward(params, &trace, &dscores)?;
    l2_backward(net, params)?;
    Ok((0..params.len()).map(|k| params.grad(k).clone()).collect())
}

/// Finite-difference check of every parameter tensor. `tamper` may modify
/// an analytic gradient before comparison (used to confirm failures are caught).
pub fn check_gradients(
    net: &Network,
    params: &ParamStore,
    ids: &[usize],
    labels: &[usize],
    eps: f64,
    tol: f64,
    mut tamper: impl FnMut(&str, &mut Tensor),
) -> Result<Vec<(String, GradCheckReport)>> {
    let mut work = params.clone();
    let grads = sentence_gradients(net, &mut work, ids, labels)?;
    let mut out = Vec::with_capacity(grads.len());
    for (k, mut g) in grads.into_iter().enumerate() {
        let name = params.names()[k].clone();
        tamper(&name, &mut g);
        let mut probe = params.clone();
        let report = grad_check(
            |p| {
                *probe.value_mut(k) = p.clone();
                sentence_objective(net, &probe, ids, labels).unwrap_or(f64::NAN)
            },
            params.value(k),
            &g,
            eps,
            tol,
        )?;
        out.push((name, report));
    }
    Ok(out)
}
