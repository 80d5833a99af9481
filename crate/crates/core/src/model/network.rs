//! Network assembly and the sentence-level forward/backward pass.
//!
//! ```text
//! ids -> embedding -> dropout (training) -> layer 1 (conv | autocorr) -> ReLU
//!     -> layers 2.. (conv) -> ReLU -> width-1 conv -> softmax
//! ```

use crate::error::{Error, Result};
use crate::layers::{
    autocorr_backward, autocorr_forward, b_storage_shape, conv1d_backward, conv1d_forward,
    dropout, dropout_backward, relu, relu_backward, softmax_rows, width1_conv,
    width1_conv_backward, AutoCorrCache, ConvCache, ConvKernelSpec, DropoutMask,
};
use crate::model::config::{GroupCombine, LayerKind, ModelConfig, NUM_CLASSES};
use crate::model::params::{ParamId, ParamStore};
use crate::rng::{glorot_range, Rng};
use crate::tensor::Tensor;

#[derive(Debug, Clone)]
pub(crate) struct GroupPlan {
    pub spec: ConvKernelSpec,
    pub a: ParamId,
    pub b_kernel: Option<ParamId>,
    pub bias: ParamId,
}

#[derive(Debug, Clone)]
pub(crate) struct LayerPlan {
    pub combine: GroupCombine,
    pub groups: Vec<GroupPlan>,
    pub out_dim: usize,
}

#[derive(Debug, Clone)]
pub struct Network {
    config: ModelConfig,
    embedding: ParamId,
    layers: Vec<LayerPlan>,
    out_w: ParamId,
    out_b: ParamId,
}

enum GroupCache {
    Conv(ConvCache),
    AutoCorr(AutoCorrCache),
}

/// Everything the backward pass needs from one forward call.
pub struct ForwardTrace {
    ids: Vec<usize>,
    mask: Option<DropoutMask>,
    caches: Vec<Vec<GroupCache>>,
    pre_activations: Vec<Tensor>,
    hidden: Tensor,
    pub probs: Tensor,
}

/// Allocates and initialises every parameter for `config`.
///
/// Weights are drawn from `U(-s, s)` with `s = init_scale * sqrt(6 / (fan_in + fan_out))`;
/// biases start at 1. Embedding rows use `fan_in = 1` (one-hot input).
pub fn build(config: &ModelConfig, rng: &mut Rng) -> Result<(Network, ParamStore)> {
    config.validate()?;
    let mut params = ParamStore::new();
    let scale = config.init_scale;
    let m0 = config.embedding_dim;

    let embedding = params.insert(
        "embedding",
        rng.uniform_tensor(&[config.vocab_size, m0], scale * glorot_range(1, m0)),
    )?;

    let mut in_dim = m0;
    let mut layers = Vec::with_capacity(config.layers.len());
    for (k, layer) in config.layers.iter().enumerate() {
        let mut groups = Vec::with_capacity(layer.kernel_groups.len());
        for (g, kg) in layer.kernel_groups.iter().enumerate() {
            let spec = ConvKernelSpec::new(kg.ell, kg.r, in_dim, layer.channels)?;
            let w = spec.width();
            let prefix = format!("layer{}.g{}", k + 1, g);
            let a = params.insert(
                format!("{prefix}.A"),
                rng.uniform_tensor(
                    &spec.a_shape(),
                    scale * glorot_range(w * in_dim, w * layer.channels),
                ),
            )?;
            let b_kernel = match layer.kind {
                LayerKind::Conv => None,
                LayerKind::Autocorr => Some(params.insert(
                    format!("{prefix}.B"),
                    rng.uniform_tensor(
                        &b_storage_shape(&spec),
                        scale * glorot_range(w * w * in_dim, w * w * layer.channels),
                    ),
                )?),
            };
            let bias = params.insert(
                format!("{prefix}.bias"),
                Tensor::filled(&[layer.channels], 1.0)?,
            )?;
            groups.push(GroupPlan {
                spec,
                a,
                b_kernel,
                bias,
            });
        }
        layers.push(LayerPlan {
            combine: layer.combine,
            groups,
            out_dim: layer.out_dim(),
        });
        in_dim = layer.out_dim();
    }

    let out_w = params.insert(
        "output.W",
        rng.uniform_tensor(&[NUM_CLASSES, in_dim], scale * glorot_range(in_dim, NUM_CLASSES)),
    )?;
    let out_b = params.insert("output.bias", Tensor::filled(&[NUM_CLASSES], 1.0)?)?;

    Ok((
        Network {
            config: config.clone(),
            embedding,
            layers,
            out_w,
            out_b,
        },
        params,
    ))
}

fn combine_outputs(combine: GroupCombine, outs: Vec<Tensor>, out_dim: usize) -> Result<Tensor> {
    let n = outs[0].rows();
    match combine {
        GroupCombine::Sum => {
            let mut it = outs.into_iter();
            let mut acc = it.next().expect("at least one group");
            for o in it {
                acc.add_assign(&o)?;
            }
            Ok(acc)
        }
        GroupCombine::Concat => {
            let mut acc = Tensor::zeros(&[n, out_dim])?;
            let mut col = 0;
            for o in &outs {
                let c = o.shape()[1];
                for t in 0..n {
                    acc.row_mut(t)[col..col + c].copy_from_slice(o.row(t));
                }
                col += c;
            }
            Ok(acc)
        }
    }
}

fn group_upstream(combine: GroupCombine, dy: &Tensor, g: usize, channels: usize) -> Result<Tensor> {
    match combine {
        GroupCombine::Sum => Ok(dy.clone()),
        GroupCombine::Concat => {
            let n = dy.rows();
            let mut out = Tensor::zeros(&[n, channels])?;
            for t in 0..n {
                out.row_mut(t)
                    .copy_from_slice(&dy.row(t)[g * channels..(g + 1) * channels]);
            }
            Ok(out)
        }
    }
}

impl Network {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn embedding_id(&self) -> ParamId {
        self.embedding
    }

    /// The width-1 weight matrix, the only L2-regularised parameter.
    pub fn output_weight_id(&self) -> ParamId {
        self.out_w
    }

    /// Parameter ids of every B kernel (empty for a CNN).
    pub fn b_kernel_ids(&self) -> Vec<ParamId> {
        self.layers
            .iter()
            .flat_map(|l| l.groups.iter().filter_map(|g| g.b_kernel))
            .collect()
    }

    pub(crate) fn layer_plans(&self) -> &[LayerPlan] {
        &self.layers
    }

    fn embed(&self, params: &ParamStore, ids: &[usize]) -> Result<Tensor> {
        if ids.is_empty() {
            return Err(Error::Shape("empty token sequence".into()));
        }
        let table = params.value(self.embedding);
        let m = self.config.embedding_dim;
        let mut x = Tensor::zeros(&[ids.len(), m])?;
        for (t, &id) in ids.iter().enumerate() {
            if id >= table.rows() {
                return Err(Error::Index(format!(
                    "token id {id} with vocabulary of {}",
                    table.rows()
                )));
            }
            x.row_mut(t).copy_from_slice(table.row(id));
        }
        Ok(x)
    }

    /// Class probabilities `(n, 2)`; column 1 is the disfluent class.
    pub fn forward(
        &self,
        params: &ParamStore,
        ids: &[usize],
        training: bool,
        rng: &mut Rng,
    ) -> Result<Tensor> {
        Ok(self.forward_trace(params, ids, training, rng)?.probs)
    }

    pub fn forward_trace(
        &self,
        params: &ParamStore,
        ids: &[usize],
        training: bool,
        rng: &mut Rng,
    ) -> Result<ForwardTrace> {
        let embedded = self.embed(params, ids)?;
        let (mut x, mask) = dropout(&embedded, self.config.dropout_rate, rng, training)?;
        let mut caches = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let mut outs = Vec::with_capacity(layer.groups.len());
            let mut layer_caches = Vec::with_capacity(layer.groups.len());
            for g in &layer.groups {
                let a = params.value(g.a);
                let bias = params.value(g.bias);
                match g.b_kernel {
                    None => {
                        let (y, cache) = conv1d_forward(&x, &g.spec, a, bias)?;
                        outs.push(y);
                        layer_caches.push(GroupCache::Conv(cache));
                    }
                    Some(bk) => {
                        let (y, cache) =
                            autocorr_forward(&x, &g.spec, a, params.value(bk), bias)?;
                        outs.push(y);
                        layer_caches.push(GroupCache::AutoCorr(cache));
                    }
                }
            }
            let pre = combine_outputs(layer.combine, outs, layer.out_dim)?;
            x = relu(&pre);
            pre_activations.push(pre);
            caches.push(layer_caches);
        }
        let scores = width1_conv(&x, params.value(self.out_w), params.value(self.out_b))?;
        scores.check_finite("output scores")?;
        let probs = softmax_rows(&scores)?;
        Ok(ForwardTrace {
            ids: ids.to_vec(),
            mask,
            caches,
            pre_activations,
            hidden: x,
            probs,
        })
    }

    /// Accumulates parameter gradients given the gradient of the loss with
    /// respect to the pre-softmax scores.
    pub fn backward(
        &self,
        params: &mut ParamStore,
        trace: &ForwardTrace,
        dscores: &Tensor,
    ) -> Result<()> {
        let g = width1_conv_backward(&trace.hidden, params.value(self.out_w), dscores)?;
        params.grads[self.out_w].add_assign(&g.w)?;
        params.grads[self.out_b].add_assign(&g.b)?;
        let mut dx = g.x;

        for (k, layer) in self.layers.iter().enumerate().rev() {
            let dy = relu_backward(&trace.pre_activations[k], &dx)?;
            let mut d_in: Option<Tensor> = None;
            for (gi, (plan, cache)) in layer.groups.iter().zip(&trace.caches[k]).enumerate() {
                let up = group_upstream(layer.combine, &dy, gi, plan.spec.out_channels)?;
                let gx = match cache {
                    GroupCache::Conv(c) => {
                        let gr = conv1d_backward(c, params.value(plan.a), &up)?;
                        params.grads[plan.a].add_assign(&gr.a)?;
                        params.grads[plan.bias].add_assign(&gr.b)?;
                        gr.x
                    }
                    GroupCache::AutoCorr(c) => {
                        let bk = plan.b_kernel.expect("autocorr group owns a B kernel");
                        let gr =
                            autocorr_backward(c, params.value(plan.a), params.value(bk), &up)?;
                        params.grads[plan.a].add_assign(&gr.a)?;
                        params.grads[bk].add_assign(&gr.b_kernel)?;
                        params.grads[plan.bias].add_assign(&gr.bias)?;
                        gr.x
                    }
                };
                match d_in.as_mut() {
                    Some(acc) => acc.add_assign(&gx)?,
                    None => d_in = Some(gx),
                }
            }
            dx = d_in.expect("layer has groups");
        }

        let d_embedded = dropout_backward(trace.mask.as_ref(), &dx)?;
        let table_grad = &mut params.grads[self.embedding];
        for (t, &id) in trace.ids.iter().enumerate() {
            let src = d_embedded.row(t);
            for (d, s) in table_grad.row_mut(id).iter_mut().zip(src) {
                *d += s;
            }
        }
        Ok(())
    }

    /// Per-token labels: 1 (disfluent) where its probability exceeds the fluent one.
    pub fn predict(&self, params: &ParamStore, ids: &[usize]) -> Result<Vec<usize>> {
        let mut rng = Rng::new(0);
        let probs = self.forward(params, ids, false, &mut rng)?;
        Ok((0..probs.rows())
            .map(|t| usize::from(probs.get2(t, 1) > probs.get2(t, 0)))
            .collect())
    }
}
