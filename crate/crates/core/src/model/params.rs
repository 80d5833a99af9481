use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Named parameters with their gradients and Adam moments, kept in
/// insertion order. Values, gradients and moments live in parallel vectors
/// so a backward pass can read values while writing gradients.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    pub(crate) values: Vec<Tensor>,
    pub(crate) grads: Vec<Tensor>,
    pub(crate) adam_m: Vec<Tensor>,
    pub(crate) adam_v: Vec<Tensor>,
}

pub type ParamId = usize;

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> Result<ParamId> {
        let name = name.into();
        if self.names.contains(&name) {
            return Err(Error::Config(format!("duplicate parameter {name}")));
        }
        let zeros = Tensor::zeros(value.shape())?;
        self.names.push(name);
        self.grads.push(zeros.clone());
        self.adam_m.push(zeros.clone());
        self.adam_v.push(zeros);
        self.values.push(value);
        Ok(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name)
    }

    pub fn value(&self, id: ParamId) -> &Tensor {
        &self.values[id]
    }

    pub fn value_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id]
    }

    pub fn grad(&self, id: ParamId) -> &Tensor {
        &self.grads[id]
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.grads[id]
    }

    pub fn moments(&self, id: ParamId) -> (&Tensor, &Tensor) {
        (&self.adam_m[id], &self.adam_v[id])
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.id(name).map(|i| &self.values[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.values)
    }

    pub fn zero_grads(&mut self) {
        self.grads.iter_mut().for_each(|g| g.fill(0.0));
    }

    pub fn total_len(&self) -> usize {
        self.values.iter().map(Tensor::len).sum()
    }

    /// Replaces values, checking that names and shapes match.
    pub fn load_values(&mut self, named: Vec<(String, Tensor)>) -> Result<()> {
        if named.len() != self.len() {
            return Err(Error::Mismatch(format!(
                "{} tensors for a model with {}",
                named.len(),
                self.len()
            )));
        }
        for (i, (name, t)) in named.into_iter().enumerate() {
            if name != self.names[i] || !t.same_shape(&self.values[i]) {
                return Err(Error::Mismatch(format!(
                    "tensor {i} is {name} {:?}, model expects {} {:?}",
                    t.shape(),
                    self.names[i],
                    self.values[i].shape()
                )));
            }
            self.values[i] = t;
        }
        Ok(())
    }
}
