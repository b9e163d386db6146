use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::numcore::DenseMatrix;

/// A named trainable array with its gradient buffer and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameter {
    pub name: String,
    pub value: DenseMatrix,
    pub grad: DenseMatrix,
    pub m: DenseMatrix,
    pub v: DenseMatrix,
}

impl Parameter {
    pub fn new(name: impl Into<String>, value: DenseMatrix) -> Self {
        let (r, c) = value.shape();
        Self {
            name: name.into(),
            value,
            grad: DenseMatrix::zeros(r, c),
            m: DenseMatrix::zeros(r, c),
            v: DenseMatrix::zeros(r, c),
        }
    }
}

/// Parameters in insertion order, addressed by index or unique name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterStore {
    params: IndexMap<String, Parameter>,
    step_count: u64,
}

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a parameter and returns its index.
    pub fn insert(&mut self, name: &str, value: DenseMatrix) -> Result<usize> {
        if self.params.contains_key(name) {
            return Err(Error::Config(format!("duplicate parameter name {name:?}")));
        }
        let (idx, _) = self.params.insert_full(name.to_string(), Parameter::new(name, value));
        Ok(idx)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn get(&self, idx: usize) -> &Parameter {
        &self.params[idx]
    }

    pub fn get_mut(&mut self, idx: usize) -> &mut Parameter {
        &mut self.params[idx]
    }

    pub fn by_name(&self, name: &str) -> Option<&Parameter> {
        self.params.get(name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.get_index_of(name)
    }

    pub fn value(&self, idx: usize) -> &DenseMatrix {
        &self.params[idx].value
    }

    pub fn iter(&self) -> impl Iterator<Item = &Parameter> {
        self.params.values()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Parameter> {
        self.params.values_mut()
    }

    pub fn zero_grad(&mut self) {
        for p in self.params.values_mut() {
            p.grad.fill(0.0);
        }
    }

    /// Copies of every value, in store order.
    pub fn snapshot(&self) -> Vec<DenseMatrix> {
        self.params.values().map(|p| p.value.clone()).collect()
    }

    pub fn restore(&mut self, values: &[DenseMatrix]) -> Result<()> {
        if values.len() != self.params.len() {
            return Err(Error::Config("snapshot size does not match store".into()));
        }
        for (p, v) in self.params.values_mut().zip(values) {
            if p.value.shape() != v.shape() {
                return Err(Error::shape("restore", p.value.shape(), v.shape()));
            }
            p.value = v.clone();
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update of every parameter, then clears the gradients.
///
/// Gradients are validated before anything is written, so a non-finite entry
/// leaves the store untouched.
pub fn adam_step(store: &mut ParameterStore, cfg: &AdamConfig) -> Result<()> {
    if let Some(p) = store.iter().find(|p| !p.grad.is_finite()) {
        return Err(Error::Numeric(format!("gradient of parameter {}", p.name)));
    }
    let t = (store.step_count + 1) as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for p in store.iter_mut() {
        let g = p.grad.data();
        let m = p.m.data_mut();
        for (mi, &gi) in m.iter_mut().zip(g) {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * gi;
        }
        let v = p.v.data_mut();
        for (vi, &gi) in v.iter_mut().zip(g) {
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * gi * gi;
        }
        let (m, v) = (p.m.data(), p.v.data());
        for ((x, &mi), &vi) in p.value.data_mut().iter_mut().zip(m).zip(v) {
            let m_hat = mi / bc1;
            let v_hat = vi / bc2;
            let denom = v_hat.sqrt() + cfg.eps;
            if denom > 0.0 {
                *x -= cfg.lr * m_hat / denom;
            }
        }
        p.grad.fill(0.0);
    }
    store.step_count += 1;
    Ok(())
}
