use std::collections::BTreeMap;

use super::params::ParamStore;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: BTreeMap::new(),
            v: BTreeMap::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn first_moment(&self, path: &str) -> Option<&Tensor> {
        self.m.get(path)
    }

    pub fn second_moment(&self, path: &str) -> Option<&Tensor> {
        self.v.get(path)
    }

    /// Applies one update from the gradients held in `params`.
    ///
    /// Every gradient is checked before anything is modified, so a
    /// non-finite gradient leaves parameters and state untouched.
    pub fn step(&mut self, params: &mut ParamStore) -> Result<()> {
        for (path, p) in params.iter() {
            if !p.grad.is_finite() {
                return Err(Error::NonFiniteGradient { path: path.clone() });
            }
        }
        let t = (self.step + 1) as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        for (path, p) in params.iter_mut() {
            let m = self
                .m
                .entry(path.clone())
                .or_insert_with(|| Tensor::zeros(p.value.shape()));
            let v = self
                .v
                .entry(path.clone())
                .or_insert_with(|| Tensor::zeros(p.value.shape()));
            let g = p.grad.data();
            let theta = p.value.data_mut();
            for i in 0..theta.len() {
                let mi = &mut m.data_mut()[i];
                *mi = b1 * *mi + (1.0 - b1) * g[i];
                let mhat = *mi / c1;
                let vi = &mut v.data_mut()[i];
                *vi = b2 * *vi + (1.0 - b2) * g[i] * g[i];
                let vhat = *vi / c2;
                theta[i] -= lr * mhat / (vhat.sqrt() + eps);
            }
        }
        self.step += 1;
        Ok(())
    }
}
