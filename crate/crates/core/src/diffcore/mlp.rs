//! Fully connected networks stored in a [`ParamStore`].
//!
//! Layer `i` of a network with prefix `p` owns `p/layerNN/weight` (`[in, out]`)
//! and `p/layerNN/bias` (`[out]`).

use std::fmt;
use std::str::FromStr;

use super::params::ParamStore;
use super::rng::Rng;
use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Identity,
    Tanh,
    LeakyRelu(f64),
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanh => x.tanh(),
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    x
                } else {
                    a * x
                }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::Identity => write!(f, "identity"),
            Activation::Tanh => write!(f, "tanh"),
            Activation::LeakyRelu(a) => write!(f, "leaky_relu:{a}"),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "tanh" => Ok(Activation::Tanh),
            _ => {
                if let Some(a) = s.strip_prefix("leaky_relu:") {
                    let a: f64 = a
                        .parse()
                        .map_err(|_| Error::Config(format!("bad leaky_relu slope `{a}`")))?;
                    Ok(Activation::LeakyRelu(a))
                } else {
                    Err(Error::Config(format!("unknown activation `{s}`")))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LayerSpec {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub prefix: String,
    pub layers: Vec<LayerSpec>,
}

impl Mlp {
    /// `widths = [in, h1, ..., out]`; `hidden` applies to every layer but the last.
    pub fn new(prefix: impl Into<String>, widths: &[usize], hidden: Activation, last: Activation) -> Self {
        assert!(widths.len() >= 2, "an MLP needs at least one layer");
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|i| LayerSpec {
                inputs: widths[i],
                outputs: widths[i + 1],
                activation: if i + 1 == n { last } else { hidden },
            })
            .collect();
        Self {
            prefix: prefix.into(),
            layers,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.outputs).unwrap_or(0)
    }

    pub fn weight_path(&self, i: usize) -> String {
        format!("{}/layer{i:02}/weight", self.prefix)
    }

    pub fn bias_path(&self, i: usize) -> String {
        format!("{}/layer{i:02}/bias", self.prefix)
    }

    /// Glorot-uniform weights and zero biases. With `last_std`, the final
    /// layer's weights are instead drawn from `N(0, last_std² / fan_in)`, so
    /// each output starts with a spread of about `last_std` for unit-scale
    /// hidden activity.
    pub fn init(&self, store: &mut ParamStore, rng: &mut Rng, last_std: Option<f64>) {
        let n = self.layers.len();
        for (i, l) in self.layers.iter().enumerate() {
            let mut w = Tensor::zeros(&[l.inputs, l.outputs]);
            match last_std {
                Some(std) if i + 1 == n => {
                    let s = std / (l.inputs as f64).sqrt();
                    for v in w.data_mut() {
                        *v = s * rng.normal();
                    }
                }
                _ => {
                    let limit = (6.0 / (l.inputs + l.outputs) as f64).sqrt();
                    for v in w.data_mut() {
                        *v = rng.uniform_range(-limit, limit);
                    }
                }
            }
            store.insert(self.weight_path(i), w);
            store.insert(self.bias_path(i), Tensor::zeros(&[l.outputs]));
        }
    }

    /// Forward pass recorded on `tape`. `input` is `[batch, in]`.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, input: Var) -> Result<Var> {
        let mut h = input;
        for (i, l) in self.layers.iter().enumerate() {
            let shape = tape.value(h).shape();
            if shape.len() != 2 || shape[1] != l.inputs {
                return Err(Error::Dimension {
                    layer: format!("{}/layer{i:02}", self.prefix),
                    expected: format!("[_, {}]", l.inputs),
                    got: format!("{shape:?}"),
                });
            }
            let w = tape.param(store, &self.weight_path(i))?;
            let b = tape.param(store, &self.bias_path(i))?;
            let z = tape.matmul(h, w);
            let z = tape.add_row_bias(z, b);
            h = match l.activation {
                Activation::Identity => z,
                Activation::Tanh => tape.tanh(z),
                Activation::LeakyRelu(a) => tape.leaky_relu(z, a),
            };
        }
        Ok(h)
    }

    /// Forward pass without recording, for inference.
    pub fn apply(&self, store: &ParamStore, input: &Tensor) -> Result<Tensor> {
        let mut h = input.clone();
        for (i, l) in self.layers.iter().enumerate() {
            if h.rank() != 2 || h.cols() != l.inputs {
                return Err(Error::Dimension {
                    layer: format!("{}/layer{i:02}", self.prefix),
                    expected: format!("[_, {}]", l.inputs),
                    got: format!("{:?}", h.shape()),
                });
            }
            let mut z = h.matmul(store.get(&self.weight_path(i))?)?;
            let b = store.get(&self.bias_path(i))?;
            let act = l.activation;
            for row in z.data_mut().chunks_mut(l.outputs) {
                for (v, bb) in row.iter_mut().zip(b.data()) {
                    *v = act.apply(*v + bb);
                }
            }
            h = z;
        }
        Ok(h)
    }
}
