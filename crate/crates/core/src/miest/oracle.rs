//! Monte Carlo reference value of `I(U;X)` when `X` has finite support and
//! the marginal `p(u)` is an enumerable Gaussian mixture.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use super::bounds::log_density_matrix;
use crate::diffcore::{logsumexp, ParamStore, Rng, Tensor};
use crate::encoder::{Encoder, GaussianCode};
use crate::error::{Error, Result};

pub const DEFAULT_MC_SAMPLES: usize = 200_000;
const CHUNK: usize = 2048;

/// `p(u) = sum_m w_m N(u; code_m)`.
#[derive(Clone, Debug)]
pub struct Mixture {
    weights: Vec<f64>,
    codes: Vec<GaussianCode>,
}

impl Mixture {
    pub fn new(weights: Vec<f64>, codes: Vec<GaussianCode>) -> Result<Self> {
        if weights.len() != codes.len() || codes.is_empty() {
            return Err(Error::contract("mixture needs one weight per component"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::domain("mixture weights must be finite and nonnegative"));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::domain("mixture weights sum to zero"));
        }
        Ok(Self {
            weights: weights.iter().map(|w| w / total).collect(),
            codes,
        })
    }

    pub fn uniform(codes: Vec<GaussianCode>) -> Result<Self> {
        Self::new(vec![1.0; codes.len()], codes)
    }

    /// Empirical distribution of `xs` pushed through a frozen channel.
    ///
    /// Fails with [`Error::Unsupported`] when `xs` has more than `max_support`
    /// distinct values, i.e. when `X` is effectively continuous.
    pub fn from_channel(
        encoder: &Encoder,
        store: &ParamStore,
        xs: &[f64],
        max_support: usize,
    ) -> Result<Self> {
        let mut counts: BTreeMap<u64, usize> = BTreeMap::new();
        for x in xs {
            *counts.entry(x.to_bits()).or_default() += 1;
            if counts.len() > max_support {
                return Err(Error::Unsupported(format!(
                    "Monte Carlo oracle needs a finite support of at most {max_support} values"
                )));
            }
        }
        let values: Vec<f64> = counts.keys().map(|&b| f64::from_bits(b)).collect();
        let weights: Vec<f64> = counts.values().map(|&c| c as f64).collect();
        Self::new(weights, encoder.encode_batch(store, &values)?)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn codes(&self) -> &[GaussianCode] {
        &self.codes
    }

    fn draw_component(&self, rng: &mut Rng) -> usize {
        let mut u = rng.uniform();
        for (i, w) in self.weights.iter().enumerate() {
            if u < *w {
                return i;
            }
            u -= w;
        }
        self.weights.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub bits: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate of `E[log p(u|x) / p(u)]` in bits.
///
/// Samples are processed in fixed chunks, each on its own derived stream,
/// so the result is the same with or without parallelism.
pub fn mc_oracle(mix: &Mixture, n_samples: usize, rng: &Rng) -> McEstimate {
    let refs: Vec<&GaussianCode> = mix.codes.iter().collect();
    let log_w: Vec<f64> = mix.weights.iter().map(|w| w.ln()).collect();
    let n_chunks = n_samples.div_ceil(CHUNK);
    let chunks: Vec<Vec<f64>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut r = rng.derive(c as u64);
            let len = CHUNK.min(n_samples - c * CHUNK);
            let d = mix.codes[0].dim();
            let mut comp = Vec::with_capacity(len);
            let mut data = Vec::with_capacity(len * d);
            for _ in 0..len {
                let m = mix.draw_component(&mut r);
                comp.push(m);
                data.extend(mix.codes[m].sample(&mut r));
            }
            let u = Tensor::matrix(len, d, data).expect("shape");
            let lp = log_density_matrix(&u, &refs);
            let mut terms = vec![0.0; refs.len()];
            (0..len)
                .map(|i| {
                    let row = lp.row(i);
                    for (t, (l, w)) in terms.iter_mut().zip(row.iter().zip(&log_w)) {
                        *t = l + w;
                    }
                    (row[comp[i]] - logsumexp(&terms)) / LN_2
                })
                .collect()
        })
        .collect();
    let vals: Vec<f64> = chunks.into_iter().flatten().collect();
    let n = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / n;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    McEstimate {
        bits: mean,
        stderr: (var / n).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_component_is_zero() {
        let mix = Mixture::uniform(vec![GaussianCode::prior(4)]).unwrap();
        let est = mc_oracle(&mix, 5000, &Rng::new(0));
        assert_eq!(est.bits, 0.0);
    }

    #[test]
    fn weights_are_normalised() {
        let mix = Mixture::new(vec![2.0, 6.0], vec![GaussianCode::prior(1); 2]).unwrap();
        assert_eq!(mix.weights(), &[0.25, 0.75]);
        assert!(Mixture::new(vec![-1.0, 1.0], vec![GaussianCode::prior(1); 2]).is_err());
    }
}
