//! Encoders plus decoder, the distributed bottleneck loss, and the
//! predictive-information estimate.

use std::f64::consts::LN_2;

use serde::Serialize;

use super::config::TrainConfig;
use super::data::{Batch, Dataset};
use crate::diffcore::{sample_standard_normal, Mlp, ParamStore, Rng, Tape, Tensor, Var};
use crate::diffcore::tape::softplus;
use crate::encoder::{tape_mean_kl, tape_sample, Encoder, GaussianCode};
use crate::error::{Error, Result};

/// Latent samples per point when estimating predictive information.
pub const DEFAULT_EVAL_SAMPLES: usize = 8;

/// Channel encoders and the decoder; parameters live in a separate store.
#[derive(Clone, Debug)]
pub struct DibModel {
    pub encoders: Vec<Encoder>,
    pub decoder: Mlp,
}

/// The recorded loss and its parts.
#[derive(Clone, Debug)]
pub struct LossGraph {
    pub loss: Var,
    /// Batch-mean KL per channel, nats.
    pub kl: Vec<Var>,
    /// Mean cross-entropy, nats.
    pub ce: Var,
    pub logits: Var,
}

/// Numeric values of one loss evaluation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LossValue {
    pub loss: f64,
    pub kl_nats: Vec<f64>,
    pub ce_nats: f64,
    pub accuracy: f64,
}

impl DibModel {
    pub fn new(cfg: &TrainConfig) -> Self {
        let encoders = (0..cfg.channels)
            .map(|i| Encoder::new(cfg.encoder.clone(), channel_prefix(i)))
            .collect();
        let mut widths = vec![cfg.channels * cfg.encoder.latent_dim];
        widths.extend(&cfg.decoder_hidden);
        widths.push(1);
        let decoder = Mlp::new(
            "dec",
            &widths,
            cfg.decoder_activation,
            crate::diffcore::Activation::Identity,
        );
        Self { encoders, decoder }
    }

    pub fn init(&self, store: &mut ParamStore, rng: &mut Rng) {
        for e in &self.encoders {
            e.init(store, rng);
        }
        self.decoder.init(store, rng, None);
    }

    pub fn channels(&self) -> usize {
        self.encoders.len()
    }

    fn check_batch(&self, batch: &Batch) -> Result<()> {
        if batch.x.len() != self.channels() {
            return Err(Error::Dimension {
                layer: "batch channels".into(),
                expected: self.channels().to_string(),
                got: batch.x.len().to_string(),
            });
        }
        if batch.is_empty() {
            return Err(Error::contract("empty batch"));
        }
        Ok(())
    }

    /// Records `beta * sum_i mean-KL_i + mean CE` with one latent sample per point.
    pub fn loss_graph(
        &self,
        tape: &mut Tape,
        store: &ParamStore,
        batch: &Batch,
        beta: f64,
        rng: &mut Rng,
    ) -> Result<LossGraph> {
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::domain(format!("beta must be >= 0, got {beta}")));
        }
        self.check_batch(batch)?;
        let n = batch.len();
        let mut us = Vec::with_capacity(self.channels());
        let mut kls = Vec::with_capacity(self.channels());
        for (enc, xs) in self.encoders.iter().zip(&batch.x) {
            let (mu, lv) = enc.forward(tape, store, xs)?;
            let eps = sample_standard_normal(rng, &[n, enc.latent_dim()]);
            us.push(tape_sample(tape, mu, lv, eps));
            kls.push(tape_mean_kl(tape, mu, lv));
        }
        let u = tape.concat_cols(&us);
        let logits = self.decoder.forward(tape, store, u)?;
        let ce = tape.bce_with_logits(logits, &batch.y);
        let mut total = kls[0];
        for &k in &kls[1..] {
            total = tape.add(total, k);
        }
        let penalty = tape.scale(total, beta);
        let loss = tape.add(penalty, ce);
        Ok(LossGraph {
            loss,
            kl: kls,
            ce,
            logits,
        })
    }

    /// Evaluates the loss once without keeping the graph.
    pub fn dib_loss(&self, store: &ParamStore, batch: &Batch, beta: f64, rng: &mut Rng) -> Result<LossValue> {
        let mut tape = Tape::new();
        let g = self.loss_graph(&mut tape, store, batch, beta, rng)?;
        Ok(self.loss_value(&tape, &g, &batch.y))
    }

    pub fn loss_value(&self, tape: &Tape, g: &LossGraph, y: &[f64]) -> LossValue {
        let logits = tape.value(g.logits).data();
        let correct = logits
            .iter()
            .zip(y)
            .filter(|(&z, &t)| (z > 0.0) == (t > 0.5))
            .count();
        LossValue {
            loss: tape.value(g.loss).item(),
            kl_nats: g.kl.iter().map(|&k| tape.value(k).item()).collect(),
            ce_nats: tape.value(g.ce).item(),
            accuracy: correct as f64 / y.len() as f64,
        }
    }

    /// Codes of every row, per channel.
    pub fn encode_all(&self, store: &ParamStore, data: &Dataset) -> Result<Vec<Vec<GaussianCode>>> {
        self.encoders
            .iter()
            .enumerate()
            .map(|(i, e)| e.encode_batch(store, data.column(i)))
            .collect()
    }

    /// Decoder logits for concatenated latents `[n, C * D]`.
    pub fn decode(&self, store: &ParamStore, u: &Tensor) -> Result<Vec<f64>> {
        Ok(self.decoder.apply(store, u)?.into_data())
    }

    /// `H(Y) - CE` in bits, with `CE` averaged over `samples` latent draws per
    /// row. `h_y_bits` is the label entropy of the training split.
    pub fn predictive_info(
        &self,
        store: &ParamStore,
        data: &Dataset,
        h_y_bits: f64,
        samples: usize,
        rng: &mut Rng,
    ) -> Result<PredictiveEstimate> {
        if data.is_empty() {
            return Err(Error::contract("predictive information of an empty dataset"));
        }
        if samples == 0 {
            return Err(Error::contract("at least one latent sample per row"));
        }
        let codes = self.encode_all(store, data)?;
        let n = data.rows();
        let width: usize = codes.iter().map(|c| c[0].dim()).sum();
        let y = data.labels();

        let assemble = |pick: &mut dyn FnMut(&GaussianCode) -> Vec<f64>| {
            let mut buf = Vec::with_capacity(n * width);
            for r in 0..n {
                for ch in &codes {
                    buf.extend(pick(&ch[r]));
                }
            }
            Tensor::matrix(n, width, buf).expect("latent shape")
        };

        let mut ce = 0.0;
        let mut correct = 0usize;
        for _ in 0..samples {
            let u = assemble(&mut |c| c.sample(rng));
            let z = self.decode(store, &u)?;
            for (zi, ti) in z.iter().zip(y) {
                ce += softplus(*zi) - ti * zi;
                correct += ((*zi > 0.0) == (*ti > 0.5)) as usize;
            }
        }
        let ce_nats = ce / (n * samples) as f64;
        let mean_u = assemble(&mut |c| c.mu.clone());
        let z = self.decode(store, &mean_u)?;
        let mean_correct = z.iter().zip(y).filter(|(&zi, &ti)| (zi > 0.0) == (ti > 0.5)).count();
        Ok(PredictiveEstimate {
            bits: (h_y_bits - ce_nats / LN_2).max(0.0),
            ce_bits: ce_nats / LN_2,
            accuracy: correct as f64 / (n * samples) as f64,
            accuracy_mean_latent: mean_correct as f64 / n as f64,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PredictiveEstimate {
    /// `max(0, H(Y) - CE)` in bits.
    pub bits: f64,
    pub ce_bits: f64,
    /// Accuracy with sampled latents, averaged over draws.
    pub accuracy: f64,
    /// Accuracy with every latent replaced by its mean.
    pub accuracy_mean_latent: f64,
}

pub fn channel_prefix(i: usize) -> String {
    format!("enc/ch{i:03}")
}
