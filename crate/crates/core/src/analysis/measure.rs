//! Re-measures checkpoints: per-channel MI bounds on a pool of inputs and
//! predictive information on held-out rows.

use std::path::Path;

use log::info;
use rayon::prelude::*;
use serde::Serialize;

use crate::diffcore::{ParamStore, Rng};
use crate::encoder::nats_to_bits;
use crate::error::{Error, Result};
use crate::miest::{estimate_bounds, DEFAULT_B, DEFAULT_K};
use crate::objective::{Dataset, DibModel, RunDir, TrainConfig, DEFAULT_EVAL_SAMPLES};

#[derive(Clone, Debug, PartialEq)]
pub struct MeasureConfig {
    /// Batch size of the bounds; capped at the pool size.
    pub k: usize,
    pub b: usize,
    pub eval_samples: usize,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            b: DEFAULT_B,
            eval_samples: DEFAULT_EVAL_SAMPLES,
            seed: 0,
            parallel: true,
        }
    }
}

/// Measurements of one checkpoint, all in bits.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckpointMeasure {
    pub step: u64,
    pub beta: f64,
    pub predictive_bits: f64,
    pub accuracy: f64,
    pub accuracy_mean_latent: f64,
    pub lower_bits: Vec<f64>,
    pub upper_bits: Vec<f64>,
    /// Pool-mean analytic KL per channel.
    pub kl_bits: Vec<f64>,
}

impl CheckpointMeasure {
    pub fn channels(&self) -> usize {
        self.lower_bits.len()
    }

    /// Midpoint of the bounds, clamped at zero.
    pub fn channel_bits(&self) -> Vec<f64> {
        self.lower_bits
            .iter()
            .zip(&self.upper_bits)
            .map(|(l, u)| (0.5 * (l + u)).max(0.0))
            .collect()
    }
}

/// Inputs shared by every checkpoint of a run.
pub struct MeasureContext<'a> {
    pub model: &'a DibModel,
    /// Rows whose codes form the MI pool.
    pub pool: &'a Dataset,
    /// Rows for predictive information and accuracy.
    pub eval: &'a Dataset,
    /// `H(Y)` of the training split, bits.
    pub h_y_bits: f64,
    pub cfg: &'a MeasureConfig,
}

pub fn measure_checkpoint(ctx: &MeasureContext<'_>, step: u64, beta: f64, store: &ParamStore) -> Result<CheckpointMeasure> {
    let root = Rng::new(ctx.cfg.seed).derive(step);
    let codes = ctx.model.encode_all(store, ctx.pool)?;
    let k = ctx.cfg.k.min(ctx.pool.rows());
    let mut lower_bits = Vec::with_capacity(codes.len());
    let mut upper_bits = Vec::with_capacity(codes.len());
    let mut kl_bits = Vec::with_capacity(codes.len());
    for (c, pool) in codes.iter().enumerate() {
        let r = estimate_bounds(pool, k, ctx.cfg.b, &root.derive(c as u64), ctx.cfg.parallel)?;
        lower_bits.push(r.lower_bits);
        upper_bits.push(r.upper_bits);
        kl_bits.push(nats_to_bits(pool.iter().map(|p| p.kl_to_prior()).sum::<f64>() / pool.len() as f64));
    }
    let mut prng = root.derive(u64::MAX);
    let pred = ctx
        .model
        .predictive_info(store, ctx.eval, ctx.h_y_bits, ctx.cfg.eval_samples, &mut prng)?;
    Ok(CheckpointMeasure {
        step,
        beta,
        predictive_bits: pred.bits,
        accuracy: pred.accuracy,
        accuracy_mean_latent: pred.accuracy_mean_latent,
        lower_bits,
        upper_bits,
        kl_bits,
    })
}

/// Measures every checkpoint the config promises; absent files are reported
/// together as [`Error::MissingCheckpoints`].
pub fn measure_run(run: &RunDir, cfg: &TrainConfig, ctx: &MeasureContext<'_>) -> Result<Vec<CheckpointMeasure>> {
    let expected = cfg.checkpoint_steps();
    let present = run.checkpoint_steps()?;
    let missing: Vec<u64> = expected.iter().copied().filter(|s| present.binary_search(s).is_err()).collect();
    if !missing.is_empty() {
        return Err(Error::MissingCheckpoints {
            dir: run.ckpt_dir(),
            steps: missing,
        });
    }
    let one = |&step: &u64| -> Result<CheckpointMeasure> {
        let store = run.load_checkpoint(step)?;
        let beta = cfg.schedule.beta_at(step - 1, cfg.train_steps);
        measure_checkpoint(ctx, step, beta, &store)
    };
    info!("measuring {} checkpoints", expected.len());
    let out: Result<Vec<_>> = if ctx.cfg.parallel {
        expected.par_iter().map(one).collect()
    } else {
        expected.iter().map(one).collect()
    };
    let out = out?;
    write_measure_csv(&run.measure_path(), &out)?;
    Ok(out)
}

pub fn write_measure_csv(path: &Path, rows: &[CheckpointMeasure]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let c = rows.first().map_or(0, |r| r.channels());
    let mut header: Vec<String> = ["step", "beta", "predictive_bits", "accuracy", "accuracy_mean_latent"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for j in 0..c {
        header.extend([format!("lower_{j}"), format!("upper_{j}"), format!("kl_{j}")]);
    }
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![
            r.step.to_string(),
            r.beta.to_string(),
            r.predictive_bits.to_string(),
            r.accuracy.to_string(),
            r.accuracy_mean_latent.to_string(),
        ];
        for j in 0..c {
            rec.extend([r.lower_bits[j].to_string(), r.upper_bits[j].to_string(), r.kl_bits[j].to_string()]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_measure_csv(path: &Path) -> Result<Vec<CheckpointMeasure>> {
    let mut r = csv::Reader::from_path(path)?;
    let c = r.headers()?.iter().filter(|h| h.starts_with("lower_")).count();
    let src = path.display().to_string();
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(&src, i + 2, format!("bad field {j}")))
        };
        let col = |j: usize, off: usize| num(5 + 3 * j + off);
        out.push(CheckpointMeasure {
            step: num(0)? as u64,
            beta: num(1)?,
            predictive_bits: num(2)?,
            accuracy: num(3)?,
            accuracy_mean_latent: num(4)?,
            lower_bits: (0..c).map(|j| col(j, 0)).collect::<Result<_>>()?,
            upper_bits: (0..c).map(|j| col(j, 1)).collect::<Result<_>>()?,
            kl_bits: (0..c).map(|j| col(j, 2)).collect::<Result<_>>()?,
        });
    }
    Ok(out)
}
