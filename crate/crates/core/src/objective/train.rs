use std::path::Path;

use log::{debug, info};
use serde::{Deserialize, Serialize};

use super::config::{Batching, TrainConfig};
use super::data::Dataset;
use super::model::DibModel;
use super::rundir::RunDir;
use crate::diffcore::{AdamState, ParamStore, Rng, Tape};
use crate::error::{Error, Result};

/// One row of the training log. KL values are batch means in nats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLogRecord {
    pub step: u64,
    pub beta: f64,
    pub kl_nats: Vec<f64>,
    pub ce_nats: f64,
    pub accuracy: f64,
    pub checkpoint: bool,
}

impl TrainLogRecord {
    pub fn total_kl_nats(&self) -> f64 {
        self.kl_nats.iter().sum()
    }
}

/// Receives parameter snapshots during training.
pub trait CheckpointSink {
    fn checkpoint(&mut self, step: u64, beta: f64, params: &ParamStore) -> Result<()>;
}

impl CheckpointSink for RunDir {
    fn checkpoint(&mut self, step: u64, _beta: f64, params: &ParamStore) -> Result<()> {
        self.save_checkpoint(step, params)
    }
}

/// Keeps snapshots in memory; fine for small models.
#[derive(Default)]
pub struct MemorySink {
    pub snapshots: Vec<(u64, f64, ParamStore)>,
}

impl CheckpointSink for MemorySink {
    fn checkpoint(&mut self, step: u64, beta: f64, params: &ParamStore) -> Result<()> {
        self.snapshots.push((step, beta, params.clone()));
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub log: Vec<TrainLogRecord>,
    /// `(step, beta)` of every emitted checkpoint.
    pub checkpoints: Vec<(u64, f64)>,
    pub params: ParamStore,
}

struct BatchSampler {
    mode: Batching,
    n: usize,
    size: usize,
    perm: Vec<usize>,
    pos: usize,
}

impl BatchSampler {
    fn new(mode: Batching, n: usize, size: usize) -> Self {
        Self {
            mode,
            n,
            size,
            perm: (0..n).collect(),
            pos: n,
        }
    }

    fn next(&mut self, rng: &mut Rng) -> Vec<usize> {
        match self.mode {
            Batching::Random => (0..self.size).map(|_| rng.below(self.n)).collect(),
            Batching::Epochs => {
                if self.pos >= self.n {
                    rng.shuffle(&mut self.perm);
                    self.pos = 0;
                }
                let end = (self.pos + self.size).min(self.n);
                let idx = self.perm[self.pos..end].to_vec();
                self.pos = end;
                idx
            }
        }
    }
}

/// Runs the annealed sweep on `train`, handing a snapshot to `sink` at each
/// checkpoint step. A non-finite loss aborts with the last good checkpoint.
pub fn train_sweep(cfg: &TrainConfig, train: &Dataset, sink: &mut dyn CheckpointSink) -> Result<TrainOutcome> {
    cfg.validate()?;
    if train.channels() != cfg.channels {
        return Err(Error::Dimension {
            layer: "training data channels".into(),
            expected: cfg.channels.to_string(),
            got: train.channels().to_string(),
        });
    }
    if train.is_empty() {
        return Err(Error::contract("empty training set"));
    }
    let model = DibModel::new(cfg);
    let root = Rng::new(cfg.seed);
    let mut init_rng = root.derive(1);
    let mut batch_rng = root.derive(2);
    let mut noise_rng = root.derive(3);

    let mut store = ParamStore::new();
    model.init(&mut store, &mut init_rng);
    let mut adam = AdamState::new(cfg.lr);
    let mut sampler = BatchSampler::new(cfg.batching, train.rows(), cfg.batch_size);

    let ckpt_steps = cfg.checkpoint_steps();
    let mut next_ckpt = 0;
    let mut last_good = None;
    let mut log = Vec::new();
    let mut checkpoints = Vec::new();

    for s in 0..cfg.train_steps {
        let beta = cfg.schedule.beta_at(s, cfg.train_steps);
        let batch = train.gather(&sampler.next(&mut batch_rng));
        let mut tape = Tape::new();
        let g = model.loss_graph(&mut tape, &store, &batch, beta, &mut noise_rng)?;
        let value = model.loss_value(&tape, &g, &batch.y);
        if !value.loss.is_finite() {
            return Err(Error::Diverged {
                step: s + 1,
                last_checkpoint: last_good,
            });
        }
        store.zero_grad();
        tape.backward(g.loss, &mut store)?;
        adam.step(&mut store).map_err(|e| match e {
            Error::NonFiniteGradient { .. } => Error::Diverged {
                step: s + 1,
                last_checkpoint: last_good,
            },
            other => other,
        })?;

        let step = s + 1;
        let is_ckpt = ckpt_steps.get(next_ckpt) == Some(&step);
        if is_ckpt || step % cfg.log_every == 0 || step == 1 {
            log.push(TrainLogRecord {
                step,
                beta,
                kl_nats: value.kl_nats.clone(),
                ce_nats: value.ce_nats,
                accuracy: value.accuracy,
                checkpoint: is_ckpt,
            });
        }
        if is_ckpt {
            sink.checkpoint(step, beta, &store)?;
            checkpoints.push((step, beta));
            last_good = Some(step);
            next_ckpt += 1;
            debug!(
                "step {step} beta {beta:.3e} kl {:.4} ce {:.4} acc {:.3}",
                value.kl_nats.iter().sum::<f64>(),
                value.ce_nats,
                value.accuracy
            );
        }
        if step % (cfg.train_steps / 10).max(1) == 0 {
            info!("training {step}/{} beta {beta:.3e} ce {:.4}", cfg.train_steps, value.ce_nats);
        }
    }
    Ok(TrainOutcome {
        log,
        checkpoints,
        params: store,
    })
}

/// Writes `config.toml`, trains into `run`, and writes `log.csv`.
pub fn train_into(cfg: &TrainConfig, train: &Dataset, run: &mut RunDir) -> Result<TrainOutcome> {
    let mut kv = crate::kv::KvMap::new("config");
    cfg.write_kv(&mut kv);
    run.write_config(&kv)?;
    let out = train_sweep(cfg, train, run)?;
    write_log(&run.log_path(), &out.log)?;
    Ok(out)
}

pub fn write_log(path: &Path, log: &[TrainLogRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let channels = log.first().map_or(0, |r| r.kl_nats.len());
    let mut header = vec!["step".to_string(), "beta".into()];
    header.extend((0..channels).map(|i| format!("kl_nats_{i}")));
    header.extend(["ce_nats".into(), "accuracy".into(), "checkpoint".into()]);
    w.write_record(&header)?;
    for r in log {
        let mut row = vec![r.step.to_string(), r.beta.to_string()];
        row.extend(r.kl_nats.iter().map(|k| k.to_string()));
        row.extend([r.ce_nats.to_string(), r.accuracy.to_string(), (r.checkpoint as u8).to_string()]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_log(path: &Path) -> Result<Vec<TrainLogRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let channels = header.iter().filter(|h| h.starts_with("kl_nats_")).count();
    let src = path.display().to_string();
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let num = |j: usize| -> Result<f64> {
            rec.get(j)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::parse(&src, line, format!("bad field {j}")))
        };
        out.push(TrainLogRecord {
            step: num(0)? as u64,
            beta: num(1)?,
            kl_nats: (0..channels).map(|c| num(2 + c)).collect::<Result<_>>()?,
            ce_nats: num(2 + channels)?,
            accuracy: num(3 + channels)?,
            checkpoint: num(4 + channels)? != 0.0,
        });
    }
    Ok(out)
}
