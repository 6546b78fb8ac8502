use std::str::FromStr;

use super::schedule::BetaSchedule;
use crate::diffcore::Activation;
use crate::encoder::{EncoderKind, EncoderSpec};
use crate::error::{Error, Result};
use crate::kv::{join_list, KvMap};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Batching {
    /// Each batch is drawn uniformly with replacement from the training rows.
    Random,
    /// Shuffled passes over the training rows; the schedule advances per epoch.
    Epochs,
}

impl FromStr for Batching {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Batching::Random),
            "epochs" => Ok(Batching::Epochs),
            _ => Err(Error::Config(format!("unknown batching `{s}`"))),
        }
    }
}

impl std::fmt::Display for Batching {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Batching::Random => "random",
            Batching::Epochs => "epochs",
        })
    }
}

/// Everything that determines a training run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub channels: usize,
    /// Applied to every channel; each channel still owns its parameters
    /// unless the kind is shared.
    pub encoder: EncoderSpec,
    pub decoder_hidden: Vec<usize>,
    pub decoder_activation: Activation,
    pub schedule: BetaSchedule,
    pub train_steps: u64,
    pub batch_size: usize,
    pub batching: Batching,
    pub lr: f64,
    pub seed: u64,
    /// Number of evenly spaced checkpoints; the last one is the final step.
    pub checkpoints: usize,
    pub log_every: u64,
}

impl TrainConfig {
    /// Binary-table channels, 3x256 leaky-ReLU(0.3) decoder, beta 5e-4 -> 5
    /// over 5e4 steps of 512 random rows, Adam at 1e-3.
    pub fn circuit(channels: usize) -> Self {
        let steps = 50_000;
        Self {
            channels,
            encoder: EncoderSpec::default_for(EncoderKind::BinaryTable),
            decoder_hidden: vec![256, 256, 256],
            decoder_activation: Activation::LeakyRelu(0.3),
            schedule: BetaSchedule::new(5e-4, 5.0, steps).expect("valid defaults"),
            train_steps: steps,
            batch_size: 512,
            batching: Batching::Random,
            lr: 1e-3,
            seed: 0,
            checkpoints: 100,
            log_every: 10,
        }
    }

    /// Scalar-MLP channels (2x128 tanh, D = 32), 3x256 tanh decoder, beta
    /// 1e-6 -> 1 over 250 epochs of batch 256, Adam at 1e-4.
    pub fn glass(channels: usize, n_train: usize) -> Self {
        let epochs = 250;
        let mut cfg = Self {
            channels,
            encoder: EncoderSpec::default_for(EncoderKind::ScalarMlp),
            decoder_hidden: vec![256, 256, 256],
            decoder_activation: Activation::Tanh,
            schedule: BetaSchedule::new(1e-6, 1.0, epochs).expect("valid defaults"),
            train_steps: 0,
            batch_size: 256,
            batching: Batching::Epochs,
            lr: 1e-4,
            seed: 0,
            checkpoints: 100,
            log_every: 10,
        };
        cfg.set_epochs(epochs, n_train);
        cfg
    }

    pub fn steps_per_epoch(&self, n_train: usize) -> u64 {
        n_train.div_ceil(self.batch_size.max(1)).max(1) as u64
    }

    /// Sets the schedule length to `epochs` and the step count to match.
    pub fn set_epochs(&mut self, epochs: u64, n_train: usize) {
        self.schedule.steps = epochs.max(1);
        self.train_steps = self.schedule.steps * self.steps_per_epoch(n_train);
    }

    /// Sets a step-driven schedule of `steps` updates.
    pub fn set_steps(&mut self, steps: u64) {
        self.schedule.steps = steps.max(1);
        self.train_steps = steps;
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.channels == 0 {
            return bad("at least one channel is required".into());
        }
        if self.encoder.latent_dim == 0 {
            return bad("latent_dim must be positive".into());
        }
        if self.batch_size == 0 || self.train_steps == 0 {
            return bad("batch_size and train_steps must be positive".into());
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.checkpoints == 0 || self.log_every == 0 {
            return bad("checkpoints and log_every must be positive".into());
        }
        BetaSchedule::new(self.schedule.beta_start, self.schedule.beta_end, self.schedule.steps)?;
        Ok(())
    }

    /// Steps after which a checkpoint is written, strictly increasing, ending
    /// at `train_steps`.
    pub fn checkpoint_steps(&self) -> Vec<u64> {
        let n = self.checkpoints as u64;
        let mut v: Vec<u64> = (1..=n)
            .map(|i| (i as u128 * self.train_steps as u128 / n as u128) as u64)
            .filter(|&s| s > 0)
            .collect();
        v.dedup();
        v
    }

    pub const KEYS: [&'static str; 19] = [
        "channels",
        "encoder_kind",
        "latent_dim",
        "encoder_hidden",
        "encoder_activation",
        "head_init_std",
        "table_mu_init",
        "decoder_hidden",
        "decoder_activation",
        "beta_start",
        "beta_end",
        "schedule_steps",
        "train_steps",
        "batch_size",
        "batching",
        "lr",
        "seed",
        "checkpoints",
        "log_every",
    ];

    pub fn write_kv(&self, kv: &mut KvMap) {
        kv.set("channels", self.channels);
        kv.set("encoder_kind", self.encoder.kind);
        kv.set("latent_dim", self.encoder.latent_dim);
        kv.set("encoder_hidden", join_list(&self.encoder.hidden));
        kv.set("encoder_activation", self.encoder.activation);
        kv.set("head_init_std", self.encoder.head_init_std);
        kv.set("table_mu_init", self.encoder.table_mu_init);
        kv.set("decoder_hidden", join_list(&self.decoder_hidden));
        kv.set("decoder_activation", self.decoder_activation);
        kv.set("beta_start", self.schedule.beta_start);
        kv.set("beta_end", self.schedule.beta_end);
        kv.set("schedule_steps", self.schedule.steps);
        kv.set("train_steps", self.train_steps);
        kv.set("batch_size", self.batch_size);
        kv.set("batching", self.batching);
        kv.set("lr", self.lr);
        kv.set("seed", self.seed);
        kv.set("checkpoints", self.checkpoints);
        kv.set("log_every", self.log_every);
    }

    /// Overrides the fields of `self` present in `kv`.
    pub fn apply_kv(&mut self, kv: &KvMap) -> Result<()> {
        if let Some(v) = kv.get("channels")? {
            self.channels = v;
        }
        if let Some(k) = kv.get_str("encoder_kind") {
            let kind: EncoderKind = k.parse()?;
            if kind != self.encoder.kind {
                self.encoder = EncoderSpec::default_for(kind);
            }
        }
        if let Some(v) = kv.get("latent_dim")? {
            self.encoder.latent_dim = v;
        }
        if let Some(v) = kv.get_list("encoder_hidden")? {
            self.encoder.hidden = v;
        }
        if let Some(s) = kv.get_str("encoder_activation") {
            self.encoder.activation = s.parse()?;
        }
        if let Some(v) = kv.get("head_init_std")? {
            self.encoder.head_init_std = v;
        }
        if let Some(v) = kv.get("table_mu_init")? {
            self.encoder.table_mu_init = v;
        }
        if let Some(v) = kv.get_list("decoder_hidden")? {
            self.decoder_hidden = v;
        }
        if let Some(s) = kv.get_str("decoder_activation") {
            self.decoder_activation = s.parse()?;
        }
        if let Some(v) = kv.get("beta_start")? {
            self.schedule.beta_start = v;
        }
        if let Some(v) = kv.get("beta_end")? {
            self.schedule.beta_end = v;
        }
        if let Some(v) = kv.get("schedule_steps")? {
            self.schedule.steps = v;
        }
        if let Some(v) = kv.get("train_steps")? {
            self.train_steps = v;
        }
        if let Some(v) = kv.get("batch_size")? {
            self.batch_size = v;
        }
        if let Some(s) = kv.get_str("batching") {
            self.batching = s.parse()?;
        }
        if let Some(v) = kv.get("lr")? {
            self.lr = v;
        }
        if let Some(v) = kv.get("seed")? {
            self.seed = v;
        }
        if let Some(v) = kv.get("checkpoints")? {
            self.checkpoints = v;
        }
        if let Some(v) = kv.get("log_every")? {
            self.log_every = v;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_roundtrip() {
        let mut cfg = TrainConfig::glass(100, 1000);
        cfg.seed = 7;
        cfg.decoder_activation = Activation::LeakyRelu(0.3);
        let mut kv = KvMap::new("t");
        cfg.write_kv(&mut kv);
        let parsed = KvMap::parse(&kv.to_text(), "t").unwrap();
        parsed.check_known(&TrainConfig::KEYS).unwrap();
        let mut back = TrainConfig::circuit(1);
        back.apply_kv(&parsed).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn checkpoints_end_at_last_step() {
        let cfg = TrainConfig::circuit(10);
        let c = cfg.checkpoint_steps();
        assert_eq!(c.len(), 100);
        assert_eq!(*c.last().unwrap(), cfg.train_steps);
        assert!(c.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn glass_schedule_counts_epochs() {
        let cfg = TrainConfig::glass(100, 1000);
        assert_eq!(cfg.schedule.steps, 250);
        assert_eq!(cfg.train_steps, 250 * 4);
        cfg.validate().unwrap();
    }
}
