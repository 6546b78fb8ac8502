//! Per-channel stochastic encoders `x -> N(mu, diag(exp(log_var)))` and the
//! standard-normal prior they are penalised against.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use crate::diffcore::{Activation, Mlp, ParamStore, Rng, Tape, Tensor, Var};
use crate::error::{Error, Result};

pub const LOG_VAR_MIN: f64 = -20.0;
pub const LOG_VAR_MAX: f64 = 20.0;

pub fn nats_to_bits(nats: f64) -> f64 {
    nats / LN_2
}

pub fn bits_to_nats(bits: f64) -> f64 {
    bits * LN_2
}

/// Diagonal Gaussian in latent space.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianCode {
    pub mu: Vec<f64>,
    pub log_var: Vec<f64>,
}

impl GaussianCode {
    /// Builds a code, clamping `log_var` into `[LOG_VAR_MIN, LOG_VAR_MAX]`.
    pub fn new(mu: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        if mu.len() != log_var.len() {
            return Err(Error::Dimension {
                layer: "gaussian code".into(),
                expected: format!("log_var of length {}", mu.len()),
                got: log_var.len().to_string(),
            });
        }
        if mu.iter().chain(&log_var).any(|v| !v.is_finite()) {
            return Err(Error::domain("gaussian code parameters must be finite"));
        }
        let log_var = log_var
            .into_iter()
            .map(|v| v.clamp(LOG_VAR_MIN, LOG_VAR_MAX))
            .collect();
        Ok(Self { mu, log_var })
    }

    /// The prior `N(0, I)` in `dim` dimensions.
    pub fn prior(dim: usize) -> Self {
        Self {
            mu: vec![0.0; dim],
            log_var: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `KL(N(mu, sigma^2) || N(0, I))` in nats.
    pub fn kl_to_prior(&self) -> f64 {
        0.5 * self
            .mu
            .iter()
            .zip(&self.log_var)
            .map(|(&m, &lv)| m * m + lv.exp() - 1.0 - lv)
            .sum::<f64>()
    }

    /// Reparameterised draw `mu + exp(log_var / 2) * eps`.
    pub fn sample(&self, rng: &mut Rng) -> Vec<f64> {
        self.mu
            .iter()
            .zip(&self.log_var)
            .map(|(&m, &lv)| m + (0.5 * lv).exp() * rng.normal())
            .collect()
    }

    /// Log-density at `u`.
    pub fn log_density(&self, u: &[f64]) -> f64 {
        let mut acc = 0.0;
        for ((&m, &lv), &x) in self.mu.iter().zip(&self.log_var).zip(u) {
            let d = x - m;
            acc += d * d * (-lv).exp() + lv;
        }
        -0.5 * (acc + self.dim() as f64 * (2.0 * PI).ln())
    }
}

/// Log-density of `N(0, I)` at `u`.
pub fn prior_log_density(u: &[f64]) -> f64 {
    -0.5 * (u.iter().map(|x| x * x).sum::<f64>() + u.len() as f64 * (2.0 * PI).ln())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EncoderKind {
    /// One trainable `(mu, log_var)` pair; the mean flips sign with the input bit.
    BinaryTable,
    /// A private MLP mapping a scalar to `(mu, log_var)`.
    ScalarMlp,
    /// Like `ScalarMlp`, but every channel of this kind shares one network.
    SharedMlp,
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncoderKind::BinaryTable => "binary-table",
            EncoderKind::ScalarMlp => "scalar-mlp",
            EncoderKind::SharedMlp => "shared-mlp",
        })
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary-table" => Ok(EncoderKind::BinaryTable),
            "scalar-mlp" => Ok(EncoderKind::ScalarMlp),
            "shared-mlp" => Ok(EncoderKind::SharedMlp),
            _ => Err(Error::Config(format!("unknown encoder kind `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EncoderSpec {
    pub kind: EncoderKind,
    pub latent_dim: usize,
    /// Hidden widths of the MLP kinds.
    pub hidden: Vec<usize>,
    pub activation: Activation,
    /// Std of the final MLP layer's initial weights.
    pub head_init_std: f64,
    /// Initial magnitude of the binary-table mean.
    pub table_mu_init: f64,
}

impl EncoderSpec {
    pub fn binary_table(latent_dim: usize) -> Self {
        Self {
            kind: EncoderKind::BinaryTable,
            latent_dim,
            hidden: vec![],
            activation: Activation::Identity,
            head_init_std: 1e-2,
            table_mu_init: 1.0,
        }
    }

    pub fn scalar_mlp(latent_dim: usize, hidden: Vec<usize>) -> Self {
        Self {
            kind: EncoderKind::ScalarMlp,
            latent_dim,
            hidden,
            activation: Activation::Tanh,
            head_init_std: 1e-2,
            table_mu_init: 0.0,
        }
    }

    /// Defaults: `D = 8` for binary inputs, `D = 32` and two tanh layers of 128 for scalars.
    pub fn default_for(kind: EncoderKind) -> Self {
        match kind {
            EncoderKind::BinaryTable => Self::binary_table(8),
            EncoderKind::ScalarMlp => Self::scalar_mlp(32, vec![128, 128]),
            EncoderKind::SharedMlp => Self {
                kind,
                ..Self::scalar_mlp(32, vec![128, 128])
            },
        }
    }
}

/// One compression channel bound to its parameters in a [`ParamStore`].
#[derive(Clone, Debug, PartialEq)]
pub struct Encoder {
    pub spec: EncoderSpec,
    prefix: String,
    mlp: Option<Mlp>,
}

impl Encoder {
    /// `prefix` is ignored for [`EncoderKind::SharedMlp`], which always lives under `enc/shared`.
    pub fn new(spec: EncoderSpec, prefix: impl Into<String>) -> Self {
        let prefix = match spec.kind {
            EncoderKind::SharedMlp => "enc/shared".to_string(),
            _ => prefix.into(),
        };
        let mlp = match spec.kind {
            EncoderKind::BinaryTable => None,
            EncoderKind::ScalarMlp | EncoderKind::SharedMlp => {
                let mut widths = vec![1];
                widths.extend(&spec.hidden);
                widths.push(2 * spec.latent_dim);
                Some(Mlp::new(format!("{prefix}/mlp"), &widths, spec.activation, Activation::Identity))
            }
        };
        Self { spec, prefix, mlp }
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn latent_dim(&self) -> usize {
        self.spec.latent_dim
    }

    fn mu_path(&self) -> String {
        format!("{}/mu", self.prefix)
    }

    fn log_var_path(&self) -> String {
        format!("{}/log_var", self.prefix)
    }

    /// Creates this encoder's parameters unless they already exist.
    pub fn init(&self, store: &mut ParamStore, rng: &mut Rng) {
        let d = self.spec.latent_dim;
        match &self.mlp {
            None => {
                if store.contains(&self.mu_path()) {
                    return;
                }
                let mu: Vec<f64> = (0..d)
                    .map(|_| self.spec.table_mu_init + 1e-2 * rng.normal())
                    .collect();
                store.insert(self.mu_path(), Tensor::matrix(1, d, mu).expect("shape"));
                store.insert(self.log_var_path(), Tensor::zeros(&[1, d]));
            }
            Some(mlp) => {
                if store.contains(&mlp.weight_path(0)) {
                    return;
                }
                mlp.init(store, rng, Some(self.spec.head_init_std));
            }
        }
    }

    fn check_inputs(&self, xs: &[f64]) -> Result<()> {
        match self.spec.kind {
            EncoderKind::BinaryTable => {
                if let Some(x) = xs.iter().find(|&&x| x != 0.0 && x != 1.0) {
                    return Err(Error::domain(format!("binary channel got input {x}")));
                }
            }
            _ => {
                if let Some(x) = xs.iter().find(|x| !x.is_finite()) {
                    return Err(Error::domain(format!("scalar channel got input {x}")));
                }
            }
        }
        Ok(())
    }

    /// Records the encoder on `tape` for a batch of inputs; returns `(mu, log_var)`, each `[n, D]`.
    pub fn forward(&self, tape: &mut Tape, store: &ParamStore, xs: &[f64]) -> Result<(Var, Var)> {
        self.check_inputs(xs)?;
        let n = xs.len();
        let d = self.spec.latent_dim;
        match &self.mlp {
            None => {
                let signs: Vec<f64> = xs.iter().map(|&x| 2.0 * x - 1.0).collect();
                let s = tape.constant(Tensor::column(&signs));
                let ones = tape.constant(Tensor::filled(&[n, 1], 1.0));
                let mu_p = tape.param(store, &self.mu_path())?;
                let lv_p = tape.param(store, &self.log_var_path())?;
                let mu = tape.matmul(s, mu_p);
                let lv = tape.matmul(ones, lv_p);
                let lv = tape.clamp(lv, LOG_VAR_MIN, LOG_VAR_MAX);
                Ok((mu, lv))
            }
            Some(mlp) => {
                let x = tape.constant(Tensor::column(xs));
                let out = mlp.forward(tape, store, x)?;
                let mu = tape.slice_cols(out, 0, d);
                let lv = tape.slice_cols(out, d, 2 * d);
                let lv = tape.clamp(lv, LOG_VAR_MIN, LOG_VAR_MAX);
                Ok((mu, lv))
            }
        }
    }

    /// Codes for a batch of inputs, without recording.
    pub fn encode_batch(&self, store: &ParamStore, xs: &[f64]) -> Result<Vec<GaussianCode>> {
        self.check_inputs(xs)?;
        let d = self.spec.latent_dim;
        match &self.mlp {
            None => {
                let mu = store.get(&self.mu_path())?.data().to_vec();
                let lv = store.get(&self.log_var_path())?.data().to_vec();
                xs.iter()
                    .map(|&x| {
                        let s = 2.0 * x - 1.0;
                        GaussianCode::new(mu.iter().map(|m| s * m).collect(), lv.clone())
                    })
                    .collect()
            }
            Some(mlp) => {
                let out = mlp.apply(store, &Tensor::column(xs))?;
                (0..xs.len())
                    .map(|i| {
                        let row = out.row(i);
                        GaussianCode::new(row[..d].to_vec(), row[d..].to_vec())
                    })
                    .collect()
            }
        }
    }

    pub fn encode(&self, store: &ParamStore, x: f64) -> Result<GaussianCode> {
        Ok(self.encode_batch(store, &[x])?.remove(0))
    }
}

/// Records `mu + exp(log_var / 2) * eps` with fixed noise `eps`.
pub fn tape_sample(tape: &mut Tape, mu: Var, log_var: Var, eps: Tensor) -> Var {
    let half = tape.scale(log_var, 0.5);
    let sigma = tape.exp(half);
    let e = tape.constant(eps);
    let noise = tape.mul(sigma, e);
    tape.add(mu, noise)
}

/// Records the batch-mean KL to the prior, in nats.
pub fn tape_mean_kl(tape: &mut Tape, mu: Var, log_var: Var) -> Var {
    let n = tape.value(mu).rows() as f64;
    let sq = tape.square(mu);
    let var = tape.exp(log_var);
    let t = tape.add(sq, var);
    let t = tape.sub(t, log_var);
    let t = tape.add_scalar(t, -1.0);
    let s = tape.sum_all(t);
    tape.scale(s, 0.5 / n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prior_has_zero_kl() {
        assert_eq!(GaussianCode::prior(8).kl_to_prior(), 0.0);
    }

    #[test]
    fn unit_mean_shift_is_half_nat() {
        let mut mu = vec![0.0; 8];
        mu[0] = 1.0;
        let c = GaussianCode::new(mu, vec![0.0; 8]).unwrap();
        assert!((c.kl_to_prior() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn log_var_is_clamped() {
        let c = GaussianCode::new(vec![0.0], vec![-100.0]).unwrap();
        assert_eq!(c.log_var[0], LOG_VAR_MIN);
        assert!(GaussianCode::new(vec![f64::NAN], vec![0.0]).is_err());
    }

    #[test]
    fn binary_codes_are_negations() {
        let enc = Encoder::new(EncoderSpec::binary_table(8), "enc/ch00");
        let mut store = ParamStore::new();
        enc.init(&mut store, &mut Rng::new(1));
        let c = enc.encode_batch(&store, &[0.0, 1.0]).unwrap();
        for (a, b) in c[0].mu.iter().zip(&c[1].mu) {
            assert_eq!(*a, -*b);
        }
        assert_eq!(c[0].log_var, c[1].log_var);
        assert!(matches!(enc.encode(&store, 0.5), Err(Error::Domain(_))));
    }

    #[test]
    fn fresh_scalar_encoder_is_near_prior() {
        let enc = Encoder::new(EncoderSpec::default_for(EncoderKind::ScalarMlp), "enc/ch00");
        let mut store = ParamStore::new();
        enc.init(&mut store, &mut Rng::new(2));
        for x in [-2.0, 0.0, 1.3] {
            let c = enc.encode(&store, x).unwrap();
            assert!(c.kl_to_prior() < 0.01, "kl {}", c.kl_to_prior());
            assert_eq!(c, enc.encode(&store, x).unwrap());
        }
        assert!(matches!(enc.encode(&store, f64::INFINITY), Err(Error::Domain(_))));
    }

    #[test]
    fn shared_encoders_share_parameters() {
        let spec = EncoderSpec::default_for(EncoderKind::SharedMlp);
        let a = Encoder::new(spec.clone(), "enc/ch00");
        let b = Encoder::new(spec, "enc/ch01");
        let mut store = ParamStore::new();
        let mut rng = Rng::new(0);
        a.init(&mut store, &mut rng);
        let n = store.len();
        b.init(&mut store, &mut rng);
        assert_eq!(store.len(), n);
        assert_eq!(a.encode(&store, 0.7).unwrap(), b.encode(&store, 0.7).unwrap());
    }

    #[test]
    fn tape_forward_matches_plain_encoding() {
        for spec in [EncoderSpec::binary_table(4), EncoderSpec::scalar_mlp(3, vec![6])] {
            let enc = Encoder::new(spec, "e");
            let mut store = ParamStore::new();
            enc.init(&mut store, &mut Rng::new(4));
            let xs = [0.0, 1.0, 1.0];
            let mut tape = Tape::new();
            let (mu, lv) = enc.forward(&mut tape, &store, &xs).unwrap();
            let codes = enc.encode_batch(&store, &xs).unwrap();
            for (i, c) in codes.iter().enumerate() {
                assert_eq!(tape.value(mu).row(i), c.mu.as_slice());
                assert_eq!(tape.value(lv).row(i), c.log_var.as_slice());
            }
            let kl = tape_mean_kl(&mut tape, mu, lv);
            let expect = codes.iter().map(|c| c.kl_to_prior()).sum::<f64>() / 3.0;
            assert!((tape.value(kl).item() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_variance_sample_hits_mean() {
        let c = GaussianCode::new(vec![1.5, -2.0], vec![-20.0, -20.0]).unwrap();
        let u = c.sample(&mut Rng::new(0));
        for (a, b) in u.iter().zip(&c.mu) {
            assert!((a - b).abs() < 1e-3);
        }
    }
}
