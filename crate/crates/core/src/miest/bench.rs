//! Synthetic benchmark for the bounds: `X` uniform over `M = 2^H` outcomes,
//! outcome `m` encoded as `N(d e_m, I)`.

use std::io::Write;

use serde::Serialize;

use super::bounds::estimate_bounds;
use super::oracle::{mc_oracle, Mixture, DEFAULT_MC_SAMPLES};
use crate::diffcore::Rng;
use crate::encoder::GaussianCode;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalScheme {
    h_bits: u32,
    d: f64,
    latent_dim: usize,
}

impl OrthogonalScheme {
    pub fn new(h_bits: u32, d: f64, latent_dim: usize) -> Result<Self> {
        let m = 1usize
            .checked_shl(h_bits)
            .ok_or_else(|| Error::contract(format!("H = {h_bits} bits is too large")))?;
        if latent_dim < m {
            return Err(Error::contract(format!(
                "orthogonal scheme with {m} outcomes needs latent dim >= {m}, got {latent_dim}"
            )));
        }
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::domain(format!("separation must be >= 0, got {d}")));
        }
        Ok(Self {
            h_bits,
            d,
            latent_dim,
        })
    }

    pub fn support(&self) -> usize {
        1 << self.h_bits
    }

    /// The code of outcome `m`.
    pub fn code(&self, m: usize) -> GaussianCode {
        let mut mu = vec![0.0; self.latent_dim];
        mu[m] = self.d;
        GaussianCode {
            mu,
            log_var: vec![0.0; self.latent_dim],
        }
    }

    pub fn codes(&self) -> Vec<GaussianCode> {
        (0..self.support()).map(|m| self.code(m)).collect()
    }

    pub fn mixture(&self) -> Mixture {
        Mixture::uniform(self.codes()).expect("nonempty support")
    }
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub h_bits: Vec<u32>,
    pub d_grid: Vec<f64>,
    pub k_grid: Vec<usize>,
    pub b: usize,
    pub dataset_size: usize,
    pub mc_samples: usize,
    /// `None` uses `max(32, 2^H)`.
    pub latent_dim: Option<usize>,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            h_bits: vec![1, 2, 4, 6],
            d_grid: vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 8.0, 10.0],
            k_grid: vec![64, 256, 1024],
            b: 256,
            dataset_size: 1024,
            mc_samples: DEFAULT_MC_SAMPLES,
            latent_dim: None,
            seed: 0,
            parallel: true,
        }
    }
}

impl BenchConfig {
    /// Reduced protocol with `B = 32`.
    pub fn quick() -> Self {
        Self {
            b: 32,
            ..Self::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    #[serde(rename = "H_bits")]
    pub h_bits: u32,
    pub d: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "B")]
    pub b: usize,
    pub lower_bits: f64,
    pub lower_std: f64,
    pub upper_bits: f64,
    pub upper_std: f64,
    pub mc_bits: f64,
    pub mc_stderr: f64,
}

/// Absolute slack for float round-off in sandwich checks.
pub const ROUNDOFF_BITS: f64 = 1e-9;

pub const BENCH_COLUMNS: [&str; 10] = [
    "H_bits",
    "d",
    "K",
    "B",
    "lower_bits",
    "lower_std",
    "upper_bits",
    "upper_std",
    "mc_bits",
    "mc_stderr",
];

impl BenchRow {
    /// Three standard errors of the bound means plus three of the oracle,
    /// floored at [`ROUNDOFF_BITS`] so zero-variance cells are not decided
    /// by rounding.
    pub fn tolerance(&self) -> f64 {
        3.0 * (self.lower_std + self.upper_std) / (self.b as f64).sqrt() + 3.0 * self.mc_stderr + ROUNDOFF_BITS
    }

    /// `lower <= mc <= upper`, each within [`Self::tolerance`].
    pub fn sandwich_holds(&self) -> bool {
        let tol = self.tolerance();
        self.lower_bits <= self.mc_bits + tol && self.mc_bits <= self.upper_bits + tol
    }

    pub fn gap(&self) -> f64 {
        self.upper_bits - self.lower_bits
    }
}

/// Fixed dataset of `n` uniform draws over `m` outcomes.
pub fn bench_dataset(m: usize, n: usize, rng: &mut Rng) -> Vec<usize> {
    (0..n).map(|_| rng.below(m)).collect()
}

/// Runs the full grid. One dataset is drawn per `H` and reused for every `d`
/// and `K`; the oracle is evaluated once per `(H, d)` on the true uniform `X`.
pub fn bench_orthogonal(cfg: &BenchConfig) -> Result<Vec<BenchRow>> {
    let root = Rng::new(cfg.seed);
    let mut rows = Vec::new();
    for &h in &cfg.h_bits {
        let m = 1usize << h;
        let dim = cfg.latent_dim.unwrap_or(m.max(32));
        let data = bench_dataset(m, cfg.dataset_size, &mut root.derive(h as u64));
        for (di, &d) in cfg.d_grid.iter().enumerate() {
            let scheme = OrthogonalScheme::new(h, d, dim)?;
            let codes = scheme.codes();
            let pool: Vec<GaussianCode> = data.iter().map(|&x| codes[x].clone()).collect();
            let cell = root.derive(h as u64).derive(di as u64 + 1);
            let mc = mc_oracle(&scheme.mixture(), cfg.mc_samples, &cell.derive(0));
            for &k in &cfg.k_grid {
                let r = estimate_bounds(&pool, k, cfg.b, &cell.derive(k as u64), cfg.parallel)?;
                log::debug!(
                    "H={h} d={d} K={k}: [{:.4}, {:.4}] mc {:.4}",
                    r.lower_bits,
                    r.upper_bits,
                    mc.bits
                );
                rows.push(BenchRow {
                    h_bits: h,
                    d,
                    k,
                    b: cfg.b,
                    lower_bits: r.lower_bits,
                    lower_std: r.lower_std,
                    upper_bits: r.upper_bits,
                    upper_std: r.upper_std,
                    mc_bits: mc.bits,
                    mc_stderr: mc.stderr,
                });
            }
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    if rows.is_empty() {
        wtr.write_record(BENCH_COLUMNS)?;
    }
    wtr.flush()?;
    Ok(())
}
