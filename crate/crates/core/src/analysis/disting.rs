//! Pairwise similarity of a channel's codes over a grid of raw values.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::diffcore::ParamStore;
use crate::encoder::{Encoder, GaussianCode};
use crate::error::{Error, Result};

pub const DEFAULT_PROBES: usize = 64;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Similarity {
    /// `exp(-D_B)`, the Bhattacharyya coefficient.
    #[default]
    Bhattacharyya,
    /// `exp(-W_2^2)` with the squared 2-Wasserstein distance.
    Wasserstein,
}

impl FromStr for Similarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bhattacharyya" => Ok(Similarity::Bhattacharyya),
            "wasserstein" => Ok(Similarity::Wasserstein),
            _ => Err(Error::Config(format!("unknown similarity `{s}`"))),
        }
    }
}

impl fmt::Display for Similarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Similarity::Bhattacharyya => "bhattacharyya",
            Similarity::Wasserstein => "wasserstein",
        })
    }
}

impl Similarity {
    pub fn between(&self, a: &GaussianCode, b: &GaussianCode) -> f64 {
        match self {
            Similarity::Bhattacharyya => bhattacharyya(a, b),
            Similarity::Wasserstein => {
                let w2: f64 = a
                    .mu
                    .iter()
                    .zip(&b.mu)
                    .zip(a.log_var.iter().zip(&b.log_var))
                    .map(|((ma, mb), (la, lb))| {
                        let ds = (0.5 * la).exp() - (0.5 * lb).exp();
                        (ma - mb) * (ma - mb) + ds * ds
                    })
                    .sum();
                (-w2).exp()
            }
        }
    }
}

/// Closed-form Bhattacharyya coefficient of two diagonal Gaussians.
pub fn bhattacharyya(a: &GaussianCode, b: &GaussianCode) -> f64 {
    let mut d = 0.0;
    for ((ma, mb), (la, lb)) in a.mu.iter().zip(&b.mu).zip(a.log_var.iter().zip(&b.log_var)) {
        let (va, vb) = (la.exp(), lb.exp());
        let s = va + vb;
        // ln((va + vb) / 2) - (la + lb) / 2 = ln cosh((la - lb) / 2)
        d += (ma - mb) * (ma - mb) / (4.0 * s) + 0.5 * (0.5 * (la - lb)).cosh().ln();
    }
    (-d).exp().clamp(0.0, 1.0)
}

#[derive(Clone, Debug, PartialEq)]
pub struct DistinguishabilityMatrix {
    pub probes: Vec<f64>,
    pub m: Vec<Vec<f64>>,
}

/// Similarity of every pair of codes; exactly symmetric with unit diagonal.
pub fn similarity_matrix(codes: &[GaussianCode], measure: Similarity) -> Vec<Vec<f64>> {
    let n = codes.len();
    let mut m = vec![vec![1.0; n]; n];
    for a in 0..n {
        for b in a + 1..n {
            let s = measure.between(&codes[a], &codes[b]);
            m[a][b] = s;
            m[b][a] = s;
        }
    }
    m
}

pub fn distinguishability(
    encoder: &Encoder,
    store: &ParamStore,
    probes: &[f64],
    measure: Similarity,
) -> Result<DistinguishabilityMatrix> {
    let codes = encoder.encode_batch(store, probes)?;
    Ok(DistinguishabilityMatrix {
        probes: probes.to_vec(),
        m: similarity_matrix(&codes, measure),
    })
}

/// Empirical quantiles at levels `(i + 0.5) / n`.
pub fn quantile_probes(values: &[f64], n: usize) -> Result<Vec<f64>> {
    if values.is_empty() || n == 0 {
        return Err(Error::contract("quantile probes need values and n >= 1"));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let last = (v.len() - 1) as f64;
    Ok((0..n)
        .map(|i| {
            let pos = (i as f64 + 0.5) / n as f64 * last;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
        })
        .collect())
}

/// Two-block reading of a matrix over sorted probes: the split maximizing
/// `within_min - across_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockSummary {
    /// Probes `0..split` form the low block.
    pub split: usize,
    pub within_min: f64,
    pub across_max: f64,
}

pub fn block_summary(m: &[Vec<f64>]) -> Option<BlockSummary> {
    let n = m.len();
    let mut best: Option<BlockSummary> = None;
    for split in 1..n {
        let mut within_min: f64 = 1.0;
        let mut across_max: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                if (a < split) == (b < split) {
                    within_min = within_min.min(m[a][b]);
                } else {
                    across_max = across_max.max(m[a][b]);
                }
            }
        }
        let cand = BlockSummary {
            split,
            within_min,
            across_max,
        };
        if best.is_none_or(|b| within_min - across_max > b.within_min - b.across_max) {
            best = Some(cand);
        }
    }
    best
}

impl DistinguishabilityMatrix {
    /// First row and column hold the probe values.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["probe".to_string()];
        header.extend(self.probes.iter().map(|p| p.to_string()));
        w.write_record(&header)?;
        for (p, row) in self.probes.iter().zip(&self.m) {
            let mut rec = vec![p.to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn blocks(&self) -> Option<BlockSummary> {
        block_summary(&self.m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(mu: f64, lv: f64) -> GaussianCode {
        GaussianCode::new(vec![mu], vec![lv]).unwrap()
    }

    #[test]
    fn closed_form_limits() {
        assert_eq!(bhattacharyya(&g(0.3, -1.0), &g(0.3, -1.0)), 1.0);
        assert!(bhattacharyya(&g(0.0, 0.0), &g(50.0, 0.0)) < 1e-100);
        // equal unit variances: exp(-d^2 / 8)
        assert!((bhattacharyya(&g(0.0, 0.0), &g(2.0, 0.0)) - (-0.5f64).exp()).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 1..20 {
            let s = bhattacharyya(&g(0.0, 0.5), &g(i as f64 * 0.3, 0.5));
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn blocks_found() {
        let codes: Vec<_> = [0.0, 0.0, 0.01, 5.0, 5.0].iter().map(|&m| g(m, 0.0)).collect();
        let b = block_summary(&similarity_matrix(&codes, Similarity::Bhattacharyya)).unwrap();
        assert_eq!(b.split, 3);
        assert!(b.within_min > 0.99 && b.across_max < 0.1);
    }

    #[test]
    fn quantiles_of_a_ramp() {
        let v: Vec<f64> = (0..101).map(|i| i as f64).collect();
        let q = quantile_probes(&v, 4).unwrap();
        assert_eq!(q, vec![12.5, 37.5, 62.5, 87.5]);
    }
}
