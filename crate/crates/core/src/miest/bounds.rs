//! InfoNCE lower and leave-one-out upper bounds on `I(U;X)` for channels with
//! known Gaussian conditionals.
//!
//! Within a batch, identical codes are merged into groups with counts, which
//! is exact and makes discrete channels cost `O(K * groups * D)` rather than
//! `O(K^2 * D)`.

use std::collections::HashMap;
use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;
use serde::Serialize;

use crate::diffcore::{gemm_nt, logsumexp, Rng, Tensor};
use crate::encoder::GaussianCode;
use crate::error::{Error, Result};

/// `K` codes with one latent sample drawn from each.
#[derive(Clone, Debug)]
pub struct EvalBatch<'a> {
    pub codes: Vec<&'a GaussianCode>,
    /// `[K, D]`, row `i` drawn from `codes[i]`.
    pub samples: Tensor,
}

impl<'a> EvalBatch<'a> {
    /// Draws one latent per code.
    pub fn sample(codes: Vec<&'a GaussianCode>, rng: &mut Rng) -> Self {
        let k = codes.len();
        let d = codes.first().map(|c| c.dim()).unwrap_or(0);
        let mut data = Vec::with_capacity(k * d);
        for c in &codes {
            data.extend(c.sample(rng));
        }
        Self {
            codes,
            samples: Tensor::matrix(k, d, data).expect("batch shape"),
        }
    }

    pub fn k(&self) -> usize {
        self.codes.len()
    }
}

/// Distinct codes of a batch with multiplicities, and each item's group.
pub(crate) struct Groups<'a> {
    pub reps: Vec<&'a GaussianCode>,
    pub counts: Vec<usize>,
    pub member: Vec<usize>,
}

fn code_key(c: &GaussianCode) -> Vec<u64> {
    c.mu.iter().chain(&c.log_var).map(|v| v.to_bits()).collect()
}

pub(crate) fn group_codes<'a>(codes: &[&'a GaussianCode]) -> Groups<'a> {
    let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut reps = Vec::new();
    let mut counts = Vec::new();
    let mut member = Vec::with_capacity(codes.len());
    for &c in codes {
        let g = *index.entry(code_key(c)).or_insert_with(|| {
            reps.push(c);
            counts.push(0);
            reps.len() - 1
        });
        counts[g] += 1;
        member.push(g);
    }
    Groups {
        reps,
        counts,
        member,
    }
}

/// `log p(u_i | code_m)` for every sample row `i` and code `m`, shape `[n, M]`.
///
/// Uses the expansion `sum_d w (u - mu)^2 = u^2.w - 2 u.(mu w) + mu^2.w` with
/// `w = exp(-log_var)`, so the bulk of the work is two matrix products.
pub fn log_density_matrix(samples: &Tensor, codes: &[&GaussianCode]) -> Tensor {
    let n = samples.rows();
    let d = samples.cols();
    let m = codes.len();
    let mut w = Vec::with_capacity(m * d);
    let mut muw = Vec::with_capacity(m * d);
    let mut consts = Vec::with_capacity(m);
    for c in codes {
        let mut k = d as f64 * (2.0 * PI).ln();
        for (&mu, &lv) in c.mu.iter().zip(&c.log_var) {
            let wi = (-lv).exp();
            w.push(wi);
            muw.push(mu * wi);
            k += mu * mu * wi + lv;
        }
        consts.push(k);
    }
    let w = Tensor::matrix(m, d, w).expect("shape");
    let muw = Tensor::matrix(m, d, muw).expect("shape");
    let u2 = samples.map(|x| x * x);

    let mut quad = Tensor::zeros(&[n, m]);
    gemm_nt(&u2, &w, 0.0, &mut quad);
    let mut cross = Tensor::zeros(&[n, m]);
    gemm_nt(samples, &muw, 0.0, &mut cross);
    for i in 0..n {
        for j in 0..m {
            let idx = i * m + j;
            let v = quad.data()[idx] - 2.0 * cross.data()[idx] + consts[j];
            quad.data_mut()[idx] = -0.5 * v;
        }
    }
    quad
}

/// Per-item summands of the two bounds, in nats.
///
/// `lower[i] = log p(u_i|x_i) - log((1/K) sum_j p(u_i|x_j))`;
/// `upper[i]` uses `(1/(K-1)) sum_{j != i}` and is `None` when `K < 2`.
#[derive(Clone, Debug)]
pub struct Summands {
    pub lower: Vec<f64>,
    pub upper: Option<Vec<f64>>,
}

pub fn batch_summands(batch: &EvalBatch<'_>) -> Summands {
    let k = batch.k();
    let groups = group_codes(&batch.codes);
    let logp = log_density_matrix(&batch.samples, &groups.reps);
    let m = groups.reps.len();
    let log_counts: Vec<f64> = groups.counts.iter().map(|&c| (c as f64).ln()).collect();
    let ln_k = (k as f64).ln();
    let ln_k1 = ((k as f64) - 1.0).ln();

    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    let mut terms = vec![0.0; m];
    for i in 0..k {
        let row = &logp.data()[i * m..(i + 1) * m];
        let own_g = groups.member[i];
        let own = row[own_g];
        for j in 0..m {
            terms[j] = row[j] + log_counts[j];
        }
        lower.push(own - (logsumexp(&terms) - ln_k));
        if k >= 2 {
            let c = groups.counts[own_g] - 1;
            terms[own_g] = if c == 0 {
                f64::NEG_INFINITY
            } else {
                row[own_g] + (c as f64).ln()
            };
            upper.push(own - (logsumexp(&terms) - ln_k1));
        }
    }
    Summands {
        lower,
        upper: (k >= 2).then_some(upper),
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// InfoNCE lower bound over batches: `(mean, std)` in bits.
pub fn infonce_lower(batches: &[EvalBatch<'_>]) -> (f64, f64) {
    let per: Vec<f64> = batches
        .iter()
        .map(|b| {
            let s = batch_summands(b);
            s.lower.iter().sum::<f64>() / s.lower.len() as f64 / LN_2
        })
        .collect();
    mean_std(&per)
}

/// Leave-one-out upper bound over batches: `(mean, std)` in bits.
pub fn loo_upper(batches: &[EvalBatch<'_>]) -> Result<(f64, f64)> {
    let mut per = Vec::with_capacity(batches.len());
    for b in batches {
        if b.k() < 2 {
            return Err(Error::contract(format!(
                "leave-one-out bound needs K >= 2, got K = {}",
                b.k()
            )));
        }
        let s = batch_summands(b);
        let up = s.upper.expect("K >= 2");
        per.push(up.iter().sum::<f64>() / up.len() as f64 / LN_2);
    }
    Ok(mean_std(&per))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsResult {
    pub lower_bits: f64,
    pub lower_std: f64,
    pub upper_bits: f64,
    pub upper_std: f64,
    pub b: usize,
    pub k: usize,
}

impl BoundsResult {
    /// `3 (lower_std + upper_std) / sqrt(B)`.
    pub fn tolerance(&self) -> f64 {
        3.0 * (self.lower_std + self.upper_std) / (self.b as f64).sqrt()
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower_bits + self.upper_bits)
    }

    pub fn gap(&self) -> f64 {
        (self.upper_bits - self.lower_bits).max(0.0)
    }
}

/// Measures both bounds from `b` batches of `k` items drawn from `pool`.
///
/// Items are drawn without replacement within a batch when `k <= pool.len()`.
/// Batch `i` uses the stream `rng.derive(i)`, so the result does not depend on
/// whether batches run in parallel.
pub fn estimate_bounds(
    pool: &[GaussianCode],
    k: usize,
    b: usize,
    rng: &Rng,
    parallel: bool,
) -> Result<BoundsResult> {
    if k < 2 {
        return Err(Error::contract(format!(
            "leave-one-out bound needs K >= 2, got K = {k}"
        )));
    }
    if pool.is_empty() || b == 0 {
        return Err(Error::contract("bounds need a nonempty pool and B >= 1"));
    }
    let run = |i: usize| -> (f64, f64) {
        let mut r = rng.derive(i as u64);
        let idx: Vec<usize> = if k <= pool.len() {
            r.sample_without_replacement(pool.len(), k)
        } else {
            (0..k).map(|_| r.below(pool.len())).collect()
        };
        let batch = EvalBatch::sample(idx.iter().map(|&j| &pool[j]).collect(), &mut r);
        let s = batch_summands(&batch);
        let lo = s.lower.iter().sum::<f64>() / k as f64 / LN_2;
        let up = s.upper.expect("K >= 2").iter().sum::<f64>() / k as f64 / LN_2;
        (lo, up)
    };
    let per: Vec<(f64, f64)> = if parallel {
        (0..b).into_par_iter().map(run).collect()
    } else {
        (0..b).map(run).collect()
    };
    let lows: Vec<f64> = per.iter().map(|p| p.0).collect();
    let ups: Vec<f64> = per.iter().map(|p| p.1).collect();
    let (lower_bits, lower_std) = mean_std(&lows);
    let (upper_bits, upper_std) = mean_std(&ups);
    Ok(BoundsResult {
        lower_bits,
        lower_std,
        upper_bits,
        upper_std,
        b,
        k,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(mu: &[f64]) -> GaussianCode {
        GaussianCode::new(mu.to_vec(), vec![0.0; mu.len()]).unwrap()
    }

    #[test]
    fn density_matrix_matches_direct_evaluation() {
        let codes = [
            GaussianCode::new(vec![0.3, -1.0, 2.0], vec![0.5, -0.2, 1.0]).unwrap(),
            GaussianCode::new(vec![-0.7, 0.0, 1.0], vec![-1.0, 0.0, 0.3]).unwrap(),
        ];
        let refs: Vec<&GaussianCode> = codes.iter().collect();
        let u = Tensor::matrix(3, 3, vec![0.1, 0.2, 0.3, -1.0, 2.0, 0.5, 4.0, -3.0, 0.0]).unwrap();
        let lp = log_density_matrix(&u, &refs);
        for i in 0..3 {
            for (j, c) in codes.iter().enumerate() {
                let direct = c.log_density(u.row(i));
                assert!((lp.at(i, j) - direct).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn identical_codes_carry_no_information() {
        let c = code(&[1.0, 2.0]);
        let batch = EvalBatch::sample(vec![&c; 16], &mut Rng::new(0));
        let (lo, _) = infonce_lower(std::slice::from_ref(&batch));
        let (up, _) = loo_upper(std::slice::from_ref(&batch)).unwrap();
        assert!(lo.abs() < 1e-12 && up.abs() < 1e-12);
    }

    #[test]
    fn upper_needs_two_items() {
        let c = code(&[0.0]);
        let batch = EvalBatch::sample(vec![&c], &mut Rng::new(0));
        assert!(matches!(loo_upper(&[batch]), Err(Error::Contract(_))));
    }

    #[test]
    fn grouping_is_exact() {
        // Same batch evaluated with and without merging duplicates.
        let a = code(&[1.0, 0.0]);
        let b = code(&[0.0, 1.5]);
        let codes = vec![&a, &b, &a, &a, &b];
        let batch = EvalBatch::sample(codes.clone(), &mut Rng::new(3));
        let s = batch_summands(&batch);
        let k = codes.len();
        for i in 0..k {
            let u = batch.samples.row(i);
            let lps: Vec<f64> = codes.iter().map(|c| c.log_density(u)).collect();
            let own = lps[i];
            let lo = own - (logsumexp(&lps) - (k as f64).ln());
            let others: Vec<f64> = (0..k).filter(|&j| j != i).map(|j| lps[j]).collect();
            let up = own - (logsumexp(&others) - ((k - 1) as f64).ln());
            assert!((s.lower[i] - lo).abs() < 1e-10);
            assert!((s.upper.as_ref().unwrap()[i] - up).abs() < 1e-10);
        }
    }

    #[test]
    fn parallel_and_serial_agree() {
        let pool: Vec<GaussianCode> = (0..40).map(|i| code(&[i as f64 * 0.1, 0.0])).collect();
        let rng = Rng::new(11);
        let a = estimate_bounds(&pool, 16, 6, &rng, false).unwrap();
        let b = estimate_bounds(&pool, 16, 6, &rng, true).unwrap();
        assert_eq!(a, b);
    }
}
