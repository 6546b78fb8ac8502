//! Information carried about individual outcomes `X = x`.
//!
//! The lower contribution keeps the probe's own density in the denominator
//! mixture (the InfoNCE summand); the upper contribution leaves it out (the
//! leave-one-out summand). Averaging the lower contributions over `x ~ p(x)`
//! recovers the full InfoNCE bound.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use serde::Serialize;

use super::bounds::{batch_summands, group_codes, log_density_matrix, EvalBatch};
use crate::diffcore::{logsumexp, Rng, Tensor};
use crate::encoder::GaussianCode;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeContribution {
    pub lower_bits: f64,
    pub upper_bits: f64,
    /// Number of summands averaged.
    pub count: usize,
}

/// Contribution of the outcome encoded by `probe`, against background batches
/// of `k - 1` codes drawn from `background` plus the probe itself.
pub fn per_outcome_contribution(
    probe: &GaussianCode,
    background: &[GaussianCode],
    k: usize,
    n_batches: usize,
    samples_per_batch: usize,
    rng: &Rng,
) -> Result<OutcomeContribution> {
    if k < 2 || background.is_empty() {
        return Err(Error::contract(
            "per-outcome contribution needs K >= 2 and a nonempty background",
        ));
    }
    let d = probe.dim();
    let mut lower = 0.0;
    let mut upper = 0.0;
    let mut count = 0;
    for b in 0..n_batches {
        let mut r = rng.derive(b as u64);
        let idx: Vec<usize> = if k - 1 <= background.len() {
            r.sample_without_replacement(background.len(), k - 1)
        } else {
            (0..k - 1).map(|_| r.below(background.len())).collect()
        };
        let bg: Vec<&GaussianCode> = idx.iter().map(|&i| &background[i]).collect();
        let groups = group_codes(&bg);
        let log_counts: Vec<f64> = groups.counts.iter().map(|&c| (c as f64).ln()).collect();

        let mut data = Vec::with_capacity(samples_per_batch * d);
        for _ in 0..samples_per_batch {
            data.extend(probe.sample(&mut r));
        }
        let u = Tensor::matrix(samples_per_batch, d, data).expect("shape");
        let lp_bg = log_density_matrix(&u, &groups.reps);
        let lp_probe = log_density_matrix(&u, &[probe]);

        let m = groups.reps.len();
        let mut terms = vec![0.0; m + 1];
        for i in 0..samples_per_batch {
            let own = lp_probe.data()[i];
            for j in 0..m {
                terms[j] = lp_bg.at(i, j) + log_counts[j];
            }
            terms[m] = f64::NEG_INFINITY;
            let bg_only = logsumexp(&terms);
            terms[m] = own;
            let with_probe = logsumexp(&terms);
            lower += own - (with_probe - (k as f64).ln());
            upper += own - (bg_only - ((k - 1) as f64).ln());
            count += 1;
        }
    }
    Ok(OutcomeContribution {
        lower_bits: lower / count as f64 / LN_2,
        upper_bits: upper / count as f64 / LN_2,
        count,
    })
}

/// Splits the bound summands of labelled batches by outcome label.
///
/// `labels[b][i]` names the outcome of item `i` in batch `b`. The
/// count-weighted mean of the per-outcome lower values equals the InfoNCE
/// bound over the same batches when all batches share one `K`.
pub fn contributions_by_outcome<T: Ord + Clone>(
    batches: &[EvalBatch<'_>],
    labels: &[Vec<T>],
) -> Result<BTreeMap<T, OutcomeContribution>> {
    if batches.len() != labels.len() {
        return Err(Error::contract("one label vector per batch"));
    }
    let mut acc: BTreeMap<T, (f64, f64, usize)> = BTreeMap::new();
    for (batch, lab) in batches.iter().zip(labels) {
        if lab.len() != batch.k() {
            return Err(Error::contract("one label per batch item"));
        }
        let s = batch_summands(batch);
        let up = s
            .upper
            .ok_or_else(|| Error::contract("leave-one-out summands need K >= 2"))?;
        for (i, t) in lab.iter().enumerate() {
            let e = acc.entry(t.clone()).or_insert((0.0, 0.0, 0));
            e.0 += s.lower[i];
            e.1 += up[i];
            e.2 += 1;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(t, (lo, up, n))| {
            (
                t,
                OutcomeContribution {
                    lower_bits: lo / n as f64 / LN_2,
                    upper_bits: up / n as f64 / LN_2,
                    count: n,
                },
            )
        })
        .collect())
}
