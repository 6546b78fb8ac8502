//! Linear classifier trained on hinge loss with an L2 penalty, scanned over
//! a logarithmic grid of penalty strengths.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct BaselineResult {
    pub best_accuracy: f64,
    pub best_penalty: f64,
    /// `(penalty, validation accuracy)` over the grid.
    pub scan: Vec<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct BaselineConfig {
    pub penalties: Vec<f64>,
    pub iterations: usize,
    pub lr: f64,
    pub parallel: bool,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            penalties: (-6..=1).map(|e| 10f64.powi(e)).collect(),
            iterations: 400,
            lr: 0.05,
            parallel: true,
        }
    }
}

/// Weights and bias of a fitted linear classifier.
#[derive(Clone, Debug)]
pub struct LinearModel {
    pub w: Vec<f64>,
    pub b: f64,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.b + self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>()
    }

    pub fn accuracy(&self, xs: &[Vec<f64>], ys: &[f64]) -> f64 {
        let ok = xs
            .iter()
            .zip(ys)
            .filter(|(x, &y)| (self.score(x) > 0.0) == (y > 0.5))
            .count();
        ok as f64 / ys.len().max(1) as f64
    }
}

/// Minimizes `mean hinge + penalty/2 |w|^2` by full-batch Adam on the
/// subgradient; the bias is not penalized. Labels are 0/1.
pub fn fit_hinge(xs: &[Vec<f64>], ys: &[f64], penalty: f64, iterations: usize, lr: f64) -> LinearModel {
    let d = xs.first().map_or(0, |r| r.len());
    let n = xs.len() as f64;
    let mut theta = vec![0.0; d + 1];
    let mut m = vec![0.0; d + 1];
    let mut v = vec![0.0; d + 1];
    let (b1, b2, eps) = (0.9, 0.999, 1e-8);
    let mut grad = vec![0.0; d + 1];
    for t in 1..=iterations {
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (x, &y) in xs.iter().zip(ys) {
            let s = if y > 0.5 { 1.0 } else { -1.0 };
            let f = theta[d] + theta[..d].iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
            if s * f < 1.0 {
                for (g, xi) in grad[..d].iter_mut().zip(x) {
                    *g -= s * xi / n;
                }
                grad[d] -= s / n;
            }
        }
        for j in 0..d {
            grad[j] += penalty * theta[j];
        }
        let step = lr / (1.0 + t as f64 / 100.0);
        for j in 0..=d {
            m[j] = b1 * m[j] + (1.0 - b1) * grad[j];
            v[j] = b2 * v[j] + (1.0 - b2) * grad[j] * grad[j];
            let mh = m[j] / (1.0 - b1.powi(t as i32));
            let vh = v[j] / (1.0 - b2.powi(t as i32));
            theta[j] -= step * mh / (vh.sqrt() + eps);
        }
    }
    LinearModel {
        b: theta[d],
        w: theta[..d].to_vec(),
    }
}

/// Best validation accuracy over the penalty grid.
pub fn linear_baseline(
    train_x: &[Vec<f64>],
    train_y: &[f64],
    val_x: &[Vec<f64>],
    val_y: &[f64],
    cfg: &BaselineConfig,
) -> Result<BaselineResult> {
    let pos = train_y.iter().filter(|&&y| y > 0.5).count();
    if pos == 0 || pos == train_y.len() {
        return Err(Error::contract("linear baseline needs both classes in the training split"));
    }
    if val_y.is_empty() {
        return Err(Error::contract("linear baseline needs a non-empty validation split"));
    }
    if cfg.penalties.is_empty() {
        return Err(Error::Config("empty penalty grid".into()));
    }
    let run = |&p: &f64| (p, fit_hinge(train_x, train_y, p, cfg.iterations, cfg.lr).accuracy(val_x, val_y));
    let scan: Vec<(f64, f64)> = if cfg.parallel {
        cfg.penalties.par_iter().map(run).collect()
    } else {
        cfg.penalties.iter().map(run).collect()
    };
    let (best_penalty, best_accuracy) = scan
        .iter()
        .copied()
        .fold((f64::NAN, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
    Ok(BaselineResult {
        best_accuracy,
        best_penalty,
        scan,
    })
}
