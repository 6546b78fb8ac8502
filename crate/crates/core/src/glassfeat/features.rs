//! Radial density structure functions and their normalization.

use std::path::Path;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::data::{Neighborhood, ParticleType};
use crate::error::{Error, Result};

pub const N_RADII: usize = 50;
pub const N_FEATURES: usize = 2 * N_RADII;
pub const R_MIN: f64 = 0.5;
pub const R_MAX: f64 = 4.0;
/// Particles farther than this from the center are ignored.
pub const TRUNCATION_RADIUS: f64 = 4.5;

/// Grid spacing of the radii.
pub fn radius_step() -> f64 {
    (R_MAX - R_MIN) / (N_RADII - 1) as f64
}

/// Gaussian window width: half the grid spacing.
pub fn window_width() -> f64 {
    0.5 * radius_step()
}

pub fn radii() -> Vec<f64> {
    (0..N_RADII).map(|k| R_MIN + k as f64 * radius_step()).collect()
}

/// `(type, radius)` of feature `j`: the first 50 are type A, the rest type B.
pub fn feature_coordinate(j: usize) -> (ParticleType, f64) {
    let t = if j < N_RADII { ParticleType::A } else { ParticleType::B };
    (t, R_MIN + (j % N_RADII) as f64 * radius_step())
}

pub fn feature_name(j: usize) -> String {
    let (t, r) = feature_coordinate(j);
    format!("G_{t}({r:.4})")
}

/// Sum over type-`t` neighbors of `exp(-(R - r)^2 / 2 delta^2)`.
pub fn structure_function(nh: &Neighborhood, r: f64, delta: f64, t: ParticleType) -> f64 {
    nh.particles
        .iter()
        .filter(|p| p.kind == t)
        .map(|p| {
            let d = p.radius() - r;
            (-d * d / (2.0 * delta * delta)).exp()
        })
        .sum()
}

/// `G_A` at the 50 radii, then `G_B`.
pub fn featurize(nh: &Neighborhood) -> Vec<f64> {
    let delta = window_width();
    let step = radius_step();
    let mut out = vec![0.0; N_FEATURES];
    for p in &nh.particles {
        let r = p.radius();
        if r > TRUNCATION_RADIUS {
            continue;
        }
        let base = if p.kind == ParticleType::A { 0 } else { N_RADII };
        for k in 0..N_RADII {
            let d = r - (R_MIN + k as f64 * step);
            out[base + k] += (-d * d / (2.0 * delta * delta)).exp();
        }
    }
    out
}

pub fn featurize_all(nhs: &[Neighborhood], parallel: bool) -> Vec<Vec<f64>> {
    if parallel {
        nhs.par_iter().map(featurize).collect()
    } else {
        nhs.iter().map(featurize).collect()
    }
}

/// Per-feature mean and standard deviation from a training split. Features
/// with zero variance are left out of `retained`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub radii: Vec<f64>,
    pub retained: Vec<usize>,
}

impl NormStats {
    pub fn fit(rows: &[Vec<f64>]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::contract("normalization needs at least one row"));
        };
        let d = first.len();
        let n = rows.len() as f64;
        let mut means = vec![0.0; d];
        for r in rows {
            if r.len() != d {
                return Err(Error::Dimension {
                    layer: "feature row".into(),
                    expected: d.to_string(),
                    got: r.len().to_string(),
                });
            }
            for (m, v) in means.iter_mut().zip(r) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for r in rows {
            for ((s, v), m) in vars.iter_mut().zip(r).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stds: Vec<f64> = vars.iter().map(|s| (s / n).sqrt()).collect();
        let retained: Vec<usize> = (0..d).filter(|&j| stds[j] > 1e-12).collect();
        if retained.len() < d {
            warn!(
                "dropping {} zero-variance feature(s): {:?}",
                d - retained.len(),
                (0..d).filter(|j| !retained.contains(j)).map(feature_name).collect::<Vec<_>>()
            );
        }
        Ok(Self {
            means,
            stds,
            radii: radii(),
            retained,
        })
    }

    /// Normalized retained features of one row.
    pub fn apply(&self, row: &[f64]) -> Vec<f64> {
        self.retained.iter().map(|&j| (row[j] - self.means[j]) / self.stds[j]).collect()
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Columns: feature names then `label`.
pub fn write_feature_csv(path: &Path, rows: &[Vec<f64>], labels: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let d = rows.first().map_or(N_FEATURES, |r| r.len());
    let mut header: Vec<String> = (0..d).map(feature_name).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (r, y) in rows.iter().zip(labels) {
        let mut rec: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        rec.push((*y as u8).to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Transposes rows into per-feature columns.
pub fn columns(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let d = rows.first().map_or(0, |r| r.len());
    (0..d).map(|j| rows.iter().map(|r| r[j]).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::glassfeat::data::Particle;

    fn single(r: f64, t: ParticleType) -> Neighborhood {
        Neighborhood::new(ParticleType::A, vec![Particle::polar(r, 0.3, t)], false)
    }

    #[test]
    fn window_values() {
        let d = window_width();
        assert!((d - 0.5 * 3.5 / 49.0).abs() < 1e-15);
        assert_eq!(structure_function(&Neighborhood::new(ParticleType::A, vec![], false), 1.0, d, ParticleType::A), 0.0);
        let nh = single(2.0, ParticleType::A);
        assert!((structure_function(&nh, 2.0, d, ParticleType::A) - 1.0).abs() < 1e-15);
        let nh = single(2.0 + d, ParticleType::A);
        assert!((structure_function(&nh, 2.0, d, ParticleType::A) - (-0.5f64).exp()).abs() < 1e-12);
        assert_eq!(structure_function(&nh, 2.0, d, ParticleType::B), 0.0);
    }

    #[test]
    fn truncation() {
        assert!(featurize(&single(4.6, ParticleType::B)).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn normalization_moments() {
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64, (i * i) as f64 % 7.0, 3.0]).collect();
        let s = NormStats::fit(&rows).unwrap();
        assert_eq!(s.retained, vec![0, 1]);
        let z = s.apply_all(&rows);
        for c in columns(&z) {
            let m = c.iter().sum::<f64>() / c.len() as f64;
            let v = c.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / c.len() as f64;
            assert!(m.abs() < 1e-9 && (v.sqrt() - 1.0).abs() < 1e-9);
        }
    }
}
