use std::path::Path;

use serde::Serialize;

use super::measure::{read_measure_csv, CheckpointMeasure};
use crate::error::{Error, Result};
use crate::objective::{RunDir, TrainConfig};

/// Bits ≥ this count as a relevant channel.
pub const TOP_K_THRESHOLD_BITS: f64 = 0.1;

/// One model on the distributed information plane.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfoPlanePoint {
    pub step: u64,
    pub beta: f64,
    pub total_bits: f64,
    pub bound_gap_bits: f64,
    pub predictive_bits: f64,
    pub accuracy: f64,
    pub per_channel_bits: Vec<f64>,
}

impl From<&CheckpointMeasure> for InfoPlanePoint {
    fn from(m: &CheckpointMeasure) -> Self {
        let per_channel_bits = m.channel_bits();
        let gap = m
            .lower_bits
            .iter()
            .zip(&m.upper_bits)
            .map(|(l, u)| (u - l).max(0.0))
            .sum();
        Self {
            step: m.step,
            beta: m.beta,
            total_bits: per_channel_bits.iter().sum(),
            bound_gap_bits: gap,
            predictive_bits: m.predictive_bits,
            accuracy: m.accuracy,
            per_channel_bits,
        }
    }
}

/// Points sorted by total bits (ties by step).
pub fn plane_from_measures(measures: &[CheckpointMeasure]) -> Vec<InfoPlanePoint> {
    let mut pts: Vec<InfoPlanePoint> = measures.iter().map(InfoPlanePoint::from).collect();
    pts.sort_by(|a, b| a.total_bits.total_cmp(&b.total_bits).then(a.step.cmp(&b.step)));
    pts
}

/// Reads `measure.csv` of a run and writes `plane.csv`. Every checkpoint the
/// run's config promises must have been measured.
pub fn assemble_plane(run: &RunDir) -> Result<Vec<InfoPlanePoint>> {
    let mut cfg = TrainConfig::circuit(1);
    cfg.apply_kv(&run.read_config()?)?;
    let path = run.measure_path();
    let measures = if path.exists() { read_measure_csv(&path)? } else { vec![] };
    let missing: Vec<u64> = cfg
        .checkpoint_steps()
        .into_iter()
        .filter(|s| !measures.iter().any(|m| m.step == *s))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingCheckpoints {
            dir: run.path().to_path_buf(),
            steps: missing,
        });
    }
    let plane = plane_from_measures(&measures);
    write_plane_csv(&run.plane_path(), &plane)?;
    Ok(plane)
}

pub fn write_plane_csv(path: &Path, plane: &[InfoPlanePoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let c = plane.first().map_or(0, |p| p.per_channel_bits.len());
    let mut header: Vec<String> = ["beta", "total_bits", "gap_bits", "predictive_bits", "accuracy"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend((0..c).map(|j| format!("ch{j}_bits")));
    w.write_record(&header)?;
    for p in plane {
        let mut rec = vec![
            p.beta.to_string(),
            p.total_bits.to_string(),
            p.bound_gap_bits.to_string(),
            p.predictive_bits.to_string(),
            p.accuracy.to_string(),
        ];
        rec.extend(p.per_channel_bits.iter().map(|b| b.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of per-channel bits ordered by total bits.
#[derive(Clone, Debug, PartialEq)]
pub struct Allocation {
    pub labels: Vec<String>,
    pub total_bits: Vec<f64>,
    pub bits: Vec<Vec<f64>>,
}

/// `labels` name each channel by its physical coordinate (defaults to `ch<j>`).
pub fn channel_allocation(plane: &[InfoPlanePoint], labels: Option<&[String]>) -> Allocation {
    let c = plane.first().map_or(0, |p| p.per_channel_bits.len());
    let labels = labels.map_or_else(|| (0..c).map(|j| format!("ch{j}")).collect(), |l| l.to_vec());
    let mut order: Vec<&InfoPlanePoint> = plane.iter().collect();
    order.sort_by(|a, b| a.total_bits.total_cmp(&b.total_bits).then(a.step.cmp(&b.step)));
    Allocation {
        labels,
        total_bits: order.iter().map(|p| p.total_bits).collect(),
        bits: order.iter().map(|p| p.per_channel_bits.clone()).collect(),
    }
}

impl Allocation {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["total_bits".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (t, row) in self.total_bits.iter().zip(&self.bits) {
            let mut rec = vec![t.to_string()];
            rec.extend(row.iter().map(|b| b.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Channels with at least 0.1 bits, most informative first, at most `k`.
pub fn top_k_channels(point: &InfoPlanePoint, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..point.per_channel_bits.len())
        .filter(|&j| point.per_channel_bits[j] >= TOP_K_THRESHOLD_BITS)
        .collect();
    idx.sort_by(|&a, &b| {
        point.per_channel_bits[b]
            .total_cmp(&point.per_channel_bits[a])
            .then(a.cmp(&b))
    });
    idx.truncate(k);
    idx
}

/// Point whose total bits is closest to `target`.
pub fn nearest_point(plane: &[InfoPlanePoint], target: f64) -> Option<&InfoPlanePoint> {
    plane
        .iter()
        .min_by(|a, b| (a.total_bits - target).abs().total_cmp(&(b.total_bits - target).abs()))
}

/// Checkpoints from the step of peak total information onwards, in plane
/// order. Earlier checkpoints belong to the initial fitting phase, where
/// information is still being acquired rather than traded away.
pub fn compression_branch(plane: &[InfoPlanePoint]) -> Vec<InfoPlanePoint> {
    let Some(peak) = plane
        .iter()
        .max_by(|a, b| a.total_bits.total_cmp(&b.total_bits).then(b.step.cmp(&a.step)))
        .map(|p| p.step)
    else {
        return Vec::new();
    };
    plane.iter().filter(|p| p.step >= peak).cloned().collect()
}

/// Largest drop in predictive bits when points are ordered by total bits.
pub fn max_monotonicity_violation(plane: &[InfoPlanePoint]) -> f64 {
    let mut best: f64 = f64::NEG_INFINITY;
    let mut worst: f64 = 0.0;
    for p in plane {
        best = best.max(p.predictive_bits);
        worst = worst.max(best - p.predictive_bits);
    }
    worst
}

/// Linear interpolation of predictive bits at `total_bits` over a plane
/// sorted by total bits; clamps at the ends.
pub fn interpolate_predictive(plane: &[InfoPlanePoint], total_bits: f64) -> Option<f64> {
    let first = plane.first()?;
    let last = plane.last()?;
    if total_bits <= first.total_bits {
        return Some(first.predictive_bits);
    }
    if total_bits >= last.total_bits {
        return Some(last.predictive_bits);
    }
    plane.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        (total_bits >= a.total_bits && total_bits <= b.total_bits).then(|| {
            let span = b.total_bits - a.total_bits;
            if span <= 0.0 {
                a.predictive_bits.max(b.predictive_bits)
            } else {
                let t = (total_bits - a.total_bits) / span;
                a.predictive_bits + t * (b.predictive_bits - a.predictive_bits)
            }
        })
    })
}
