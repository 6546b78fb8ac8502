use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::table::TruthTable;
use crate::error::{Error, Result};

pub const MAX_SCATTER_INPUTS: usize = 20;
const FRONT_EPS: f64 = 1e-12;

/// One input subset on the information plane.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsetPoint {
    pub subset_bitmask: u64,
    /// Bits of input information: one per opened binary channel.
    pub size_bits: usize,
    pub mi_bits: f64,
    pub pareto_flag: bool,
}

/// Best achievable `I(X_S;Y)` per subset size, keeping only sizes that
/// strictly improve on every smaller size.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontPoint {
    pub size_bits: usize,
    pub mi_bits: f64,
}

/// Every subset of inputs with its exact mutual information, flagged when
/// Pareto-optimal (no subset with fewer or equal bits carries more information).
pub fn subset_scatter(table: &TruthTable) -> Result<Vec<SubsetPoint>> {
    let n = table.n_inputs();
    if n > MAX_SCATTER_INPUTS {
        return Err(Error::Unsupported(format!(
            "subset enumeration over {n} inputs (limit {MAX_SCATTER_INPUTS})"
        )));
    }
    let mut points: Vec<SubsetPoint> = (0..1u64 << n)
        .into_par_iter()
        .map(|mask| SubsetPoint {
            subset_bitmask: mask,
            size_bits: mask.count_ones() as usize,
            mi_bits: table.subset_mi(mask),
            pareto_flag: false,
        })
        .collect();
    let front = front_of(&points, n);
    for p in &mut points {
        p.pareto_flag = front
            .iter()
            .any(|f| f.size_bits == p.size_bits && (p.mi_bits - f.mi_bits).abs() <= FRONT_EPS);
    }
    Ok(points)
}

fn front_of(points: &[SubsetPoint], n: usize) -> Vec<FrontPoint> {
    let mut best = vec![f64::NEG_INFINITY; n + 1];
    for p in points {
        best[p.size_bits] = best[p.size_bits].max(p.mi_bits);
    }
    let mut front = Vec::new();
    let mut running = f64::NEG_INFINITY;
    for (k, &b) in best.iter().enumerate() {
        if b > running + FRONT_EPS {
            front.push(FrontPoint {
                size_bits: k,
                mi_bits: b,
            });
            running = b;
        }
    }
    front
}

/// The distinct Pareto-front points of a scatter, ordered by size.
pub fn pareto_front(points: &[SubsetPoint]) -> Vec<FrontPoint> {
    let n = points.iter().map(|p| p.size_bits).max().unwrap_or(0);
    front_of(points, n)
}

pub fn write_subsets_csv<W: Write>(points: &[SubsetPoint], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for p in points {
        wtr.serialize(p)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::spec::{CircuitSpec, GateOp};
    use super::*;

    #[test]
    fn xor_scatter() {
        let t = TruthTable::build(&CircuitSpec::two_input(GateOp::Xor)).unwrap();
        let pts = subset_scatter(&t).unwrap();
        let pairs: Vec<(usize, f64)> = pts.iter().map(|p| (p.size_bits, p.mi_bits)).collect();
        assert_eq!(pairs, vec![(0, 0.0), (1, 0.0), (1, 0.0), (2, 1.0)]);
        let flags: Vec<bool> = pts.iter().map(|p| p.pareto_flag).collect();
        assert_eq!(flags, vec![true, false, false, true]);
        assert_eq!(pareto_front(&pts).len(), 2);
    }

    #[test]
    fn refuses_large_inputs() {
        let spec = CircuitSpec::passthrough(21, 1).unwrap();
        let t = TruthTable::build(&spec).unwrap();
        assert!(matches!(subset_scatter(&t), Err(Error::Unsupported(_))));
    }
}
