use super::spec::CircuitSpec;
use crate::error::{Error, Result};

/// Largest input count for which a truth table is built.
pub const MAX_TABLE_INPUTS: usize = 24;

/// Exhaustive input/output enumeration under uniform inputs. Row `r` has
/// `x_{i+1} = (r >> i) & 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruthTable {
    n_inputs: usize,
    outputs: Vec<bool>,
}

impl TruthTable {
    pub fn build(spec: &CircuitSpec) -> Result<Self> {
        if spec.n_inputs > MAX_TABLE_INPUTS {
            return Err(Error::Unsupported(format!(
                "truth table for {} inputs (limit {MAX_TABLE_INPUTS})",
                spec.n_inputs
            )));
        }
        let outputs = (0..1u64 << spec.n_inputs).map(|r| spec.eval_row(r)).collect();
        Ok(Self {
            n_inputs: spec.n_inputs,
            outputs,
        })
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn rows(&self) -> usize {
        self.outputs.len()
    }

    pub fn output(&self, row: usize) -> bool {
        self.outputs[row]
    }

    pub fn outputs(&self) -> &[bool] {
        &self.outputs
    }

    /// Input `i` (0-based) of row `row`.
    pub fn input(&self, row: usize, i: usize) -> bool {
        (row >> i) & 1 == 1
    }

    /// Column of input `i` as 0/1 values.
    pub fn input_column(&self, i: usize) -> Vec<f64> {
        (0..self.rows()).map(|r| if self.input(r, i) { 1.0 } else { 0.0 }).collect()
    }

    pub fn output_column(&self) -> Vec<f64> {
        self.outputs.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect()
    }

    /// `H(Y)` in bits.
    pub fn output_entropy(&self) -> f64 {
        let ones = self.outputs.iter().filter(|&&y| y).count();
        binary_entropy(ones as f64 / self.rows() as f64)
    }

    /// `I(X_S; Y)` in bits, where bit `i` of `mask` selects input `i`.
    pub fn subset_mi(&self, mask: u64) -> f64 {
        let mask = mask & ((1u64 << self.n_inputs) - 1);
        if mask == 0 {
            return 0.0;
        }
        // Count (ones, total) per assignment of the selected inputs.
        let mut ones = vec![0u32; self.rows()];
        let mut total = vec![0u32; self.rows()];
        for (r, &y) in self.outputs.iter().enumerate() {
            let k = r & mask as usize;
            total[k] += 1;
            ones[k] += y as u32;
        }
        let n = self.rows() as f64;
        let mut h_cond = 0.0;
        for (t, o) in total.iter().zip(&ones) {
            if *t > 0 {
                h_cond += (*t as f64 / n) * binary_entropy(*o as f64 / *t as f64);
            }
        }
        (self.output_entropy() - h_cond).max(0.0)
    }
}

/// Entropy of a Bernoulli(`p`) variable in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |q: f64| if q > 0.0 { -q * q.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

/// Exact `I(X_S; Y)` for a list of 1-based input indices.
pub fn exact_subset_mi(table: &TruthTable, subset: &[usize]) -> Result<f64> {
    let mut mask = 0u64;
    for &i in subset {
        if i == 0 || i > table.n_inputs() {
            return Err(Error::domain(format!("input x{i} outside 1..={}", table.n_inputs())));
        }
        mask |= 1 << (i - 1);
    }
    Ok(table.subset_mi(mask))
}

#[cfg(test)]
mod tests {
    use super::super::spec::GateOp;
    use super::*;

    #[test]
    fn row_count() {
        let t = TruthTable::build(&CircuitSpec::default_circuit()).unwrap();
        assert_eq!(t.rows(), 1024);
    }

    #[test]
    fn entropy_endpoints() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.5) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_subset_is_zero() {
        let t = TruthTable::build(&CircuitSpec::two_input(GateOp::Xor)).unwrap();
        assert_eq!(exact_subset_mi(&t, &[]).unwrap(), 0.0);
        assert!(exact_subset_mi(&t, &[3]).is_err());
    }
}
