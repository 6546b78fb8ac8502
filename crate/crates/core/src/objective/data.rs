use crate::circuit::{binary_entropy, TruthTable};
use crate::error::{Error, Result};

/// Column-major labelled data: one column per channel, binary labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    columns: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

/// A minibatch in the same layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

impl Dataset {
    pub fn new(columns: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::contract("dataset needs at least one channel"));
        }
        if let Some(c) = columns.iter().find(|c| c.len() != labels.len()) {
            return Err(Error::Dimension {
                layer: "dataset column".into(),
                expected: format!("{} rows", labels.len()),
                got: c.len().to_string(),
            });
        }
        if let Some(y) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
            return Err(Error::domain(format!("labels must be 0 or 1, got {y}")));
        }
        Ok(Self { columns, labels })
    }

    /// All rows of a truth table; channel `i` is input `x_{i+1}`.
    pub fn from_truth_table(table: &TruthTable) -> Self {
        let columns = (0..table.n_inputs()).map(|i| table.input_column(i)).collect();
        Self {
            columns,
            labels: table.output_column(),
        }
    }

    pub fn rows(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn channels(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, i: usize) -> &[f64] {
        &self.columns[i]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn gather(&self, idx: &[usize]) -> Batch {
        Batch {
            x: self
                .columns
                .iter()
                .map(|c| idx.iter().map(|&i| c[i]).collect())
                .collect(),
            y: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn all(&self) -> Batch {
        Batch {
            x: self.columns.clone(),
            y: self.labels.clone(),
        }
    }

    /// Empirical `H(Y)` in bits.
    pub fn label_entropy_bits(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let p = self.labels.iter().sum::<f64>() / self.rows() as f64;
        binary_entropy(p)
    }
}
