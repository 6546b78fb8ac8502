//! Boolean circuits over uniform binary inputs: a small gate-list format,
//! truth tables and exact subset mutual information.

pub mod spec;
pub mod subsets;
pub mod table;

pub use spec::{CircuitSpec, Gate, GateOp, Ref};
pub use subsets::{pareto_front, subset_scatter, write_subsets_csv, FrontPoint, SubsetPoint};
pub use table::{binary_entropy, exact_subset_mi, TruthTable};
