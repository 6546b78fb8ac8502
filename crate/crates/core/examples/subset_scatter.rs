//! Exact `I(X_S; Y)` for every input subset of a circuit, and its Pareto front.
//!
//! ```text
//! cargo run --release --example subset_scatter [circuit.circ]
//! ```

use dib::circuit::{pareto_front, subset_scatter, CircuitSpec, TruthTable};

fn main() -> dib::Result<()> {
    let spec = match std::env::args().nth(1) {
        Some(p) => CircuitSpec::load(p.as_ref())?,
        None => CircuitSpec::default_circuit(),
    };
    let table = TruthTable::build(&spec)?;
    println!("{} inputs, H(Y) = {:.4} bits", table.n_inputs(), table.output_entropy());

    let points = subset_scatter(&table)?;
    println!("{:>6} {:>8}  best subset", "size", "bits");
    for f in pareto_front(&points) {
        let best = points
            .iter()
            .filter(|p| p.pareto_flag && p.size_bits == f.size_bits)
            .map(|p| p.subset_bitmask)
            .next()
            .unwrap_or(0);
        let names: Vec<String> = (0..table.n_inputs())
            .filter(|i| best & (1 << i) != 0)
            .map(|i| format!("x{}", i + 1))
            .collect();
        println!("{:>6} {:>8.4}  {}", f.size_bits, f.mi_bits, names.join(" "));
    }
    Ok(())
}
