//! The estimator benchmark grid written as CSV to stdout.
//!
//! ```text
//! cargo run --release --example mi_bench > bench.csv
//! ```

use dib::miest::{bench_orthogonal, write_bench_csv, BenchConfig};

fn main() -> dib::Result<()> {
    let mut cfg = BenchConfig::quick();
    cfg.h_bits = vec![1, 4];
    cfg.k_grid = vec![64, 1024];
    let rows = bench_orthogonal(&cfg)?;
    write_bench_csv(&rows, std::io::stdout())?;
    let bad = rows.iter().filter(|r| !r.sandwich_holds()).count();
    eprintln!("{} cells, {bad} outside the 3-sigma sandwich", rows.len());
    Ok(())
}
