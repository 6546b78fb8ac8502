//! A beta sweep on a Boolean circuit: train, measure every checkpoint, and
//! compare the trajectory with the exact subset front.
//!
//! ```text
//! cargo run --release --example circuit_sweep [steps] [out_dir]
//! ```

use std::path::PathBuf;

use dib::analysis::{interpolate_predictive, MeasureConfig};
use dib::circuit::CircuitSpec;
use dib::cli::{run_circuit, CircuitOptions, Mode};
use dib::objective::TrainConfig;

fn main() -> dib::Result<()> {
    let mut args = std::env::args().skip(1);
    let steps: u64 = args.next().map_or(3000, |s| s.parse().expect("steps"));
    let out = args.next().map_or_else(|| std::env::temp_dir().join("dib-circuit-sweep"), PathBuf::from);

    let spec = CircuitSpec::default_circuit();
    let mut train = TrainConfig::circuit(spec.n_inputs);
    train.set_steps(steps);
    train.checkpoints = 40;
    let opts = CircuitOptions {
        spec,
        out,
        train,
        measure: MeasureConfig::default(),
        mode: Mode::Train { force: true },
    };
    let r = run_circuit(&opts)?;

    println!("H(Y) = {:.4} bits", r.h_y_bits);
    println!("{:>10} {:>8} {:>8} {:>8}", "beta", "I(U;X)", "I(U;Y)", "acc");
    for p in r.plane.iter().rev().step_by(4) {
        println!("{:>10.3e} {:>8.3} {:>8.3} {:>8.3}", p.beta, p.total_bits, p.predictive_bits, p.accuracy);
    }
    println!("\nfront vs trajectory at the same number of bits:");
    for f in &r.front {
        let traj = interpolate_predictive(&r.plane, f.size_bits as f64).unwrap_or(f64::NAN);
        println!("  {:>2} bits  exact {:.3}  sweep {:.3}", f.size_bits, f.mi_bits, traj);
    }
    println!("outputs in {}", r.run.path().display());
    Ok(())
}
