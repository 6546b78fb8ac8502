//! Which input matters? `Y = x3` among nine distractors. Near one bit of
//! total information the sweep should spend it all on channel 3.
//!
//! ```text
//! cargo run --release --example feature_selection [steps]
//! ```

use dib::analysis::{compression_branch, nearest_point, top_k_channels, MeasureConfig};
use dib::circuit::CircuitSpec;
use dib::cli::{run_circuit, CircuitOptions, Mode};
use dib::objective::TrainConfig;

fn main() -> dib::Result<()> {
    let steps: u64 = std::env::args().nth(1).map_or(3000, |s| s.parse().expect("steps"));
    let tmp = tempfile::tempdir()?;
    let spec = CircuitSpec::passthrough(10, 3)?;
    let mut train = TrainConfig::circuit(10);
    train.set_steps(steps);
    train.checkpoints = 40;
    let r = run_circuit(&CircuitOptions {
        spec,
        out: tmp.path().join("run"),
        train,
        measure: MeasureConfig::default(),
        mode: Mode::Train { force: true },
    })?;

    for target in [5.0, 2.0, 1.0, 0.5] {
        let branch = compression_branch(&r.plane);
        let Some(p) = nearest_point(&branch, target) else { continue };
        let bits: Vec<String> = p.per_channel_bits.iter().map(|b| format!("{b:.2}")).collect();
        let top: Vec<String> = top_k_channels(p, 3).iter().map(|&c| r.allocation.labels[c].clone()).collect();
        println!("total {:>5.2}  pred {:.3}  [{}]  top: {}", p.total_bits, p.predictive_bits, bits.join(" "), top.join(","));
    }
    Ok(())
}
