//! What does a compressed scalar channel still tell apart? Train one channel
//! on `y = [x > 0.3]` at a moderate beta and print its similarity matrix.
//!
//! ```text
//! cargo run --release --example distinguishability
//! ```

use dib::analysis::{block_summary, distinguishability, quantile_probes, Similarity};
use dib::diffcore::Rng;
use dib::encoder::EncoderSpec;
use dib::objective::{train_sweep, BetaSchedule, Dataset, MemorySink, TrainConfig};

fn main() -> dib::Result<()> {
    let mut rng = Rng::new(3);
    let x: Vec<f64> = (0..2000).map(|_| rng.normal()).collect();
    let y: Vec<f64> = x.iter().map(|&v| f64::from(u8::from(v > 0.3))).collect();
    let data = Dataset::new(vec![x.clone()], y)?;

    let mut cfg = TrainConfig::circuit(1);
    cfg.encoder = EncoderSpec::scalar_mlp(4, vec![16]);
    cfg.decoder_hidden = vec![32];
    cfg.batch_size = 256;
    cfg.lr = 3e-3;
    cfg.set_steps(3000);
    cfg.schedule = BetaSchedule::new(0.05, 0.05, 3000)?;
    cfg.checkpoints = 1;
    let out = train_sweep(&cfg, &data, &mut MemorySink::default())?;

    let enc = dib::objective::DibModel::new(&cfg).encoders.remove(0);
    let probes = quantile_probes(&x, 16)?;
    let m = distinguishability(&enc, &out.params, &probes, Similarity::Bhattacharyya)?;
    for (p, row) in probes.iter().zip(&m.m) {
        let cells: String = row.iter().map(|&v| char::from(b" .:-=+*#%@"[(v * 9.0).round() as usize])).collect();
        println!("{p:>6.2} |{cells}|");
    }
    let Some(b) = block_summary(&m.m) else { return Ok(()) };
    println!(
        "split before probe {} ({:.2}): within >= {:.2}, across <= {:.2}",
        b.split, probes[b.split], b.within_min, b.across_max
    );
    Ok(())
}
