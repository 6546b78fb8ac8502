//! InfoNCE and leave-one-out bounds on a known channel, checked against a
//! Monte Carlo oracle, plus the contribution of each outcome.
//!
//! ```text
//! cargo run --release --example mi_bounds
//! ```

use dib::diffcore::Rng;
use dib::miest::{estimate_bounds, mc_oracle, per_outcome_contribution, OrthogonalScheme};

fn main() -> dib::Result<()> {
    // Four equiprobable outcomes with means on orthogonal axes.
    let rng = Rng::new(7);
    println!("{:>4} {:>8} {:>8} {:>8}", "d", "lower", "oracle", "upper");
    for d in [0.0, 1.0, 2.0, 4.0, 8.0] {
        let scheme = OrthogonalScheme::new(2, d, 4)?;
        let codes = scheme.codes();
        let mut draw = rng.derive(d.to_bits());
        let pool: Vec<_> = (0..1024).map(|_| codes[draw.below(4)].clone()).collect();
        let b = estimate_bounds(&pool, 256, 32, &rng.derive(1), true)?;
        let mc = mc_oracle(&scheme.mixture(), 100_000, &rng.derive(2));
        println!("{d:>4} {:>8.4} {:>8.4} {:>8.4}", b.lower_bits, mc.bits, b.upper_bits);
    }

    // Per-outcome: a rare outcome carries more information when it occurs.
    let scheme = OrthogonalScheme::new(1, 2.0, 2)?;
    let codes = scheme.codes();
    let background: Vec<_> = (0..1000).map(|i| codes[usize::from(i % 10 == 0)].clone()).collect();
    for (name, code) in [("common", &codes[0]), ("rare", &codes[1])] {
        let c = per_outcome_contribution(code, &background, 256, 16, 64, &rng.derive(3))?;
        println!("{name:>6} outcome: [{:.3}, {:.3}] bits", c.lower_bits, c.upper_bits);
    }
    Ok(())
}
