//! Synthetic neighborhoods whose classes differ in one type-A shell.
//!
//! Background particles are Poisson-scattered over the annulus
//! `[0.5, 4.5]` (65% type A), with a gap of one grid step on either side of
//! the informative radius. Only the feature at that radius sees the shell
//! without background; its grid neighbours see it mixed with background.
//! With probability `min(separation, 1)` a positive neighborhood then gets
//! `2 + Poisson(2)` extra type-A particles sitting at that radius; negatives
//! never do. `separation = 0` makes the classes identical, and at
//! `separation >= 1` a count threshold separates them with one empty count
//! level in between.

use std::f64::consts::{PI, TAU};

use super::data::{GlassDataset, Neighborhood, Particle, ParticleType};
use super::features::{radius_step, R_MIN, TRUNCATION_RADIUS};
use crate::diffcore::Rng;
use crate::error::{Error, Result};

/// Grid index of the informative type-A radius.
pub const SYNTH_SHELL_INDEX: usize = 10;
pub const SYNTH_DENSITY: f64 = 0.8;
pub const SYNTH_FRACTION_A: f64 = 0.65;
const SHELL_JITTER: f64 = 0.005;
const SHELL_MIN: usize = 2;
const SHELL_EXTRA_MEAN: f64 = 2.0;

pub fn synth_shell_radius() -> f64 {
    R_MIN + SYNTH_SHELL_INDEX as f64 * radius_step()
}

/// `n` neighborhoods, alternating positive and negative; `n` is rounded
/// down to an even count.
pub fn synth_dataset(seed: u64, n: usize, separation: f64) -> Result<GlassDataset> {
    if n < 2 {
        return Err(Error::contract(format!("synthetic dataset needs n >= 2, got {n}")));
    }
    if !(separation >= 0.0 && separation.is_finite()) {
        return Err(Error::domain(format!("separation must be >= 0, got {separation}")));
    }
    let root = Rng::new(seed);
    let n = n - n % 2;
    let nhs = (0..n)
        .map(|i| {
            let mut rng = root.derive(i as u64);
            let label = i % 2 == 0;
            neighborhood(&mut rng, label, separation)
        })
        .collect();
    Ok(GlassDataset::new(nhs))
}

fn neighborhood(rng: &mut Rng, label: bool, separation: f64) -> Neighborhood {
    let r_star = synth_shell_radius();
    let (r0, r1) = (R_MIN, TRUNCATION_RADIUS);
    let area = PI * (r1 * r1 - r0 * r0);
    let count = poisson_large(rng, SYNTH_DENSITY * area);
    let mut particles = Vec::with_capacity(count + 4);
    for _ in 0..count {
        let r = rng.uniform_range(r0 * r0, r1 * r1).sqrt();
        let theta = rng.uniform_range(0.0, TAU);
        let kind = if rng.bernoulli(SYNTH_FRACTION_A) {
            ParticleType::A
        } else {
            ParticleType::B
        };
        if (r - r_star).abs() >= radius_step() {
            particles.push(Particle::polar(r, theta, kind));
        }
    }
    let shell = if label && rng.bernoulli(separation.min(1.0)) {
        SHELL_MIN + rng.poisson(SHELL_EXTRA_MEAN)
    } else {
        0
    };
    for _ in 0..shell {
        let r = r_star + SHELL_JITTER * rng.normal();
        particles.push(Particle::polar(r, rng.uniform_range(0.0, TAU), ParticleType::A));
    }
    Neighborhood::new(ParticleType::A, particles, label)
}

/// Poisson draw via a normal approximation once the mean is large.
fn poisson_large(rng: &mut Rng, mean: f64) -> usize {
    if mean < 30.0 {
        rng.poisson(mean)
    } else {
        (mean + mean.sqrt() * rng.normal()).round().max(0.0) as usize
    }
}
