//! Neighborhoods, the plain-text dataset format, and train/validation splits.
//!
//! A record is a header `N <count> <center_type> <label>` followed by
//! `count` rows `<x> <y> <type>`, positions relative to the center particle.
//! Blank lines and `#` comments are skipped.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::diffcore::Rng;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParticleType {
    A,
    B,
}

impl FromStr for ParticleType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" | "0" => Ok(ParticleType::A),
            "B" | "b" | "1" => Ok(ParticleType::B),
            _ => Err(Error::domain(format!("unknown particle type `{s}`"))),
        }
    }
}

impl fmt::Display for ParticleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParticleType::A => "A",
            ParticleType::B => "B",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub x: f64,
    pub y: f64,
    pub kind: ParticleType,
}

impl Particle {
    pub fn new(x: f64, y: f64, kind: ParticleType) -> Self {
        Self { x, y, kind }
    }

    pub fn polar(r: f64, theta: f64, kind: ParticleType) -> Self {
        Self::new(r * theta.cos(), r * theta.sin(), kind)
    }

    pub fn radius(&self) -> f64 {
        self.x.hypot(self.y)
    }
}

/// Particles around a center at the origin; `label` marks a rearrangement.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhood {
    pub center_type: ParticleType,
    pub particles: Vec<Particle>,
    pub label: bool,
}

impl Neighborhood {
    pub fn new(center_type: ParticleType, particles: Vec<Particle>, label: bool) -> Self {
        Self {
            center_type,
            particles,
            label,
        }
    }

    /// The same neighborhood rotated by `theta` about the center.
    pub fn rotated(&self, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        let particles = self
            .particles
            .iter()
            .map(|p| Particle::new(c * p.x - s * p.y, s * p.x + c * p.y, p.kind))
            .collect();
        Self::new(self.center_type, particles, self.label)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GlassDataset {
    pub neighborhoods: Vec<Neighborhood>,
}

impl GlassDataset {
    pub fn new(neighborhoods: Vec<Neighborhood>) -> Self {
        Self { neighborhoods }
    }

    pub fn len(&self) -> usize {
        self.neighborhoods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neighborhoods.is_empty()
    }

    pub fn labels(&self) -> Vec<f64> {
        self.neighborhoods.iter().map(|n| n.label as u8 as f64).collect()
    }

    pub fn positives(&self) -> usize {
        self.neighborhoods.iter().filter(|n| n.label).count()
    }

    pub fn subset(&self, idx: &[usize]) -> GlassDataset {
        GlassDataset::new(idx.iter().map(|&i| self.neighborhoods[i].clone()).collect())
    }

    /// Keeps only neighborhoods whose center has type `t`.
    pub fn with_center(&self, t: ParticleType) -> GlassDataset {
        GlassDataset::new(self.neighborhoods.iter().filter(|n| n.center_type == t).cloned().collect())
    }

    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut out = Vec::new();
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        while let Some((ln, header)) = lines.next() {
            let f: Vec<&str> = header.split_whitespace().collect();
            if f.len() != 4 || f[0] != "N" {
                return Err(Error::parse(
                    source,
                    ln,
                    format!("expected `N <count> <center_type> <label>`, found `{header}`"),
                ));
            }
            let count: usize = f[1]
                .parse()
                .map_err(|_| Error::parse(source, ln, format!("bad particle count `{}`", f[1])))?;
            let center: ParticleType = f[2].parse().map_err(|e: Error| Error::parse(source, ln, e.to_string()))?;
            let label = match f[3] {
                "0" => false,
                "1" => true,
                other => return Err(Error::parse(source, ln, format!("label must be 0 or 1, got `{other}`"))),
            };
            let mut particles = Vec::with_capacity(count);
            for _ in 0..count {
                let (pl, row) = lines.next().ok_or_else(|| {
                    Error::parse(source, ln, format!("record declares {count} particles but the file ends early"))
                })?;
                let g: Vec<&str> = row.split_whitespace().collect();
                if g.len() != 3 {
                    return Err(Error::parse(source, pl, format!("expected `<x> <y> <type>`, found `{row}`")));
                }
                let coord = |s: &str| -> Result<f64> {
                    s.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| Error::parse(source, pl, format!("bad coordinate `{s}`")))
                };
                let kind: ParticleType = g[2].parse().map_err(|e: Error| Error::parse(source, pl, e.to_string()))?;
                particles.push(Particle::new(coord(g[0])?, coord(g[1])?, kind));
            }
            out.push(Neighborhood::new(center, particles, label));
        }
        Ok(Self::new(out))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for n in &self.neighborhoods {
            s.push_str(&format!("N {} {} {}\n", n.particles.len(), n.center_type, n.label as u8));
            for p in &n.particles {
                s.push_str(&format!("{} {} {}\n", p.x, p.y, p.kind));
            }
        }
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

/// Indices into a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

impl Split {
    /// Per-class seeded shuffle, `train_frac` of each class to training.
    pub fn stratified(ds: &GlassDataset, train_frac: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&train_frac) {
            return Err(Error::domain(format!("train fraction {train_frac} outside [0, 1]")));
        }
        let mut rng = Rng::new(seed);
        let mut train = Vec::new();
        let mut val = Vec::new();
        for class in [false, true] {
            let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.neighborhoods[i].label == class).collect();
            rng.shuffle(&mut idx);
            let k = (train_frac * idx.len() as f64).round() as usize;
            train.extend_from_slice(&idx[..k]);
            val.extend_from_slice(&idx[k..]);
        }
        train.sort_unstable();
        val.sort_unstable();
        Ok(Self { train, val })
    }

    /// Lines `<index> train` or `<index> val`.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(usize, &str)> = self.train.iter().map(|&i| (i, "train")).collect();
        rows.extend(self.val.iter().map(|&i| (i, "val")));
        rows.sort_unstable();
        rows.iter().map(|(i, s)| format!("{i} {s}\n")).collect()
    }

    pub fn parse(text: &str, source: &str, n: usize) -> Result<Self> {
        let mut train = Vec::new();
        let mut val = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |m: String| Error::parse(source, i + 1, m);
            let (idx, side) = line
                .split_once(char::is_whitespace)
                .ok_or_else(|| bad(format!("expected `<index> train|val`, found `{line}`")))?;
            let idx: usize = idx.parse().map_err(|_| bad(format!("bad index `{idx}`")))?;
            if idx >= n {
                return Err(bad(format!("index {idx} out of range for {n} records")));
            }
            match side.trim() {
                "train" => train.push(idx),
                "val" => val.push(idx),
                other => return Err(bad(format!("unknown split `{other}`"))),
            }
        }
        Ok(Self { train, val })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path, n: usize) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, &path.display().to_string(), n)
    }
}

/// Reads a dataset and its split: `split_path` if it exists, otherwise a
/// seeded 90/10 stratified split that is then written there.
pub fn load_dataset(path: &Path, split_path: Option<&Path>, seed: u64) -> Result<(GlassDataset, Split)> {
    let ds = GlassDataset::load(path)?;
    let split = match split_path {
        Some(p) if p.exists() => Split::load(p, ds.len())?,
        Some(p) => {
            let s = Split::stratified(&ds, 0.9, seed)?;
            s.save(p)?;
            s
        }
        None => Split::stratified(&ds, 0.9, seed)?,
    };
    Ok((ds, split))
}

/// Keeps every positive and an equal number of randomly chosen negatives,
/// interleaved positive/negative.
pub fn pair_negatives(ds: &GlassDataset, seed: u64) -> Result<GlassDataset> {
    let pos: Vec<usize> = (0..ds.len()).filter(|&i| ds.neighborhoods[i].label).collect();
    let neg: Vec<usize> = (0..ds.len()).filter(|&i| !ds.neighborhoods[i].label).collect();
    if neg.len() < pos.len() {
        return Err(Error::contract(format!(
            "{} positives but only {} negatives to pair with",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = Rng::new(seed);
    let pick = rng.sample_without_replacement(neg.len(), pos.len());
    let mut idx = Vec::with_capacity(2 * pos.len());
    for (p, k) in pos.iter().zip(pick) {
        idx.push(*p);
        idx.push(neg[k]);
    }
    Ok(ds.subset(&idx))
}
