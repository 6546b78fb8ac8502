use std::f64::consts::PI;
use std::path::Path;

use super::data::{GlassDataset, ParticleType};
use super::features::TRUNCATION_RADIUS;
use crate::error::{Error, Result};

pub const DEFAULT_RDF_BIN: f64 = 0.02;

/// Binned radial distribution function around centers of one type.
#[derive(Clone, Debug, PartialEq)]
pub struct Rdf {
    pub center: ParticleType,
    pub neighbor: ParticleType,
    pub bin_width: f64,
    /// Bin midpoints.
    pub r: Vec<f64>,
    pub g: Vec<f64>,
}

impl Rdf {
    /// Index of the largest bin.
    pub fn peak(&self) -> usize {
        (0..self.g.len())
            .max_by(|&a, &b| self.g[a].total_cmp(&self.g[b]))
            .unwrap_or(0)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["r", &format!("g_{}{}", self.center, self.neighbor)])?;
        for (r, g) in self.r.iter().zip(&self.g) {
            w.write_record([r.to_string(), g.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `g(r)` for `neighbor`-type particles around `center`-type centers, out
/// to the truncation radius. Each shell count is divided by the shell area
/// and by the mean number density inside the truncation disc.
pub fn compute_rdf(ds: &GlassDataset, center: ParticleType, neighbor: ParticleType, bin_width: f64) -> Result<Rdf> {
    if !(bin_width > 0.0) {
        return Err(Error::domain(format!("bin width must be positive, got {bin_width}")));
    }
    let centers: Vec<_> = ds.neighborhoods.iter().filter(|n| n.center_type == center).collect();
    if centers.is_empty() {
        return Err(Error::contract(format!("no neighborhoods with a type-{center} center")));
    }
    let n_bins = (TRUNCATION_RADIUS / bin_width).floor() as usize;
    let mut counts = vec![0.0; n_bins];
    let mut total = 0.0;
    for nh in &centers {
        for p in nh.particles.iter().filter(|p| p.kind == neighbor) {
            let r = p.radius();
            if r <= TRUNCATION_RADIUS {
                total += 1.0;
            }
            let b = (r / bin_width) as usize;
            if b < n_bins {
                counts[b] += 1.0;
            }
        }
    }
    let n = centers.len() as f64;
    let density = total / n / (PI * TRUNCATION_RADIUS * TRUNCATION_RADIUS);
    let mut r = Vec::with_capacity(n_bins);
    let mut g = Vec::with_capacity(n_bins);
    for (b, c) in counts.iter().enumerate() {
        let lo = b as f64 * bin_width;
        let hi = lo + bin_width;
        let area = PI * (hi * hi - lo * lo);
        r.push(lo + 0.5 * bin_width);
        g.push(if density > 0.0 { c / n / (density * area) } else { 0.0 });
    }
    Ok(Rdf {
        center,
        neighbor,
        bin_width,
        r,
        g,
    })
}
