//! Synthetic glass neighborhoods: structure functions, pair correlation and
//! the linear baseline.
//!
//! ```text
//! cargo run --release --example glass_features [n] [separation]
//! ```

use dib::glassfeat::{
    compute_rdf, feature_name, featurize_all, linear_baseline, synth_dataset, BaselineConfig, NormStats,
    ParticleType, Split, DEFAULT_RDF_BIN, SYNTH_SHELL_INDEX,
};

fn main() -> dib::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(1000, |s| s.parse().expect("n"));
    let separation: f64 = args.next().map_or(1.0, |s| s.parse().expect("separation"));
    let ds = synth_dataset(0, n, separation)?;

    let rdf = compute_rdf(&ds, ParticleType::A, ParticleType::A, DEFAULT_RDF_BIN)?;
    let peak = rdf.peak();
    println!("g_AA peaks at r = {:.3} (g = {:.2})", rdf.r[peak], rdf.g[peak]);

    let split = Split::stratified(&ds, 0.9, 0)?;
    let rows = featurize_all(&ds.neighborhoods, true);
    let labels = ds.labels();
    let train: Vec<Vec<f64>> = split.train.iter().map(|&i| rows[i].clone()).collect();
    let norm = NormStats::fit(&train)?;
    let pick = |idx: &[usize]| -> (Vec<Vec<f64>>, Vec<f64>) {
        (idx.iter().map(|&i| norm.apply(&rows[i])).collect(), idx.iter().map(|&i| labels[i]).collect())
    };
    let (tx, ty) = pick(&split.train);
    let (vx, vy) = pick(&split.val);

    // Class means of the informative feature against a neighbour.
    for j in [SYNTH_SHELL_INDEX - 1, SYNTH_SHELL_INDEX, SYNTH_SHELL_INDEX + 1] {
        let mean = |want: bool| {
            let v: Vec<f64> = rows.iter().zip(&labels).filter(|(_, &y)| (y > 0.5) == want).map(|(r, _)| r[j]).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        println!("{:<12} negatives {:.3}  positives {:.3}", feature_name(j), mean(false), mean(true));
    }

    let b = linear_baseline(&tx, &ty, &vx, &vy, &BaselineConfig::default())?;
    println!("linear baseline: {:.3} validation accuracy (penalty {:e})", b.best_accuracy, b.best_penalty);
    Ok(())
}
