//! Acceptance criteria A1 to A8, one line each.
//!
//! Runs as a plain binary (`harness = false`) so the summary is always
//! visible. Heavy criteria can be selected with `DIB_ACCEPT=A3,A5`. A7 needs
//! a neighborhood dataset in `DIB_GLASS_DATA` and is skipped otherwise.

use std::time::Instant;

use dib::analysis::{
    block_summary, compression_branch, distinguishability, interpolate_predictive, nearest_point, quantile_probes,
    MeasureConfig, Similarity, DEFAULT_PROBES,
};
use dib::circuit::{binary_entropy, exact_subset_mi, CircuitSpec, GateOp, TruthTable};
use dib::cli::{run_circuit, run_glass, CircuitOptions, GlassOptions, GlassSource, Mode};
use dib::diffcore::{ParamStore, Rng, Tape};
use dib::encoder::{EncoderKind, EncoderSpec, GaussianCode};
use dib::glassfeat::SYNTH_SHELL_INDEX;
use dib::miest::{bench_orthogonal, BenchConfig};
use dib::objective::{Batch, DibModel, TrainConfig};

struct Outcome {
    pass: Option<bool>,
    detail: String,
}

fn pass_if(ok: bool, detail: String) -> Outcome {
    Outcome { pass: Some(ok), detail }
}

// ---- A1 ------------------------------------------------------------------

/// Antithetic Monte Carlo of `E_q[log q(u) - log p(u)]` with `n` draws.
fn mc_kl(code: &GaussianCode, n: usize, rng: &mut Rng) -> f64 {
    let d = code.dim();
    let mut acc = 0.0;
    let mut eps = vec![0.0; d];
    let mut u = vec![0.0; d];
    for _ in 0..n / 2 {
        eps.iter_mut().for_each(|e| *e = rng.normal());
        for sign in [1.0, -1.0] {
            for j in 0..d {
                u[j] = code.mu[j] + (0.5 * code.log_var[j]).exp() * sign * eps[j];
            }
            let lq: f64 = (0..d)
                .map(|j| -0.5 * (eps[j] * eps[j] + code.log_var[j] + (2.0 * std::f64::consts::PI).ln()))
                .sum();
            let lp: f64 = u.iter().map(|x| -0.5 * (x * x + (2.0 * std::f64::consts::PI).ln())).sum();
            acc += lq - lp;
        }
    }
    acc / (2 * (n / 2)) as f64
}

fn a1() -> Outcome {
    let mut rng = Rng::new(101);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mu: Vec<f64> = (0..4).map(|_| rng.normal()).collect();
        let lv: Vec<f64> = (0..4).map(|_| rng.uniform_range(-1.0, 1.0)).collect();
        let code = GaussianCode::new(mu, lv).unwrap();
        let mc = mc_kl(&code, 1_000_000, &mut rng.derive(i));
        worst = worst.max((mc - code.kl_to_prior()).abs());
    }
    let zero = GaussianCode::prior(4).kl_to_prior();
    pass_if(
        worst < 0.005 && zero == 0.0,
        format!("max |closed form - MC| = {worst:.5} nats over 100 codes (< 0.005); prior KL = {zero}"),
    )
}

// ---- A2 ------------------------------------------------------------------

fn model_for(kind: EncoderKind) -> (TrainConfig, DibModel) {
    let mut cfg = TrainConfig::circuit(3);
    cfg.encoder = match kind {
        EncoderKind::BinaryTable => EncoderSpec::binary_table(4),
        _ => EncoderSpec {
            kind,
            ..EncoderSpec::scalar_mlp(3, vec![6, 5])
        },
    };
    cfg.decoder_hidden = vec![7, 6];
    let model = DibModel::new(&cfg);
    (cfg, model)
}

fn a2() -> Outcome {
    let kinds = [EncoderKind::BinaryTable, EncoderKind::ScalarMlp, EncoderKind::SharedMlp];
    let mut worst: f64 = 0.0;
    let mut checked = 0usize;
    for kind in kinds {
        let (_, model) = model_for(kind);
        for draw in 0..20u64 {
            let mut rng = Rng::new(1000 + draw);
            let mut store = ParamStore::new();
            model.init(&mut store, &mut rng);
            // Move every parameter off its initial value so saturated or
            // symmetric configurations are not the only ones tested.
            let paths: Vec<String> = store.paths().cloned().collect();
            for p in &paths {
                for v in store.get_mut(p).unwrap().data_mut() {
                    *v += 0.3 * rng.normal();
                }
            }
            let binary = kind == EncoderKind::BinaryTable;
            let rows = 6;
            let x: Vec<Vec<f64>> = (0..3)
                .map(|_| {
                    (0..rows)
                        .map(|_| if binary { rng.below(2) as f64 } else { rng.normal() })
                        .collect()
                })
                .collect();
            let y: Vec<f64> = (0..rows).map(|_| rng.below(2) as f64).collect();
            let batch = Batch { x, y };
            let beta = 0.5;
            let noise_seed = 77 + draw;
            let eval = |s: &ParamStore| -> f64 {
                let mut tape = Tape::new();
                let g = model.loss_graph(&mut tape, s, &batch, beta, &mut Rng::new(noise_seed)).unwrap();
                tape.value(g.loss).item()
            };
            let mut tape = Tape::new();
            let g = model
                .loss_graph(&mut tape, &store, &batch, beta, &mut Rng::new(noise_seed))
                .unwrap();
            store.zero_grad();
            tape.backward(g.loss, &mut store).unwrap();
            let h = 1e-6;
            for p in &paths {
                let grad = store.grad(p).unwrap().data().to_vec();
                for (j, &analytic) in grad.iter().enumerate() {
                    let orig = store.get(p).unwrap().data()[j];
                    store.get_mut(p).unwrap().data_mut()[j] = orig + h;
                    let up = eval(&store);
                    store.get_mut(p).unwrap().data_mut()[j] = orig - h;
                    let down = eval(&store);
                    store.get_mut(p).unwrap().data_mut()[j] = orig;
                    let fd = (up - down) / (2.0 * h);
                    let rel = (analytic - fd).abs() / (analytic.abs() + fd.abs()).max(1e-6);
                    worst = worst.max(rel);
                    checked += 1;
                }
            }
        }
    }
    pass_if(
        worst < 1e-4,
        format!("max relative error {worst:.2e} over {checked} coordinates, 3 encoder kinds x 20 draws (< 1e-4)"),
    )
}

// ---- A3 ------------------------------------------------------------------

fn a3() -> Outcome {
    let cfg = BenchConfig::default();
    let rows = bench_orthogonal(&cfg).unwrap();
    let mut fails = Vec::new();
    let d_max = cfg.d_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for r in &rows {
        let tag = format!("H={} d={} K={}", r.h_bits, r.d, r.k);
        if !r.sandwich_holds() {
            fails.push(format!("{tag}: sandwich {:.3} <= {:.3} <= {:.3}", r.lower_bits, r.mc_bits, r.upper_bits));
        }
        if r.d == 0.0 && (r.lower_bits.abs() > 0.02 || r.upper_bits.abs() > 0.02) {
            fails.push(format!("{tag}: d=0 bounds {:.4}/{:.4}", r.lower_bits, r.upper_bits));
        }
        if r.k == 1024 && r.d == d_max {
            let h = r.h_bits as f64;
            if (r.lower_bits - h).abs() > 0.05 || (r.upper_bits - h).abs() > 0.05 {
                fails.push(format!("{tag}: saturation {:.4}/{:.4} vs {h}", r.lower_bits, r.upper_bits));
            }
        }
        if r.k == 1024 && r.h_bits <= 6 && r.gap() >= 0.1 {
            fails.push(format!("{tag}: gap {:.4}", r.gap()));
        }
    }
    let max_gap = rows.iter().filter(|r| r.k == 1024).map(|r| r.gap()).fold(0.0, f64::max);
    pass_if(
        fails.is_empty(),
        if fails.is_empty() {
            format!("{} cells: sandwich within 3 sigma, d=0 within 0.02, saturation within 0.05, K=1024 max gap {max_gap:.4} bits", rows.len())
        } else {
            format!("{} violations: {}", fails.len(), fails.join("; "))
        },
    )
}

// ---- A4 ------------------------------------------------------------------

fn a4() -> Outcome {
    const N: usize = 4000;
    let tmp = tempfile::tempdir().unwrap();
    let mut o = GlassOptions::new(
        GlassSource::Synthetic {
            n: N,
            separation: 1.0,
        },
        tmp.path().join("glass"),
    );
    // Reduced widths so 100 channels train in minutes on one core.
    o.train.encoder.hidden = vec![16];
    o.train.encoder.latent_dim = 4;
    o.train.lr = 3e-3;
    o.epochs = 500;
    o.measure = MeasureConfig {
        k: 256,
        b: 4,
        ..MeasureConfig::default()
    };
    o.mode = Mode::Train { force: true };
    let r = run_glass(&o).unwrap();
    let branch = compression_branch(&r.plane);
    let Some(p) = nearest_point(&branch, 1.0) else {
        return pass_if(false, "empty plane".into());
    };
    let ch = r
        .channel_features
        .iter()
        .position(|&f| f == SYNTH_SHELL_INDEX)
        .expect("informative feature retained");
    let share = p.per_channel_bits[ch] / p.total_bits.max(1e-12);
    let acc_ratio = p.accuracy / r.baseline.best_accuracy;

    // Rebuild the matrix from the stored checkpoint rather than trusting the
    // pipeline's copy.
    let mut cfg = o.train.clone();
    cfg.channels = r.channel_features.len();
    let model = DibModel::new(&cfg);
    let store = r.run.load_checkpoint(p.step).unwrap();
    let data = dib::glassfeat::synth_dataset(o.train.seed, N, 1.0).unwrap();
    let split = dib::glassfeat::Split::stratified(&data, 0.9, o.train.seed).unwrap();
    let prepared = dib::cli::prepare_glass(&data, &split, None, true).unwrap();
    let probes = quantile_probes(prepared.train.column(ch), DEFAULT_PROBES).unwrap();
    let m = distinguishability(&model.encoders[ch], &store, &probes, Similarity::Bhattacharyya).unwrap();
    if let Some((_, stored)) = r.disting.iter().find(|(c, _)| *c == ch) {
        assert_eq!(stored, &m, "pipeline matrix differs from the recomputed one");
    }
    let Some(b) = block_summary(&m.m) else {
        return pass_if(false, "no block split".into());
    };
    let ok = acc_ratio >= 0.85 && share >= 0.7 && b.within_min >= 0.9 && b.across_max <= 0.5;
    pass_if(
        ok,
        format!(
            "checkpoint at {:.3} bits: accuracy {:.3} = {:.3} x baseline {:.3} (>= 0.85); informative share {:.3} (>= 0.7); split at probe {} within >= {:.3} (>= 0.9), across <= {:.3} (<= 0.5)",
            p.total_bits, p.accuracy, acc_ratio, r.baseline.best_accuracy, share, b.split, b.within_min, b.across_max
        ),
    )
}

// ---- A5 ------------------------------------------------------------------

fn a5() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let spec = CircuitSpec::default_circuit();
    let mut train = TrainConfig::circuit(spec.n_inputs);
    train.set_steps(10_000);
    let o = CircuitOptions {
        spec,
        out: tmp.path().join("circuit"),
        train,
        measure: MeasureConfig::default(),
        mode: Mode::Train { force: true },
    };
    let r = run_circuit(&o).unwrap();
    let by_step = |first: bool| {
        let it = r.plane.iter();
        if first {
            it.min_by_key(|p| p.step).unwrap()
        } else {
            it.max_by_key(|p| p.step).unwrap()
        }
    };
    let open = by_step(true);
    let closed = by_step(false);
    let i_ok = open.predictive_bits >= 0.95 * r.h_y_bits && (open.total_bits - 10.0).abs() <= 0.3;
    let ii_ok = closed.total_bits < 0.05;
    let mut close = 0;
    let mut diffs = Vec::new();
    for f in &r.front {
        let pred = interpolate_predictive(&r.plane, f.size_bits as f64).unwrap();
        let d = (pred - f.mi_bits).abs();
        diffs.push(format!("{}:{:+.3}", f.size_bits, pred - f.mi_bits));
        if d <= 0.15 {
            close += 1;
        }
    }
    let frac = close as f64 / r.front.len() as f64;
    pass_if(
        i_ok && ii_ok && frac >= 0.8,
        format!(
            "(i) open end pred {:.4} of H(Y) {:.4}, total {:.3}; (ii) closed end total {:.4}; (iii) {close}/{} front points within 0.15 [{}]",
            open.predictive_bits,
            r.h_y_bits,
            open.total_bits,
            closed.total_bits,
            r.front.len(),
            diffs.join(" ")
        ),
    )
}

// ---- A6 ------------------------------------------------------------------

fn a6() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let spec = CircuitSpec::passthrough(10, 3).unwrap();
    let mut train = TrainConfig::circuit(10);
    train.set_steps(4_000);
    let o = CircuitOptions {
        spec,
        out: tmp.path().join("passthrough"),
        train,
        measure: MeasureConfig::default(),
        mode: Mode::Train { force: true },
    };
    let r = run_circuit(&o).unwrap();
    let branch = compression_branch(&r.plane);
    let p = nearest_point(&branch, 1.0).unwrap();
    let x3 = p.per_channel_bits[2];
    let others = p
        .per_channel_bits
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != 2)
        .map(|(_, b)| *b)
        .fold(0.0, f64::max);
    pass_if(
        x3 >= 0.9 && others <= 0.05,
        format!("checkpoint at {:.3} total bits: x3 carries {x3:.4} (>= 0.9), largest other {others:.4} (<= 0.05)", p.total_bits),
    )
}

// ---- A7 ------------------------------------------------------------------

fn a7() -> Outcome {
    let Ok(path) = std::env::var("DIB_GLASS_DATA") else {
        return Outcome {
            pass: None,
            detail: "skipped: set DIB_GLASS_DATA to a neighborhood dataset to run".into(),
        };
    };
    let tmp = tempfile::tempdir().unwrap();
    let mut o = GlassOptions::new(GlassSource::File(path.into()), tmp.path().join("glass"));
    o.mode = Mode::Train { force: true };
    let r = run_glass(&o).unwrap();
    let branch = compression_branch(&r.plane);
    let at = |bits: f64| nearest_point(&branch, bits).map_or(f64::NAN, |p| p.accuracy);
    let (a1, a20) = (at(1.0), at(20.0));
    let base = r.baseline.best_accuracy;
    let ok = (a1 - 0.718).abs() <= 0.03 && (a20 - 0.913).abs() <= 0.03 && (base - 0.913).abs() <= 0.02;
    pass_if(
        ok,
        format!("accuracy {a1:.3} at 1 bit (0.718 +- 0.03), {a20:.3} at 20 bits (0.913 +- 0.03), baseline {base:.3}"),
    )
}

// ---- A8 ------------------------------------------------------------------

fn a8() -> Outcome {
    let mut errs: Vec<f64> = Vec::new();
    let table = |op| TruthTable::build(&CircuitSpec::two_input(op)).unwrap();
    // AND / OR singleton: H(Y) = h(1/4), H(Y | X1) = 1/2 h(1/2).
    let single = binary_entropy(0.25) - 0.5;
    for op in [GateOp::And, GateOp::Or] {
        let t = table(op);
        errs.push((exact_subset_mi(&t, &[1]).unwrap() - single).abs());
        errs.push((exact_subset_mi(&t, &[2]).unwrap() - single).abs());
        errs.push((exact_subset_mi(&t, &[1, 2]).unwrap() - binary_entropy(0.25)).abs());
    }
    let xor = table(GateOp::Xor);
    errs.push(exact_subset_mi(&xor, &[1]).unwrap().abs());
    errs.push(exact_subset_mi(&xor, &[2]).unwrap().abs());
    errs.push((exact_subset_mi(&xor, &[1, 2]).unwrap() - 1.0).abs());
    let worst = errs.iter().cloned().fold(0.0, f64::max);

    let t = TruthTable::build(&CircuitSpec::default_circuit()).unwrap();
    let mut violations = 0;
    for mask in 0u64..1024 {
        let base = t.subset_mi(mask);
        for i in 0..10 {
            if mask & (1 << i) == 0 && t.subset_mi(mask | (1 << i)) < base - 1e-12 {
                violations += 1;
            }
        }
    }
    pass_if(
        worst < 1e-12 && violations == 0 && (single - 0.3113).abs() < 5e-5,
        format!("max error {worst:.1e} vs hand values (AND singleton {single:.4}); {violations} monotonicity violations over 1024 subsets"),
    )
}

fn main() {
    let only: Option<Vec<String>> = std::env::var("DIB_ACCEPT")
        .ok()
        .map(|s| s.split(',').map(|x| x.trim().to_uppercase()).collect());
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("A1", a1),
        ("A2", a2),
        ("A3", a3),
        ("A4", a4),
        ("A5", a5),
        ("A6", a6),
        ("A7", a7),
        ("A8", a8),
    ];
    let mut failed = 0;
    for (id, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.iter().any(|x| x == id)) {
            continue;
        }
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        let tag = match out.pass {
            Some(true) => "PASS",
            Some(false) => {
                failed += 1;
                "FAIL"
            }
            None => "SKIP",
        };
        println!("{id} {tag} ({secs:.1}s) {}", out.detail);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
