use std::f64::consts::LN_2;

use dib::circuit::{CircuitSpec, GateOp, TruthTable};
use dib::diffcore::{ParamStore, Rng, Tape};
use dib::encoder::{EncoderKind, EncoderSpec, GaussianCode};
use dib::objective::{BetaSchedule, Dataset, DibModel, MemorySink, TrainConfig};
use dib::Error;
use proptest::prelude::*;

fn xor_data() -> Dataset {
    Dataset::from_truth_table(&TruthTable::build(&CircuitSpec::two_input(GateOp::Xor)).unwrap())
}

fn small_cfg(channels: usize) -> TrainConfig {
    let mut cfg = TrainConfig::circuit(channels);
    cfg.decoder_hidden = vec![32, 32];
    cfg.batch_size = 64;
    cfg.lr = 3e-3;
    cfg.checkpoints = 5;
    cfg
}

fn trained(cfg: &TrainConfig, data: &Dataset) -> ParamStore {
    dib::objective::train_sweep(cfg, data, &mut MemorySink::default()).unwrap().params
}

#[test]
fn loss_recomposes_from_parts() {
    let cfg = small_cfg(2);
    let model = DibModel::new(&cfg);
    let mut store = ParamStore::new();
    model.init(&mut store, &mut Rng::new(4));
    let batch = xor_data().all();
    let beta = 0.37;

    let mut tape = Tape::new();
    let g = model.loss_graph(&mut tape, &store, &batch, beta, &mut Rng::new(9)).unwrap();
    let loss = tape.value(g.loss).item();

    // Hand assembly with the same noise: codes, samples, decoder, BCE.
    let mut noise = Rng::new(9);
    let codes = model.encode_all(&store, &xor_data()).unwrap();
    let n = batch.len();
    let mut u = vec![Vec::new(); n];
    let mut kl_sum = 0.0;
    for ch in &codes {
        let d = ch[0].dim();
        let eps = dib::diffcore::sample_standard_normal(&mut noise, &[n, d]);
        for (r, code) in ch.iter().enumerate() {
            for j in 0..d {
                u[r].push(code.mu[j] + (0.5 * code.log_var[j]).exp() * eps.at(r, j));
            }
        }
        kl_sum += ch.iter().map(GaussianCode::kl_to_prior).sum::<f64>() / n as f64;
    }
    let width = u[0].len();
    let flat: Vec<f64> = u.into_iter().flatten().collect();
    let z = model
        .decode(&store, &dib::diffcore::Tensor::matrix(n, width, flat).unwrap())
        .unwrap();
    let ce: f64 = z
        .iter()
        .zip(&batch.y)
        .map(|(z, y)| z.max(0.0) - z * y + (-z.abs()).exp().ln_1p())
        .sum::<f64>()
        / n as f64;
    assert!((loss - (beta * kl_sum + ce)).abs() < 1e-12, "{loss} vs {}", beta * kl_sum + ce);
}

#[test]
fn negative_beta_is_a_domain_error() {
    let cfg = small_cfg(2);
    let model = DibModel::new(&cfg);
    let mut store = ParamStore::new();
    model.init(&mut store, &mut Rng::new(1));
    let r = model.dib_loss(&store, &xor_data().all(), -1.0, &mut Rng::new(1));
    assert!(matches!(r, Err(Error::Domain(_))));
}

#[test]
fn single_step_schedule_is_fixed_beta() {
    let s = BetaSchedule::new(0.3, 0.3, 1).unwrap();
    for t in 0..50 {
        assert_eq!(s.beta_at(t, 50), 0.3);
    }
}

#[test]
fn schedule_endpoints_exact() {
    let s = BetaSchedule::new(5e-4, 5.0, 50_000).unwrap();
    assert_eq!(s.beta(0), 5e-4);
    assert_eq!(s.beta(50_000), 5.0);
}

proptest! {
    #[test]
    fn schedule_is_monotone(a in 1e-6f64..1.0, ratio in 1.0f64..1e4, steps in 1u64..500) {
        let s = BetaSchedule::new(a, a * ratio, steps).unwrap();
        for t in 0..steps {
            prop_assert!(s.beta(t + 1) >= s.beta(t));
        }
    }
}

#[test]
fn xor_with_open_channels_predicts_one_bit() {
    let data = xor_data();
    let mut cfg = small_cfg(2);
    cfg.set_steps(1500);
    cfg.schedule = BetaSchedule::new(1e-4, 1e-4, 1500).unwrap();
    let store = trained(&cfg, &data);
    let est = DibModel::new(&cfg)
        .predictive_info(&store, &data, data.label_entropy_bits(), 64, &mut Rng::new(3))
        .unwrap();
    assert!((est.bits - 1.0).abs() < 0.05, "{est:?}");
}

#[test]
fn large_beta_collapses_to_prior() {
    let data = xor_data();
    let mut cfg = small_cfg(2);
    cfg.encoder = EncoderSpec::binary_table(8);
    cfg.set_steps(3000);
    cfg.schedule = BetaSchedule::new(10.0, 10.0, 3000).unwrap();
    let store = trained(&cfg, &data);
    let model = DibModel::new(&cfg);
    let kl: f64 = model
        .encode_all(&store, &data)
        .unwrap()
        .iter()
        .map(|ch| ch.iter().map(GaussianCode::kl_to_prior).sum::<f64>() / ch.len() as f64)
        .sum();
    assert!(kl < 0.01, "total KL {kl} nats");
    let v = model.dib_loss(&store, &data.all(), 10.0, &mut Rng::new(5)).unwrap();
    assert!((v.loss - LN_2).abs() < 0.02, "loss {} vs ln 2", v.loss);
}

#[test]
fn near_prior_model_predicts_nothing() {
    let data = xor_data();
    let mut cfg = small_cfg(2);
    cfg.encoder = EncoderSpec::default_for(EncoderKind::ScalarMlp);
    let model = DibModel::new(&cfg);
    let mut store = ParamStore::new();
    model.init(&mut store, &mut Rng::new(2));
    let est = model
        .predictive_info(&store, &data, data.label_entropy_bits(), 64, &mut Rng::new(3))
        .unwrap();
    assert!(est.bits < 0.02, "{est:?}");
}

#[test]
fn perfect_predictor_has_one_bit() {
    // One channel that copies a balanced label, sharply encoded.
    let spec = CircuitSpec::passthrough(1, 1).unwrap();
    let data = Dataset::from_truth_table(&TruthTable::build(&spec).unwrap());
    let mut cfg = small_cfg(1);
    cfg.set_steps(800);
    cfg.schedule = BetaSchedule::new(1e-5, 1e-5, 800).unwrap();
    let store = trained(&cfg, &data);
    let est = DibModel::new(&cfg)
        .predictive_info(&store, &data, data.label_entropy_bits(), 64, &mut Rng::new(3))
        .unwrap();
    assert!((est.bits - 1.0).abs() < 0.02, "{est:?}");
}

#[test]
fn empty_dataset_is_a_contract_error() {
    let cfg = small_cfg(1);
    let model = DibModel::new(&cfg);
    let mut store = ParamStore::new();
    model.init(&mut store, &mut Rng::new(2));
    let empty = Dataset::new(vec![vec![]], vec![]).unwrap();
    assert!(matches!(
        model.predictive_info(&store, &empty, 1.0, 8, &mut Rng::new(1)),
        Err(Error::Contract(_))
    ));
}

#[test]
fn divergence_reports_last_good_checkpoint() {
    let data = xor_data();
    let mut cfg = small_cfg(2);
    cfg.set_steps(200);
    cfg.checkpoints = 4;
    cfg.lr = 1e200;
    match dib::objective::train_sweep(&cfg, &data, &mut MemorySink::default()) {
        Err(Error::Diverged { step, last_checkpoint }) => {
            assert!(last_checkpoint.is_none_or(|c| c < step));
        }
        Ok(out) => assert!(out.log.iter().all(|r| r.ce_nats.is_finite())),
        Err(e) => panic!("{e}"),
    }
}
