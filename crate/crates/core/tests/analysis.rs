use dib::analysis::*;
use dib::circuit::{CircuitSpec, TruthTable};
use dib::diffcore::{ParamStore, Rng};
use dib::encoder::{Encoder, EncoderKind, EncoderSpec, GaussianCode};
use dib::objective::{train_into, Dataset, RunDir, TrainConfig};
use dib::Error;
use proptest::prelude::*;

fn code() -> impl Strategy<Value = GaussianCode> {
    (prop::collection::vec(-3.0f64..3.0, 3), prop::collection::vec(-3.0f64..2.0, 3))
        .prop_map(|(m, v)| GaussianCode::new(m, v).unwrap())
}

proptest! {
    #[test]
    fn similarity_matrix_is_symmetric_unit_diagonal(codes in prop::collection::vec(code(), 1..12)) {
        for measure in [Similarity::Bhattacharyya, Similarity::Wasserstein] {
            let m = similarity_matrix(&codes, measure);
            for a in 0..codes.len() {
                prop_assert_eq!(m[a][a], 1.0);
                for b in 0..codes.len() {
                    prop_assert_eq!(m[a][b], m[b][a]);
                    prop_assert!((0.0..=1.0).contains(&m[a][b]));
                }
            }
        }
    }

    #[test]
    fn bhattacharyya_decreases_with_separation(lv in -2.0f64..2.0, d1 in 0.0f64..5.0, d2 in 0.0f64..5.0) {
        let (near, far) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let c = |m: f64| GaussianCode::new(vec![m], vec![lv]).unwrap();
        prop_assert!(bhattacharyya(&c(0.0), &c(near)) >= bhattacharyya(&c(0.0), &c(far)));
    }
}

#[test]
fn near_prior_channel_distinguishes_nothing() {
    let enc = Encoder::new(EncoderSpec::default_for(EncoderKind::ScalarMlp), "enc/ch000");
    let mut store = ParamStore::new();
    enc.init(&mut store, &mut Rng::new(3));
    let values: Vec<f64> = (0..500).map(|i| (i as f64 - 250.0) / 100.0).collect();
    let probes = quantile_probes(&values, DEFAULT_PROBES).unwrap();
    let m = distinguishability(&enc, &store, &probes, Similarity::Bhattacharyya).unwrap();
    assert!(m.m.iter().flatten().all(|&v| v >= 0.99));
}

#[test]
fn identical_probes_are_indistinguishable() {
    let enc = Encoder::new(EncoderSpec::scalar_mlp(4, vec![8]), "enc/ch000");
    let mut store = ParamStore::new();
    enc.init(&mut store, &mut Rng::new(3));
    let m = distinguishability(&enc, &store, &[0.3, 0.3, 1.0], Similarity::Bhattacharyya).unwrap();
    assert_eq!(m.m[0][1], 1.0);
}

fn point(bits: Vec<f64>) -> InfoPlanePoint {
    InfoPlanePoint {
        step: 1,
        beta: 1.0,
        total_bits: bits.iter().sum(),
        bound_gap_bits: 0.0,
        predictive_bits: 0.0,
        accuracy: 0.5,
        per_channel_bits: bits,
    }
}

#[test]
fn top_k_threshold_is_inclusive() {
    assert_eq!(top_k_channels(&point(vec![0.0; 4]), 3), Vec::<usize>::new());
    assert_eq!(top_k_channels(&point(vec![0.1, 0.0999, 0.5, 0.2]), 5), vec![2, 3, 0]);
    assert_eq!(top_k_channels(&point(vec![0.1, 0.0999, 0.5, 0.2]), 1), vec![2]);
}

#[test]
fn plane_totals_are_channel_sums() {
    let m = CheckpointMeasure {
        step: 3,
        beta: 0.1,
        predictive_bits: 0.4,
        accuracy: 0.8,
        accuracy_mean_latent: 0.81,
        lower_bits: vec![0.2, -0.01, 0.5],
        upper_bits: vec![0.3, 0.01, 0.52],
        kl_bits: vec![0.4, 0.0, 0.7],
    };
    let p = InfoPlanePoint::from(&m);
    assert!((p.total_bits - p.per_channel_bits.iter().sum::<f64>()).abs() < 1e-9);
    assert_eq!(p.per_channel_bits[1], 0.0);
    assert!(p.bound_gap_bits >= 0.0);
}

#[test]
fn interpolation_and_monotonicity() {
    let mut a = point(vec![0.0]);
    a.predictive_bits = 0.0;
    let mut b = point(vec![2.0]);
    b.predictive_bits = 1.0;
    let mut c = point(vec![3.0]);
    c.predictive_bits = 0.9;
    let plane = vec![a, b, c];
    assert_eq!(interpolate_predictive(&plane, 1.0), Some(0.5));
    assert!((max_monotonicity_violation(&plane) - 0.1).abs() < 1e-12);
}

fn tiny_run(dir: &std::path::Path) -> (RunDir, TrainConfig, Dataset) {
    let spec = CircuitSpec::passthrough(3, 2).unwrap();
    let data = Dataset::from_truth_table(&TruthTable::build(&spec).unwrap());
    let mut cfg = TrainConfig::circuit(3);
    cfg.decoder_hidden = vec![16];
    cfg.batch_size = 32;
    cfg.set_steps(60);
    cfg.checkpoints = 6;
    let mut run = RunDir::create(dir, false).unwrap();
    train_into(&cfg, &data, &mut run).unwrap();
    (run, cfg, data)
}

#[test]
fn missing_checkpoints_are_listed() {
    let tmp = tempfile::tempdir().unwrap();
    let (run, cfg, data) = tiny_run(&tmp.path().join("r"));
    std::fs::remove_file(run.ckpt_path(20)).unwrap();
    std::fs::remove_file(run.ckpt_path(40)).unwrap();
    let model = dib::objective::DibModel::new(&cfg);
    let mcfg = MeasureConfig {
        k: 8,
        b: 2,
        ..MeasureConfig::default()
    };
    let ctx = MeasureContext {
        model: &model,
        pool: &data,
        eval: &data,
        h_y_bits: data.label_entropy_bits(),
        cfg: &mcfg,
    };
    match measure_run(&run, &cfg, &ctx) {
        Err(Error::MissingCheckpoints { steps, .. }) => assert_eq!(steps, vec![20, 40]),
        other => panic!("{other:?}"),
    }
    assert!(matches!(assemble_plane(&run), Err(Error::MissingCheckpoints { .. })));
}

#[test]
fn measure_csv_roundtrip_and_serial_parallel_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let (run, cfg, data) = tiny_run(&tmp.path().join("r"));
    let model = dib::objective::DibModel::new(&cfg);
    let mut mcfg = MeasureConfig {
        k: 8,
        b: 3,
        ..MeasureConfig::default()
    };
    let ctx = |m: &MeasureConfig| {
        measure_run(
            &run,
            &cfg,
            &MeasureContext {
                model: &model,
                pool: &data,
                eval: &data,
                h_y_bits: data.label_entropy_bits(),
                cfg: m,
            },
        )
        .unwrap()
    };
    let par = ctx(&mcfg);
    mcfg.parallel = false;
    let ser = ctx(&mcfg);
    assert_eq!(par, ser);
    assert_eq!(read_measure_csv(&run.measure_path()).unwrap(), ser);
    let plane = assemble_plane(&run).unwrap();
    assert_eq!(plane.len(), 6);
    assert!(plane.windows(2).all(|w| w[0].total_bits <= w[1].total_bits));
    let alloc = channel_allocation(&plane, None);
    assert_eq!(alloc.labels, vec!["ch0", "ch1", "ch2"]);
}
