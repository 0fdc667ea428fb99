//! Network-level checks against scalar re-implementations, plus
//! evaluation with hand-built forecasters.

use hydroseries::eval::{evaluate, nnse, GaugeSeriesPair};
use hydroseries::model::{
    decode_checkpoint, encode_checkpoint, forward, CheckpointMeta, FeatureStore, Forecaster, Mode, ModelParams,
    ModelShape, WindowView,
};
use hydroseries::numerics::{Matrix, Rng};
use hydroseries::Result;

const ALPHA: f64 = 1.673_263_242_354_377_2;
const LAMBDA: f64 = 1.050_700_987_355_480_5;

fn selu(x: f64) -> f64 {
    if x > 0.0 {
        LAMBDA * x
    } else {
        LAMBDA * ALPHA * (x.exp() - 1.0)
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// One gauge, everything spelled out with scalar loops.
fn scalar_forward(p: &ModelParams, xs: &[Vec<f64>]) -> Vec<f64> {
    let s = p.shape();
    let (e_n, h_n) = (s.encoder_size, s.hidden_size);
    let mut h = vec![0.0; h_n];
    let mut c = vec![0.0; h_n];
    for x in xs {
        let mut e = vec![0.0; e_n];
        for j in 0..e_n {
            let mut acc = p.encoder.bias[j];
            for k in 0..s.n_inputs {
                acc += p.encoder.weight[(j, k)] * x[k];
            }
            e[j] = selu(acc);
        }
        let pre = |g: &hydroseries::model::GateParams, j: usize| {
            let mut acc = g.bias[j];
            for k in 0..e_n {
                acc += g.input_weights[(j, k)] * e[k];
            }
            for k in 0..h_n {
                acc += g.recurrent_weights[(j, k)] * h[k];
            }
            acc
        };
        let mut h_next = vec![0.0; h_n];
        for j in 0..h_n {
            let f = sigmoid(pre(&p.lstm.forget, j));
            let i = sigmoid(pre(&p.lstm.input, j));
            let cand = selu(pre(&p.lstm.candidate, j));
            let o = sigmoid(pre(&p.lstm.output, j));
            c[j] = f * c[j] + i * cand;
            h_next[j] = o * selu(c[j]);
        }
        h = h_next;
    }
    (0..s.n_targets)
        .map(|t| {
            let mut acc = p.decoder.bias[t];
            for k in 0..h_n {
                acc += p.decoder.weight[(t, k)] * h[k];
            }
            selu(acc)
        })
        .collect()
}

fn random_params(shape: ModelShape, seed: u64, spread: f64) -> ModelParams {
    let mut rng = Rng::new(seed);
    let mut p = ModelParams::zeros(shape);
    let flat: Vec<f64> = p.flatten().iter().map(|_| rng.uniform_range(-spread, spread)).collect();
    p.assign_flat(&flat).unwrap();
    p
}

#[test]
fn tiny_net_matches_scalar_oracle() {
    let shape = ModelShape {
        n_inputs: 2,
        encoder_size: 3,
        hidden_size: 3,
        n_targets: 2,
    };
    let p = random_params(shape, 11, 0.8);
    let mut rng = Rng::new(12);
    let (rows, steps) = (4, 6);
    let inputs: Vec<Matrix> = (0..steps)
        .map(|_| Matrix::from_fn(rows, 2, |_, _| rng.uniform_range(-1.5, 1.5)))
        .collect();
    let (pred, _) = forward(&inputs, &p, Mode::Eval, &mut Rng::new(0)).unwrap();
    for r in 0..rows {
        let xs: Vec<Vec<f64>> = inputs.iter().map(|m| m.row(r).to_vec()).collect();
        let expected = scalar_forward(&p, &xs);
        for t in 0..2 {
            assert!((pred[(r, t)] - expected[t]).abs() < 1e-12, "row {r} target {t}");
        }
    }
}

#[test]
fn train_mode_average_approaches_eval_output() {
    let shape = ModelShape {
        n_inputs: 3,
        encoder_size: 6,
        hidden_size: 5,
        n_targets: 2,
    };
    let mut p = random_params(shape, 21, 0.2);
    let mut rng = Rng::new(22);
    // positive encoder and candidate paths keep SELU in its linear regime
    p.encoder.weight = Matrix::from_fn(6, 3, |_, _| rng.uniform_range(0.1, 1.0));
    p.lstm.candidate.input_weights = Matrix::from_fn(5, 6, |_, _| rng.uniform_range(0.0, 0.4));
    p.decoder.weight = Matrix::from_fn(2, 5, |_, _| rng.uniform_range(0.2, 1.0));
    p.dropout_rate = 0.2;
    let inputs: Vec<Matrix> = (0..8)
        .map(|_| Matrix::from_fn(2, 3, |_, _| rng.uniform_range(0.1, 1.0)))
        .collect();

    let (eval, _) = forward(&inputs, &p, Mode::Eval, &mut rng).unwrap();
    let draws = 10_000;
    let mut mean = Matrix::zeros(2, 2);
    for _ in 0..draws {
        let (out, _) = forward(&inputs, &p, Mode::Train, &mut rng).unwrap();
        for r in 0..2 {
            for t in 0..2 {
                mean[(r, t)] += out[(r, t)] / draws as f64;
            }
        }
    }
    for r in 0..2 {
        for t in 0..2 {
            let rel = (mean[(r, t)] - eval[(r, t)]).abs() / eval[(r, t)].abs();
            assert!(rel < 0.02, "({r}, {t}): mean {} vs eval {}", mean[(r, t)], eval[(r, t)]);
        }
    }
}

fn fixture_store(n_days: usize, n_gauges: usize, seed: u64) -> FeatureStore {
    let mut rng = Rng::new(seed);
    let mut random = |r, c| Matrix::from_fn(r, c, |_, _| rng.uniform());
    FeatureStore {
        observed: vec![random(n_days, n_gauges)],
        static_features: random(n_gauges, 2),
        space: random(n_gauges, 1),
        time: random(n_days, 1),
        targets: vec![random(n_days, n_gauges), random(n_days, n_gauges)],
    }
}

/// Looks up the true next-day targets from the store.
struct Oracle<'a> {
    store: &'a FeatureStore,
    view: &'a WindowView,
    l_seq: usize,
    calls: std::cell::Cell<usize>,
}

impl Forecaster for Oracle<'_> {
    fn predict(&self, _inputs: &[Matrix]) -> Result<Matrix> {
        let day = self.view.first_day + self.calls.get() + self.l_seq;
        self.calls.set(self.calls.get() + 1);
        let rows: Vec<Vec<f64>> = self
            .view
            .gauges
            .iter()
            .map(|&g| self.store.targets.iter().map(|t| t[(day, g)]).collect())
            .collect();
        Matrix::from_rows(&rows)
    }
}

/// Predicts each gauge's mean target over the evaluated days.
struct MeanPredictor {
    means: Matrix,
}

impl Forecaster for MeanPredictor {
    fn predict(&self, _inputs: &[Matrix]) -> Result<Matrix> {
        Ok(self.means.clone())
    }
}

#[test]
fn oracle_and_mean_forecasters() {
    let store = fixture_store(60, 4, 31);
    let l_seq = 7;
    let view = WindowView {
        gauges: vec![0, 1, 3],
        first_day: 0,
        n_days: 60,
    };
    let ids: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let targets: Vec<String> = ["p", "q"].map(String::from).to_vec();

    let oracle = Oracle {
        store: &store,
        view: &view,
        l_seq,
        calls: 0.into(),
    };
    let report = evaluate(&oracle, &store, &view, l_seq, "val", &ids, &targets).unwrap();
    for row in &report.rows {
        assert_eq!(row.rmse, 0.0);
        assert_eq!(row.nnse, Some(1.0));
    }

    let days = l_seq..60;
    let means = Matrix::from_fn(3, 2, |r, t| {
        let g = view.gauges[r];
        days.clone().map(|d| store.targets[t][(d, g)]).sum::<f64>() / days.len() as f64
    });
    let report = evaluate(&MeanPredictor { means }, &store, &view, l_seq, "val", &ids, &targets).unwrap();
    for row in report.rows.iter().filter(|r| r.gauge_id != "ALL") {
        assert!((row.nnse.unwrap() - 0.5).abs() < 1e-12, "{row:?}");
    }
    for t in &targets {
        let agg = report.aggregate(t, "val").unwrap();
        let per_gauge: Vec<f64> = report.gauge_rows(t, "val").map(|r| r.nnse.unwrap()).collect();
        let mean = per_gauge.iter().sum::<f64>() / per_gauge.len() as f64;
        assert!((agg.nnse.unwrap() - mean).abs() < 1e-12);
    }
}

#[test]
fn restored_checkpoint_reproduces_evaluation() {
    let store = fixture_store(40, 3, 41);
    let shape = ModelShape {
        n_inputs: store.n_inputs(),
        encoder_size: 5,
        hidden_size: 4,
        n_targets: 2,
    };
    let params = random_params(shape, 42, 0.5);
    let meta = CheckpointMeta {
        seed: 42,
        l_seq: 5,
        input_names: (0..shape.n_inputs).map(|i| format!("in{i}")).collect(),
        target_names: vec!["p".into(), "q".into()],
    };
    let restored = decode_checkpoint(&encode_checkpoint(&params, &meta).unwrap()).unwrap();
    assert_eq!(restored.meta, meta);
    let view = WindowView {
        gauges: vec![0, 1, 2],
        first_day: 0,
        n_days: 40,
    };
    let ids: Vec<String> = ["a", "b", "c"].map(String::from).to_vec();
    let a = evaluate(&params, &store, &view, 5, "val", &ids, &meta.target_names).unwrap();
    let b = evaluate(&restored.params, &store, &view, 5, "val", &ids, &meta.target_names).unwrap();
    assert_eq!(a, b);
}

#[test]
fn nnse_of_a_hand_pair() {
    // obs=[1,2,3], pred=[1,1,3]: NSE = 1 − 1/2 = 0.5, NNSE = 1/1.5
    let pair = GaugeSeriesPair::new("g", vec![1.0, 2.0, 3.0], vec![1.0, 1.0, 3.0]).unwrap();
    assert!((nnse(&pair).unwrap() - 1.0 / 1.5).abs() < 1e-15);
}
