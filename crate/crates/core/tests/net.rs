mod common;

use smelu_repro::activations::ActivationSpec;
use smelu_repro::data::{generate, SynthConfig};
use smelu_repro::harness::landscape::random_network;
use smelu_repro::harness::{LandscapeConfig, LandscapeRegime};
use smelu_repro::net::{load_checkpoint, save_checkpoint, DenseStack, Model, ModelConfig, Norm, TableSpec, Workspace};
use smelu_repro::optim::{OptimConfig, Optimizer};

/// Straight-line forward pass: raw input, then per layer activation, clip,
/// normalization and the affine map, using only the stored parameters.
fn scalar_forward(net: &DenseStack, input: &[f64], act: &dyn Fn(f64) -> f64) -> f64 {
    let mut a = input.to_vec();
    for (l, layer) in net.layers.iter().enumerate() {
        let n = layer.in_dim;
        let mut h = vec![0.0; n];
        for i in 0..n {
            let mut y = if l == 0 { a[i] } else { act(a[i]) };
            if let Some(c) = layer.clip {
                if y > c {
                    y = c;
                }
                if y < -c {
                    y = -c;
                }
            }
            h[i] = y;
        }
        if layer.norm == Norm::Layer && n >= 2 {
            let mut mean = 0.0;
            for x in &h {
                mean += x;
            }
            mean /= n as f64;
            let mut var = 0.0;
            for x in &h {
                var += (x - mean) * (x - mean);
            }
            var /= n as f64;
            let s = (var + 1e-6).sqrt();
            for x in h.iter_mut() {
                *x = (*x - mean) / s;
            }
        }
        let mut out = vec![0.0; layer.out_dim];
        for j in 0..layer.out_dim {
            let row = &layer.weights[j * n..(j + 1) * n];
            let scale = match layer.norm {
                Norm::Weight { v } => {
                    let mut sq = 0.0;
                    for w in row {
                        sq += w * w;
                    }
                    v / sq.sqrt()
                }
                _ => 1.0,
            };
            let mut s = layer.bias[j];
            for i in 0..n {
                s += scale * row[i] * h[i];
            }
            out[j] = s;
        }
        a = out;
    }
    a[0]
}

fn smelu(beta: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        if x <= -beta {
            0.0
        } else if x >= beta {
            x
        } else {
            (x + beta) * (x + beta) / (4.0 * beta)
        }
    }
}

fn deep_net(activation: ActivationSpec, regime: LandscapeRegime) -> LandscapeConfig {
    LandscapeConfig {
        activation,
        regime,
        ..LandscapeConfig::default()
    }
}

#[test]
fn deep_net_probe_logit_matches_scalar_oracle_and_golden() {
    // golden logits recorded from this implementation; the scalar oracle
    // reproduces them independently
    let cases = [
        (ActivationSpec::Relu, LandscapeRegime::WeightNorm, GOLDEN_RELU_WN),
        (ActivationSpec::smelu(0.5).unwrap(), LandscapeRegime::WeightNorm, GOLDEN_SMELU_WN),
        (ActivationSpec::smelu(1.0).unwrap(), LandscapeRegime::LayerNorm, GOLDEN_SMELU_LN),
    ];
    for (spec, regime, golden) in cases {
        let beta = spec.beta().unwrap_or(0.0);
        let cfg = deep_net(spec, regime);
        let net = random_network(&cfg, 2022).unwrap();
        let probe = [0.37];
        let got = net.output(&probe);
        let act: Box<dyn Fn(f64) -> f64> = if beta > 0.0 {
            Box::new(smelu(beta))
        } else {
            Box::new(|x: f64| x.max(0.0))
        };
        let oracle = scalar_forward(&net, &probe, &*act);
        let tol = 1e-10 * got.abs().max(1.0);
        assert!((got - oracle).abs() <= tol, "{regime:?}: {got} vs oracle {oracle}");
        assert!((got - golden).abs() <= tol, "{regime:?}: {got} vs golden {golden}");
    }
}

const GOLDEN_RELU_WN: f64 = -0.5137293160269196;
const GOLDEN_SMELU_WN: f64 = -0.5256384224297803;
const GOLDEN_SMELU_LN: f64 = -3.133113961350217;

fn small_model(activation: ActivationSpec, norm: Norm) -> Model {
    let tables = vec![TableSpec { vocab: 30, dim: 4 }; 3];
    Model::new(ModelConfig::uniform(tables, vec![16, 8], activation, norm, Some(6.0), 5)).unwrap()
}

fn data() -> Vec<smelu_repro::data::SparseExample> {
    generate(&SynthConfig {
        tables: 3,
        vocab_sizes: vec![30],
        informative: 2,
        queries: 60,
        items_per_query: 5,
        ..SynthConfig::default()
    })
    .unwrap()
}

fn train(model: &mut Model, opt: &mut Optimizer, examples: &[smelu_repro::data::SparseExample]) -> Vec<f64> {
    let mut ws = Workspace::default();
    examples
        .iter()
        .map(|e| {
            let p = model.forward_backward(e, &mut ws);
            opt.step(model, &ws.grads).unwrap();
            p
        })
        .collect()
}

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let examples = data();
    let (head, tail) = examples.split_at(200);
    let mut model = small_model(ActivationSpec::smelu(0.5).unwrap(), Norm::Weight { v: 1.0 });
    let mut opt = Optimizer::new(OptimConfig::default(), &model).unwrap();
    train(&mut model, &mut opt, head);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_checkpoint(&path, &model, Some(&opt)).unwrap();
    let ckpt = load_checkpoint(&path).unwrap();
    let (mut m2, mut o2) = (ckpt.model, ckpt.optimizer.unwrap());

    assert_eq!(o2, opt);
    for (a, b) in model.tables.iter().zip(&m2.tables) {
        assert!(a.rows.iter().zip(&b.rows).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    for (a, b) in model.stack.layers.iter().zip(&m2.stack.layers) {
        assert!(a.weights.iter().zip(&b.weights).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.effective_weights().iter().zip(b.effective_weights()).all(|(x, y)| x.to_bits() == y.to_bits()));
        assert!(a.bias.iter().zip(&b.bias).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    // training continues identically from the restored state
    let p1 = train(&mut model, &mut opt, tail);
    let p2 = train(&mut m2, &mut o2, tail);
    assert!(p1.iter().zip(&p2).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn checkpoint_rejects_unknown_format() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    let model = small_model(ActivationSpec::Relu, Norm::None);
    save_checkpoint(&path, &model, None).unwrap();
    let text = std::fs::read_to_string(&path).unwrap().replacen("checkpoint/v1", "checkpoint/v0", 1);
    std::fs::write(&path, text).unwrap();
    assert!(load_checkpoint(&path).is_err());
}

#[test]
fn same_seed_same_model_and_predictions() {
    let examples = data();
    let run = || {
        let mut m = small_model(ActivationSpec::swish(1.0).unwrap(), Norm::Layer);
        let mut o = Optimizer::new(OptimConfig::default(), &m).unwrap();
        train(&mut m, &mut o, &examples)
    };
    let (a, b) = (run(), run());
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn oov_ids_share_one_row() {
    let model = small_model(ActivationSpec::Relu, Norm::None);
    let a = model.forward(&common::example(&[1000, 0, 0], true));
    let b = model.forward(&common::example(&[31, 0, 0], true));
    assert_eq!(a.logit.to_bits(), b.logit.to_bits());
    assert_eq!(model.tables[0].row_of(1000), 30);
}

#[test]
fn logit_clamp_blocks_gradient() {
    let mut model = small_model(ActivationSpec::Identity, Norm::None);
    let last = model.stack.layers.len() - 1;
    model.stack.layers[last].bias[0] = 100.0;
    let e = common::example(&[1, 2, 3], false);
    let cache = model.forward(&e);
    assert!(cache.logit > 30.0);
    let grads = model.backward(&cache, false);
    assert!(grads.layers.iter().all(|g| g.bias.iter().all(|x| *x == 0.0)));
    assert!(model.loss(&e).is_finite());
}
