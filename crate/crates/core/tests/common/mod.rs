#![allow(dead_code)]

use smelu_repro::activations::{build_rescu, ActivationSpec, GSmeluParams};
use smelu_repro::data::{Feature, SparseExample};
use smelu_repro::net::{LayerActivation, Model};

/// Location of one scalar trainable parameter.
#[derive(Debug, Clone, Copy)]
pub enum Param {
    Embedding { table: usize, index: usize },
    Weight { layer: usize, index: usize },
    Bias { layer: usize, index: usize },
    Activation { layer: usize, index: usize },
}

pub fn all_params(model: &Model) -> Vec<Param> {
    let mut out = Vec::new();
    for (t, table) in model.tables.iter().enumerate() {
        out.extend((0..table.rows.len()).map(|index| Param::Embedding { table: t, index }));
    }
    for (l, layer) in model.stack.layers.iter().enumerate() {
        out.extend((0..layer.weights.len()).map(|index| Param::Weight { layer: l, index }));
        out.extend((0..layer.bias.len()).map(|index| Param::Bias { layer: l, index }));
        if layer.activation.is_learned() {
            out.extend((0..5).map(|index| Param::Activation { layer: l, index }));
        }
    }
    out
}

pub fn get(model: &Model, p: Param) -> f64 {
    match p {
        Param::Embedding { table, index } => model.tables[table].rows[index],
        Param::Weight { layer, index } => model.stack.layers[layer].weights[index],
        Param::Bias { layer, index } => model.stack.layers[layer].bias[index],
        Param::Activation { layer, index } => match &model.stack.layers[layer].activation {
            LayerActivation::Learned(l) => l.to_array()[index],
            LayerActivation::Fixed(_) => unreachable!(),
        },
    }
}

pub fn set(model: &mut Model, p: Param, value: f64) {
    match p {
        Param::Embedding { table, index } => model.tables[table].rows[index] = value,
        Param::Weight { layer, index } => {
            model.stack.layers[layer].weights[index] = value;
            model.stack.layers[layer].refresh().unwrap();
        }
        Param::Bias { layer, index } => model.stack.layers[layer].bias[index] = value,
        Param::Activation { layer, index } => {
            if let LayerActivation::Learned(l) = &mut model.stack.layers[layer].activation {
                let mut raw = l.to_array();
                raw[index] = value;
                *l = smelu_repro::activations::LearnableGSmelu::from_array(raw);
            }
        }
    }
}

/// Analytic gradient of one parameter read from a backward pass.
pub fn analytic(model: &Model, example: &SparseExample, p: Param) -> f64 {
    let grads = model.backward(&model.forward(example), example.label);
    match p {
        Param::Embedding { table, index } => {
            let dim = model.tables[table].dim;
            let (row, col) = (index / dim, index % dim);
            grads
                .embeddings
                .iter()
                .find(|g| g.table == table && g.row == row)
                .map_or(0.0, |g| g.grad[col])
        }
        Param::Weight { layer, index } => grads.layers[layer].weights[index],
        Param::Bias { layer, index } => grads.layers[layer].bias[index],
        Param::Activation { layer, index } => grads.layers[layer].activation.unwrap()[index],
    }
}

pub fn finite_difference(model: &Model, example: &SparseExample, p: Param, h: f64) -> f64 {
    let mut m = model.clone();
    let x = get(&m, p);
    set(&mut m, p, x + h);
    let hi = m.loss(example);
    set(&mut m, p, x - h);
    let lo = m.loss(example);
    (hi - lo) / (2.0 * h)
}

/// Relative error with a floor on the denominator so that near-zero
/// gradients are compared absolutely.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

pub fn example(ids: &[u64], label: bool) -> SparseExample {
    SparseExample {
        query: 0,
        features: ids
            .iter()
            .enumerate()
            .map(|(t, &id)| Feature {
                table: t,
                id,
                value: 1.0,
            })
            .collect(),
        label,
    }
}

/// One spec per activation kind (plus the exact GELU path).
pub fn every_activation() -> Vec<ActivationSpec> {
    vec![
        ActivationSpec::Relu,
        ActivationSpec::smelu(0.7).unwrap(),
        ActivationSpec::GSmelu(GSmeluParams::new(0.8, 1.2, -0.1, 1.1, -0.2).unwrap()),
        ActivationSpec::Rescu(
            build_rescu(&[(-1.5, 0.0), (-0.5, 0.3), (0.8, 1.0)], (-1.5, 0.0)).unwrap(),
        ),
        ActivationSpec::softplus(1.5).unwrap(),
        ActivationSpec::swish(1.2).unwrap(),
        ActivationSpec::gelu(1.0).unwrap(),
        ActivationSpec::gelu_exact(1.0).unwrap(),
        ActivationSpec::Identity,
    ]
}

use smelu_repro::net::{InitConfig, ModelConfig, Norm, TableSpec};

/// Worst relative error over every parameter of a `[8, 4]` network on two
/// tables of dimension 4, and the number of clipped units in the forward
/// passes used.
pub fn model_gradient_check(activation: ActivationSpec, norm: Norm, learn: bool) -> (f64, usize) {
    let config = ModelConfig {
        tables: vec![TableSpec { vocab: 3, dim: 4 }, TableSpec { vocab: 4, dim: 4 }],
        hidden: vec![8, 4],
        activations: vec![activation; 3],
        learn_activation: learn,
        norm,
        clip: Some(0.9),
        identity_input_activation: false,
        init: InitConfig {
            weight_std: Some(0.8),
            bias_std: 0.3,
            embedding_std: 1.0,
        },
        seed: 17,
    };
    let model = Model::new(config).unwrap();
    let examples = [example(&[1, 2], true), example(&[2, 0], false)];
    let mut worst: f64 = 0.0;
    let mut clipped = 0;
    for e in &examples {
        let cache = model.forward(e);
        clipped += cache
            .stack
            .layers
            .iter()
            .map(|l| l.pass.iter().filter(|p| !**p).count())
            .sum::<usize>();
        for p in all_params(&model) {
            let a = analytic(&model, e, p);
            let n = finite_difference(&model, e, p, 1e-5);
            worst = worst.max(rel_err(a, n, 1e-3));
        }
    }
    (worst, clipped)
}
