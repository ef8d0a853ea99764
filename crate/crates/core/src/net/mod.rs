//! Sparse-input MLP: embedding tables form layer 0 and every dense layer
//! computes `a_l = W_l f(a_{l-1}) + b_l`, with the per-layer pipeline
//! activation -> clip -> normalize -> linear. The last layer emits a single
//! logit turned into a click probability by the sigmoid.

mod checkpoint;
mod layer;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::activations::{sigmoid, ActivationSpec, LearnableGSmelu};
use crate::data::SparseExample;
use crate::error::{Error, Result};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use layer::{
    clip, layer_normalize, weight_normalize, DenseLayer, LayerActivation, LayerCache, LayerGrads,
    Norm, LAYER_NORM_EPS,
};

/// Logits are clamped to this magnitude before the sigmoid.
pub const LOGIT_CLAMP: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSpec {
    pub vocab: usize,
    pub dim: usize,
}

/// Initialization distributions. `weight_std = None` uses `sqrt(2 / fan_in)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitConfig {
    pub weight_std: Option<f64>,
    pub bias_std: f64,
    pub embedding_std: f64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self {
            weight_std: None,
            bias_std: 0.0,
            embedding_std: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub tables: Vec<TableSpec>,
    /// Hidden layer widths; the output layer (width 1) is appended.
    pub hidden: Vec<usize>,
    /// One activation per dense layer, applied to that layer's input.
    pub activations: Vec<ActivationSpec>,
    /// Train gSmeLU parameters of layers whose activation is gSmeLU.
    pub learn_activation: bool,
    pub norm: Norm,
    pub clip: Option<f64>,
    /// Feed the concatenated embeddings to the first linear map unactivated.
    pub identity_input_activation: bool,
    pub init: InitConfig,
    pub seed: u64,
}

impl ModelConfig {
    /// A config applying the same activation to every layer.
    pub fn uniform(
        tables: Vec<TableSpec>,
        hidden: Vec<usize>,
        activation: ActivationSpec,
        norm: Norm,
        clip: Option<f64>,
        seed: u64,
    ) -> Self {
        let layers = hidden.len() + 1;
        Self {
            tables,
            hidden,
            activations: vec![activation; layers],
            learn_activation: false,
            norm,
            clip,
            identity_input_activation: false,
            init: InitConfig::default(),
            seed,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.tables.iter().map(|t| t.dim).sum()
    }

    pub fn num_layers(&self) -> usize {
        self.hidden.len() + 1
    }

    /// Trainable parameter count (embeddings include the OOV rows).
    pub fn num_params(&self) -> usize {
        let emb: usize = self.tables.iter().map(|t| (t.vocab + 1) * t.dim).sum();
        let mut dims = vec![self.input_dim()];
        dims.extend(&self.hidden);
        dims.push(1);
        let dense: usize = dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        let act = if self.learn_activation {
            self.activations
                .iter()
                .filter(|a| matches!(a, ActivationSpec::GSmelu(_)))
                .count()
                * LearnableGSmelu::NUM_PARAMS
        } else {
            0
        };
        emb + dense + act
    }

    pub fn validate(&self) -> Result<()> {
        if self.tables.is_empty() {
            return Err(Error::Config("model needs at least one embedding table".into()));
        }
        if self.tables.iter().any(|t| t.vocab == 0 || t.dim == 0) {
            return Err(Error::Config("embedding tables need vocab >= 1 and dim >= 1".into()));
        }
        if self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::Config("hidden widths must be positive".into()));
        }
        if self.activations.len() != self.num_layers() {
            return Err(Error::Config(format!(
                "{} activations given for {} layers",
                self.activations.len(),
                self.num_layers()
            )));
        }
        for a in &self.activations {
            a.validate()?;
        }
        Ok(())
    }
}

/// One embedding table; row `vocab` is the shared out-of-vocabulary row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingTable {
    pub vocab: usize,
    pub dim: usize,
    pub rows: Vec<f64>,
}

impl EmbeddingTable {
    /// Row index for a feature id; unseen ids share the OOV row.
    #[inline]
    pub fn row_of(&self, id: u64) -> usize {
        if (id as usize) < self.vocab && id < usize::MAX as u64 {
            id as usize
        } else {
            self.vocab
        }
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.rows[row * self.dim..(row + 1) * self.dim]
    }

    pub fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.rows[row * self.dim..(row + 1) * self.dim]
    }
}

/// Dense layers without embeddings; used directly for landscape probes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DenseStack {
    pub layers: Vec<DenseLayer>,
}

/// Forward values of a dense stack.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StackCache {
    pub layers: Vec<LayerCache>,
}

impl DenseStack {
    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn forward_into(&self, input: &[f64], cache: &mut StackCache) -> f64 {
        cache.layers.resize_with(self.layers.len(), LayerCache::default);
        let (first, rest) = cache.layers.split_at_mut(1);
        self.layers[0].forward(input, &mut first[0]);
        let mut prev = &first[0];
        for (layer, c) in self.layers[1..].iter().zip(rest.iter_mut()) {
            layer.forward(&prev.output, c);
            prev = c;
        }
        prev.output[0]
    }

    /// Scalar output for a dense input.
    pub fn output(&self, input: &[f64]) -> f64 {
        let mut cache = StackCache::default();
        self.forward_into(input, &mut cache)
    }

    fn backward_into(
        &self,
        cache: &StackCache,
        d_logit: f64,
        grads: &mut [LayerGrads],
        d_input: &mut Vec<f64>,
        scratch: &mut Vec<f64>,
    ) {
        scratch.clear();
        scratch.push(d_logit);
        for (idx, layer) in self.layers.iter().enumerate().rev() {
            layer.backward(&cache.layers[idx], scratch, &mut grads[idx], d_input);
            std::mem::swap(scratch, d_input);
        }
        std::mem::swap(scratch, d_input);
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub tables: Vec<EmbeddingTable>,
    pub stack: DenseStack,
}

/// Everything the backward pass needs from a forward pass.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ForwardCache {
    /// Concatenated embeddings `a_0`.
    pub input: Vec<f64>,
    /// `(table, row, value)` for every feature looked up.
    pub lookups: Vec<(usize, usize, f64)>,
    pub stack: StackCache,
    pub logit: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingGrad {
    pub table: usize,
    pub row: usize,
    pub grad: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub layers: Vec<LayerGrads>,
    /// Only rows looked up by the example appear here.
    pub embeddings: Vec<EmbeddingGrad>,
}

impl Gradients {
    pub fn zeroed(model: &Model) -> Self {
        Self {
            layers: model.stack.layers.iter().map(|l| l.zero_grads()).collect(),
            embeddings: Vec::new(),
        }
    }

    fn reset(&mut self) {
        for g in &mut self.layers {
            g.weights.iter_mut().for_each(|x| *x = 0.0);
            g.bias.iter_mut().for_each(|x| *x = 0.0);
            if let Some(a) = g.activation.as_mut() {
                *a = [0.0; 5];
            }
        }
        self.embeddings.clear();
    }
}

/// Reusable buffers for repeated forward/backward passes.
#[derive(Debug, Default)]
pub struct Workspace {
    pub cache: ForwardCache,
    pub grads: Gradients,
    d_input: Vec<f64>,
    scratch: Vec<f64>,
}

fn normal(std: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, std).map_err(|e| Error::Config(format!("normal({std}): {e}")))
}

/// Builds dense layers with the given widths, drawing parameters from `rng`.
pub fn build_stack(
    dims: &[usize],
    activations: &[ActivationSpec],
    learn_activation: bool,
    norm: Norm,
    clip: Option<f64>,
    init: &InitConfig,
    rng: &mut ChaCha8Rng,
) -> Result<DenseStack> {
    if dims.len() < 2 || activations.len() != dims.len() - 1 {
        return Err(Error::Config("stack needs one activation per layer".into()));
    }
    let mut layers = Vec::with_capacity(dims.len() - 1);
    for (w, spec) in dims.windows(2).zip(activations) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let std = init
            .weight_std
            .unwrap_or_else(|| (2.0 / fan_in as f64).sqrt());
        let wd = normal(std)?;
        let mut weights: Vec<f64> = (0..fan_in * fan_out).map(|_| wd.sample(rng)).collect();
        if matches!(norm, Norm::Weight { .. }) {
            // a zero row cannot be normalized
            for row in weights.chunks_mut(fan_in) {
                if row.iter().all(|&x| x == 0.0) {
                    row[0] = 1.0;
                }
            }
        }
        let bias: Vec<f64> = if init.bias_std > 0.0 {
            let bd = normal(init.bias_std)?;
            (0..fan_out).map(|_| bd.sample(rng)).collect()
        } else {
            vec![0.0; fan_out]
        };
        let activation = match spec {
            ActivationSpec::GSmelu(p) if learn_activation => {
                LayerActivation::Learned(LearnableGSmelu::from_params(p))
            }
            other => LayerActivation::Fixed(other.clone()),
        };
        let mut layer = DenseLayer::new(fan_in, fan_out, weights, bias, activation, norm, clip)?;
        layer.renormalize()?;
        layers.push(layer);
    }
    Ok(DenseStack { layers })
}

impl Model {
    /// Initializes all parameters from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let emb = normal(config.init.embedding_std)?;
        let tables = config
            .tables
            .iter()
            .map(|t| EmbeddingTable {
                vocab: t.vocab,
                dim: t.dim,
                rows: (0..(t.vocab + 1) * t.dim)
                    .map(|_| emb.sample(&mut rng))
                    .collect(),
            })
            .collect();
        let mut dims = vec![config.input_dim()];
        dims.extend(&config.hidden);
        dims.push(1);
        let mut activations = config.activations.clone();
        if config.identity_input_activation {
            activations[0] = ActivationSpec::Identity;
        }
        let stack = build_stack(
            &dims,
            &activations,
            config.learn_activation,
            config.norm,
            config.clip,
            &config.init,
            &mut rng,
        )?;
        Ok(Self {
            config,
            tables,
            stack,
        })
    }

    pub fn num_params(&self) -> usize {
        self.tables.iter().map(|t| t.rows.len()).sum::<usize>()
            + self.stack.layers.iter().map(|l| l.num_params()).sum::<usize>()
    }

    /// Forward pass reusing `cache`; returns the prediction.
    pub fn forward_into(&self, example: &SparseExample, cache: &mut ForwardCache) -> f64 {
        let width = self.stack.input_dim();
        cache.input.clear();
        cache.input.resize(width, 0.0);
        cache.lookups.clear();
        let mut offsets = Vec::with_capacity(self.tables.len());
        let mut acc = 0;
        for t in &self.tables {
            offsets.push(acc);
            acc += t.dim;
        }
        for f in &example.features {
            let Some(table) = self.tables.get(f.table) else {
                debug_assert!(false, "feature table {} out of range", f.table);
                continue;
            };
            let row = table.row_of(f.id);
            let off = offsets[f.table];
            for (dst, src) in cache.input[off..off + table.dim]
                .iter_mut()
                .zip(table.row(row))
            {
                *dst += f.value * src;
            }
            cache.lookups.push((f.table, row, f.value));
        }
        cache.logit = self.stack.forward_into(&cache.input, &mut cache.stack);
        cache.prediction = sigmoid(cache.logit.clamp(-LOGIT_CLAMP, LOGIT_CLAMP));
        cache.prediction
    }

    pub fn forward(&self, example: &SparseExample) -> ForwardCache {
        let mut cache = ForwardCache::default();
        self.forward_into(example, &mut cache);
        cache
    }

    /// Prediction only.
    pub fn predict(&self, example: &SparseExample, cache: &mut ForwardCache) -> f64 {
        self.forward_into(example, cache)
    }

    /// Gradients of the log loss for `label` given a forward cache.
    pub fn backward(&self, cache: &ForwardCache, label: bool) -> Gradients {
        let mut grads = Gradients::zeroed(self);
        let (mut d_input, mut scratch) = (Vec::new(), Vec::new());
        self.backward_into(cache, label, &mut grads, &mut d_input, &mut scratch);
        grads
    }

    fn backward_into(
        &self,
        cache: &ForwardCache,
        label: bool,
        grads: &mut Gradients,
        d_input: &mut Vec<f64>,
        scratch: &mut Vec<f64>,
    ) {
        grads.reset();
        let y = if label { 1.0 } else { 0.0 };
        let d_logit = if cache.logit.abs() > LOGIT_CLAMP {
            0.0
        } else {
            cache.prediction - y
        };
        self.stack
            .backward_into(&cache.stack, d_logit, &mut grads.layers, d_input, scratch);

        let mut offsets = Vec::with_capacity(self.tables.len());
        let mut acc = 0;
        for t in &self.tables {
            offsets.push(acc);
            acc += t.dim;
        }
        for &(table, row, value) in &cache.lookups {
            let dim = self.tables[table].dim;
            let off = offsets[table];
            let src = &d_input[off..off + dim];
            match grads
                .embeddings
                .iter_mut()
                .find(|g| g.table == table && g.row == row)
            {
                Some(g) => g.grad.iter_mut().zip(src).for_each(|(d, s)| *d += value * s),
                None => grads.embeddings.push(EmbeddingGrad {
                    table,
                    row,
                    grad: src.iter().map(|s| value * s).collect(),
                }),
            }
        }
    }

    /// Forward and backward for one example using `ws`; returns the
    /// prediction made before any update.
    pub fn forward_backward(&self, example: &SparseExample, ws: &mut Workspace) -> f64 {
        if ws.grads.layers.len() != self.stack.layers.len() {
            ws.grads = Gradients::zeroed(self);
        }
        let p = self.forward_into(example, &mut ws.cache);
        self.backward_into(
            &ws.cache,
            example.label,
            &mut ws.grads,
            &mut ws.d_input,
            &mut ws.scratch,
        );
        p
    }

    /// Log loss of one example (for finite-difference checks).
    pub fn loss(&self, example: &SparseExample) -> f64 {
        let c = self.forward(example);
        let z = c.logit.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
        // log(1 + e^-z) for y = 1, log(1 + e^z) for y = 0, computed stably
        let s = if example.label { -z } else { z };
        if s > 0.0 {
            s + (-s).exp().ln_1p()
        } else {
            s.exp().ln_1p()
        }
    }

    /// Re-derives cached effective weights (after deserialization or edits).
    pub fn refresh(&mut self) -> Result<()> {
        for l in &mut self.stack.layers {
            l.refresh()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Feature;

    fn example(ids: &[u64], label: bool) -> SparseExample {
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

    fn tables() -> Vec<TableSpec> {
        vec![TableSpec { vocab: 5, dim: 4 }, TableSpec { vocab: 7, dim: 4 }]
    }

    #[test]
    fn zero_embeddings_propagate_smelu_at_zero() {
        let cfg = ModelConfig::uniform(
            vec![TableSpec { vocab: 1, dim: 1 }],
            vec![],
            ActivationSpec::smelu(1.0).unwrap(),
            Norm::Weight { v: 3.0 },
            None,
            0,
        );
        let mut model = Model::new(cfg).unwrap();
        model.tables[0].rows.iter_mut().for_each(|x| *x = 0.0);
        model.stack.layers[0].weights = vec![1.0];
        model.stack.layers[0].bias = vec![0.0];
        model.refresh().unwrap();
        let c = model.forward(&example(&[0], true));
        assert_eq!(c.logit, 3.0 * 0.25);
    }

    #[test]
    fn prediction_strictly_inside_unit_interval() {
        let cfg = ModelConfig::uniform(
            tables(),
            vec![8],
            ActivationSpec::Relu,
            Norm::None,
            None,
            3,
        );
        let mut model = Model::new(cfg).unwrap();
        model.stack.layers[1].bias = vec![1e6];
        let p = model.forward(&example(&[1, 2], true)).prediction;
        assert!(p > 0.0 && p < 1.0);
        model.stack.layers[1].bias = vec![-1e6];
        let p = model.forward(&example(&[1, 2], true)).prediction;
        assert!(p > 0.0 && p < 1.0);
    }

    #[test]
    fn logit_gradient_is_prediction_minus_label() {
        let cfg = ModelConfig::uniform(tables(), vec![8, 4], ActivationSpec::Relu, Norm::None, None, 1);
        let model = Model::new(cfg).unwrap();
        let e = example(&[1, 3], true);
        let c = model.forward(&e);
        let g = model.backward(&c, true);
        assert_eq!(g.layers.last().unwrap().bias[0], c.prediction - 1.0);
    }

    #[test]
    fn stop_region_blocks_all_upstream_gradients() {
        let cfg = ModelConfig::uniform(
            tables(),
            vec![4],
            ActivationSpec::smelu(0.5).unwrap(),
            Norm::None,
            None,
            2,
        );
        let mut model = Model::new(cfg).unwrap();
        model.tables.iter_mut().for_each(|t| t.rows.iter_mut().for_each(|x| *x = -1.0));
        model.stack.layers[0].bias = vec![-5.0; 4];
        model.refresh().unwrap();
        let e = example(&[0, 0], false);
        let g = model.backward(&model.forward(&e), false);
        assert!(g.embeddings.iter().all(|e| e.grad.iter().all(|&x| x == 0.0)));
        assert!(g.layers[0].weights.iter().all(|&x| x == 0.0));
        assert!(g.layers[0].bias.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sparse_touch_and_oov() {
        let cfg = ModelConfig::uniform(tables(), vec![4], ActivationSpec::Relu, Norm::None, None, 2);
        let model = Model::new(cfg).unwrap();
        let e = example(&[2, 999], true);
        let g = model.backward(&model.forward(&e), true);
        let touched: Vec<(usize, usize)> = g.embeddings.iter().map(|e| (e.table, e.row)).collect();
        assert_eq!(touched, vec![(0, 2), (1, 7)]);
    }

    #[test]
    fn passes_are_deterministic() {
        let cfg = ModelConfig::uniform(
            tables(),
            vec![8, 4],
            ActivationSpec::swish(1.0).unwrap(),
            Norm::Layer,
            Some(2.0),
            5,
        );
        let model = Model::new(cfg).unwrap();
        let e = example(&[4, 6], false);
        let (c1, c2) = (model.forward(&e), model.forward(&e));
        assert_eq!(c1, c2);
        assert_eq!(model.backward(&c1, false), model.backward(&c2, false));
    }

    #[test]
    fn bad_configs_rejected() {
        let mut cfg = ModelConfig::uniform(tables(), vec![4], ActivationSpec::Relu, Norm::None, None, 0);
        cfg.activations.pop();
        assert!(Model::new(cfg).is_err());
        let cfg = ModelConfig::uniform(tables(), vec![0], ActivationSpec::Relu, Norm::None, None, 0);
        assert!(Model::new(cfg).is_err());
        let cfg = ModelConfig::uniform(tables(), vec![4], ActivationSpec::Relu, Norm::None, Some(-1.0), 0);
        assert!(Model::new(cfg).is_err());
    }

    #[test]
    fn param_count_matches_config() {
        let cfg = ModelConfig::uniform(tables(), vec![8, 4], ActivationSpec::Relu, Norm::None, None, 0);
        let model = Model::new(cfg.clone()).unwrap();
        assert_eq!(model.num_params(), cfg.num_params());
    }
}
