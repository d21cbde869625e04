//! Sentence CNN over frozen word embeddings.
//!
//! ```text
//! n x d input -> dropout -> conv (widths 3,4,5; ReLU) -> global max pool
//!   -> dense (ReLU) -> dropout -> single sigmoid unit
//! ```
//!
//! Forward and backward passes are written out by hand; the gradient stops at
//! the input matrix, so embeddings are never updated.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::Label;
use crate::textproc::TokenMatrix;

use super::{bce_with_logit, check_both_classes, sigmoid, LossHistory, ModelError, RmsProp, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnnConfig {
    pub embed_dim: usize,
    pub filter_widths: Vec<usize>,
    /// Filters per width; the pooled vector has `filters_per_width * widths` entries.
    pub filters_per_width: usize,
    pub hidden: usize,
    /// Drop probability of both dropout layers.
    pub dropout_p: f64,
}

impl Default for CnnConfig {
    fn default() -> Self {
        CnnConfig {
            embed_dim: 300,
            filter_widths: vec![3, 4, 5],
            filters_per_width: 120,
            hidden: 128,
            dropout_p: 0.25,
        }
    }
}

impl CnnConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::BadConfig(m.to_string()));
        if self.embed_dim == 0 {
            return bad("embed_dim must be >= 1");
        }
        if self.filter_widths.is_empty() || self.filter_widths.contains(&0) {
            return bad("filter widths must be non-empty and >= 1");
        }
        if self.filters_per_width == 0 || self.hidden == 0 {
            return bad("filters_per_width and hidden must be >= 1");
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return bad("dropout_p must be in [0, 1)");
        }
        Ok(())
    }

    pub fn pooled_len(&self) -> usize {
        self.filters_per_width * self.filter_widths.len()
    }

    pub fn max_width(&self) -> usize {
        self.filter_widths.iter().copied().max().unwrap_or(0)
    }
}

/// Trainable tensors. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct CnnParams {
    /// Per width: `filters x width x embed_dim`, row-major.
    pub conv_w: Vec<Vec<f64>>,
    /// Per width: one bias per filter.
    pub conv_b: Vec<Vec<f64>>,
    /// `hidden x pooled_len`, row-major.
    pub dense_w: Vec<f64>,
    pub dense_b: Vec<f64>,
    pub out_w: Vec<f64>,
    pub out_b: f64,
}

impl CnnParams {
    pub fn zeros(cfg: &CnnConfig) -> Self {
        let f = cfg.filters_per_width;
        CnnParams {
            conv_w: cfg.filter_widths.iter().map(|&w| vec![0.0; f * w * cfg.embed_dim]).collect(),
            conv_b: cfg.filter_widths.iter().map(|_| vec![0.0; f]).collect(),
            dense_w: vec![0.0; cfg.hidden * cfg.pooled_len()],
            dense_b: vec![0.0; cfg.hidden],
            out_w: vec![0.0; cfg.hidden],
            out_b: 0.0,
        }
    }

    /// Every tensor in canonical order: per width (weights, bias), then dense
    /// weights, dense bias, output weights, output bias.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(2 * self.conv_w.len() + 4);
        for (w, b) in self.conv_w.iter().zip(&self.conv_b) {
            out.push(w);
            out.push(b);
        }
        out.push(&self.dense_w);
        out.push(&self.dense_b);
        out.push(&self.out_w);
        out.push(std::slice::from_ref(&self.out_b));
        out
    }

    /// Mutable view in the order of [`CnnParams::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(2 * self.conv_w.len() + 4);
        for (w, b) in self.conv_w.iter_mut().zip(self.conv_b.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out.push(&mut self.dense_w);
        out.push(&mut self.dense_b);
        out.push(&mut self.out_w);
        out.push(std::slice::from_mut(&mut self.out_b));
        out
    }

    /// Human-readable tensor names, aligned with [`CnnParams::tensors`].
    pub fn tensor_names(cfg: &CnnConfig) -> Vec<String> {
        let mut names = Vec::new();
        for w in &cfg.filter_widths {
            names.push(format!("conv{w}.weight"));
            names.push(format!("conv{w}.bias"));
        }
        names.extend(["dense.weight", "dense.bias", "out.weight", "out.bias"].map(String::from));
        names
    }

    fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= s);
        }
    }

    fn fill_zero(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel {
    pub config: CnnConfig,
    pub params: CnnParams,
}

fn glorot(rng: &mut ChaCha8Rng, t: &mut [f64], fan_in: usize, fan_out: usize) {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    t.iter_mut().for_each(|v| *v = rng.gen_range(-limit..=limit));
}

impl CnnModel {
    /// Glorot-uniform weights, zero biases.
    pub fn new(config: CnnConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = CnnParams::zeros(&config);
        let f = config.filters_per_width;
        for (w, t) in config.filter_widths.iter().zip(params.conv_w.iter_mut()) {
            glorot(&mut rng, t, w * config.embed_dim, w * f);
        }
        glorot(&mut rng, &mut params.dense_w, config.pooled_len(), config.hidden);
        glorot(&mut rng, &mut params.out_w, config.hidden, 1);
        Ok(CnnModel { config, params })
    }

    /// Checks that tensor lengths agree with the configuration.
    pub fn from_parts(config: CnnConfig, params: CnnParams) -> Result<Self, ModelError> {
        config.validate()?;
        let expected = CnnParams::zeros(&config);
        let shapes = |p: &CnnParams| p.tensors().iter().map(|t| t.len()).collect::<Vec<_>>();
        if shapes(&expected) != shapes(&params) {
            return Err(ModelError::ShapeMismatch(format!(
                "tensor lengths {:?} do not match config {:?}",
                shapes(&params),
                shapes(&expected)
            )));
        }
        Ok(CnnModel { config, params })
    }

    /// Eval-mode probability of the political class.
    pub fn predict_proba(&self, input: &TokenMatrix) -> Result<f64, ModelError> {
        cnn_forward(self, input, ForwardMode::Eval).map(|(p, _)| p)
    }
}

pub enum ForwardMode<'a> {
    /// Dropout active, masks drawn from the given generator.
    Train(&'a mut ChaCha8Rng),
    /// Deterministic, no dropout.
    Eval,
}

/// Activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Padded input after input dropout.
    pub input: TokenMatrix,
    /// Conv output length per width.
    pub conv_lengths: Vec<usize>,
    /// Winning time step per pooled unit.
    pub argmax: Vec<usize>,
    /// Pre-activation at the winning step.
    pub pooled_pre: Vec<f64>,
    pub pooled: Vec<f64>,
    pub hidden_pre: Vec<f64>,
    /// Inverted-dropout multiplier per hidden unit (1 in eval mode).
    pub hidden_scale: Vec<f64>,
    pub hidden: Vec<f64>,
    pub logit: f64,
    pub prob: f64,
}

/// Inverted dropout: zero each value with probability `p`, scale survivors
/// by `1 / (1 - p)`. Returns the multipliers applied.
pub fn apply_dropout(values: &mut [f64], p: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let keep_scale = 1.0 / (1.0 - p);
    values
        .iter_mut()
        .map(|v| {
            let s = if rng.gen::<f64>() < p { 0.0 } else { keep_scale };
            *v *= s;
            s
        })
        .collect()
}

/// Maximum and first index attaining it.
pub fn global_max_pool(acts: &[f64]) -> (f64, usize) {
    let mut best = (f64::NEG_INFINITY, 0);
    for (t, &a) in acts.iter().enumerate() {
        if a > best.0 {
            best = (a, t);
        }
    }
    best
}

/// Routes `grad` to position `argmax` of a length-`len` signal.
pub fn max_pool_backward(len: usize, argmax: usize, grad: f64) -> Vec<f64> {
    let mut out = vec![0.0; len];
    out[argmax] = grad;
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Runs the network on one sequence. Inputs shorter than the widest filter
/// are zero-padded at the end.
pub fn cnn_forward(
    model: &CnnModel,
    input: &TokenMatrix,
    mode: ForwardMode<'_>,
) -> Result<(f64, ForwardCache), ModelError> {
    let cfg = &model.config;
    let p = &model.params;
    if input.dim() != cfg.embed_dim {
        return Err(ModelError::DimMismatch {
            expected: cfg.embed_dim,
            found: input.dim(),
        });
    }
    let mut x = input.padded_to(cfg.max_width());
    let n = x.rows();
    if n == 0 {
        return Err(ModelError::EmptySequence);
    }
    let mut rng = match mode {
        ForwardMode::Train(rng) => Some(rng),
        ForwardMode::Eval => None,
    };
    if let Some(rng) = rng.as_deref_mut() {
        if cfg.dropout_p > 0.0 {
            apply_dropout(x.as_mut_slice(), cfg.dropout_p, rng);
        }
    }

    let d = cfg.embed_dim;
    let f = cfg.filters_per_width;
    let pooled_len = cfg.pooled_len();
    let mut argmax = vec![0; pooled_len];
    let mut pooled_pre = vec![0.0; pooled_len];
    let mut pooled = vec![0.0; pooled_len];
    let mut conv_lengths = Vec::with_capacity(cfg.filter_widths.len());
    let xs = x.as_slice();
    for (wi, &w) in cfg.filter_widths.iter().enumerate() {
        let positions = n - w + 1;
        conv_lengths.push(positions);
        let span = w * d;
        for fi in 0..f {
            let kernel = &p.conv_w[wi][fi * span..(fi + 1) * span];
            let bias = p.conv_b[wi][fi];
            // ReLU then max over time, first index on ties
            let (mut best_act, mut best_t, mut best_z) = (f64::NEG_INFINITY, 0, 0.0);
            for t in 0..positions {
                let z = bias + dot(kernel, &xs[t * d..t * d + span]);
                let a = z.max(0.0);
                if a > best_act {
                    (best_act, best_t, best_z) = (a, t, z);
                }
            }
            let j = wi * f + fi;
            argmax[j] = best_t;
            pooled_pre[j] = best_z;
            pooled[j] = best_act;
        }
    }

    let mut hidden_pre = vec![0.0; cfg.hidden];
    for (i, h) in hidden_pre.iter_mut().enumerate() {
        *h = p.dense_b[i] + dot(&p.dense_w[i * pooled_len..(i + 1) * pooled_len], &pooled);
    }
    let mut hidden: Vec<f64> = hidden_pre.iter().map(|h| h.max(0.0)).collect();
    let hidden_scale = match rng {
        Some(rng) if cfg.dropout_p > 0.0 => apply_dropout(&mut hidden, cfg.dropout_p, rng),
        _ => vec![1.0; cfg.hidden],
    };
    let logit = p.out_b + dot(&p.out_w, &hidden);
    let prob = sigmoid(logit);
    Ok((
        prob,
        ForwardCache {
            input: x,
            conv_lengths,
            argmax,
            pooled_pre,
            pooled,
            hidden_pre,
            hidden_scale,
            hidden,
            logit,
            prob,
        },
    ))
}

/// Adds this example's parameter gradients into `grads` and returns its
/// cross-entropy loss.
fn backward_into(model: &CnnModel, cache: &ForwardCache, label: Label, grads: &mut CnnParams) -> f64 {
    let cfg = &model.config;
    let p = &model.params;
    let y = label.target();
    let loss = bce_with_logit(cache.logit, y);
    let dlogit = cache.prob - y;

    grads.out_b += dlogit;
    let mut dhidden_pre = vec![0.0; cfg.hidden];
    for i in 0..cfg.hidden {
        grads.out_w[i] += dlogit * cache.hidden[i];
        let relu_gate = if cache.hidden_pre[i] > 0.0 { 1.0 } else { 0.0 };
        dhidden_pre[i] = dlogit * p.out_w[i] * cache.hidden_scale[i] * relu_gate;
    }

    let pooled_len = cfg.pooled_len();
    let mut dpooled = vec![0.0; pooled_len];
    for (i, &g) in dhidden_pre.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        grads.dense_b[i] += g;
        let row = i * pooled_len..(i + 1) * pooled_len;
        for ((gw, w), (&x, dp)) in grads.dense_w[row.clone()]
            .iter_mut()
            .zip(&p.dense_w[row])
            .zip(cache.pooled.iter().zip(dpooled.iter_mut()))
        {
            *gw += g * x;
            *dp += g * w;
        }
    }

    // Max pool passes the gradient to the winning step only; ReLU gates it.
    let d = cfg.embed_dim;
    let f = cfg.filters_per_width;
    let xs = cache.input.as_slice();
    for (wi, &w) in cfg.filter_widths.iter().enumerate() {
        let span = w * d;
        for fi in 0..f {
            let j = wi * f + fi;
            if cache.pooled_pre[j] <= 0.0 || dpooled[j] == 0.0 {
                continue;
            }
            let g = dpooled[j];
            let t = cache.argmax[j];
            grads.conv_b[wi][fi] += g;
            let window = &xs[t * d..t * d + span];
            for (gw, &x) in grads.conv_w[wi][fi * span..(fi + 1) * span].iter_mut().zip(window) {
                *gw += g * x;
            }
        }
    }
    loss
}

/// Gradients of the cross-entropy loss for one example, and the loss.
pub fn cnn_backward(model: &CnnModel, cache: &ForwardCache, label: Label) -> (f64, CnnParams) {
    let mut grads = CnnParams::zeros(&model.config);
    let loss = backward_into(model, cache, label, &mut grads);
    (loss, grads)
}

/// Eval-mode loss on one example.
pub fn cnn_loss(model: &CnnModel, input: &TokenMatrix, label: Label) -> Result<f64, ModelError> {
    let (_, cache) = cnn_forward(model, input, ForwardMode::Eval)?;
    Ok(bce_with_logit(cache.logit, label.target()))
}

/// Minibatch RMSProp on mean cross-entropy. Shuffling and dropout masks all
/// come from one generator seeded with `cfg.seed`, so equal inputs give
/// bit-identical models. Returns the mean training loss per epoch.
pub fn cnn_train(
    dataset: &[(&TokenMatrix, Label)],
    cfg: &TrainConfig,
    mut model: CnnModel,
    opt: &mut RmsProp,
) -> Result<(CnnModel, LossHistory), ModelError> {
    cfg.validate()?;
    model.config.validate()?;
    let labels: Vec<Label> = dataset.iter().map(|(_, l)| *l).collect();
    check_both_classes(&labels)?;
    if let Some((m, _)) = dataset.iter().find(|(m, _)| m.dim() != model.config.embed_dim) {
        return Err(ModelError::DimMismatch {
            expected: model.config.embed_dim,
            found: m.dim(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut grads = CnnParams::zeros(&model.config);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for (batch, chunk) in order.chunks(cfg.batch_size).enumerate() {
            grads.fill_zero();
            let mut batch_loss = 0.0;
            for &i in chunk {
                let (input, label) = dataset[i];
                let (_, cache) = cnn_forward(&model, input, ForwardMode::Train(&mut rng))?;
                batch_loss += backward_into(&model, &cache, label, &mut grads);
            }
            if !batch_loss.is_finite() {
                return Err(ModelError::NonFiniteLoss { epoch, batch });
            }
            epoch_loss += batch_loss;
            grads.scale(1.0 / chunk.len() as f64);
            opt.step(model.params.tensors_mut(), grads.tensors());
        }
        history.push(epoch_loss / dataset.len() as f64);
    }
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use Label::{NonPolitical as N, Political as P};

    fn tiny_config() -> CnnConfig {
        CnnConfig {
            embed_dim: 4,
            filter_widths: vec![3, 4, 5],
            filters_per_width: 2,
            hidden: 3,
            dropout_p: 0.0,
        }
    }

    fn random_matrix(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> TokenMatrix {
        let data: Vec<Vec<f64>> = (0..rows)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        TokenMatrix::from_rows(dim, &data).unwrap()
    }

    #[test]
    fn shapes_for_seven_tokens() {
        let cfg = CnnConfig {
            embed_dim: 8,
            ..CnnConfig::default()
        };
        let model = CnnModel::new(cfg, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (_, cache) = cnn_forward(&model, &random_matrix(7, 8, &mut rng), ForwardMode::Eval).unwrap();
        assert_eq!(cache.conv_lengths, vec![5, 4, 3]);
        assert_eq!(cache.pooled.len(), 360);
        assert_eq!(model.config.pooled_len(), 360);
        assert_eq!(model.params.dense_w.len(), 128 * 360);
    }

    #[test]
    fn zero_input_gives_sigmoid_of_output_bias() {
        let mut model = CnnModel::new(tiny_config(), 3).unwrap();
        model.params.out_b = 0.7;
        let (p, cache) = cnn_forward(&model, &TokenMatrix::zeros(6, 4), ForwardMode::Eval).unwrap();
        assert!(cache.pooled.iter().all(|&v| v == 0.0));
        assert!(cache.hidden.iter().all(|&v| v == 0.0));
        assert_eq!(p, sigmoid(0.7));
    }

    #[test]
    fn eval_is_deterministic() {
        let model = CnnModel::new(tiny_config(), 4).unwrap();
        let x = random_matrix(9, 4, &mut ChaCha8Rng::seed_from_u64(5));
        let a = model.predict_proba(&x).unwrap();
        let b = model.predict_proba(&x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn short_and_empty_inputs_are_padded() {
        let model = CnnModel::new(tiny_config(), 4).unwrap();
        let (_, cache) = cnn_forward(&model, &TokenMatrix::zeros(0, 4), ForwardMode::Eval).unwrap();
        assert_eq!(cache.input.rows(), 5);
        assert_eq!(cache.conv_lengths, vec![3, 2, 1]);
        let err = cnn_forward(&model, &TokenMatrix::zeros(3, 5), ForwardMode::Eval).unwrap_err();
        assert!(matches!(err, ModelError::DimMismatch { expected: 4, found: 5 }));
    }

    #[test]
    fn config_validation() {
        let mut cfg = tiny_config();
        cfg.dropout_p = 1.0;
        assert!(CnnModel::new(cfg, 0).is_err());
        let mut cfg = tiny_config();
        cfg.filter_widths.clear();
        assert!(CnnModel::new(cfg, 0).is_err());
        let model = CnnModel::new(tiny_config(), 0).unwrap();
        let mut params = model.params.clone();
        params.out_w.pop();
        assert!(matches!(
            CnnModel::from_parts(tiny_config(), params),
            Err(ModelError::ShapeMismatch(_))
        ));
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let mut model = CnnModel::new(tiny_config(), 17).unwrap();
        // nonzero biases so ReLU units are not all sitting on their kink
        for t in model.params.tensors_mut() {
            for v in t.iter_mut() {
                *v += rng.gen_range(-0.3..0.3);
            }
        }
        for (k, label) in [P, N, P].into_iter().enumerate() {
            let x = random_matrix(6, 4, &mut ChaCha8Rng::seed_from_u64(100 + k as u64));
            let (_, cache) = cnn_forward(&model, &x, ForwardMode::Eval).unwrap();
            let (_, grads) = cnn_backward(&model, &cache, label);
            let names = CnnParams::tensor_names(&model.config);
            let h = 1e-6;
            for (ti, g) in grads.tensors().iter().enumerate() {
                for (pi, &analytic) in g.iter().enumerate() {
                    let mut plus = model.clone();
                    plus.params.tensors_mut()[ti][pi] += h;
                    let mut minus = model.clone();
                    minus.params.tensors_mut()[ti][pi] -= h;
                    let numeric = (cnn_loss(&plus, &x, label).unwrap() - cnn_loss(&minus, &x, label).unwrap()) / (2.0 * h);
                    let denom = analytic.abs().max(numeric.abs()).max(1e-7);
                    let rel = (analytic - numeric).abs() / denom;
                    assert!(rel < 1e-4, "{}[{pi}]: analytic {analytic} numeric {numeric}", names[ti]);
                }
            }
        }
    }

    #[test]
    fn max_pool_routes_to_first_argmax() {
        let (m, t) = global_max_pool(&[0.0, 2.0, 1.0, 2.0]);
        assert_eq!((m, t), (2.0, 1));
        let g = max_pool_backward(4, t, 0.37);
        assert_eq!(g, vec![0.0, 0.37, 0.0, 0.0]);
        assert_eq!(g.iter().sum::<f64>(), 0.37);
    }

    #[test]
    fn dropout_preserves_expectation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let base: Vec<f64> = (0..16).map(|i| 0.5 + i as f64 * 0.25).collect();
        let mut acc = vec![0.0; base.len()];
        let trials = 10_000;
        for _ in 0..trials {
            let mut v = base.clone();
            apply_dropout(&mut v, 0.25, &mut rng);
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += x);
        }
        for (a, b) in acc.iter().zip(&base) {
            let mean = a / trials as f64;
            assert!((mean - b).abs() / b < 0.02, "{mean} vs {b}");
        }
    }

    #[test]
    fn overfits_single_example() {
        let cfg = CnnConfig {
            embed_dim: 8,
            filters_per_width: 8,
            hidden: 8,
            ..CnnConfig::default()
        };
        let x = random_matrix(7, 8, &mut ChaCha8Rng::seed_from_u64(1));
        let zeros = TokenMatrix::zeros(7, 8);
        for label in [P, N] {
            // a second, opposite example satisfies the two-class precondition;
            // only the first is checked
            let data = vec![(&x, label), (&zeros, label.flipped())];
            let train = TrainConfig {
                epochs: 200,
                batch_size: 1,
                lr: 1e-3,
                seed: 3,
                ..TrainConfig::default()
            };
            let model = CnnModel::new(cfg.clone(), 2).unwrap();
            let (model, _) = cnn_train(&data, &train, model, &mut RmsProp::new(1e-3)).unwrap();
            let p = model.predict_proba(&x).unwrap();
            let p_label = if label.is_political() { p } else { 1.0 - p };
            assert!(p_label > 0.9, "label {label:?}: {p_label}");
        }
    }

    #[test]
    fn seeded_training_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let xs: Vec<TokenMatrix> = (0..12).map(|i| random_matrix(5 + i % 4, 4, &mut rng)).collect();
        let data: Vec<(&TokenMatrix, Label)> =
            xs.iter().enumerate().map(|(i, x)| (x, Label::from_political(i % 2 == 0))).collect();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            seed: 11,
            ..TrainConfig::default()
        };
        let mut tiny = tiny_config();
        tiny.dropout_p = 0.25;
        let run = || {
            let m = CnnModel::new(tiny.clone(), 5).unwrap();
            cnn_train(&data, &cfg, m, &mut RmsProp::new(cfg.lr)).unwrap().0
        };
        let (a, b) = (run(), run());
        for (ta, tb) in a.params.tensors().iter().zip(b.params.tensors()) {
            assert!(ta.iter().zip(tb).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn full_batch_loss_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pos_dir: Vec<f64> = vec![1.0, 0.5, -0.5, 0.2];
        let xs: Vec<TokenMatrix> = (0..10)
            .map(|i| {
                let sign = if i < 5 { 1.0 } else { -1.0 };
                let rows: Vec<Vec<f64>> = (0..6)
                    .map(|_| pos_dir.iter().map(|v| sign * v + rng.gen_range(-0.2..0.2)).collect())
                    .collect();
                TokenMatrix::from_rows(4, &rows).unwrap()
            })
            .collect();
        let data: Vec<(&TokenMatrix, Label)> =
            xs.iter().enumerate().map(|(i, x)| (x, Label::from_political(i < 5))).collect();
        let cfg = TrainConfig {
            epochs: 60,
            batch_size: 10,
            lr: 1e-3,
            seed: 1,
            ..TrainConfig::default()
        };
        let model = CnnModel::new(tiny_config(), 6).unwrap();
        let (_, history) = cnn_train(&data, &cfg, model, &mut RmsProp::new(1e-3)).unwrap();
        assert!(history.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{history:?}");
        assert!(history.last().unwrap() < history.first().unwrap());
    }

    #[test]
    fn training_rejects_single_class() {
        let x = TokenMatrix::zeros(5, 4);
        let data = vec![(&x, P), (&x, P)];
        let model = CnnModel::new(tiny_config(), 0).unwrap();
        let err = cnn_train(&data, &TrainConfig::default(), model, &mut RmsProp::new(1e-3)).unwrap_err();
        assert!(matches!(err, ModelError::DegenerateTrainingSet));
    }
}
