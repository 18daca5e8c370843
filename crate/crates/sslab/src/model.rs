//! A small fully connected classifier with a hand-derived backward pass, plus
//! SGD with momentum and an optional warm-up + cosine learning-rate schedule.
//!
//! The network maps `d -> hidden... -> K` with tanh or rectifier hidden
//! activations and a linear output layer producing logits. Batches are slices
//! of feature vectors; weight gradients are accumulated in fixed sample order
//! so results are bit-reproducible.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::InvalidConfig(format!(
                "unknown activation '{other}' (expected tanh or relu)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    #[inline]
    fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the post-activation value.
    #[inline]
    fn derivative_from_output(&self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// One dense layer, weights stored row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        DenseLayer {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }
}

/// Full parameter set of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    widths: Vec<usize>,
    activation: Activation,
    layers: Vec<DenseLayer>,
}

/// Gradients with the same shape as [`MlpParams`].
#[derive(Debug, Clone)]
pub struct GradAccumulator {
    layers: Vec<DenseLayer>,
}

impl GradAccumulator {
    pub fn zeros_like(params: &MlpParams) -> Self {
        GradAccumulator {
            layers: params
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Elementwise `self += other`, used to merge labeled and unlabeled passes.
    pub fn add_assign(&mut self, other: &GradAccumulator) -> Result<()> {
        if self.layers.len() != other.layers.len() {
            return Err(Error::ShapeMismatch("gradient layer counts differ".into()));
        }
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            if a.weights.len() != b.weights.len() || a.bias.len() != b.bias.len() {
                return Err(Error::ShapeMismatch("gradient layer shapes differ".into()));
            }
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += y;
            }
            for (x, y) in a.bias.iter_mut().zip(&b.bias) {
                *x += y;
            }
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|v| v.is_finite()) && l.bias.iter().all(|v| v.is_finite())
        })
    }
}

/// Activations cached by [`forward`] for the matching [`backward`] call.
#[derive(Debug)]
pub struct ForwardCache {
    batch: Vec<Vec<f64>>,
    /// Post-activation outputs of each hidden layer, per sample.
    hidden: Vec<Vec<Vec<f64>>>,
}

impl MlpParams {
    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn num_classes(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Build from explicit layer contents; shapes must match `widths`.
    pub fn from_parts(
        widths: Vec<usize>,
        activation: Activation,
        layers: Vec<DenseLayer>,
    ) -> Result<Self> {
        validate_widths(&widths)?;
        if layers.len() != widths.len() - 1 {
            return Err(Error::ShapeMismatch(format!(
                "{} layers for {} widths",
                layers.len(),
                widths.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.in_dim != widths[i]
                || layer.out_dim != widths[i + 1]
                || layer.weights.len() != layer.in_dim * layer.out_dim
                || layer.bias.len() != layer.out_dim
            {
                return Err(Error::ShapeMismatch(format!("layer {i} shape inconsistent")));
            }
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("layer {i} has non-finite entries")));
            }
        }
        Ok(MlpParams {
            widths,
            activation,
            layers,
        })
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Flat parameter accessor (weights then bias, layer by layer); used by
    /// the finite-difference oracle and nothing else on the hot path.
    pub fn get_param(&self, index: usize) -> f64 {
        let (layer, offset) = self.locate(index);
        let l = &self.layers[layer];
        if offset < l.weights.len() {
            l.weights[offset]
        } else {
            l.bias[offset - l.weights.len()]
        }
    }

    pub fn set_param(&mut self, index: usize, value: f64) {
        let (layer, offset) = self.locate(index);
        let l = &mut self.layers[layer];
        if offset < l.weights.len() {
            l.weights[offset] = value;
        } else {
            l.bias[offset - l.weights.len()] = value;
        }
    }

    fn locate(&self, mut index: usize) -> (usize, usize) {
        for (i, l) in self.layers.iter().enumerate() {
            let len = l.weights.len() + l.bias.len();
            if index < len {
                return (i, index);
            }
            index -= len;
        }
        panic!("parameter index out of range");
    }

    /// Flat gradient view matching the `get_param`/`set_param` indexing.
    pub fn flatten_grads(grads: &GradAccumulator) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &grads.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.bias);
        }
        out
    }
}

fn validate_widths(widths: &[usize]) -> Result<()> {
    if widths.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least input and output widths, got {widths:?}"
        )));
    }
    if widths.contains(&0) {
        return Err(Error::InvalidConfig(format!("zero width in {widths:?}")));
    }
    if *widths.last().unwrap() < 2 {
        return Err(Error::InvalidConfig("output width must be >= 2".into()));
    }
    Ok(())
}

/// Initialize parameters: weights `N(0, 1/fan_in)`, biases zero, fully
/// determined by `seed`.
pub fn init_params(widths: &[usize], activation: Activation, seed: u64) -> Result<MlpParams> {
    validate_widths(widths)?;
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for i in 0..widths.len() - 1 {
        let (in_dim, out_dim) = (widths[i], widths[i + 1]);
        let scale = 1.0 / (in_dim as f64).sqrt();
        let mut stream = RngStream::new(seed, "model/init", i as u64, 0);
        let mut layer = DenseLayer::zeros(in_dim, out_dim);
        for w in &mut layer.weights {
            *w = scale * stream.next_normal();
        }
        layers.push(layer);
    }
    MlpParams::from_parts(widths.to_vec(), activation, layers)
}

/// Forward pass to logits, caching hidden activations for [`backward`].
pub fn forward(params: &MlpParams, batch: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, ForwardCache)> {
    let d = params.input_dim();
    let mut logits = Vec::with_capacity(batch.len());
    let mut hidden = Vec::with_capacity(batch.len());
    for x in batch {
        check_input_dim(x, d)?;
        let (l, h) = forward_single(params, x);
        logits.push(l);
        hidden.push(h);
    }
    Ok((
        logits,
        ForwardCache {
            batch: batch.to_vec(),
            hidden,
        },
    ))
}

/// Forward pass without a cache, for evaluation and pseudo-label views.
pub fn forward_no_cache(params: &MlpParams, batch: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let d = params.input_dim();
    let mut out = Vec::with_capacity(batch.len());
    for x in batch {
        check_input_dim(x, d)?;
        out.push(forward_single(params, x).0);
    }
    Ok(out)
}

fn check_input_dim(x: &[f64], d: usize) -> Result<()> {
    if x.len() != d {
        return Err(Error::ShapeMismatch(format!(
            "input dimension {} does not match model dimension {d}",
            x.len()
        )));
    }
    Ok(())
}

/// Single-sample forward returning logits and per-hidden-layer activations.
fn forward_single(params: &MlpParams, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n_layers = params.layers.len();
    let mut hidden: Vec<Vec<f64>> = Vec::with_capacity(n_layers.saturating_sub(1));
    let mut current: Vec<f64> = x.to_vec();
    for (li, layer) in params.layers.iter().enumerate() {
        let mut next = vec![0.0; layer.out_dim];
        for o in 0..layer.out_dim {
            let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
            let mut acc = layer.bias[o];
            for (w, a) in row.iter().zip(&current) {
                acc += w * a;
            }
            next[o] = acc;
        }
        let is_output = li == n_layers - 1;
        if !is_output {
            for v in &mut next {
                *v = params.activation.apply(*v);
            }
            hidden.push(next.clone());
        }
        current = next;
    }
    (current, hidden)
}

/// Exact gradient of the scalar loss whose per-sample logit gradient is given.
pub fn backward(
    params: &MlpParams,
    cache: &ForwardCache,
    dlogits: &[Vec<f64>],
) -> Result<GradAccumulator> {
    if dlogits.len() != cache.batch.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} logit gradients for a cached batch of {}",
            dlogits.len(),
            cache.batch.len()
        )));
    }
    let k = params.num_classes();
    let mut grads = GradAccumulator::zeros_like(params);
    let n_layers = params.layers.len();
    for (s, dl) in dlogits.iter().enumerate() {
        if dl.len() != k {
            return Err(Error::ShapeMismatch(format!(
                "logit gradient of length {} for {k} classes",
                dl.len()
            )));
        }
        let mut delta: Vec<f64> = dl.clone();
        for li in (0..n_layers).rev() {
            let layer = &params.layers[li];
            let upstream: &[f64] = if li == 0 {
                &cache.batch[s]
            } else {
                &cache.hidden[s][li - 1]
            };
            let g = &mut grads.layers[li];
            for o in 0..layer.out_dim {
                let d = delta[o];
                if d != 0.0 {
                    let row = &mut g.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (gw, a) in row.iter_mut().zip(upstream) {
                        *gw += d * a;
                    }
                }
                g.bias[o] += d;
            }
            if li > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for o in 0..layer.out_dim {
                    let d = delta[o];
                    if d != 0.0 {
                        let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += d * w;
                        }
                    }
                }
                let acts = &cache.hidden[s][li - 1];
                for (p, &a) in prev.iter_mut().zip(acts) {
                    *p *= params.activation.derivative_from_output(a);
                }
                delta = prev;
            }
        }
    }
    Ok(grads)
}

/// Learning-rate schedule: linear warm-up followed by cosine decay to zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CosineSchedule {
    pub total_steps: usize,
    pub warmup_steps: usize,
}

/// SGD-with-momentum state: `v <- m v + g`, `theta <- theta - lr(t) v`.
#[derive(Debug, Clone)]
pub struct SgdState {
    pub learning_rate: f64,
    pub momentum: f64,
    pub schedule: Option<CosineSchedule>,
    velocity: GradAccumulator,
    step: usize,
}

impl SgdState {
    pub fn new(
        learning_rate: f64,
        momentum: f64,
        schedule: Option<CosineSchedule>,
        params: &MlpParams,
    ) -> Result<Self> {
        if !(learning_rate > 0.0) || !learning_rate.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::InvalidConfig(format!(
                "momentum must be in [0, 1), got {momentum}"
            )));
        }
        Ok(SgdState {
            learning_rate,
            momentum,
            schedule,
            velocity: GradAccumulator::zeros_like(params),
            step: 0,
        })
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Learning rate applied at step `t` (0-based).
    pub fn learning_rate_at(&self, t: usize) -> f64 {
        match self.schedule {
            None => self.learning_rate,
            Some(CosineSchedule {
                total_steps,
                warmup_steps,
            }) => {
                if warmup_steps > 0 && t < warmup_steps {
                    return self.learning_rate * (t + 1) as f64 / warmup_steps as f64;
                }
                let span = total_steps.saturating_sub(warmup_steps).max(1);
                let progress = (t - warmup_steps.min(t)) as f64 / span as f64;
                let progress = progress.min(1.0);
                self.learning_rate * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos())
            }
        }
    }
}

/// One optimizer step, consuming the gradient by reference.
pub fn sgd_step(params: &mut MlpParams, grads: &GradAccumulator, state: &mut SgdState) -> Result<()> {
    if grads.layers.len() != params.layers.len() {
        return Err(Error::ShapeMismatch("gradient/parameter layer counts differ".into()));
    }
    let lr = state.learning_rate_at(state.step);
    for (li, layer) in params.layers.iter_mut().enumerate() {
        let g = &grads.layers[li];
        let v = &mut state.velocity.layers[li];
        if g.weights.len() != layer.weights.len() || g.bias.len() != layer.bias.len() {
            return Err(Error::ShapeMismatch(format!("gradient layer {li} shape differs")));
        }
        for ((w, gw), vw) in layer.weights.iter_mut().zip(&g.weights).zip(&mut v.weights) {
            *vw = state.momentum * *vw + gw;
            *w -= lr * *vw;
        }
        for ((b, gb), vb) in layer.bias.iter_mut().zip(&g.bias).zip(&mut v.bias) {
            *vb = state.momentum * *vb + gb;
            *b -= lr * *vb;
        }
    }
    state.step += 1;
    Ok(())
}

const CHECKPOINT_MAGIC: &str = "sslab-checkpoint";
const CHECKPOINT_VERSION: u32 = 1;

/// Serialize parameters to a versioned text container. Values are written in
/// shortest round-trip form, so save/load is bit-exact.
pub fn save_checkpoint(params: &MlpParams, path: &Path) -> Result<()> {
    let mut text = String::new();
    let _ = writeln!(text, "{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}");
    let _ = writeln!(text, "activation {}", params.activation.name());
    let widths: Vec<String> = params.widths.iter().map(|w| w.to_string()).collect();
    let _ = writeln!(text, "widths {}", widths.join(" "));
    for (i, layer) in params.layers.iter().enumerate() {
        let _ = writeln!(text, "layer {i}");
        let w: Vec<String> = layer.weights.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(text, "w {}", w.join(" "));
        let b: Vec<String> = layer.bias.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(text, "b {}", b.join(" "));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<MlpParams> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let ctx = path.display().to_string();
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(&ctx, "empty checkpoint"))?;
    if header != format!("{CHECKPOINT_MAGIC} v{CHECKPOINT_VERSION}") {
        return Err(Error::parse(&ctx, format!("unsupported header '{header}'")));
    }
    let activation_line = lines
        .next()
        .ok_or_else(|| Error::parse(&ctx, "missing activation"))?;
    let activation = Activation::parse(
        activation_line
            .strip_prefix("activation ")
            .ok_or_else(|| Error::parse(&ctx, "malformed activation line"))?,
    )?;
    let widths_line = lines
        .next()
        .ok_or_else(|| Error::parse(&ctx, "missing widths"))?;
    let widths: Vec<usize> = widths_line
        .strip_prefix("widths ")
        .ok_or_else(|| Error::parse(&ctx, "malformed widths line"))?
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|e| Error::parse(&ctx, format!("width '{t}': {e}")))
        })
        .collect::<Result<_>>()?;
    let parse_values = |line: &str, prefix: &str| -> Result<Vec<f64>> {
        line.strip_prefix(prefix)
            .ok_or_else(|| Error::parse(&ctx, format!("expected '{prefix}' line")))?
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::parse(&ctx, format!("value '{t}': {e}")))
            })
            .collect()
    };
    let mut layers = Vec::new();
    for i in 0..widths.len().saturating_sub(1) {
        let marker = lines
            .next()
            .ok_or_else(|| Error::parse(&ctx, format!("missing layer {i}")))?;
        if marker != format!("layer {i}") {
            return Err(Error::parse(&ctx, format!("expected 'layer {i}', got '{marker}'")));
        }
        let weights = parse_values(
            lines.next().ok_or_else(|| Error::parse(&ctx, "missing weights"))?,
            "w ",
        )?;
        let bias = parse_values(
            lines.next().ok_or_else(|| Error::parse(&ctx, "missing bias"))?,
            "b ",
        )?;
        layers.push(DenseLayer {
            in_dim: widths[i],
            out_dim: widths[i + 1],
            weights,
            bias,
        });
    }
    MlpParams::from_parts(widths, activation, layers)
}
