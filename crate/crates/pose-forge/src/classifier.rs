//! Compact fully-connected softmax classifier over downsampled images.
//!
//! The network is `input -> relu hidden -> softmax` trained by mini-batch
//! SGD with momentum. Training-side machinery: inverted dropout on the
//! hidden layer (survivors scaled by `1/(1-p)`, so at `p = 0.5` outputs
//! double and the expected sum is unchanged) and optional horizontal-flip
//! augmentation that pairs every batch image with its mirror under the
//! same class label.

use std::io::{Read, Write};
use std::path::Path;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{load_sample, DatasetManifest, Split};
use crate::render::{hflip, ImageBuffer};

const MODEL_MAGIC: &[u8; 6] = b"PFNET1";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {reason}")]
    InvalidConfig { reason: String },
    #[error("feature length {got} does not match the model input {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training diverged (non-finite loss) at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },
    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },
    #[error("empty training split")]
    EmptyTrainingSet,
    #[error("model file corrupt: {reason}")]
    Corrupt { reason: String },
    #[error("dataset error: {0}")]
    Dataset(#[from] crate::dataset::DatasetError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Images are box-downsampled to `input_side x input_side` features.
    #[serde(default = "default_input_side")]
    pub input_side: usize,
    #[serde(default = "default_hidden_units")]
    pub hidden_units: usize,
    pub num_classes: usize,
    #[serde(default = "default_dropout")]
    pub dropout_p: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_input_side() -> usize {
    64
}
fn default_hidden_units() -> usize {
    256
}
fn default_dropout() -> f64 {
    0.5
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.num_classes < 2 {
            return Err(ModelError::InvalidConfig {
                reason: format!("num_classes must be at least 2, got {}", self.num_classes),
            });
        }
        if !(0.0..1.0).contains(&self.dropout_p) {
            return Err(ModelError::InvalidConfig {
                reason: format!("dropout_p must be in [0, 1), got {}", self.dropout_p),
            });
        }
        if self.input_side == 0 || self.hidden_units == 0 {
            return Err(ModelError::InvalidConfig {
                reason: "input_side and hidden_units must be positive".into(),
            });
        }
        Ok(())
    }

    pub fn input_len(&self) -> usize {
        self.input_side * self.input_side
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    pub epochs: usize,
    #[serde(default)]
    pub hflip_augment: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_lr() -> f64 {
    0.01
}
fn default_momentum() -> f64 {
    0.9
}
fn default_batch() -> usize {
    32
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.learning_rate <= 0.0 {
            return Err(ModelError::InvalidConfig {
                reason: "learning_rate must be positive".into(),
            });
        }
        if self.batch_size == 0 {
            return Err(ModelError::InvalidConfig {
                reason: "batch_size must be at least 1".into(),
            });
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(ModelError::InvalidConfig {
                reason: format!("momentum must be in [0, 1), got {}", self.momentum),
            });
        }
        Ok(())
    }
}

/// Two-layer network parameters, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    /// hidden x input
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// classes x hidden
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Model {
    /// Seed-controlled scaled-Gaussian initialization (`sqrt(2/fan_in)`),
    /// zero biases.
    pub fn init(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let input = config.input_len();
        let (hidden, classes) = (config.hidden_units, config.num_classes);
        let layer = |rng: &mut ChaCha8Rng, rows: usize, cols: usize| -> Vec<f64> {
            let normal = Normal::new(0.0, (2.0 / cols as f64).sqrt()).expect("positive std");
            (0..rows * cols).map(|_| normal.sample(rng)).collect()
        };
        Ok(Self {
            w1: layer(&mut rng, hidden, input),
            b1: vec![0.0; hidden],
            w2: layer(&mut rng, classes, hidden),
            b2: vec![0.0; classes],
            config,
        })
    }

    /// Input width of the first layer, derived from the parameter blocks
    /// (equals `config.input_len()` for image-pipeline models, but the
    /// algebra itself works for any layer shape).
    pub fn input_len(&self) -> usize {
        self.w1.len() / self.b1.len()
    }

    /// Hidden width, derived from the parameter blocks.
    pub fn hidden_len(&self) -> usize {
        self.b1.len()
    }

    fn check_features(&self, features: &[f64]) -> Result<(), ModelError> {
        if features.len() != self.input_len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.input_len(),
                got: features.len(),
            });
        }
        Ok(())
    }

    /// Evaluation-mode forward pass: no dropout, no scaling.
    pub fn forward_eval(&self, features: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_features(features)?;
        let hidden = affine_relu(&self.w1, &self.b1, features);
        Ok(affine(&self.w2, &self.b2, &hidden))
    }

    /// Training-mode forward pass: hidden units are zeroed with
    /// probability `dropout_p` and survivors scaled by `1/(1-p)`. Returns
    /// the logits together with the intermediates backprop needs.
    pub fn forward_train(
        &self,
        features: &[f64],
        rng: &mut ChaCha8Rng,
    ) -> Result<TrainForward, ModelError> {
        self.check_features(features)?;
        let mut hidden = affine_relu(&self.w1, &self.b1, features);
        let p = self.config.dropout_p;
        let mask: Vec<f64> = if p > 0.0 {
            let scale = 1.0 / (1.0 - p);
            hidden
                .iter_mut()
                .map(|h| {
                    if rng.random::<f64>() < p {
                        *h = 0.0;
                        0.0
                    } else {
                        *h *= scale;
                        scale
                    }
                })
                .collect()
        } else {
            vec![1.0; hidden.len()]
        };
        let logits = affine(&self.w2, &self.b2, &hidden);
        Ok(TrainForward {
            hidden,
            mask,
            logits,
        })
    }

    pub fn parameters_finite(&self) -> bool {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .all(|p| p.is_finite())
    }
}

pub struct TrainForward {
    /// Post-relu, post-dropout hidden activations.
    pub hidden: Vec<f64>,
    /// Per-unit dropout multiplier (0 or `1/(1-p)`).
    pub mask: Vec<f64>,
    pub logits: Vec<f64>,
}

fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    b.iter()
        .enumerate()
        .map(|(r, &bias)| bias + dot(&w[r * cols..(r + 1) * cols], x))
        .collect()
}

/// Four-accumulator dot product; the split chains keep the FPU pipeline
/// busy where a serial sum would stall on add latency.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn affine_relu(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let mut out = affine(w, b, x);
    for v in &mut out {
        *v = v.max(0.0);
    }
    out
}

/// Box-filter downsample with exact fractional-area weighting, no
/// normalization. Exposed separately so its averaging contract is
/// testable on raw pixel values.
pub fn box_downsample(image: &ImageBuffer, side: usize) -> Vec<f64> {
    let (w, h) = (image.width() as f64, image.height() as f64);
    let (sx, sy) = (w / side as f64, h / side as f64);
    let mut out = Vec::with_capacity(side * side);
    for oy in 0..side {
        let y_lo = oy as f64 * sy;
        let y_hi = (oy + 1) as f64 * sy;
        for ox in 0..side {
            let x_lo = ox as f64 * sx;
            let x_hi = (ox + 1) as f64 * sx;
            let mut acc = 0.0;
            let mut area = 0.0;
            let y_start = y_lo.floor() as usize;
            let y_end = (y_hi.ceil() as usize).min(image.height());
            let x_start = x_lo.floor() as usize;
            let x_end = (x_hi.ceil() as usize).min(image.width());
            for py in y_start..y_end {
                let wy = overlap(py as f64, y_lo, y_hi);
                if wy == 0.0 {
                    continue;
                }
                for px in x_start..x_end {
                    let wx = overlap(px as f64, x_lo, x_hi);
                    if wx == 0.0 {
                        continue;
                    }
                    acc += image.get(px, py) * wx * wy;
                    area += wx * wy;
                }
            }
            out.push(acc / area);
        }
    }
    out
}

fn overlap(pixel_lo: f64, lo: f64, hi: f64) -> f64 {
    (hi.min(pixel_lo + 1.0) - lo.max(pixel_lo)).max(0.0)
}

/// Full preprocessing: box-downsample to `side^2` features, then per-image
/// standardization (subtract the mean, divide by stddev + 1e-8).
pub fn preprocess(image: &ImageBuffer, side: usize) -> Vec<f64> {
    let mut features = box_downsample(image, side);
    let n = features.len() as f64;
    let mean = features.iter().sum::<f64>() / n;
    let var = features.iter().map(|f| (f - mean) * (f - mean)).sum::<f64>() / n;
    let denom = var.sqrt() + 1e-8;
    for f in &mut features {
        *f = (*f - mean) / denom;
    }
    features
}

/// Numerically stabilized softmax (subtract the max logit). Exponentials
/// are floored at the smallest positive f64 so the output is a strict
/// simplex for any finite logits, underflow included.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits
        .iter()
        .map(|l| (l - max).exp().max(f64::MIN_POSITIVE))
        .collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Cross-entropy loss of the softmax distribution against the true class,
/// with its gradient w.r.t. the logits (`softmax(f) - onehot(y)`).
pub fn softmax_loss(logits: &[f64], true_class: usize) -> Result<(f64, Vec<f64>), ModelError> {
    if true_class >= logits.len() {
        return Err(ModelError::LabelOutOfRange {
            label: true_class,
            num_classes: logits.len(),
        });
    }
    let probs = softmax(logits);
    let loss = -probs[true_class].max(f64::MIN_POSITIVE).ln();
    let mut grad = probs;
    grad[true_class] -= 1.0;
    Ok((loss, grad))
}

/// In-memory training set: preprocessed features (and mirrored twins when
/// flip augmentation is on) with class labels.
#[derive(Clone, Debug, Default)]
pub struct FeatureSet {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    /// Features of the horizontally flipped images, same order and labels.
    pub flipped: Option<Vec<Vec<f64>>>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Load and preprocess one split of a dataset. `with_flipped` also
/// preprocesses the mirror of every image (used by flip augmentation).
pub fn load_features(
    manifest: &DatasetManifest,
    base_dir: &Path,
    split: Split,
    label_set: &str,
    input_side: usize,
    with_flipped: bool,
) -> Result<FeatureSet, ModelError> {
    let mut set = FeatureSet {
        flipped: with_flipped.then(Vec::new),
        ..Default::default()
    };
    for entry in manifest.entries_in(split) {
        let sample = load_sample(entry, base_dir)?;
        let label = *sample.label_ids.get(label_set).ok_or_else(|| {
            ModelError::InvalidConfig {
                reason: format!("manifest entries carry no label set named {label_set:?}"),
            }
        })?;
        set.features.push(preprocess(&sample.pixels, input_side));
        set.labels.push(label);
        if let Some(flipped) = &mut set.flipped {
            flipped.push(preprocess(&hflip(&sample.pixels), input_side));
        }
    }
    Ok(set)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    /// Samples consumed this epoch (doubled by flip augmentation).
    pub samples: usize,
    /// Mean per-sample loss over the epoch.
    pub train_loss: f64,
    /// Accuracy on the validation set, percent; absent without one.
    pub val_accuracy_pct: Option<f64>,
}

struct GradientBuffers {
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl GradientBuffers {
    fn zeros_like(model: &Model) -> Self {
        Self {
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }

    fn clear(&mut self) {
        for buf in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            buf.iter_mut().for_each(|v| *v = 0.0);
        }
    }
}

/// Accumulate gradients for one sample into `grads`; returns the loss.
fn backprop(
    model: &Model,
    features: &[f64],
    label: usize,
    rng: &mut ChaCha8Rng,
    grads: &mut GradientBuffers,
) -> Result<f64, ModelError> {
    let fwd = model.forward_train(features, rng)?;
    let (loss, dlogits) = softmax_loss(&fwd.logits, label)?;

    let hidden_n = model.hidden_len();
    for (c, &dl) in dlogits.iter().enumerate() {
        grads.b2[c] += dl;
        let row = &mut grads.w2[c * hidden_n..(c + 1) * hidden_n];
        for (g, &h) in row.iter_mut().zip(&fwd.hidden) {
            *g += dl * h;
        }
    }

    // d(loss)/d(hidden) through W2, the dropout mask, and the relu gate.
    // fwd.hidden > 0 iff the unit survived dropout with a positive
    // pre-activation, which is exactly when gradient flows.
    let mut dhidden = vec![0.0; hidden_n];
    for (c, &dl) in dlogits.iter().enumerate() {
        let row = &model.w2[c * hidden_n..(c + 1) * hidden_n];
        for (dh, &w) in dhidden.iter_mut().zip(row) {
            *dh += dl * w;
        }
    }
    let input_n = model.input_len();
    for (j, dh) in dhidden.iter_mut().enumerate() {
        *dh *= if fwd.hidden[j] > 0.0 { fwd.mask[j] } else { 0.0 };
        if *dh != 0.0 {
            grads.b1[j] += *dh;
            let row = &mut grads.w1[j * input_n..(j + 1) * input_n];
            for (g, &x) in row.iter_mut().zip(features) {
                *g += *dh * x;
            }
        }
    }
    Ok(loss)
}

/// Mini-batch SGD with momentum over the feature set. Per-epoch order is a
/// seeded shuffle; with flip augmentation every batch is doubled with the
/// mirrored twins under the same labels. History records per-epoch train
/// loss (batch-mean averaged) and validation accuracy. Deterministic given
/// the seeds.
pub fn train(
    model: &mut Model,
    data: &FeatureSet,
    validation: Option<&FeatureSet>,
    cfg: &TrainConfig,
) -> Result<Vec<EpochStats>, ModelError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(ModelError::EmptyTrainingSet);
    }
    for &label in &data.labels {
        if label >= model.config.num_classes {
            return Err(ModelError::LabelOutOfRange {
                label,
                num_classes: model.config.num_classes,
            });
        }
    }
    if cfg.hflip_augment && data.flipped.is_none() {
        return Err(ModelError::InvalidConfig {
            reason: "hflip_augment requires a feature set loaded with flipped twins".into(),
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut velocity = GradientBuffers::zeros_like(model);
    velocity.clear();
    let mut grads = GradientBuffers::zeros_like(model);
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..data.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut samples = 0usize;
        for (batch_idx, batch) in order.chunks(cfg.batch_size).enumerate() {
            grads.clear();
            let mut batch_samples = 0usize;
            for &i in batch {
                loss_sum += backprop(model, &data.features[i], data.labels[i], &mut rng, &mut grads)?;
                batch_samples += 1;
                if cfg.hflip_augment {
                    let flipped = data.flipped.as_ref().expect("checked above");
                    loss_sum +=
                        backprop(model, &flipped[i], data.labels[i], &mut rng, &mut grads)?;
                    batch_samples += 1;
                }
            }
            samples += batch_samples;
            let scale = 1.0 / batch_samples as f64;
            let lr = cfg.learning_rate;
            for (w, (v, g)) in [
                (&mut model.w1, (&mut velocity.w1, &grads.w1)),
                (&mut model.b1, (&mut velocity.b1, &grads.b1)),
                (&mut model.w2, (&mut velocity.w2, &grads.w2)),
                (&mut model.b2, (&mut velocity.b2, &grads.b2)),
            ] {
                for ((w_i, v_i), g_i) in w.iter_mut().zip(v.iter_mut()).zip(g) {
                    *v_i = cfg.momentum * *v_i - lr * g_i * scale;
                    *w_i += *v_i;
                }
            }
            if !loss_sum.is_finite() || !model.parameters_finite() {
                return Err(ModelError::Diverged {
                    epoch,
                    batch: batch_idx,
                });
            }
        }

        let val_accuracy_pct = match validation {
            Some(val) if !val.is_empty() => Some(evaluate_accuracy(model, val)?),
            _ => None,
        };
        history.push(EpochStats {
            epoch,
            samples,
            train_loss: loss_sum / samples as f64,
            val_accuracy_pct,
        });
    }
    Ok(history)
}

/// Percent of samples whose argmax logit matches the label.
pub fn evaluate_accuracy(model: &Model, data: &FeatureSet) -> Result<f64, ModelError> {
    let mut correct = 0usize;
    for (features, &label) in data.features.iter().zip(&data.labels) {
        let logits = model.forward_eval(features)?;
        if argmax(&logits) == label {
            correct += 1;
        }
    }
    Ok(100.0 * correct as f64 / data.len() as f64)
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Class distribution with the top-2 confidence gate.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionResult {
    pub probs: Vec<f64>,
    pub top_label: usize,
    /// Highest probability divided by the runner-up.
    pub confidence_ratio: f64,
    /// True exactly when `confidence_ratio > 2`.
    pub high_confidence: bool,
}

impl PredictionResult {
    pub fn from_probs(probs: Vec<f64>) -> Self {
        let top_label = argmax(&probs);
        let mut second = f64::NEG_INFINITY;
        for (i, &p) in probs.iter().enumerate() {
            if i != top_label && p > second {
                second = p;
            }
        }
        let confidence_ratio = probs[top_label] / second;
        Self {
            top_label,
            confidence_ratio,
            high_confidence: confidence_ratio > 2.0,
            probs,
        }
    }
}

/// Evaluation-mode prediction on raw image pixels.
pub fn predict(model: &Model, pixels: &ImageBuffer) -> Result<PredictionResult, ModelError> {
    let features = preprocess(pixels, model.config.input_side);
    predict_features(model, &features)
}

pub fn predict_features(model: &Model, features: &[f64]) -> Result<PredictionResult, ModelError> {
    let logits = model.forward_eval(features)?;
    Ok(PredictionResult::from_probs(softmax(&logits)))
}

/// Model container: magic `PFNET1`, little-endian header
/// (input_side, hidden, classes as u32; dropout_p as f64; seed as u64),
/// then the parameter blocks (w1, b1, w2, b2) row-major as f64 bits.
pub fn save_model(model: &Model, path: &Path) -> Result<(), ModelError> {
    let io = |source: std::io::Error| ModelError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&(model.config.input_side as u32).to_le_bytes());
    out.extend_from_slice(&(model.config.hidden_units as u32).to_le_bytes());
    out.extend_from_slice(&(model.config.num_classes as u32).to_le_bytes());
    out.extend_from_slice(&model.config.dropout_p.to_le_bytes());
    out.extend_from_slice(&model.config.seed.to_le_bytes());
    for block in [&model.w1, &model.b1, &model.w2, &model.b2] {
        for value in block.iter() {
            out.extend_from_slice(&value.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path).map_err(io)?;
    file.write_all(&out).map_err(io)
}

pub fn load_model(path: &Path) -> Result<Model, ModelError> {
    let io = |source: std::io::Error| ModelError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .map_err(io)?
        .read_to_end(&mut bytes)
        .map_err(io)?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, n: usize| -> Result<&[u8], ModelError> {
        let slice = bytes
            .get(*cursor..*cursor + n)
            .ok_or_else(|| ModelError::Corrupt {
                reason: format!("truncated at byte {cursor}"),
            })?;
        *cursor += n;
        Ok(slice)
    };
    let magic = take(&mut cursor, 6)?;
    if magic != MODEL_MAGIC {
        return Err(ModelError::Corrupt {
            reason: format!("bad magic {:?}", String::from_utf8_lossy(magic)),
        });
    }
    let read_u32 = |cursor: &mut usize| -> Result<usize, ModelError> {
        Ok(u32::from_le_bytes(take(cursor, 4)?.try_into().unwrap()) as usize)
    };
    let input_side = read_u32(&mut cursor)?;
    let hidden_units = read_u32(&mut cursor)?;
    let num_classes = read_u32(&mut cursor)?;
    let dropout_p = f64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
    let seed = u64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap());
    let config = ModelConfig {
        input_side,
        hidden_units,
        num_classes,
        dropout_p,
        seed,
    };
    config.validate().map_err(|e| ModelError::Corrupt {
        reason: e.to_string(),
    })?;
    let mut read_block = |len: usize| -> Result<Vec<f64>, ModelError> {
        let mut block = Vec::with_capacity(len);
        for _ in 0..len {
            block.push(f64::from_le_bytes(take(&mut cursor, 8)?.try_into().unwrap()));
        }
        Ok(block)
    };
    let input = config.input_len();
    let model = Model {
        w1: read_block(hidden_units * input)?,
        b1: read_block(hidden_units)?,
        w2: read_block(num_classes * hidden_units)?,
        b2: read_block(num_classes)?,
        config,
    };
    if cursor != bytes.len() {
        return Err(ModelError::Corrupt {
            reason: format!("{} trailing bytes", bytes.len() - cursor),
        });
    }
    Ok(model)
}

/// Training history rows as CSV (`epoch,samples,train_loss,val_accuracy`).
pub fn format_history_csv(history: &[EpochStats]) -> String {
    let mut out = String::from("epoch,samples,train_loss,val_accuracy\n");
    for row in history {
        let val = row
            .val_accuracy_pct
            .map(|v| v.to_string())
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.epoch, row.samples, row.train_loss, val
        ));
    }
    out
}
