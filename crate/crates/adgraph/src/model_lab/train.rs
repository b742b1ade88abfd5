//! Deterministic minibatch training with momentum.
//!
//! A stratified validation slice is carved out up front; after every
//! epoch the validation loss decides the best parameter snapshot, which
//! is restored at the end. Training is single threaded and fully
//! determined by the seed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use thiserror::Error;

use super::model::{Grads, TinyClassifier};
use super::vocab::Vocab;
use crate::datasets::{PairExample, TextExample};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set has no examples")]
    Empty,
    #[error("training set is single-class (all labels {0})")]
    SingleClass(u8),
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub momentum: f64,
    pub val_fraction: f64,
    pub dim: usize,
    pub hidden: usize,
    pub min_freq: usize,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            epochs: 10,
            batch: 32,
            lr: 0.1,
            momentum: 0.9,
            val_fraction: 0.05,
            dim: 32,
            hidden: 64,
            min_freq: 1,
            seed: 303,
        }
    }
}

/// A tokenized example: one id sequence, or two in pair mode.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub ids_a: Vec<u32>,
    pub ids_b: Option<Vec<u32>>,
    pub label: u8,
}

#[derive(Debug, Clone, Serialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub val_accuracy: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
    pub vocab_size: usize,
    pub param_count: usize,
    pub train_examples: usize,
    pub val_examples: usize,
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: TinyClassifier,
    pub history: TrainHistory,
    /// Indices (into the input slice) of the validation examples.
    pub val_indices: Vec<usize>,
}

struct Velocity {
    emb: Vec<f64>,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl Velocity {
    fn zeros(model: &TinyClassifier) -> Velocity {
        Velocity {
            emb: vec![0.0; model.emb.len()],
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }
}

fn mean_loss(model: &TinyClassifier, examples: &[&Encoded]) -> f64 {
    if examples.is_empty() {
        return f64::NAN;
    }
    let mut grads = Grads::zeros_like(model);
    let total: f64 = examples
        .iter()
        .map(|ex| {
            grads.emb.clear();
            model.loss_and_grads(&ex.ids_a, ex.ids_b.as_deref(), ex.label, &mut grads)
        })
        .sum();
    total / examples.len() as f64
}

fn accuracy(model: &TinyClassifier, examples: &[&Encoded]) -> f64 {
    if examples.is_empty() {
        return f64::NAN;
    }
    let correct = examples
        .iter()
        .filter(|ex| {
            let score = model.score(&ex.ids_a, ex.ids_b.as_deref());
            (score >= 0.5) == (ex.label == 1)
        })
        .count();
    correct as f64 / examples.len() as f64
}

/// Splits example indices into (train, validation), stratified by
/// label. Each class keeps at least one training example; classes with
/// a single example contribute nothing to validation.
fn carve_validation(
    labels: &[u8],
    fraction: f64,
    rng: &mut ChaCha20Rng,
) -> (Vec<usize>, Vec<usize>) {
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> =
            (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        if fraction <= 0.0 || idx.len() < 2 {
            train.extend(idx);
            continue;
        }
        idx.shuffle(rng);
        let want = ((idx.len() as f64 * fraction).floor() as usize)
            .max(1)
            .min(idx.len() - 1);
        val.extend(idx.drain(..want));
        train.extend(idx);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Trains on pre-encoded examples with an already-built model.
pub fn train_encoded(
    mut model: TinyClassifier,
    examples: &[Encoded],
    opts: &TrainOptions,
) -> Result<TrainOutcome, TrainError> {
    if examples.is_empty() {
        return Err(TrainError::Empty);
    }
    let labels: Vec<u8> = examples.iter().map(|e| e.label).collect();
    if labels.iter().all(|&l| l == labels[0]) {
        return Err(TrainError::SingleClass(labels[0]));
    }

    let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
    let (train_idx, val_idx) = carve_validation(&labels, opts.val_fraction, &mut rng);
    let train_set: Vec<&Encoded> = train_idx.iter().map(|&i| &examples[i]).collect();
    let val_set: Vec<&Encoded> = val_idx.iter().map(|&i| &examples[i]).collect();
    let train_labels: Vec<u8> = train_idx.iter().map(|&i| labels[i]).collect();
    if train_labels.iter().all(|&l| l == train_labels[0]) {
        return Err(TrainError::SingleClass(train_labels[0]));
    }

    let mut velocity = Velocity::zeros(&model);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best: Option<(f64, usize, TinyClassifier)> = None;
    let mut history = Vec::with_capacity(opts.epochs);

    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(opts.batch.max(1)) {
            let mut grads = Grads::zeros_like(&model);
            let mut batch_loss = 0.0;
            for &i in chunk {
                let ex = train_set[i];
                batch_loss +=
                    model.loss_and_grads(&ex.ids_a, ex.ids_b.as_deref(), ex.label, &mut grads);
            }
            epoch_loss += batch_loss;
            let scale = 1.0 / chunk.len() as f64;

            // v = mu*v - lr*g ; w += v, applied blockwise.
            let mu = opts.momentum;
            let lr = opts.lr;
            let apply = |w: &mut [f64], v: &mut [f64], g: &[f64]| {
                for i in 0..w.len() {
                    v[i] = mu * v[i] - lr * g[i] * scale;
                    w[i] += v[i];
                }
            };
            apply(&mut model.w1, &mut velocity.w1, &grads.w1);
            apply(&mut model.b1, &mut velocity.b1, &grads.b1);
            apply(&mut model.w2, &mut velocity.w2, &grads.w2);
            apply(&mut model.b2, &mut velocity.b2, &grads.b2);
            // Embedding velocities decay everywhere; fresh gradient is
            // sparse.
            for v in velocity.emb.iter_mut() {
                *v *= mu;
            }
            let d = model.dim;
            for (&tok, row) in &grads.emb {
                let base = tok as usize * d;
                for j in 0..d {
                    velocity.emb[base + j] -= lr * row[j] * scale;
                }
            }
            for (w, v) in model.emb.iter_mut().zip(&velocity.emb) {
                *w += v;
            }
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let (val_loss, val_accuracy) = if val_set.is_empty() {
            (None, None)
        } else {
            (Some(mean_loss(&model, &val_set)), Some(accuracy(&model, &val_set)))
        };
        history.push(EpochStats { epoch, train_loss, val_loss, val_accuracy });

        // Best snapshot by validation loss; strict improvement keeps
        // the earliest epoch on ties. Without validation, keep latest.
        match val_loss {
            Some(vl) => {
                if best.as_ref().map_or(true, |(b, _, _)| vl < *b) {
                    best = Some((vl, epoch, model.clone()));
                }
            }
            None => best = Some((f64::NAN, epoch, model.clone())),
        }
    }

    let (_, best_epoch, best_model) = best.expect("at least one epoch ran");
    let history = TrainHistory {
        epochs: history,
        best_epoch,
        vocab_size: best_model.vocab.len(),
        param_count: best_model.param_count(),
        train_examples: train_set.len(),
        val_examples: val_set.len(),
    };
    Ok(TrainOutcome { model: best_model, history, val_indices: val_idx })
}

pub fn encode_text_examples(vocab: &Vocab, examples: &[TextExample]) -> Vec<Encoded> {
    examples
        .iter()
        .map(|e| Encoded { ids_a: vocab.encode(&e.text), ids_b: None, label: e.label })
        .collect()
}

pub fn encode_pair_examples(vocab: &Vocab, examples: &[PairExample]) -> Vec<Encoded> {
    examples
        .iter()
        .map(|e| Encoded {
            ids_a: vocab.encode(&e.text_a),
            ids_b: Some(vocab.encode(&e.text_b)),
            label: e.label,
        })
        .collect()
}

/// Vocabulary from the training texts, a fresh model, then training.
pub fn train_text(
    examples: &[TextExample],
    opts: &TrainOptions,
) -> Result<TrainOutcome, TrainError> {
    let vocab = Vocab::build(examples.iter().map(|e| e.text.as_str()), opts.min_freq);
    let model = TinyClassifier::new(vocab.clone(), opts.dim, opts.hidden, false, opts.seed);
    train_encoded(model, &encode_text_examples(&vocab, examples), opts)
}

pub fn train_pair(
    examples: &[PairExample],
    opts: &TrainOptions,
) -> Result<TrainOutcome, TrainError> {
    let vocab = Vocab::build(
        examples
            .iter()
            .flat_map(|e| [e.text_a.as_str(), e.text_b.as_str()]),
        opts.min_freq,
    );
    let model = TinyClassifier::new(vocab.clone(), opts.dim, opts.hidden, true, opts.seed);
    train_encoded(model, &encode_pair_examples(&vocab, examples), opts)
}
