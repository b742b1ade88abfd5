//! A deliberately small text classifier: mean-pooled token embeddings,
//! an optional tanh hidden layer, and a two-way softmax head. Pair
//! inputs are encoded as `[a, b, |a - b|]` over the pooled vectors.
//!
//! Everything is plain `f64` with hand-written forward and backward
//! passes, so gradients with respect to parameters (training) and to
//! the embedded inputs (attribution) are exact and testable.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::vocab::{Vocab, PAD_ID};

#[derive(Debug, Clone, PartialEq)]
pub struct TinyClassifier {
    pub vocab: Vocab,
    pub dim: usize,
    /// Hidden width; 0 selects a purely linear head.
    pub hidden: usize,
    /// Pair mode: inputs are two texts.
    pub pair: bool,
    /// `vocab.len() x dim`, row-major.
    pub emb: Vec<f64>,
    /// `feat_dim() x hidden`, row-major; empty when `hidden == 0`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// `hidden x 2` (or `feat_dim() x 2` when linear), row-major.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Dense gradients for the parameter blocks; embedding gradients stay
/// sparse because a batch touches few rows.
#[derive(Debug, Default)]
pub struct Grads {
    pub emb: HashMap<u32, Vec<f64>>,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Grads {
    pub fn zeros_like(model: &TinyClassifier) -> Grads {
        Grads {
            emb: HashMap::new(),
            w1: vec![0.0; model.w1.len()],
            b1: vec![0.0; model.b1.len()],
            w2: vec![0.0; model.w2.len()],
            b2: vec![0.0; model.b2.len()],
        }
    }
}

pub fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e = [(logits[0] - m).exp(), (logits[1] - m).exp()];
    let z = e[0] + e[1];
    [e[0] / z, e[1] / z]
}

fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

impl TinyClassifier {
    pub fn new(vocab: Vocab, dim: usize, hidden: usize, pair: bool, seed: u64) -> TinyClassifier {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let feat = if pair { 3 * dim } else { dim };
        let mut uniform = |n: usize, fan_in: usize| -> Vec<f64> {
            let s = 1.0 / (fan_in.max(1) as f64).sqrt();
            (0..n).map(|_| rng.gen::<f64>() * 2.0 * s - s).collect()
        };
        let emb = uniform(vocab.len() * dim, dim);
        let (w1, b1, w2) = if hidden > 0 {
            let w1 = uniform(feat * hidden, feat);
            let w2 = uniform(hidden * 2, hidden);
            (w1, vec![0.0; hidden], w2)
        } else {
            (Vec::new(), Vec::new(), uniform(feat * 2, feat))
        };
        TinyClassifier { vocab, dim, hidden, pair, emb, w1, b1, w2, b2: vec![0.0; 2] }
    }

    pub fn feat_dim(&self) -> usize {
        if self.pair { 3 * self.dim } else { self.dim }
    }

    pub fn param_count(&self) -> usize {
        self.emb.len() + self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn embedding_row(&self, id: u32) -> &[f64] {
        let d = self.dim;
        &self.emb[id as usize * d..(id as usize + 1) * d]
    }

    /// Embedding vectors for a token sequence.
    pub fn embed(&self, ids: &[u32]) -> Vec<Vec<f64>> {
        ids.iter().map(|&id| self.embedding_row(id).to_vec()).collect()
    }

    /// Pooling mask: padding tokens are excluded from the mean.
    pub fn keep_mask(ids: &[u32]) -> Vec<bool> {
        ids.iter().map(|&id| id != PAD_ID).collect()
    }

    /// Mean over kept positions; all-masked input pools to zeros.
    pub fn pool(&self, vectors: &[Vec<f64>], keep: &[bool]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut m = 0usize;
        for (vec, &k) in vectors.iter().zip(keep) {
            if k {
                m += 1;
                for (o, v) in out.iter_mut().zip(vec) {
                    *o += v;
                }
            }
        }
        if m > 0 {
            for o in out.iter_mut() {
                *o /= m as f64;
            }
        }
        out
    }

    fn features(&self, pa: &[f64], pb: Option<&[f64]>) -> Vec<f64> {
        match pb {
            None => pa.to_vec(),
            Some(pb) => {
                let mut f = Vec::with_capacity(3 * self.dim);
                f.extend_from_slice(pa);
                f.extend_from_slice(pb);
                for (a, b) in pa.iter().zip(pb) {
                    f.push((a - b).abs());
                }
                f
            }
        }
    }

    /// Forward from a feature vector; returns logits and the hidden
    /// activations needed for backprop (empty when linear).
    fn head(&self, f: &[f64]) -> ([f64; 2], Vec<f64>, Vec<f64>) {
        if self.hidden == 0 {
            let mut logits = [self.b2[0], self.b2[1]];
            for (i, &x) in f.iter().enumerate() {
                logits[0] += x * self.w2[i * 2];
                logits[1] += x * self.w2[i * 2 + 1];
            }
            (logits, Vec::new(), Vec::new())
        } else {
            let h = self.hidden;
            let mut pre = self.b1.clone();
            for (i, &x) in f.iter().enumerate() {
                let row = &self.w1[i * h..(i + 1) * h];
                for (p, &w) in pre.iter_mut().zip(row) {
                    *p += x * w;
                }
            }
            let act: Vec<f64> = pre.iter().map(|&p| p.tanh()).collect();
            let mut logits = [self.b2[0], self.b2[1]];
            for (j, &a) in act.iter().enumerate() {
                logits[0] += a * self.w2[j * 2];
                logits[1] += a * self.w2[j * 2 + 1];
            }
            (logits, pre, act)
        }
    }

    /// Logits from already-embedded inputs (the attribution path, where
    /// interpolated embeddings are free variables).
    pub fn logits_from_embeddings(
        &self,
        embs_a: &[Vec<f64>],
        keep_a: &[bool],
        embs_b: Option<(&[Vec<f64>], &[bool])>,
    ) -> [f64; 2] {
        let pa = self.pool(embs_a, keep_a);
        let pb = embs_b.map(|(e, k)| self.pool(e, k));
        let f = self.features(&pa, pb.as_deref());
        self.head(&f).0
    }

    pub fn logits(&self, ids_a: &[u32], ids_b: Option<&[u32]>) -> [f64; 2] {
        let ea = self.embed(ids_a);
        let ka = TinyClassifier::keep_mask(ids_a);
        match ids_b {
            None => self.logits_from_embeddings(&ea, &ka, None),
            Some(b) => {
                let eb = self.embed(b);
                let kb = TinyClassifier::keep_mask(b);
                self.logits_from_embeddings(&ea, &ka, Some((&eb, &kb)))
            }
        }
    }

    /// Probability of the positive class (index 1).
    pub fn score(&self, ids_a: &[u32], ids_b: Option<&[u32]>) -> f64 {
        softmax2(self.logits(ids_a, ids_b))[1]
    }

    /// Gradient of the feature vector pulled back onto the two pooled
    /// inputs: `df` splits into `dpa`, `dpb` with the `|a-b|` channel
    /// routed through the sign (zero subgradient at zero).
    fn split_feature_grad(
        &self,
        df: &[f64],
        pa: &[f64],
        pb: Option<&[f64]>,
    ) -> (Vec<f64>, Option<Vec<f64>>) {
        match pb {
            None => (df.to_vec(), None),
            Some(pb) => {
                let d = self.dim;
                let mut dpa = df[..d].to_vec();
                let mut dpb = df[d..2 * d].to_vec();
                for j in 0..d {
                    let s = sign0(pa[j] - pb[j]);
                    dpa[j] += s * df[2 * d + j];
                    dpb[j] -= s * df[2 * d + j];
                }
                (dpa, Some(dpb))
            }
        }
    }

    /// Cross-entropy loss for one example, accumulating parameter
    /// gradients into `grads` (unscaled; the caller averages).
    pub fn loss_and_grads(
        &self,
        ids_a: &[u32],
        ids_b: Option<&[u32]>,
        label: u8,
        grads: &mut Grads,
    ) -> f64 {
        let ea = self.embed(ids_a);
        let ka = TinyClassifier::keep_mask(ids_a);
        let pa = self.pool(&ea, &ka);
        let (eb, kb) = match ids_b {
            Some(b) => (Some(self.embed(b)), Some(TinyClassifier::keep_mask(b))),
            None => (None, None),
        };
        let pb = eb.as_ref().map(|e| self.pool(e, kb.as_ref().unwrap()));
        let f = self.features(&pa, pb.as_deref());
        let (logits, pre, act) = self.head(&f);
        let p = softmax2(logits);
        let loss = -p[label as usize].max(1e-300).ln();

        let mut dz = [p[0], p[1]];
        dz[label as usize] -= 1.0;

        let df: Vec<f64> = if self.hidden == 0 {
            for (i, &x) in f.iter().enumerate() {
                grads.w2[i * 2] += x * dz[0];
                grads.w2[i * 2 + 1] += x * dz[1];
            }
            grads.b2[0] += dz[0];
            grads.b2[1] += dz[1];
            (0..f.len())
                .map(|i| self.w2[i * 2] * dz[0] + self.w2[i * 2 + 1] * dz[1])
                .collect()
        } else {
            let h = self.hidden;
            let mut dpre = vec![0.0; h];
            for j in 0..h {
                grads.w2[j * 2] += act[j] * dz[0];
                grads.w2[j * 2 + 1] += act[j] * dz[1];
                let dh = self.w2[j * 2] * dz[0] + self.w2[j * 2 + 1] * dz[1];
                dpre[j] = dh * (1.0 - pre[j].tanh().powi(2));
            }
            grads.b2[0] += dz[0];
            grads.b2[1] += dz[1];
            let mut df = vec![0.0; f.len()];
            for (i, &x) in f.iter().enumerate() {
                let row = &self.w1[i * h..(i + 1) * h];
                let grow = &mut grads.w1[i * h..(i + 1) * h];
                let mut acc = 0.0;
                for j in 0..h {
                    grow[j] += x * dpre[j];
                    acc += row[j] * dpre[j];
                }
                df[i] = acc;
            }
            for j in 0..h {
                grads.b1[j] += dpre[j];
            }
            df
        };

        let (dpa, dpb) = self.split_feature_grad(&df, &pa, pb.as_deref());
        let scatter = |ids: &[u32], keep: &[bool], dpool: &[f64], grads: &mut Grads| {
            let m = keep.iter().filter(|&&k| k).count();
            if m == 0 {
                return;
            }
            let scale = 1.0 / m as f64;
            for (&id, &k) in ids.iter().zip(keep) {
                if !k {
                    continue;
                }
                let row = grads.emb.entry(id).or_insert_with(|| vec![0.0; self.dim]);
                for (r, &g) in row.iter_mut().zip(dpool) {
                    *r += g * scale;
                }
            }
        };
        scatter(ids_a, &ka, &dpa, grads);
        if let (Some(b), Some(dpb)) = (ids_b, dpb) {
            scatter(b, kb.as_ref().unwrap(), &dpb, grads);
        }
        loss
    }

    /// Value of the target output and its gradient with respect to
    /// every embedded input position. `prob` selects the softmax
    /// probability instead of the raw logit.
    #[allow(clippy::type_complexity)]
    pub fn input_gradients(
        &self,
        embs_a: &[Vec<f64>],
        keep_a: &[bool],
        embs_b: Option<(&[Vec<f64>], &[bool])>,
        target: usize,
        prob: bool,
    ) -> (f64, Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let pa = self.pool(embs_a, keep_a);
        let pb = embs_b.map(|(e, k)| self.pool(e, k));
        let f = self.features(&pa, pb.as_deref());
        let (logits, pre, _act) = self.head(&f);
        let p = softmax2(logits);
        let value = if prob { p[target] } else { logits[target] };

        // dF/dlogits: one-hot for a logit target, softmax Jacobian row
        // for a probability target.
        let mut dlogits = [0.0; 2];
        if prob {
            for j in 0..2 {
                let delta = if j == target { 1.0 } else { 0.0 };
                dlogits[j] = p[target] * (delta - p[j]);
            }
        } else {
            dlogits[target] = 1.0;
        }

        let df: Vec<f64> = if self.hidden == 0 {
            (0..f.len())
                .map(|i| self.w2[i * 2] * dlogits[0] + self.w2[i * 2 + 1] * dlogits[1])
                .collect()
        } else {
            let h = self.hidden;
            let mut dpre = vec![0.0; h];
            for j in 0..h {
                let dh = self.w2[j * 2] * dlogits[0] + self.w2[j * 2 + 1] * dlogits[1];
                dpre[j] = dh * (1.0 - pre[j].tanh().powi(2));
            }
            (0..f.len())
                .map(|i| {
                    let row = &self.w1[i * h..(i + 1) * h];
                    row.iter().zip(&dpre).map(|(w, d)| w * d).sum()
                })
                .collect()
        };

        let (dpa, dpb) = self.split_feature_grad(&df, &pa, pb.as_deref());
        let spread = |keep: &[bool], dpool: &[f64], dim: usize| -> Vec<Vec<f64>> {
            let m = keep.iter().filter(|&&k| k).count();
            keep.iter()
                .map(|&k| {
                    if k && m > 0 {
                        dpool.iter().map(|&g| g / m as f64).collect()
                    } else {
                        vec![0.0; dim]
                    }
                })
                .collect()
        };
        let ga = spread(keep_a, &dpa, self.dim);
        let gb = match (embs_b, dpb) {
            (Some((_, kb)), Some(dpb)) => spread(kb, &dpb, self.dim),
            _ => Vec::new(),
        };
        (value, ga, gb)
    }
}
