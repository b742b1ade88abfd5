//! Integrated gradients over the embedded inputs.
//!
//! The path integral from a baseline embedding to the real input is
//! approximated with a composite trapezoid rule over `steps` segments
//! (endpoints at half weight). Per position `i`, the raw attribution
//! vector is `a_i = (e_i - e'_i) ⊙ avg_grad_i`; the reported scalar is
//! `sum_j a_ij / ||a_i||_2` (zero when the norm is zero), and the raw
//! sums are checked against the completeness identity
//! `sum_ij a_ij ≈ F(x) - F(x')`, whose residual is the convergence
//! delta.

use thiserror::Error;

use super::model::TinyClassifier;
use super::vocab::PAD_ID;

#[derive(Debug, Error)]
pub enum IgError {
    #[error("non-finite value during attribution (step {0})")]
    NonFinite(usize),
    #[error("ig.steps must be at least 1")]
    ZeroSteps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    /// Every position replaced by the padding token's embedding.
    PadEmbedding,
    /// Every position replaced by the zero vector.
    Zeros,
}

impl std::str::FromStr for Baseline {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pad" => Ok(Baseline::PadEmbedding),
            "zeros" => Ok(Baseline::Zeros),
            other => Err(format!("unknown baseline {other:?} (expected pad or zeros)")),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct IgOptions {
    pub steps: usize,
    pub baseline: Baseline,
    /// Attribute the softmax probability instead of the raw logit.
    pub target_prob: bool,
}

impl Default for IgOptions {
    fn default() -> Self {
        IgOptions { steps: 64, baseline: Baseline::PadEmbedding, target_prob: false }
    }
}

#[derive(Debug, Clone)]
pub struct Attribution {
    /// Normalized per-position scalars for the first (or only) text.
    pub scores_a: Vec<f64>,
    /// Same for the second text of a pair; empty otherwise.
    pub scores_b: Vec<f64>,
    /// Raw per-position attribution sums (completeness terms).
    pub raw_a: Vec<f64>,
    pub raw_b: Vec<f64>,
    /// Target output at the input and at the baseline.
    pub value: f64,
    pub baseline_value: f64,
    /// `|sum(raw) - (value - baseline_value)|`.
    pub convergence_delta: f64,
}

fn baseline_embeddings(
    model: &TinyClassifier,
    len: usize,
    baseline: Baseline,
) -> Vec<Vec<f64>> {
    match baseline {
        Baseline::PadEmbedding => vec![model.embedding_row(PAD_ID).to_vec(); len],
        Baseline::Zeros => vec![vec![0.0; model.dim]; len],
    }
}

fn interpolate(x: &[Vec<f64>], x0: &[Vec<f64>], alpha: f64) -> Vec<Vec<f64>> {
    x.iter()
        .zip(x0)
        .map(|(xi, x0i)| {
            xi.iter()
                .zip(x0i)
                .map(|(&a, &b)| b + alpha * (a - b))
                .collect()
        })
        .collect()
}

fn normalized(raw_vectors: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let mut scores = Vec::with_capacity(raw_vectors.len());
    let mut raws = Vec::with_capacity(raw_vectors.len());
    for a in raw_vectors {
        let sum: f64 = a.iter().sum();
        let norm: f64 = a.iter().map(|&v| v * v).sum::<f64>().sqrt();
        scores.push(if norm == 0.0 { 0.0 } else { sum / norm });
        raws.push(sum);
    }
    (scores, raws)
}

/// Integrated gradients for one (possibly pair) input. The pooling
/// mask always comes from the actual input tokens, so padding stays
/// inert along the whole path.
pub fn integrated_gradients(
    model: &TinyClassifier,
    ids_a: &[u32],
    ids_b: Option<&[u32]>,
    target: usize,
    opts: &IgOptions,
) -> Result<Attribution, IgError> {
    if opts.steps == 0 {
        return Err(IgError::ZeroSteps);
    }
    let ea = model.embed(ids_a);
    let ka = TinyClassifier::keep_mask(ids_a);
    let ba = baseline_embeddings(model, ids_a.len(), opts.baseline);
    let (eb, kb, bb) = match ids_b {
        Some(b) => (
            model.embed(b),
            TinyClassifier::keep_mask(b),
            baseline_embeddings(model, b.len(), opts.baseline),
        ),
        None => (Vec::new(), Vec::new(), Vec::new()),
    };
    let pair = ids_b.is_some();

    let mut avg_a = vec![vec![0.0; model.dim]; ea.len()];
    let mut avg_b = vec![vec![0.0; model.dim]; eb.len()];
    let mut value = 0.0;
    let mut baseline_value = 0.0;
    for t in 0..=opts.steps {
        let alpha = t as f64 / opts.steps as f64;
        // Composite trapezoid: endpoints weighted 1/2.
        let weight = if t == 0 || t == opts.steps { 0.5 } else { 1.0 };
        let xa = interpolate(&ea, &ba, alpha);
        let xb = interpolate(&eb, &bb, alpha);
        let (v, ga, gb) = model.input_gradients(
            &xa,
            &ka,
            if pair { Some((xb.as_slice(), kb.as_slice())) } else { None },
            target,
            opts.target_prob,
        );
        if !v.is_finite() {
            return Err(IgError::NonFinite(t));
        }
        if t == 0 {
            baseline_value = v;
        }
        if t == opts.steps {
            value = v;
        }
        let scale = weight / opts.steps as f64;
        for (acc, g) in avg_a.iter_mut().zip(&ga) {
            for (a, &gi) in acc.iter_mut().zip(g) {
                if !gi.is_finite() {
                    return Err(IgError::NonFinite(t));
                }
                *a += gi * scale;
            }
        }
        for (acc, g) in avg_b.iter_mut().zip(&gb) {
            for (a, &gi) in acc.iter_mut().zip(g) {
                if !gi.is_finite() {
                    return Err(IgError::NonFinite(t));
                }
                *a += gi * scale;
            }
        }
    }

    let raw_vec = |e: &[Vec<f64>], b: &[Vec<f64>], avg: &[Vec<f64>]| -> Vec<Vec<f64>> {
        e.iter()
            .zip(b)
            .zip(avg)
            .map(|((ei, bi), gi)| {
                ei.iter()
                    .zip(bi)
                    .zip(gi)
                    .map(|((&x, &x0), &g)| (x - x0) * g)
                    .collect()
            })
            .collect()
    };
    let (scores_a, raw_a) = normalized(&raw_vec(&ea, &ba, &avg_a));
    let (scores_b, raw_b) = normalized(&raw_vec(&eb, &bb, &avg_b));
    let total: f64 = raw_a.iter().chain(raw_b.iter()).sum();
    let convergence_delta = (total - (value - baseline_value)).abs();
    if !convergence_delta.is_finite() {
        return Err(IgError::NonFinite(opts.steps));
    }
    Ok(Attribution {
        scores_a,
        scores_b,
        raw_a,
        raw_b,
        value,
        baseline_value,
        convergence_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model_lab::model::softmax2;
    use crate::model_lab::vocab::Vocab;

    fn vocab() -> Vocab {
        Vocab::build(["one two three four five [PHONE]"].iter().copied(), 1)
    }

    /// With a linear head and a single token (identity-like pooling),
    /// F is linear in the embedded input, so one trapezoid step is
    /// already exact and completeness holds to rounding error.
    #[test]
    fn linear_model_is_exact_at_one_step() {
        let m = TinyClassifier::new(vocab(), 4, 0, false, 3);
        let ids = vec![2u32];
        let opts = IgOptions { steps: 1, baseline: Baseline::Zeros, target_prob: false };
        let att = integrated_gradients(&m, &ids, None, 1, &opts).unwrap();
        assert!(att.convergence_delta < 1e-12, "delta {}", att.convergence_delta);
        // F(x) - F(0): the zero baseline pools to zeros, so the
        // difference is exactly w2 . pooled(x).
        let want = att.value - att.baseline_value;
        let got: f64 = att.raw_a.iter().sum();
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn multi_token_linear_still_exact() {
        let m = TinyClassifier::new(vocab(), 4, 0, false, 5);
        let ids = vec![2u32, 3, 4];
        let opts = IgOptions { steps: 1, baseline: Baseline::PadEmbedding, target_prob: false };
        let att = integrated_gradients(&m, &ids, None, 1, &opts).unwrap();
        assert!(att.convergence_delta < 1e-12);
    }

    #[test]
    fn completeness_improves_with_steps_on_nonlinear_model() {
        let m = TinyClassifier::new(vocab(), 6, 8, false, 7);
        let ids = vec![2u32, 4, 5];
        let delta_at = |steps: usize| {
            let opts = IgOptions { steps, baseline: Baseline::PadEmbedding, target_prob: true };
            integrated_gradients(&m, &ids, None, 1, &opts)
                .unwrap()
                .convergence_delta
        };
        let coarse = delta_at(4);
        let fine = delta_at(256);
        assert!(fine <= coarse + 1e-12, "coarse {coarse}, fine {fine}");
        assert!(fine < 1e-4, "fine {fine}");
    }

    #[test]
    fn value_and_baseline_match_direct_forward() {
        let m = TinyClassifier::new(vocab(), 4, 3, false, 9);
        let ids = vec![2u32, 3];
        let opts = IgOptions { steps: 8, baseline: Baseline::PadEmbedding, target_prob: true };
        let att = integrated_gradients(&m, &ids, None, 1, &opts).unwrap();
        let p = softmax2(m.logits(&ids, None))[1];
        assert!((att.value - p).abs() < 1e-12);
        // Baseline: every position the pad row; pooling mask still
        // counts the two real positions.
        let ba = vec![m.embedding_row(PAD_ID).to_vec(); 2];
        let ka = TinyClassifier::keep_mask(&ids);
        let bp = softmax2(m.logits_from_embeddings(&ba, &ka, None))[1];
        assert!((att.baseline_value - bp).abs() < 1e-12);
    }

    #[test]
    fn pair_attributions_cover_both_sides() {
        let m = TinyClassifier::new(vocab(), 4, 4, true, 13);
        let a = vec![2u32, 3];
        let b = vec![4u32, 5, 2];
        let opts = IgOptions { steps: 128, baseline: Baseline::PadEmbedding, target_prob: false };
        let att = integrated_gradients(&m, &a, Some(&b), 1, &opts).unwrap();
        assert_eq!(att.scores_a.len(), 2);
        assert_eq!(att.scores_b.len(), 3);
        assert!(att.convergence_delta < 1e-3, "delta {}", att.convergence_delta);
    }

    #[test]
    fn padding_positions_get_zero_attribution() {
        let m = TinyClassifier::new(vocab(), 4, 0, false, 2);
        let ids = vec![2u32, PAD_ID, 3];
        let opts = IgOptions { steps: 4, baseline: Baseline::PadEmbedding, target_prob: false };
        let att = integrated_gradients(&m, &ids, None, 1, &opts).unwrap();
        // Pad position: gradient masked to zero, and (x - x') is zero
        // too under the pad baseline.
        assert_eq!(att.scores_a[1], 0.0);
        assert_eq!(att.raw_a[1], 0.0);
    }

    #[test]
    fn zero_steps_rejected() {
        let m = TinyClassifier::new(vocab(), 4, 0, false, 2);
        let opts = IgOptions { steps: 0, baseline: Baseline::Zeros, target_prob: false };
        assert!(matches!(
            integrated_gradients(&m, &[2], None, 1, &opts),
            Err(IgError::ZeroSteps)
        ));
    }

    /// The averaged path gradient at high resolution must agree with a
    /// central finite difference of the path integral's integrand at a
    /// midpoint; this guards the interpolation plumbing end to end.
    #[test]
    fn path_gradients_match_finite_differences_midpath() {
        let m = TinyClassifier::new(vocab(), 3, 6, false, 21);
        let ids = vec![2u32, 4];
        let ea = m.embed(&ids);
        let ka = TinyClassifier::keep_mask(&ids);
        let ba = baseline_embeddings(&m, ids.len(), Baseline::PadEmbedding);
        let alpha = 0.5;
        let x = interpolate(&ea, &ba, alpha);
        let (_, ga, _) = m.input_gradients(&x, &ka, None, 1, true);
        let eps = 1e-4;
        for pos in 0..x.len() {
            for j in 0..3 {
                let mut up = x.clone();
                up[pos][j] += eps;
                let mut down = x.clone();
                down[pos][j] -= eps;
                let f = |e: &[Vec<f64>]| softmax2(m.logits_from_embeddings(e, &ka, None))[1];
                let numeric = (f(&up) - f(&down)) / (2.0 * eps);
                let got = ga[pos][j];
                assert!(
                    (got - numeric).abs() <= 1e-4 * (1.0 + numeric.abs()),
                    "pos {pos} dim {j}: got {got}, numeric {numeric}"
                );
            }
        }
    }
}
