//! Classifier evaluation: F1-optimal threshold selection on validation
//! scores, then accuracy, balanced accuracy, and rank-based AUC.

use serde::Serialize;

/// F1 with zero denominators defined as zero.
fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

/// Picks the decision threshold maximizing F1 over the distinct scores
/// (predicting positive at `score >= threshold`); ties prefer the
/// lowest threshold. Returns `(threshold, f1)`.
pub fn pick_threshold(scores: &[f64], labels: &[u8]) -> (f64, f64) {
    assert_eq!(scores.len(), labels.len());
    if scores.is_empty() {
        return (0.5, 0.0);
    }
    let total_pos = labels.iter().filter(|&&l| l == 1).count();
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap());

    let mut best_t = f64::INFINITY;
    let mut best_f1 = -1.0;
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        // Absorb the whole tie group: threshold t includes all of them.
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let f1 = f1_from_counts(tp, fp, total_pos - tp);
        // The sweep visits thresholds in decreasing order, so >= keeps
        // the lowest threshold among F1 ties.
        if f1 >= best_f1 {
            best_f1 = f1;
            best_t = t;
        }
    }
    (best_t, best_f1)
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub examples: usize,
    pub positives: usize,
    pub negatives: usize,
    pub threshold: f64,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub balanced_accuracy: f64,
    /// Rank-based AUC; absent when only one class is present.
    pub auc: Option<f64>,
}

/// Mann-Whitney AUC with midranks for tied scores; `None` when either
/// class is absent.
pub fn auc(scores: &[f64], labels: &[u8]) -> Option<f64> {
    let npos = labels.iter().filter(|&&l| l == 1).count();
    let nneg = labels.len() - npos;
    if npos == 0 || nneg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        // 1-based midrank for positions i..j.
        let midrank = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            if labels[idx] == 1 {
                rank_sum_pos += midrank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (npos as f64) * (npos as f64 + 1.0) / 2.0;
    Some(u / (npos as f64 * nneg as f64))
}

/// Metrics at a fixed threshold (`score >= threshold` predicts 1).
/// Balanced accuracy averages the per-class recalls over the classes
/// actually present.
pub fn evaluate_at(scores: &[f64], labels: &[u8], threshold: f64) -> EvalReport {
    assert_eq!(scores.len(), labels.len());
    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0, 0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= threshold, l == 1) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let positives = tp + fn_;
    let negatives = tn + fp;
    let safe = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let mut recalls = Vec::new();
    if positives > 0 {
        recalls.push(safe(tp, positives));
    }
    if negatives > 0 {
        recalls.push(safe(tn, negatives));
    }
    EvalReport {
        examples: scores.len(),
        positives,
        negatives,
        threshold,
        accuracy: safe(tp + tn, scores.len()),
        precision: safe(tp, tp + fp),
        recall: safe(tp, positives),
        f1: f1_from_counts(tp, fp, fn_),
        balanced_accuracy: if recalls.is_empty() {
            0.0
        } else {
            recalls.iter().sum::<f64>() / recalls.len() as f64
        },
        auc: auc(scores, labels),
    }
}
