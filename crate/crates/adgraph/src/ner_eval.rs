//! Span-match evaluation for NER output.
//!
//! Gold and predicted entities are matched per document in three greedy
//! phases: exact span + category (correct), exact span with a different
//! category (incorrect), then same-category overlap (partial; ties by
//! maximal overlap, then earliest predicted start). Leftover gold is
//! missing, leftover predictions spurious. Every entity is counted
//! exactly once.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::extract::EntityCategory;

/// One gold or predicted entity, in Unicode scalar value offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntity {
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
    pub category: EntityCategory,
    /// Prediction confidence; absent on gold entities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

impl EvalEntity {
    fn overlap(&self, other: &EvalEntity) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        hi.saturating_sub(lo)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    pub correct: u64,
    pub incorrect: u64,
    pub partial: u64,
    pub missing: u64,
    pub spurious: u64,
}

impl MatchCounts {
    pub fn add(&mut self, other: &MatchCounts) {
        self.correct += other.correct;
        self.incorrect += other.incorrect;
        self.partial += other.partial;
        self.missing += other.missing;
        self.spurious += other.spurious;
    }

    pub fn gold_total(&self) -> u64 {
        self.correct + self.incorrect + self.partial + self.missing
    }

    pub fn pred_total(&self) -> u64 {
        self.correct + self.incorrect + self.partial + self.spurious
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchKind {
    Correct,
    Incorrect,
    Partial,
}

/// One matched (gold, pred) pair, by index into the input slices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchPair {
    pub kind: MatchKind,
    pub gold: usize,
    pub pred: usize,
}

#[derive(Debug, Clone, Default)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    /// Unmatched gold indices (missing).
    pub missing: Vec<usize>,
    /// Unmatched pred indices (spurious).
    pub spurious: Vec<usize>,
    pub counts: MatchCounts,
}

/// Greedy phased matching over one document's entities.
pub fn match_entities(gold: &[EvalEntity], pred: &[EvalEntity]) -> MatchResult {
    let mut gold_used = vec![false; gold.len()];
    let mut pred_used = vec![false; pred.len()];
    let mut pairs = Vec::new();

    // Phase 1: exact span and category.
    for (gi, g) in gold.iter().enumerate() {
        if gold_used[gi] {
            continue;
        }
        for (pi, p) in pred.iter().enumerate() {
            if pred_used[pi] {
                continue;
            }
            if g.start == p.start && g.end == p.end && g.category == p.category {
                gold_used[gi] = true;
                pred_used[pi] = true;
                pairs.push(MatchPair { kind: MatchKind::Correct, gold: gi, pred: pi });
                break;
            }
        }
    }

    // Phase 2: exact span, different category.
    for (gi, g) in gold.iter().enumerate() {
        if gold_used[gi] {
            continue;
        }
        for (pi, p) in pred.iter().enumerate() {
            if pred_used[pi] {
                continue;
            }
            if g.start == p.start && g.end == p.end && g.category != p.category {
                gold_used[gi] = true;
                pred_used[pi] = true;
                pairs.push(MatchPair { kind: MatchKind::Incorrect, gold: gi, pred: pi });
                break;
            }
        }
    }

    // Phase 3: same category, overlapping range. Repeatedly take the pair
    // with maximal overlap; ties broken by earliest pred start, then
    // earliest gold start, then index order.
    loop {
        let mut best: Option<(usize, usize, usize)> = None; // (overlap, gi, pi)
        for (gi, g) in gold.iter().enumerate() {
            if gold_used[gi] {
                continue;
            }
            for (pi, p) in pred.iter().enumerate() {
                if pred_used[pi] {
                    continue;
                }
                if g.category != p.category {
                    continue;
                }
                let ov = g.overlap(p);
                if ov == 0 {
                    continue;
                }
                let better = match best {
                    None => true,
                    Some((bov, bgi, bpi)) => {
                        let b = &pred[bpi];
                        ov > bov
                            || (ov == bov
                                && (p.start, g.start, pi, gi)
                                    < (b.start, gold[bgi].start, bpi, bgi))
                    }
                };
                if better {
                    best = Some((ov, gi, pi));
                }
            }
        }
        match best {
            Some((_, gi, pi)) => {
                gold_used[gi] = true;
                pred_used[pi] = true;
                pairs.push(MatchPair { kind: MatchKind::Partial, gold: gi, pred: pi });
            }
            None => break,
        }
    }

    let missing: Vec<usize> = (0..gold.len()).filter(|&i| !gold_used[i]).collect();
    let spurious: Vec<usize> = (0..pred.len()).filter(|&i| !pred_used[i]).collect();

    let mut counts = MatchCounts::default();
    for pair in &pairs {
        match pair.kind {
            MatchKind::Correct => counts.correct += 1,
            MatchKind::Incorrect => counts.incorrect += 1,
            MatchKind::Partial => counts.partial += 1,
        }
    }
    counts.missing = missing.len() as u64;
    counts.spurious = spurious.len() as u64;

    MatchResult { pairs, missing, spurious, counts }
}

/// Splits a document's match result into per-class counts. Correct and
/// partial pairs count toward their category; an incorrect pair counts
/// toward the gold entity's category; missing toward gold's, spurious
/// toward pred's. Summing per-class rows reproduces the document counts.
pub fn per_class_counts(
    gold: &[EvalEntity],
    pred: &[EvalEntity],
    result: &MatchResult,
) -> BTreeMap<EntityCategory, MatchCounts> {
    let mut map: BTreeMap<EntityCategory, MatchCounts> = BTreeMap::new();
    for pair in &result.pairs {
        let cat = match pair.kind {
            MatchKind::Correct | MatchKind::Partial => gold[pair.gold].category,
            MatchKind::Incorrect => gold[pair.gold].category,
        };
        let entry = map.entry(cat).or_default();
        match pair.kind {
            MatchKind::Correct => entry.correct += 1,
            MatchKind::Incorrect => entry.incorrect += 1,
            MatchKind::Partial => entry.partial += 1,
        }
    }
    for &gi in &result.missing {
        map.entry(gold[gi].category).or_default().missing += 1;
    }
    for &pi in &result.spurious {
        map.entry(pred[pi].category).or_default().spurious += 1;
    }
    map
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// True when a denominator was zero and the metric was pinned to 0.
    pub degenerate: bool,
}

/// Scores counts with partial weight `alpha`.
///
/// Default denominators: precision over C+I+P+M, recall over C+I+P+S.
/// `conventional` swaps M and S so precision divides by the prediction
/// count and recall by the gold count.
pub fn score(counts: &MatchCounts, alpha: f64, conventional: bool) -> Scores {
    let num = counts.correct as f64 + alpha * counts.partial as f64;
    let base = (counts.correct + counts.incorrect + counts.partial) as f64;
    let (prec_extra, rec_extra) = if conventional {
        (counts.spurious, counts.missing)
    } else {
        (counts.missing, counts.spurious)
    };
    let prec_den = base + prec_extra as f64;
    let rec_den = base + rec_extra as f64;
    let mut degenerate = false;
    let precision = if prec_den == 0.0 {
        degenerate = true;
        0.0
    } else {
        num / prec_den
    };
    let recall = if rec_den == 0.0 {
        degenerate = true;
        0.0
    } else {
        num / rec_den
    };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Scores { precision, recall, f1, degenerate }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: String,
    pub counts: MatchCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NerReport {
    pub alpha: f64,
    pub conventional: bool,
    pub min_score: f64,
    pub docs: u64,
    pub per_class: Vec<ClassRow>,
    pub overall: ClassRow,
}

/// Micro-averages per-class counts: each class is scored from its summed
/// counts, and the overall row is scored from the grand total.
pub fn micro_average(
    per_class: &BTreeMap<EntityCategory, MatchCounts>,
    alpha: f64,
    conventional: bool,
) -> (Vec<ClassRow>, ClassRow) {
    let mut rows = Vec::new();
    let mut total = MatchCounts::default();
    for (cat, counts) in per_class {
        total.add(counts);
        let s = score(counts, alpha, conventional);
        rows.push(ClassRow {
            class: cat.to_string(),
            counts: *counts,
            precision: s.precision,
            recall: s.recall,
            f1: s.f1,
        });
    }
    let s = score(&total, alpha, conventional);
    let overall = ClassRow {
        class: "overall".to_string(),
        counts: total,
        precision: s.precision,
        recall: s.recall,
        f1: s.f1,
    };
    (rows, overall)
}

/// Evaluates grouped gold/pred entities. Predictions with score below
/// `min_score` are dropped first (missing scores pass the gate).
pub fn evaluate(
    gold: &[EvalEntity],
    pred: &[EvalEntity],
    alpha: f64,
    conventional: bool,
    min_score: f64,
) -> NerReport {
    let mut by_doc: BTreeMap<&str, (Vec<EvalEntity>, Vec<EvalEntity>)> = BTreeMap::new();
    for g in gold {
        by_doc.entry(&g.doc_id).or_default().0.push(g.clone());
    }
    for p in pred {
        if p.score.map_or(true, |s| s >= min_score) {
            by_doc.entry(&p.doc_id).or_default().1.push(p.clone());
        }
    }

    let mut per_class: BTreeMap<EntityCategory, MatchCounts> = BTreeMap::new();
    let docs = by_doc.len() as u64;
    for (_, (g, p)) in by_doc {
        let result = match_entities(&g, &p);
        for (cat, counts) in per_class_counts(&g, &p, &result) {
            per_class.entry(cat).or_default().add(&counts);
        }
    }
    let (rows, overall) = micro_average(&per_class, alpha, conventional);
    NerReport {
        alpha,
        conventional,
        min_score,
        docs,
        per_class: rows,
        overall,
    }
}

/// Reads an entity JSONL file (`{doc_id, start, end, category, score?}`).
pub fn read_entities(path: &Path) -> Result<Vec<EvalEntity>, String> {
    let data = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut out = Vec::new();
    for (idx, line) in data.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let ent: EvalEntity = serde_json::from_str(line)
            .map_err(|e| format!("{} line {}: {e}", path.display(), idx + 1))?;
        if ent.start >= ent.end {
            return Err(format!(
                "{} line {}: empty or inverted span",
                path.display(),
                idx + 1
            ));
        }
        out.push(ent);
    }
    Ok(out)
}

/// Writes the per-class CSV table (one row per class plus overall).
pub fn write_report_csv(path: &Path, report: &NerReport) -> std::io::Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "class,correct,incorrect,partial,missing,spurious,precision,recall,f1")?;
    for row in report.per_class.iter().chain(std::iter::once(&report.overall)) {
        writeln!(
            w,
            "{},{},{},{},{},{},{:.6},{:.6},{:.6}",
            row.class,
            row.counts.correct,
            row.counts.incorrect,
            row.counts.partial,
            row.counts.missing,
            row.counts.spurious,
            row.precision,
            row.recall,
            row.f1
        )?;
    }
    w.flush()
}
