//! Dataset assembly: component-atomic train/test splitting, pair
//! (relatedness) and single-text (risk) example emission with
//! near-duplicate gating, mask-token prevalence, and paired
//! signed-rank bias reports.

pub mod similarity;
pub mod wilcoxon;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AdRecord;
use crate::extract::{count_mask_tokens, MASK_TOKENS};
use crate::graph::RelatednessGraph;
use similarity::{similar_at_least, Prepared};
use wilcoxon::{wilcoxon_signed_rank, WilcoxonMethod, WilcoxonResult};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("jsonl line {0}: {1}")]
    Jsonl(usize, String),
    #[error("statistics: {0}")]
    Stats(#[from] wilcoxon::WilcoxonError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

impl std::fmt::Display for Split {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// Components with at least this many ads are forced into train so the
/// test split is never dominated by one giant cluster.
pub const GIANT_COMPONENT_MIN: usize = 1001;

#[derive(Debug, Clone)]
pub struct SplitAssignment {
    /// Split per ad id.
    pub assignment: Vec<Split>,
    pub target: f64,
    pub achieved: f64,
    pub train_ads: usize,
    pub test_ads: usize,
    pub train_components: usize,
    pub test_components: usize,
    pub giants_forced: usize,
    pub warning: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitStats {
    pub target: f64,
    pub achieved: f64,
    pub train_ads: usize,
    pub test_ads: usize,
    pub train_components: usize,
    pub test_components: usize,
    pub giants_forced: usize,
    pub warning: Option<String>,
}

impl SplitAssignment {
    pub fn stats(&self) -> SplitStats {
        SplitStats {
            target: self.target,
            achieved: self.achieved,
            train_ads: self.train_ads,
            test_ads: self.test_ads,
            train_components: self.train_components,
            test_components: self.test_components,
            giants_forced: self.giants_forced,
            warning: self.warning.clone(),
        }
    }

    pub fn ads_in(&self, split: Split) -> Vec<u32> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == split)
            .map(|(ad, _)| ad as u32)
            .collect()
    }
}

/// Assigns whole components to train or test. Giant components go to
/// train first (ascending id); the rest are shuffled by `seed` and
/// admitted greedily while train stays within the target ad fraction.
pub fn split_components(graph: &RelatednessGraph, target: f64, seed: u64) -> SplitAssignment {
    let n = graph.node_count as usize;
    let mut giants: Vec<u32> = Vec::new();
    let mut rest: Vec<u32> = Vec::new();
    for (&comp, members) in &graph.component_index {
        if members.len() >= GIANT_COMPONENT_MIN {
            giants.push(comp);
        } else {
            rest.push(comp);
        }
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rest.shuffle(&mut rng);

    let budget = target * n as f64 + 1e-9;
    let mut assignment = vec![Split::Test; n];
    let mut train_ads = 0usize;
    let mut train_components = 0usize;
    let assign_train = |comp: u32, assignment: &mut Vec<Split>, train_ads: &mut usize| {
        for &ad in &graph.component_index[&comp] {
            assignment[ad as usize] = Split::Train;
        }
        *train_ads += graph.component_index[&comp].len();
    };
    for &comp in &giants {
        assign_train(comp, &mut assignment, &mut train_ads);
        train_components += 1;
    }
    for &comp in &rest {
        let size = graph.component_index[&comp].len();
        if train_ads as f64 + size as f64 <= budget {
            assign_train(comp, &mut assignment, &mut train_ads);
            train_components += 1;
        }
    }
    let achieved = if n == 0 { 0.0 } else { train_ads as f64 / n as f64 };
    let warning = if n > 0 && (achieved - target).abs() > 0.05 {
        Some(format!(
            "train fraction {achieved:.4} deviates from target {target:.4} by more than 0.05"
        ))
    } else {
        None
    };
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    SplitAssignment {
        assignment,
        target,
        achieved,
        train_ads,
        test_ads: n - train_ads,
        train_components,
        test_components: graph.component_index.len() - train_components,
        giants_forced: giants.len(),
        warning,
    }
}

pub fn write_split_csv(path: &Path, split: &SplitAssignment) -> Result<(), DatasetError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "ad_id,split")?;
    for (ad, s) in split.assignment.iter().enumerate() {
        writeln!(w, "{ad},{s}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_split_csv(path: &Path, node_count: usize) -> Result<Vec<Split>, DatasetError> {
    let file = std::fs::File::open(path)?;
    let mut assignment = vec![Split::Test; node_count];
    let mut seen = vec![false; node_count];
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i == 0 {
            continue;
        }
        let (ad, split) = line
            .split_once(',')
            .ok_or_else(|| DatasetError::Jsonl(i + 1, "expected ad_id,split".into()))?;
        let ad: usize = ad
            .parse()
            .map_err(|_| DatasetError::Jsonl(i + 1, format!("bad ad id {ad:?}")))?;
        if ad >= node_count {
            return Err(DatasetError::Jsonl(i + 1, format!("ad id {ad} out of range")));
        }
        assignment[ad] = match split {
            "train" => Split::Train,
            "test" => Split::Test,
            other => return Err(DatasetError::Jsonl(i + 1, format!("bad split {other:?}"))),
        };
        seen[ad] = true;
    }
    if let Some(ad) = seen.iter().position(|&s| !s) {
        return Err(DatasetError::Jsonl(0, format!("ad id {ad} missing from split file")));
    }
    Ok(assignment)
}

/// Rebuilds a full assignment (with derived statistics) from a bare
/// per-ad split vector, as read back from a split CSV. Fails when any
/// component straddles the two splits.
pub fn assignment_from_vec(
    graph: &RelatednessGraph,
    assignment: Vec<Split>,
    target: f64,
) -> Result<SplitAssignment, DatasetError> {
    let n = assignment.len();
    if n != graph.node_count as usize {
        return Err(DatasetError::Jsonl(
            0,
            format!("split covers {n} ads but the graph has {}", graph.node_count),
        ));
    }
    let mut train_ads = 0usize;
    let mut train_components = 0usize;
    let mut giants_forced = 0usize;
    for (&comp, members) in &graph.component_index {
        let split = assignment[members[0] as usize];
        if members.iter().any(|&ad| assignment[ad as usize] != split) {
            return Err(DatasetError::Jsonl(
                0,
                format!("component {comp} straddles the train/test boundary"),
            ));
        }
        if split == Split::Train {
            train_ads += members.len();
            train_components += 1;
            if members.len() >= GIANT_COMPONENT_MIN {
                giants_forced += 1;
            }
        }
    }
    let achieved = if n == 0 { 0.0 } else { train_ads as f64 / n as f64 };
    let warning = if n > 0 && (achieved - target).abs() > 0.05 {
        Some(format!(
            "train fraction {achieved:.4} deviates from target {target:.4} by more than 0.05"
        ))
    } else {
        None
    };
    Ok(SplitAssignment {
        assignment,
        target,
        achieved,
        train_ads,
        test_ads: n - train_ads,
        train_components,
        test_components: graph.component_index.len() - train_components,
        giants_forced,
        warning,
    })
}

/// The text a dataset example carries: the masked description when
/// masking ran, otherwise the raw description.
pub fn example_text(rec: &AdRecord) -> (&str, bool) {
    match &rec.masked_description {
        Some(m) => (m.as_str(), false),
        None => (rec.description.as_str(), true),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairExample {
    pub ad_id_a: u32,
    pub ad_id_b: u32,
    pub text_a: String,
    pub text_b: String,
    pub label: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextExample {
    pub ad_id: u32,
    pub text: String,
    pub label: u8,
}

#[derive(Debug, Clone, Copy)]
pub struct OadOptions {
    /// Pairs at or above this similarity are near-duplicates and are
    /// discarded from the positive side.
    pub gate: f64,
    /// Apply the same gate to sampled negatives.
    pub gate_negatives: bool,
    pub seed: u64,
}

impl Default for OadOptions {
    fn default() -> Self {
        OadOptions { gate: 0.5, gate_negatives: false, seed: 202 }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct OadStats {
    pub train_positive: usize,
    pub train_negative: usize,
    pub test_positive: usize,
    pub test_negative: usize,
    pub discarded_similar: usize,
    pub discarded_similar_negatives: usize,
    pub fallback_unmasked_ads: usize,
    pub negatives_exhausted: bool,
}

/// Builds the pair dataset: positives are graph edges whose texts pass
/// the near-duplicate gate, negatives are uniformly sampled non-edges
/// from the same split, matched 1:1 to the positives.
pub fn emit_oad(
    records: &[AdRecord],
    graph: &RelatednessGraph,
    split: &SplitAssignment,
    opts: &OadOptions,
) -> (Vec<PairExample>, Vec<PairExample>, OadStats) {
    let mut stats = OadStats::default();
    let texts: Vec<&str> = records.iter().map(|r| example_text(r).0).collect();
    let prepared: Vec<Prepared> = texts.par_iter().map(|t| Prepared::new(t)).collect();
    let edge_set: HashSet<(u32, u32)> = graph.edges.keys().copied().collect();

    let mut used_ads: BTreeSet<u32> = BTreeSet::new();
    let mut out: Vec<Vec<PairExample>> = vec![Vec::new(), Vec::new()];
    for (si, which) in [Split::Train, Split::Test].into_iter().enumerate() {
        let mut positives: Vec<PairExample> = Vec::new();
        for (&(u, v), _) in &graph.edges {
            if split.assignment[u as usize] != which {
                continue;
            }
            debug_assert_eq!(
                split.assignment[u as usize], split.assignment[v as usize],
                "components must be split-atomic"
            );
            if similar_at_least(&prepared[u as usize], &prepared[v as usize], opts.gate) {
                stats.discarded_similar += 1;
                continue;
            }
            positives.push(PairExample {
                ad_id_a: u,
                ad_id_b: v,
                text_a: texts[u as usize].to_string(),
                text_b: texts[v as usize].to_string(),
                label: 1,
            });
            used_ads.insert(u);
            used_ads.insert(v);
        }

        let ads = split.ads_in(which);
        let needed = positives.len();
        let mut rng = ChaCha20Rng::seed_from_u64(opts.seed);
        rng.set_stream(si as u64);
        let mut negatives: Vec<(u32, u32)> = Vec::with_capacity(needed);
        let m = ads.len();
        let total_pairs = m.saturating_mul(m.saturating_sub(1)) / 2;
        let intra_edges = edge_set
            .iter()
            .filter(|&&(u, _)| split.assignment[u as usize] == which)
            .count();
        let candidates = total_pairs.saturating_sub(intra_edges);
        if needed > 0 && m >= 2 {
            let gate_ok = |a: u32, b: u32, stats: &mut OadStats| {
                if opts.gate_negatives
                    && similar_at_least(&prepared[a as usize], &prepared[b as usize], opts.gate)
                {
                    stats.discarded_similar_negatives += 1;
                    false
                } else {
                    true
                }
            };
            if m <= 1500 || candidates <= needed.saturating_mul(4) {
                // Dense or tiny split: enumerate every non-edge, shuffle,
                // and take what is needed.
                let mut all: Vec<(u32, u32)> = Vec::new();
                for i in 0..m {
                    for j in i + 1..m {
                        let (a, b) = (ads[i], ads[j]);
                        if !edge_set.contains(&(a, b)) {
                            all.push((a, b));
                        }
                    }
                }
                all.shuffle(&mut rng);
                for (a, b) in all {
                    if negatives.len() == needed {
                        break;
                    }
                    if gate_ok(a, b, &mut stats) {
                        negatives.push((a, b));
                    }
                }
            } else {
                let mut chosen: HashSet<(u32, u32)> = HashSet::new();
                let mut attempts = 0usize;
                let max_attempts = needed.saturating_mul(50) + 1000;
                while negatives.len() < needed && attempts < max_attempts {
                    attempts += 1;
                    let i = rng.gen_range(0..m);
                    let j = rng.gen_range(0..m);
                    if i == j {
                        continue;
                    }
                    let (a, b) = (ads[i].min(ads[j]), ads[i].max(ads[j]));
                    if edge_set.contains(&(a, b)) || !chosen.insert((a, b)) {
                        continue;
                    }
                    if gate_ok(a, b, &mut stats) {
                        negatives.push((a, b));
                    }
                }
            }
        }
        if negatives.len() < needed {
            stats.negatives_exhausted = true;
            log::warn!(
                "{which} split: only {} negatives available for {} positives",
                negatives.len(),
                needed
            );
        }
        match which {
            Split::Train => {
                stats.train_positive = positives.len();
                stats.train_negative = negatives.len();
            }
            Split::Test => {
                stats.test_positive = positives.len();
                stats.test_negative = negatives.len();
            }
        }
        let mut examples = positives;
        for (a, b) in negatives {
            used_ads.insert(a);
            used_ads.insert(b);
            examples.push(PairExample {
                ad_id_a: a,
                ad_id_b: b,
                text_a: texts[a as usize].to_string(),
                text_b: texts[b as usize].to_string(),
                label: 0,
            });
        }
        out[si] = examples;
    }
    stats.fallback_unmasked_ads = used_ads
        .iter()
        .filter(|&&ad| records[ad as usize].masked_description.is_none())
        .count();
    if stats.fallback_unmasked_ads > 0 {
        log::warn!(
            "{} ads lacked a masked description; raw text used",
            stats.fallback_unmasked_ads
        );
    }
    let test = out.pop().unwrap();
    let train = out.pop().unwrap();
    (train, test, stats)
}

#[derive(Debug, Clone, Copy)]
pub struct HtrpOptions {
    /// An ad is dropped when its text is at least this similar to any
    /// previously admitted ad in the same split.
    pub gate: f64,
    /// Compare only against admitted ads of the same class.
    pub per_class_gate: bool,
}

impl Default for HtrpOptions {
    fn default() -> Self {
        HtrpOptions { gate: 0.5, per_class_gate: false }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct HtrpStats {
    pub train_kept: usize,
    pub train_dropped: usize,
    pub train_positive: usize,
    pub test_kept: usize,
    pub test_dropped: usize,
    pub test_positive: usize,
    pub fallback_unmasked_ads: usize,
}

/// Builds the per-ad risk dataset. Ads are visited in ascending id
/// order and admitted only when no previously admitted ad of the same
/// split (or same class, with `per_class_gate`) is gate-similar.
pub fn emit_htrp(
    records: &[AdRecord],
    split: &SplitAssignment,
    ad_labels: &[bool],
    opts: &HtrpOptions,
) -> (Vec<TextExample>, Vec<TextExample>, HtrpStats) {
    let mut stats = HtrpStats::default();
    let mut out: Vec<Vec<TextExample>> = vec![Vec::new(), Vec::new()];
    for (si, which) in [Split::Train, Split::Test].into_iter().enumerate() {
        // Admitted pools; with per-class gating, one per label.
        let mut pools: Vec<Vec<Prepared>> = vec![Vec::new(), Vec::new()];
        let mut kept = 0usize;
        let mut dropped = 0usize;
        let mut positive = 0usize;
        for ad in 0..records.len() {
            if split.assignment[ad] != which {
                continue;
            }
            let (text, fallback) = example_text(&records[ad]);
            if fallback {
                stats.fallback_unmasked_ads += 1;
            }
            let label = ad_labels[ad] as u8;
            let prep = Prepared::new(text);
            let pool: &Vec<Prepared> = if opts.per_class_gate {
                &pools[label as usize]
            } else {
                &pools[0]
            };
            let similar = if pool.len() >= 64 {
                pool.par_iter().any(|p| similar_at_least(p, &prep, opts.gate))
            } else {
                pool.iter().any(|p| similar_at_least(p, &prep, opts.gate))
            };
            if similar {
                dropped += 1;
                continue;
            }
            kept += 1;
            if label == 1 {
                positive += 1;
            }
            out[si].push(TextExample { ad_id: ad as u32, text: text.to_string(), label });
            if opts.per_class_gate {
                pools[label as usize].push(prep);
            } else {
                pools[0].push(prep);
            }
        }
        match which {
            Split::Train => {
                stats.train_kept = kept;
                stats.train_dropped = dropped;
                stats.train_positive = positive;
            }
            Split::Test => {
                stats.test_kept = kept;
                stats.test_dropped = dropped;
                stats.test_positive = positive;
            }
        }
    }
    let test = out.pop().unwrap();
    let train = out.pop().unwrap();
    (train, test, stats)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), DatasetError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        let line = serde_json::to_string(item).expect("example serializes");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| DatasetError::Jsonl(i + 1, e.to_string()))?,
        );
    }
    Ok(out)
}

/// Mean occurrences of each mask token per example. `texts` yields
/// every text belonging to the cell (a pair example contributes both
/// sides but still counts as one example).
pub fn mask_prevalence<'a>(
    texts: impl IntoIterator<Item = &'a str>,
    examples: usize,
) -> BTreeMap<&'static str, f64> {
    let mut counts: BTreeMap<&'static str, usize> =
        MASK_TOKENS.iter().map(|&t| (t, 0)).collect();
    for text in texts {
        for &token in MASK_TOKENS.iter() {
            *counts.get_mut(token).unwrap() += count_mask_tokens(text, token);
        }
    }
    counts
        .into_iter()
        .map(|(t, c)| (t, if examples == 0 { 0.0 } else { c as f64 / examples as f64 }))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct WilcoxonSummary {
    pub n: usize,
    pub w: f64,
    pub p_two_sided: f64,
    pub method: String,
    pub all_zero: bool,
}

impl From<&WilcoxonResult> for WilcoxonSummary {
    fn from(r: &WilcoxonResult) -> Self {
        WilcoxonSummary {
            n: r.n_reduced,
            w: r.w,
            p_two_sided: r.p_two_sided,
            method: match r.method {
                WilcoxonMethod::Exact => "exact",
                WilcoxonMethod::NormalApprox => "normal_approx",
                WilcoxonMethod::AllZero => "all_zero",
            }
            .to_string(),
            all_zero: r.all_zero,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct BiasReport {
    pub task: String,
    /// Mask-token prevalence per (split, class) cell.
    pub prevalence: BTreeMap<String, BTreeMap<&'static str, f64>>,
    pub examples: BTreeMap<String, usize>,
    /// Positive vs negative prevalence, paired over the mask tokens.
    pub class_test_train: WilcoxonSummary,
    pub class_test_test: WilcoxonSummary,
    /// Train vs test prevalence, paired over (mask token, class) cells.
    pub split_test: WilcoxonSummary,
}

struct Cell {
    prevalence: BTreeMap<&'static str, f64>,
    examples: usize,
}

fn pair_cell(examples: &[PairExample], label: u8) -> Cell {
    let sel: Vec<&PairExample> = examples.iter().filter(|e| e.label == label).collect();
    let texts = sel
        .iter()
        .flat_map(|e| [e.text_a.as_str(), e.text_b.as_str()]);
    Cell { prevalence: mask_prevalence(texts, sel.len()), examples: sel.len() }
}

fn text_cell(examples: &[TextExample], label: u8) -> Cell {
    let sel: Vec<&TextExample> = examples.iter().filter(|e| e.label == label).collect();
    let texts = sel.iter().map(|e| e.text.as_str());
    Cell { prevalence: mask_prevalence(texts, sel.len()), examples: sel.len() }
}

fn assemble_report(
    task: &str,
    train_pos: Cell,
    train_neg: Cell,
    test_pos: Cell,
    test_neg: Cell,
) -> Result<BiasReport, DatasetError> {
    let vector = |c: &Cell| -> Vec<f64> {
        MASK_TOKENS.iter().map(|&t| c.prevalence[t]).collect()
    };
    let class_train = wilcoxon_signed_rank(&vector(&train_pos), &vector(&train_neg))?;
    let class_test = wilcoxon_signed_rank(&vector(&test_pos), &vector(&test_neg))?;
    let train_cells: Vec<f64> = vector(&train_pos).into_iter().chain(vector(&train_neg)).collect();
    let test_cells: Vec<f64> = vector(&test_pos).into_iter().chain(vector(&test_neg)).collect();
    let split_test = wilcoxon_signed_rank(&train_cells, &test_cells)?;

    let mut prevalence = BTreeMap::new();
    let mut examples = BTreeMap::new();
    for (name, cell) in [
        ("train_pos", &train_pos),
        ("train_neg", &train_neg),
        ("test_pos", &test_pos),
        ("test_neg", &test_neg),
    ] {
        prevalence.insert(name.to_string(), cell.prevalence.clone());
        examples.insert(name.to_string(), cell.examples);
    }
    Ok(BiasReport {
        task: task.to_string(),
        prevalence,
        examples,
        class_test_train: (&class_train).into(),
        class_test_test: (&class_test).into(),
        split_test: (&split_test).into(),
    })
}

pub fn bias_report_htrp(
    train: &[TextExample],
    test: &[TextExample],
) -> Result<BiasReport, DatasetError> {
    assemble_report(
        "htrp",
        text_cell(train, 1),
        text_cell(train, 0),
        text_cell(test, 1),
        text_cell(test, 0),
    )
}

pub fn bias_report_oad(
    train: &[PairExample],
    test: &[PairExample],
) -> Result<BiasReport, DatasetError> {
    assemble_report(
        "oad",
        pair_cell(train, 1),
        pair_cell(train, 0),
        pair_cell(test, 1),
        pair_cell(test, 0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{deduplicate, RawAd};
    use crate::extract::{CanonicalEntity, EntityCategory, EntitySource};
    use crate::graph::{build_graph, GraphOptions};

    /// Ad `k` gets a 20-char single-letter body plus a unique suffix,
    /// so any two ads with different letters (k < 26) are far below a
    /// 0.5 similarity gate. Members of one group share a phone.
    fn test_description(k: usize) -> String {
        let letter = (b'a' + (k % 26) as u8) as char;
        let body: String = std::iter::repeat(letter).take(20).collect();
        format!("{body} {k:04}")
    }

    fn corpus_with_phones(group_sizes: &[usize], extra_singles: usize) -> Vec<AdRecord> {
        let mut raws = Vec::new();
        let mut group_of: BTreeMap<String, usize> = BTreeMap::new();
        let mut k = 0;
        for (gi, &size) in group_sizes.iter().enumerate() {
            for _ in 0..size {
                let description = test_description(k);
                group_of.insert(description.clone(), gi);
                raws.push(RawAd {
                    post_id: format!("p{k}"),
                    description,
                    title: None,
                    location_strings: vec![],
                    posting_dates: vec![],
                    structured_phones: vec![],
                    image_hashes: vec![],
                    provenance: "feedA".into(),
                });
                k += 1;
            }
        }
        for _ in 0..extra_singles {
            raws.push(RawAd {
                post_id: format!("p{k}"),
                description: test_description(k),
                title: None,
                location_strings: vec![],
                posting_dates: vec![],
                structured_phones: vec![],
                image_hashes: vec![],
                provenance: "feedA".into(),
            });
            k += 1;
        }
        let (mut recs, _) = deduplicate(raws, false);
        for rec in recs.iter_mut() {
            if let Some(&gi) = group_of.get(&rec.description) {
                rec.entities.push(CanonicalEntity {
                    category: EntityCategory::PhoneNumber,
                    value: format!("+1303555{gi:04}"),
                    source: EntitySource::Metadata,
                });
            }
        }
        recs
    }

    #[test]
    fn split_keeps_components_atomic_and_near_target() {
        let recs = corpus_with_phones(&[4; 20], 20);
        let graph = build_graph(&recs, &GraphOptions::default());
        let split = split_components(&graph, 0.8, 7);
        for members in graph.component_index.values() {
            let first = split.assignment[members[0] as usize];
            for &ad in members {
                assert_eq!(split.assignment[ad as usize], first);
            }
        }
        assert!((split.achieved - 0.8).abs() <= 0.05, "achieved {}", split.achieved);
        assert!(split.warning.is_none());
        assert_eq!(split.train_ads + split.test_ads, recs.len());

        // Determinism and seed sensitivity.
        let again = split_components(&graph, 0.8, 7);
        assert_eq!(again.assignment, split.assignment);
        let other = split_components(&graph, 0.8, 8);
        assert_ne!(other.assignment, split.assignment);
    }

    #[test]
    fn split_single_component_warns() {
        let recs = corpus_with_phones(&[10], 0);
        let graph = build_graph(&recs, &GraphOptions::default());
        let split = split_components(&graph, 0.5, 1);
        // The lone 10-ad component cannot fit a 5-ad budget: all test.
        assert_eq!(split.train_ads, 0);
        assert!(split.warning.is_some());
    }

    #[test]
    fn split_csv_roundtrip() {
        let recs = corpus_with_phones(&[3, 2], 3);
        let graph = build_graph(&recs, &GraphOptions::default());
        let split = split_components(&graph, 0.6, 3);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("split.csv");
        write_split_csv(&path, &split).unwrap();
        let back = read_split_csv(&path, recs.len()).unwrap();
        assert_eq!(back, split.assignment);

        // Reconstruction recovers every derived statistic.
        let rebuilt = assignment_from_vec(&graph, back, split.target).unwrap();
        assert_eq!(rebuilt.assignment, split.assignment);
        assert_eq!(rebuilt.train_ads, split.train_ads);
        assert_eq!(rebuilt.train_components, split.train_components);
        assert_eq!(rebuilt.achieved, split.achieved);
        assert_eq!(rebuilt.giants_forced, split.giants_forced);

        // A component straddling the boundary is rejected.
        let mut broken = split.assignment.clone();
        let comp_of_first = graph.components[0];
        let members = &graph.component_index[&comp_of_first];
        assert!(members.len() >= 2);
        broken[members[0] as usize] = Split::Train;
        broken[members[1] as usize] = Split::Test;
        assert!(assignment_from_vec(&graph, broken, split.target).is_err());
    }

    #[test]
    fn oad_positives_are_gated_edges_and_negatives_matched() {
        let mut recs = corpus_with_phones(&[3, 3], 10);
        // Make two edge texts near-identical so one positive is gated out.
        recs[1].description = recs[0].description.clone() + "!";
        let graph = build_graph(&recs, &GraphOptions::default());
        // Everything in train for a single-split view.
        let split = split_components(&graph, 1.0, 1);
        assert_eq!(split.train_ads, recs.len());
        let (train, test, stats) = emit_oad(&recs, &graph, &split, &OadOptions::default());
        assert!(test.is_empty());
        // 2 components x 3 edges = 6 edges, one gated.
        assert_eq!(stats.discarded_similar, 1);
        assert_eq!(stats.train_positive, 5);
        assert_eq!(stats.train_negative, 5);
        let edge_set: HashSet<(u32, u32)> = graph.edges.keys().copied().collect();
        for ex in &train {
            assert!(ex.ad_id_a < ex.ad_id_b);
            if ex.label == 1 {
                assert!(edge_set.contains(&(ex.ad_id_a, ex.ad_id_b)));
            } else {
                assert!(!edge_set.contains(&(ex.ad_id_a, ex.ad_id_b)));
            }
        }
        // Deterministic.
        let (train2, _, _) = emit_oad(&recs, &graph, &split, &OadOptions::default());
        assert_eq!(train2, train);
    }

    #[test]
    fn oad_negative_exhaustion_flagged() {
        // One 4-clique and nothing else: no non-edges exist in train.
        let recs = corpus_with_phones(&[4], 0);
        let graph = build_graph(&recs, &GraphOptions::default());
        let split = split_components(&graph, 1.0, 1);
        let (train, _, stats) = emit_oad(&recs, &graph, &split, &OadOptions::default());
        assert_eq!(stats.train_positive, 6);
        assert_eq!(stats.train_negative, 0);
        assert!(stats.negatives_exhausted);
        assert_eq!(train.len(), 6);
    }

    #[test]
    fn oad_gate_negatives_filters_similar_pairs() {
        let mut recs = corpus_with_phones(&[2], 2);
        // The two singletons are near-identical texts.
        recs[2].description = "yyyyyyyyyyyyyyyyyyyy".to_string();
        recs[3].description = "yyyyyyyyyyyyyyyyyyyy!".to_string();
        let graph = build_graph(&recs, &GraphOptions::default());
        let split = split_components(&graph, 1.0, 1);
        let opts = OadOptions { gate_negatives: true, ..OadOptions::default() };
        let (train, _, stats) = emit_oad(&recs, &graph, &split, &opts);
        // The near-identical singleton pair must never appear as a negative.
        for ex in &train {
            if ex.label == 0 {
                assert!(!(ex.ad_id_a == 2 && ex.ad_id_b == 3));
            }
        }
        assert!(stats.discarded_similar_negatives > 0 || stats.train_negative == 1);
    }

    #[test]
    fn htrp_greedy_admission_drops_near_duplicates() {
        let mut recs = corpus_with_phones(&[2], 2);
        // ad texts: two group ads distinct; singletons near-identical.
        recs[2].description = "zzzzzzzzzzzzzzzzzzzz".to_string();
        recs[3].description = "zzzzzzzzzzzzzzzzzzz!".to_string();
        let (recs, _) = {
            // Re-dedup after editing descriptions to restore id order.
            let raws: Vec<RawAd> = recs
                .iter()
                .map(|r| RawAd {
                    post_id: r.merged_post_ids.iter().next().unwrap().clone(),
                    description: r.description.clone(),
                    title: None,
                    location_strings: vec![],
                    posting_dates: vec![],
                    structured_phones: vec![],
                    image_hashes: vec![],
                    provenance: "feedA".into(),
                })
                .collect();
            deduplicate(raws, false)
        };
        let graph = build_graph(&recs, &GraphOptions::default());
        let split = split_components(&graph, 1.0, 1);
        let labels = vec![false; recs.len()];
        let (train, _, stats) =
            emit_htrp(&recs, &split, &labels, &HtrpOptions { gate: 0.9, per_class_gate: false });
        assert_eq!(stats.train_dropped, 1);
        assert_eq!(train.len(), recs.len() - 1);
        // The earlier ad of the near-duplicate pair is the one kept.
        let kept: Vec<u32> = train.iter().map(|e| e.ad_id).collect();
        let dup_ids: Vec<u32> = recs
            .iter()
            .filter(|r| r.description.starts_with("zzz"))
            .map(|r| r.ad_id)
            .collect();
        assert!(kept.contains(&dup_ids[0]));
        assert!(!kept.contains(&dup_ids[1]));
    }

    #[test]
    fn htrp_per_class_gate_keeps_cross_class_similars() {
        let mut recs = corpus_with_phones(&[2], 0);
        // Near-identical texts across classes: one labeled positive.
        recs[0].description = "kkkkkkkkkkkkkkkkkkkk 1".to_string();
        recs[1].description = "kkkkkkkkkkkkkkkkkkkk 2".to_string();
        let graph = build_graph(&recs, &GraphOptions::default());
        let split = split_components(&graph, 1.0, 1);
        let labels = vec![true, false];
        let gate = 0.5;
        let (all, _, _) =
            emit_htrp(&recs, &split, &labels, &HtrpOptions { gate, per_class_gate: false });
        assert_eq!(all.len(), 1);
        let (per_class, _, _) =
            emit_htrp(&recs, &split, &labels, &HtrpOptions { gate, per_class_gate: true });
        assert_eq!(per_class.len(), 2);
    }

    #[test]
    fn mask_prevalence_counts_per_example() {
        // Two examples, three [PHONE] total -> 1.5.
        let texts = ["call [PHONE] or [PHONE]", "[PHONE] now"];
        let prev = mask_prevalence(texts, 2);
        assert_eq!(prev["[PHONE]"], 1.5);
        assert_eq!(prev["[EMAIL]"], 0.0);
        // Escaped literals are not masks.
        let prev = mask_prevalence(["[[PHONE]] stays"], 1);
        assert_eq!(prev["[PHONE]"], 0.0);
        // Empty cell divides to zero.
        let prev = mask_prevalence([], 0);
        assert_eq!(prev["[NAME]"], 0.0);
    }

    #[test]
    fn bias_report_matches_direct_wilcoxon() {
        let ex = |id: u32, text: &str, label: u8| TextExample {
            ad_id: id,
            text: text.to_string(),
            label,
        };
        let train = vec![
            ex(0, "[PHONE] [PHONE] [EMAIL]", 1),
            ex(1, "[PHONE] [NAME]", 1),
            ex(2, "plain words", 0),
            ex(3, "[EMAIL]", 0),
        ];
        let test = vec![ex(4, "[PHONE]", 1), ex(5, "nothing", 0)];
        let report = bias_report_htrp(&train, &test).unwrap();
        assert_eq!(report.examples["train_pos"], 2);
        assert_eq!(report.prevalence["train_pos"]["[PHONE]"], 1.5);
        assert_eq!(report.prevalence["train_neg"]["[EMAIL]"], 0.5);

        let x: Vec<f64> = MASK_TOKENS.iter().map(|&t| report.prevalence["train_pos"][t]).collect();
        let y: Vec<f64> = MASK_TOKENS.iter().map(|&t| report.prevalence["train_neg"][t]).collect();
        let direct = wilcoxon_signed_rank(&x, &y).unwrap();
        assert_eq!(report.class_test_train.p_two_sided, direct.p_two_sided);
        assert_eq!(report.class_test_train.n, direct.n_reduced);
        // 18-cell split comparison.
        assert!(report.split_test.n <= 18);
    }

    #[test]
    fn bias_report_oad_counts_both_sides() {
        let pair = |a: u32, b: u32, ta: &str, tb: &str, label: u8| PairExample {
            ad_id_a: a,
            ad_id_b: b,
            text_a: ta.to_string(),
            text_b: tb.to_string(),
            label,
        };
        let train = vec![
            pair(0, 1, "[PHONE]", "[PHONE] [PHONE]", 1),
            pair(2, 3, "x", "y", 0),
        ];
        let test = vec![pair(4, 5, "[EMAIL]", "z", 1), pair(6, 7, "a", "b", 0)];
        let report = bias_report_oad(&train, &test).unwrap();
        // 3 [PHONE] across both sides of 1 positive pair -> 3.0.
        assert_eq!(report.prevalence["train_pos"]["[PHONE]"], 3.0);
        assert_eq!(report.task, "oad");
    }

    #[test]
    fn jsonl_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pairs.jsonl");
        let items = vec![PairExample {
            ad_id_a: 1,
            ad_id_b: 2,
            text_a: "a".into(),
            text_b: "b".into(),
            label: 1,
        }];
        write_jsonl(&path, &items).unwrap();
        let back: Vec<PairExample> = read_jsonl(&path).unwrap();
        assert_eq!(back, items);
    }
}
