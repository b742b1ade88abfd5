//! Aggregates token attributions into n-gram statistics.
//!
//! Every length-n window of an example contributes one occurrence: the
//! sum of its token attributions. Occurrences group by the exact token
//! tuple; each group reports its arithmetic mean, population standard
//! deviation, and count.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NgramRow {
    /// Tokens joined with single spaces.
    pub ngram: String,
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// One attributed token sequence (an example, or one side of a pair).
pub type AttributedTokens<'a> = (&'a [String], &'a [f64]);

/// Collects window sums, groups them, filters by `min_count`, and
/// sorts by mean (descending) then n-gram text.
pub fn ngram_attributions(
    sequences: &[AttributedTokens<'_>],
    n: usize,
    min_count: usize,
) -> Vec<NgramRow> {
    assert!(n >= 1, "n-gram order must be at least 1");
    let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for &(tokens, attrs) in sequences {
        assert_eq!(
            tokens.len(),
            attrs.len(),
            "token/attribution length mismatch"
        );
        if tokens.len() < n {
            continue;
        }
        for i in 0..=tokens.len() - n {
            let key = tokens[i..i + n].join(" ");
            let window_sum: f64 = attrs[i..i + n].iter().sum();
            groups.entry(key).or_default().push(window_sum);
        }
    }
    let mut rows: Vec<NgramRow> = groups
        .into_iter()
        .filter(|(_, v)| v.len() >= min_count)
        .map(|(ngram, values)| {
            let count = values.len();
            let mean = values.iter().sum::<f64>() / count as f64;
            let var =
                values.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / count as f64;
            NgramRow { ngram, mean, std: var.sqrt(), count }
        })
        .collect();
    rows.sort_by(|a, b| {
        b.mean
            .partial_cmp(&a.mean)
            .unwrap()
            .then_with(|| a.ngram.cmp(&b.ngram))
    });
    rows
}
