//! Wilcoxon signed-rank test for paired samples.
//!
//! Zero differences are dropped; ties in |d| get averaged ranks. The
//! statistic is W = min(W+, W-). For n <= 20 pairs the two-sided p-value
//! is exact over all 2^n sign assignments (computed by subset-sum
//! counting over doubled ranks, which are integers even with ties). For
//! larger n a normal approximation with tie and continuity corrections
//! is used.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

pub const EXACT_LIMIT: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum WilcoxonError {
    #[error("paired samples differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty samples")]
    Empty,
    #[error("non-finite difference at index {0}")]
    NonFinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApprox,
    AllZero,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub w: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs remaining after zero differences are dropped.
    pub n_reduced: usize,
    pub p_two_sided: f64,
    pub method: WilcoxonMethod,
    /// All differences were zero; p is pinned to 1.
    pub all_zero: bool,
}

/// Average ranks of |d|, scaled by 2 so ties stay integral.
fn doubled_ranks(abs_d: &[f64]) -> Vec<u64> {
    let n = abs_d.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| abs_d[i].partial_cmp(&abs_d[j]).unwrap());
    let mut ranks = vec![0u64; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && abs_d[order[j + 1]] == abs_d[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 average to (i + j + 2) / 2; doubled: i + j + 2.
        let doubled = (i + j + 2) as u64;
        for &idx in &order[i..=j] {
            ranks[idx] = doubled;
        }
        i = j + 1;
    }
    ranks
}

/// Exact P(W+ <= w) * 2^n over doubled ranks, by subset-sum counting.
fn exact_count_le(doubled: &[u64], w_doubled: u64) -> u128 {
    let total: u64 = doubled.iter().sum();
    // counts[s] = number of sign assignments with doubled W+ == s.
    let mut counts = vec![0u128; total as usize + 1];
    counts[0] = 1;
    for &r in doubled {
        // Iterate downward so each rank is used at most once.
        for s in (r..=total).rev() {
            let add = counts[(s - r) as usize];
            if add > 0 {
                counts[s as usize] += add;
            }
        }
    }
    counts[..=(w_doubled.min(total)) as usize].iter().sum()
}

/// Two-sided Wilcoxon signed-rank test on paired samples.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64]) -> Result<WilcoxonResult, WilcoxonError> {
    if x.len() != y.len() {
        return Err(WilcoxonError::LengthMismatch(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(WilcoxonError::Empty);
    }
    let mut diffs = Vec::with_capacity(x.len());
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let d = a - b;
        if !d.is_finite() {
            return Err(WilcoxonError::NonFinite(i));
        }
        if d != 0.0 {
            diffs.push(d);
        }
    }
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            w: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            n_reduced: 0,
            p_two_sided: 1.0,
            method: WilcoxonMethod::AllZero,
            all_zero: true,
        });
    }

    let abs_d: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let doubled = doubled_ranks(&abs_d);
    let w_plus_doubled: u64 = diffs
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, &r)| r)
        .sum();
    let total: u64 = doubled.iter().sum();
    let w_minus_doubled = total - w_plus_doubled;
    let w_plus = w_plus_doubled as f64 / 2.0;
    let w_minus = w_minus_doubled as f64 / 2.0;
    let w = w_plus.min(w_minus);

    let p_two_sided = if n <= EXACT_LIMIT {
        // Signs are i.i.d. fair coins under H0; the null distribution of
        // W+ is symmetric about total/2, so doubling the lower tail is
        // the two-sided p.
        let count = exact_count_le(&doubled, w_plus_doubled.min(w_minus_doubled));
        let p = 2.0 * count as f64 / 2f64.powi(n as i32);
        p.min(1.0)
    } else {
        // Tie correction subtracts sum(t^3 - t)/48 from the variance.
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let mut tie_term = 0.0;
        let mut sorted = abs_d.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut i = 0;
        while i < n {
            let mut j = i;
            while j + 1 < n && sorted[j + 1] == sorted[i] {
                j += 1;
            }
            let t = (j - i + 1) as f64;
            tie_term += t * t * t - t;
            i = j + 1;
        }
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0;
        if var <= 0.0 {
            1.0
        } else {
            // W <= mean by construction; continuity correction moves it
            // half a step toward the mean.
            let z = (w - mean + 0.5) / var.sqrt();
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            (2.0 * normal.cdf(z)).min(1.0)
        }
    };

    Ok(WilcoxonResult {
        w,
        w_plus,
        w_minus,
        n_reduced: n,
        p_two_sided,
        method: if n <= EXACT_LIMIT {
            WilcoxonMethod::Exact
        } else {
            WilcoxonMethod::NormalApprox
        },
        all_zero: false,
    })
}
