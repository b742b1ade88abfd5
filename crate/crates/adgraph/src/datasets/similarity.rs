//! Normalized edit-distance similarity.
//!
//! `similarity` is 1 - lev(a, b) / max(|a|, |b|) over Unicode scalar
//! values, with two empty strings defined as 1. The screening predicate
//! `sim >= gate` only needs a bounded distance, so it runs through a
//! banded DP with early exit (band derived from the gate: distances
//! above floor((1-gate) * max_len) cannot pass), with a bit-parallel
//! fast path when one side fits in a 64-bit word.

/// Classic two-row DP over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

pub fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - lev / max_len`; both strings empty gives 1.0.
pub fn similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    similarity_chars(&a, &b)
}

pub fn similarity_chars(a: &[char], b: &[char]) -> f64 {
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein_chars(a, b) as f64 / max_len as f64
}

/// Distance bound implied by `sim >= gate` at a given max length:
/// lev <= (1 - gate) * max_len. The epsilon guards against cases like
/// (1 - 0.9) * 10 rounding to 0.9999... instead of 1.
pub fn gate_bound(gate: f64, max_len: usize) -> usize {
    (((1.0 - gate) * max_len as f64) + 1e-9).floor().max(0.0) as usize
}

/// Banded DP: exact distance when it is <= k, `None` otherwise. The band
/// has half-width k around the main diagonal; rows whose minimum exceeds
/// k exit early.
pub fn levenshtein_within_chars(a: &[char], b: &[char], k: usize) -> Option<usize> {
    let (a, b) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let (m, n) = (a.len(), b.len());
    if n - m > k {
        return None;
    }
    if m == 0 {
        return Some(n); // n <= k here
    }
    const INF: usize = usize::MAX / 2;
    // prev[j] holds D[i-1][j] for j in the band of row i-1.
    let mut prev = vec![INF; n + 1];
    let mut cur = vec![INF; n + 1];
    for j in 0..=k.min(n) {
        prev[j] = j;
    }
    for i in 1..=m {
        let lo = i.saturating_sub(k);
        let hi = (i + k).min(n);
        let mut row_min = INF;
        for j in lo..=hi {
            let val = if j == 0 {
                i
            } else {
                let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
                let del = prev[j].saturating_add(1);
                let ins = if j > lo { cur[j - 1] + 1 } else { INF };
                sub.min(del).min(ins)
            };
            cur[j] = val;
            row_min = row_min.min(val);
        }
        if row_min > k {
            return None;
        }
        // Reset only the band cells for the next row.
        for j in lo..=hi {
            prev[j] = cur[j];
            cur[j] = INF;
        }
        if lo > 0 {
            prev[lo - 1] = INF;
        }
    }
    let d = prev[n];
    if d <= k {
        Some(d)
    } else {
        None
    }
}

/// Bit-parallel edit distance with the pattern packed into one 64-bit
/// word (Myers 1999). Exact for patterns of 1..=64 scalar values; the
/// text may be any length. Build once, stream many texts through it.
pub struct BitPattern {
    peq_ascii: [u64; 128],
    peq_other: Vec<(char, u64)>,
    len: usize,
}

impl BitPattern {
    pub fn new(pattern: &[char]) -> Option<BitPattern> {
        if pattern.is_empty() || pattern.len() > 64 {
            return None;
        }
        let mut peq_ascii = [0u64; 128];
        let mut other: Vec<(char, u64)> = Vec::new();
        for (i, &c) in pattern.iter().enumerate() {
            let bit = 1u64 << i;
            if (c as u32) < 128 {
                peq_ascii[c as usize] |= bit;
            } else {
                match other.binary_search_by_key(&c, |e| e.0) {
                    Ok(pos) => other[pos].1 |= bit,
                    Err(pos) => other.insert(pos, (c, bit)),
                }
            }
        }
        Some(BitPattern {
            peq_ascii,
            peq_other: other,
            len: pattern.len(),
        })
    }

    #[inline]
    fn eq_mask(&self, c: char) -> u64 {
        if (c as u32) < 128 {
            self.peq_ascii[c as usize]
        } else {
            match self.peq_other.binary_search_by_key(&c, |e| e.0) {
                Ok(pos) => self.peq_other[pos].1,
                Err(_) => 0,
            }
        }
    }

    /// Exact lev(pattern, text).
    pub fn distance(&self, text: &[char]) -> usize {
        let m = self.len;
        let mut vp: u64 = if m == 64 { !0 } else { (1u64 << m) - 1 };
        let mut vn: u64 = 0;
        let mut score = m;
        let high = 1u64 << (m - 1);
        for &c in text {
            let eq = self.eq_mask(c);
            let xv = eq | vn;
            let xh = (((eq & vp).wrapping_add(vp)) ^ vp) | eq;
            let mut hp = vn | !(xh | vp);
            let mut hn = vp & xh;
            if hp & high != 0 {
                score += 1;
            }
            if hn & high != 0 {
                score -= 1;
            }
            hp = (hp << 1) | 1;
            hn <<= 1;
            vp = hn | !(xv | hp);
            vn = hp & xv;
        }
        score
    }
}

/// A text prepared for repeated screening: cached scalar values plus a
/// bit pattern when the text fits in one word.
pub struct Prepared {
    pub chars: Vec<char>,
    pattern: Option<BitPattern>,
    /// Character counts folded into 64 buckets. Each edit operation moves
    /// the L1 distance between two bags by at most 2, so
    /// `bag_l1 / 2` is a lower bound on the edit distance and folding
    /// buckets only lowers it further.
    bag: [u16; 64],
}

fn bag_counts(chars: &[char]) -> [u16; 64] {
    let mut bag = [0u16; 64];
    for &c in chars {
        let slot = (c as u32 as usize) & 63;
        bag[slot] = bag[slot].saturating_add(1);
    }
    bag
}

fn bag_l1(a: &[u16; 64], b: &[u16; 64]) -> usize {
    let mut sum = 0usize;
    for i in 0..64 {
        sum += a[i].abs_diff(b[i]) as usize;
    }
    sum
}

impl Prepared {
    pub fn new(text: &str) -> Prepared {
        let chars: Vec<char> = text.chars().collect();
        let pattern = BitPattern::new(&chars);
        let bag = bag_counts(&chars);
        Prepared {
            chars,
            pattern,
            bag,
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }
}

/// The screening predicate `similarity(a, b) >= gate`. Exact: routes
/// through the length bound, then the bit-parallel distance or the
/// banded DP, all of which agree with the full DP.
pub fn similar_at_least(a: &Prepared, b: &Prepared, gate: f64) -> bool {
    if gate <= 0.0 {
        return true;
    }
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return gate <= 1.0;
    }
    if gate > 1.0 {
        return false;
    }
    let k = gate_bound(gate, max_len);
    if a.len().abs_diff(b.len()) > k {
        return false;
    }
    if bag_l1(&a.bag, &b.bag) > 2 * k {
        return false;
    }
    let d = if let Some(p) = &a.pattern {
        p.distance(&b.chars)
    } else if let Some(p) = &b.pattern {
        p.distance(&a.chars)
    } else {
        match levenshtein_within_chars(&a.chars, &b.chars, k) {
            Some(d) => d,
            None => return false,
        }
    };
    d <= k
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Textbook full-matrix oracle, kept deliberately naive.
    fn oracle(a: &[char], b: &[char]) -> usize {
        let (m, n) = (a.len(), b.len());
        let mut d = vec![vec![0usize; n + 1]; m + 1];
        for i in 0..=m {
            d[i][0] = i;
        }
        for j in 0..=n {
            d[0][j] = j;
        }
        for i in 1..=m {
            for j in 1..=n {
                let cost = usize::from(a[i - 1] != b[j - 1]);
                d[i][j] = (d[i - 1][j] + 1)
                    .min(d[i][j - 1] + 1)
                    .min(d[i - 1][j - 1] + cost);
            }
        }
        d[m][n]
    }

    #[test]
    fn kitten_sitting() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
        let sim = similarity("kitten", "sitting");
        assert!((sim - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
        assert!((sim - 0.5714285714).abs() < 1e-9);
    }

    #[test]
    fn empty_edge_cases() {
        assert_eq!(similarity("", ""), 1.0);
        assert_eq!(similarity("", "abc"), 0.0);
        assert_eq!(levenshtein("", "abc"), 3);
        let a = Prepared::new("");
        let b = Prepared::new("");
        assert!(similar_at_least(&a, &b, 0.5));
    }

    #[test]
    fn unicode_scalar_units() {
        // Emoji count as single units.
        assert_eq!(levenshtein("💜💜", "💜"), 1);
        assert!((similarity("💜💜", "💜") - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gate_bound_edges() {
        assert_eq!(gate_bound(0.5, 8), 4);
        assert_eq!(gate_bound(0.5, 7), 3);
        assert_eq!(gate_bound(0.9, 10), 1);
        assert_eq!(gate_bound(0.7, 10), 3);
        assert_eq!(gate_bound(1.0, 10), 0);
    }

    #[test]
    fn banded_matches_oracle_within_bound() {
        let cases = [
            ("kitten", "sitting", 3),
            ("abc", "abc", 0),
            ("abc", "xyz", 3),
            ("", "abcd", 4),
            ("aaaa", "aa", 2),
        ];
        for (a, b, d) in cases {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            for k in 0..=8 {
                let got = levenshtein_within_chars(&ac, &bc, k);
                if d <= k {
                    assert_eq!(got, Some(d), "{a} {b} k={k}");
                } else {
                    assert_eq!(got, None, "{a} {b} k={k}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn two_row_matches_oracle(a in ".{0,40}", b in ".{0,40}") {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            prop_assert_eq!(levenshtein_chars(&ac, &bc), oracle(&ac, &bc));
        }

        #[test]
        fn bag_bound_never_exceeds_distance(a in ".{0,40}", b in ".{0,40}") {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            let bound = bag_l1(&bag_counts(&ac), &bag_counts(&bc));
            prop_assert!(bound <= 2 * oracle(&ac, &bc));
        }

        #[test]
        fn bit_parallel_matches_oracle(a in "[a-f💜]{1,60}", b in "[a-f💜]{0,90}") {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            let p = BitPattern::new(&ac).unwrap();
            prop_assert_eq!(p.distance(&bc), oracle(&ac, &bc));
        }

        #[test]
        fn banded_agrees_with_oracle(a in ".{0,30}", b in ".{0,30}", k in 0usize..12) {
            let ac: Vec<char> = a.chars().collect();
            let bc: Vec<char> = b.chars().collect();
            let d = oracle(&ac, &bc);
            match levenshtein_within_chars(&ac, &bc, k) {
                Some(got) => prop_assert_eq!(got, d),
                None => prop_assert!(d > k),
            }
        }

        #[test]
        fn predicate_agrees_with_full_dp(a in ".{0,50}", b in ".{0,50}") {
            let pa = Prepared::new(&a);
            let pb = Prepared::new(&b);
            let want = similarity(&a, &b) >= 0.5;
            prop_assert_eq!(similar_at_least(&pa, &pb, 0.5), want);
        }

        #[test]
        fn similarity_is_symmetric_and_bounded(a in ".{0,30}", b in ".{0,30}") {
            let s1 = similarity(&a, &b);
            let s2 = similarity(&b, &a);
            prop_assert!((s1 - s2).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&s1));
        }
    }
}
