//! Tokenization and vocabulary for the tiny classifier.
//!
//! Tokens come from whitespace splitting; mask tokens such as `[PHONE]`
//! are preserved verbatim (and split out of surrounding text), all
//! other text is lowercased. Ids 0 and 1 are reserved for padding and
//! unknown tokens.

use std::collections::HashMap;

use crate::extract::MASK_TOKENS;

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Finds the first unescaped mask-token occurrence in `chars`, i.e. one
/// not directly preceded by `[` (which marks an escaped literal).
fn find_mask(chars: &[char]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    for token in MASK_TOKENS {
        let tok: Vec<char> = token.chars().collect();
        let mut i = 0;
        while i + tok.len() <= chars.len() {
            if chars[i..i + tok.len()] == tok[..] && (i == 0 || chars[i - 1] != '[') {
                if best.map_or(true, |(s, _)| i < s) {
                    best = Some((i, tok.len()));
                }
                break;
            }
            i += 1;
        }
    }
    best
}

fn push_chunk(chunk: &[char], out: &mut Vec<String>) {
    if chunk.is_empty() {
        return;
    }
    match find_mask(chunk) {
        Some((start, len)) => {
            push_chunk(&chunk[..start], out);
            out.push(chunk[start..start + len].iter().collect());
            push_chunk(&chunk[start + len..], out);
        }
        None => {
            let word: String = chunk.iter().collect::<String>().to_lowercase();
            out.push(word);
        }
    }
}

/// Whitespace tokenization with mask tokens kept intact and verbatim.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for chunk in text.split_whitespace() {
        let chars: Vec<char> = chunk.chars().collect();
        push_chunk(&chars, &mut out);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    /// Builds a vocabulary from training texts: tokens with at least
    /// `min_freq` occurrences, ordered by descending frequency then
    /// token, after the two reserved entries.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>, min_freq: usize) -> Vocab {
        let mut freq: HashMap<String, usize> = HashMap::new();
        for text in texts {
            for token in tokenize(text) {
                *freq.entry(token).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(String, usize)> =
            freq.into_iter().filter(|&(_, n)| n >= min_freq).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
        tokens.extend(entries.into_iter().map(|(t, _)| t));
        Vocab::from_tokens(tokens).expect("built vocabulary is well-formed")
    }

    /// Reassembles a vocabulary from its full token list (reserved
    /// entries first). Fails on duplicates or wrong reserved tokens.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Vocab, String> {
        if tokens.len() < 2 || tokens[0] != PAD_TOKEN || tokens[1] != UNK_TOKEN {
            return Err(format!(
                "vocabulary must start with {PAD_TOKEN:?}, {UNK_TOKEN:?}"
            ));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i as u32).is_some() {
                return Err(format!("duplicate vocabulary token {t:?}"));
            }
        }
        Ok(Vocab { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Token ids for a text; unknown tokens map to [`UNK_ID`].
    pub fn encode(&self, text: &str) -> Vec<u32> {
        tokenize(text).iter().map(|t| self.id(t)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_lowercases_but_keeps_masks() {
        assert_eq!(
            tokenize("Call [PHONE] NOW"),
            vec!["call".to_string(), "[PHONE]".into(), "now".into()]
        );
        // Mask tokens split out of surrounding text.
        assert_eq!(
            tokenize("ring[PHONE]today"),
            vec!["ring".to_string(), "[PHONE]".into(), "today".into()]
        );
        // Two masks in one chunk.
        assert_eq!(
            tokenize("[PHONE][EMAIL]"),
            vec!["[PHONE]".to_string(), "[EMAIL]".into()]
        );
    }

    #[test]
    fn tokenize_respects_escapes() {
        // Escaped literal: not a mask, lowercased as ordinary text.
        assert_eq!(tokenize("[[PHONE]]"), vec!["[[phone]]".to_string()]);
        // Mixed: escaped then real.
        let toks = tokenize("[[PHONE]] [PHONE]");
        assert_eq!(toks, vec!["[[phone]]".to_string(), "[PHONE]".into()]);
    }

    #[test]
    fn vocab_orders_by_frequency_then_token() {
        let texts = ["b b b a a c", "a z"];
        let v = Vocab::build(texts.iter().copied(), 1);
        // a and b both occur 3 times: alphabetical, then c/z singletons.
        assert_eq!(v.tokens()[..2], [PAD_TOKEN.to_string(), UNK_TOKEN.to_string()]);
        assert_eq!(v.tokens()[2..], ["a".to_string(), "b".into(), "c".into(), "z".into()]);
        assert_eq!(v.id("a"), 2);
        assert_eq!(v.id("missing"), UNK_ID);
        assert_eq!(v.encode("a b missing"), vec![2, 3, UNK_ID]);
    }

    #[test]
    fn min_freq_filters_rare_tokens() {
        let texts = ["x x y"];
        let v = Vocab::build(texts.iter().copied(), 2);
        assert_eq!(v.len(), 3); // pad, unk, x
        assert_eq!(v.id("y"), UNK_ID);
    }

    #[test]
    fn from_tokens_validates() {
        assert!(Vocab::from_tokens(vec!["<pad>".into(), "<unk>".into(), "a".into()]).is_ok());
        assert!(Vocab::from_tokens(vec!["a".into(), "b".into()]).is_err());
        assert!(Vocab::from_tokens(vec![
            "<pad>".into(),
            "<unk>".into(),
            "a".into(),
            "a".into()
        ])
        .is_err());
    }
}
