//! Entity canonicalization, span application, and masking.
//!
//! Spans come from an external NER system as character offsets over the
//! (deduplicated) description. Phones are canonicalized to E.164 US form,
//! emails by a fixed pattern over the raw text, handles by whitespace and
//! case normalization. Surviving spans are replaced by category mask
//! tokens in `masked_description`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AdRecord;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "snake_case")]
pub enum EntityCategory {
    PhoneNumber,
    Email,
    NameNickname,
    Location,
    Onlyfans,
    Snapchat,
    Twitter,
    Instagram,
    UsernameOther,
}

pub const ALL_CATEGORIES: [EntityCategory; 9] = [
    EntityCategory::PhoneNumber,
    EntityCategory::Email,
    EntityCategory::NameNickname,
    EntityCategory::Location,
    EntityCategory::Onlyfans,
    EntityCategory::Snapchat,
    EntityCategory::Twitter,
    EntityCategory::Instagram,
    EntityCategory::UsernameOther,
];

pub const MASK_TOKENS: [&str; 9] = [
    "[PHONE]",
    "[EMAIL]",
    "[NAME]",
    "[LOCATION]",
    "[ONLYFANS]",
    "[SNAPCHAT]",
    "[TWITTER]",
    "[INSTAGRAM]",
    "[USERNAME]",
];

impl EntityCategory {
    pub fn mask_token(self) -> &'static str {
        match self {
            EntityCategory::PhoneNumber => "[PHONE]",
            EntityCategory::Email => "[EMAIL]",
            EntityCategory::NameNickname => "[NAME]",
            EntityCategory::Location => "[LOCATION]",
            EntityCategory::Onlyfans => "[ONLYFANS]",
            EntityCategory::Snapchat => "[SNAPCHAT]",
            EntityCategory::Twitter => "[TWITTER]",
            EntityCategory::Instagram => "[INSTAGRAM]",
            EntityCategory::UsernameOther => "[USERNAME]",
        }
    }

    /// Social handles get the leading-`@` strip in canonicalization.
    pub fn is_handle(self) -> bool {
        matches!(
            self,
            EntityCategory::Onlyfans
                | EntityCategory::Snapchat
                | EntityCategory::Twitter
                | EntityCategory::Instagram
                | EntityCategory::UsernameOther
        )
    }
}

impl fmt::Display for EntityCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            EntityCategory::PhoneNumber => "phone_number",
            EntityCategory::Email => "email",
            EntityCategory::NameNickname => "name_nickname",
            EntityCategory::Location => "location",
            EntityCategory::Onlyfans => "onlyfans",
            EntityCategory::Snapchat => "snapchat",
            EntityCategory::Twitter => "twitter",
            EntityCategory::Instagram => "instagram",
            EntityCategory::UsernameOther => "username_other",
        };
        f.write_str(s)
    }
}

impl FromStr for EntityCategory {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "phone_number" => Ok(EntityCategory::PhoneNumber),
            "email" => Ok(EntityCategory::Email),
            "name_nickname" => Ok(EntityCategory::NameNickname),
            "location" => Ok(EntityCategory::Location),
            "onlyfans" => Ok(EntityCategory::Onlyfans),
            "snapchat" => Ok(EntityCategory::Snapchat),
            "twitter" => Ok(EntityCategory::Twitter),
            "instagram" => Ok(EntityCategory::Instagram),
            "username_other" => Ok(EntityCategory::UsernameOther),
            other => Err(format!("unknown entity category: {other}")),
        }
    }
}

/// Where a canonical entity was discovered.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntitySource {
    Span,
    Regex,
    Metadata,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CanonicalEntity {
    pub category: EntityCategory,
    pub value: String,
    pub source: EntitySource,
}

/// A span over the description in Unicode scalar value offsets,
/// half-open `[start, end)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSpan {
    pub ad_id: u32,
    pub start: usize,
    pub end: usize,
    pub category: EntityCategory,
    pub score: f64,
}

/// Parses one spans-JSONL line. Never panics on arbitrary input.
pub fn parse_span_line(line: &str) -> Result<RawSpan, String> {
    let span: RawSpan = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if span.start >= span.end {
        return Err(format!("empty or inverted span {}..{}", span.start, span.end));
    }
    if !span.score.is_finite() {
        return Err("non-finite score".to_string());
    }
    Ok(span)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhoneRejection {
    TooFewDigits,
    TooManyDigits,
    NonUs,
}

impl fmt::Display for PhoneRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PhoneRejection::TooFewDigits => "too_few_digits",
            PhoneRejection::TooManyDigits => "too_many_digits",
            PhoneRejection::NonUs => "non_us",
        };
        f.write_str(s)
    }
}

const DIGIT_WORDS: [(&str, char); 10] = [
    ("zero", '0'),
    ("one", '1'),
    ("two", '2'),
    ("three", '3'),
    ("four", '4'),
    ("five", '5'),
    ("six", '6'),
    ("seven", '7'),
    ("eight", '8'),
    ("nine", '9'),
];

/// Canonicalizes a phone surface form to `+1` followed by 10 digits.
///
/// Lowercases, rewrites spelled-out digit words (plus "oh" as zero when
/// enabled), strips every non-digit, then applies the US rules: exactly
/// 10 digits pass, 11 digits starting with `1` drop the prefix. Shorter
/// strings are `too_few_digits`; 11+ digits not starting with `1` are
/// `non_us`; 12+ starting with `1` are `too_many_digits`.
pub fn canonicalize_phone(surface: &str, oh_as_zero: bool) -> Result<String, PhoneRejection> {
    let mut text = surface.to_lowercase();
    for (word, digit) in DIGIT_WORDS {
        if text.contains(word) {
            text = text.replace(word, &digit.to_string());
        }
    }
    if oh_as_zero && text.contains("oh") {
        text = text.replace("oh", "0");
    }
    let digits: String = text.chars().filter(|c| c.is_ascii_digit()).collect();
    match digits.len() {
        0..=9 => Err(PhoneRejection::TooFewDigits),
        10 => Ok(format!("+1{digits}")),
        11 if digits.starts_with('1') => Ok(format!("+{digits}")),
        _ if !digits.starts_with('1') => Err(PhoneRejection::NonUs),
        _ => Err(PhoneRejection::TooManyDigits),
    }
}

/// The email pattern applied to raw description text.
pub fn email_regex() -> &'static Regex {
    static RE: std::sync::OnceLock<Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}").expect("email regex")
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmailMatch {
    /// Unicode scalar value offsets into the description.
    pub start: usize,
    pub end: usize,
    pub canonical: String,
}

/// Finds email matches with character offsets; values are lowercased.
pub fn find_emails(text: &str) -> Vec<EmailMatch> {
    // Map byte offsets (regex) to char offsets (our span space).
    let mut byte_to_char: BTreeMap<usize, usize> = BTreeMap::new();
    for (ci, (bi, _)) in text.char_indices().enumerate() {
        byte_to_char.insert(bi, ci);
    }
    byte_to_char.insert(text.len(), text.chars().count());
    email_regex()
        .find_iter(text)
        .map(|m| EmailMatch {
            start: byte_to_char[&m.start()],
            end: byte_to_char[&m.end()],
            canonical: m.as_str().to_lowercase(),
        })
        .collect()
}

/// Canonical emails in first-occurrence order, deduplicated within the ad.
pub fn extract_emails(text: &str) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for m in find_emails(text) {
        if seen.insert(m.canonical.clone()) {
            out.push(m.canonical);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandleRejection {
    Empty,
    Invalid,
}

/// Trims, collapses internal whitespace to single spaces, lowercases,
/// and strips one leading `@` for handle categories. Empty results are
/// rejected, as is a value still starting with `@` after the strip.
pub fn canonicalize_handle(
    surface: &str,
    category: EntityCategory,
) -> Result<String, HandleRejection> {
    let collapsed = surface.split_whitespace().collect::<Vec<_>>().join(" ");
    let mut value = collapsed.to_lowercase();
    if category.is_handle() {
        if let Some(rest) = value.strip_prefix('@') {
            value = rest.to_string();
        }
    }
    if value.is_empty() {
        return Err(HandleRejection::Empty);
    }
    if category.is_handle() && value.starts_with('@') {
        return Err(HandleRejection::Invalid);
    }
    Ok(value)
}

/// Canonicalizes a span's surface text according to its category.
pub fn canonicalize_span_value(
    category: EntityCategory,
    surface: &str,
    oh_as_zero: bool,
) -> Result<String, String> {
    match category {
        EntityCategory::PhoneNumber => {
            canonicalize_phone(surface, oh_as_zero).map_err(|r| r.to_string())
        }
        EntityCategory::Email => {
            let v = surface.trim().to_lowercase();
            let re = email_regex();
            match re.find(&v) {
                Some(m) if m.start() == 0 && m.end() == v.len() => Ok(v),
                _ => Err("invalid_email".to_string()),
            }
        }
        other => canonicalize_handle(surface, other).map_err(|r| match r {
            HandleRejection::Empty => "empty_after_normalization".to_string(),
            HandleRejection::Invalid => "invalid_handle".to_string(),
        }),
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("ad {ad_id}: span {start}..{end} out of bounds for description of length {len}")]
    SpanOutOfBounds {
        ad_id: u32,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("ad {ad_id}: span ad_id {span_ad} does not match")]
    WrongAd { ad_id: u32, span_ad: u32 },
}

#[derive(Debug, Clone)]
pub struct MaskOptions {
    /// Spans with score < min_score are dropped.
    pub min_score: f64,
    /// Mask spans whose canonicalization was rejected.
    pub mask_rejected: bool,
    pub oh_as_zero: bool,
    /// Run the email pattern over the raw description.
    pub email_regex: bool,
}

impl Default for MaskOptions {
    fn default() -> Self {
        MaskOptions {
            min_score: 0.9,
            mask_rejected: true,
            oh_as_zero: true,
            email_regex: true,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SpanApplyStats {
    pub spans_total: u64,
    pub below_min_score: u64,
    pub dropped_overlap: u64,
    pub masked_spans: u64,
    pub canonical_ok: u64,
    pub canonical_rejected: u64,
    /// Rejection reason -> count.
    pub rejection_reasons: BTreeMap<String, u64>,
    pub emails_found: u64,
    pub email_masks: u64,
}

impl SpanApplyStats {
    pub fn merge(&mut self, other: &SpanApplyStats) {
        self.spans_total += other.spans_total;
        self.below_min_score += other.below_min_score;
        self.dropped_overlap += other.dropped_overlap;
        self.masked_spans += other.masked_spans;
        self.canonical_ok += other.canonical_ok;
        self.canonical_rejected += other.canonical_rejected;
        for (k, v) in &other.rejection_reasons {
            *self.rejection_reasons.entry(k.clone()).or_insert(0) += v;
        }
        self.emails_found += other.emails_found;
        self.email_masks += other.email_masks;
    }
}

/// Rewrites any literal occurrence of a mask token to `[[WORD]]` so that
/// tokens in `masked_description` can only come from masking itself.
pub fn escape_mask_tokens(segment: &str) -> String {
    let mut out = segment.to_string();
    for token in MASK_TOKENS {
        if out.contains(token) {
            out = out.replace(token, &format!("[{token}]"));
        }
    }
    out
}

/// Counts true mask-token occurrences, skipping escaped `[[WORD]]` forms
/// (an occurrence immediately preceded by `[` is escaped).
pub fn count_mask_tokens(text: &str, token: &str) -> usize {
    let chars: Vec<char> = text.chars().collect();
    let tok: Vec<char> = token.chars().collect();
    let mut count = 0;
    let mut i = 0;
    while i + tok.len() <= chars.len() {
        if chars[i..i + tok.len()] == tok[..] {
            let escaped = i > 0 && chars[i - 1] == '[';
            if !escaped {
                count += 1;
            }
            i += tok.len();
        } else {
            i += 1;
        }
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum MaskKind {
    Span,
    Email,
}

/// Applies NER spans (and the email pattern) to one ad: fills `entities`
/// and `masked_description`, returning per-ad stats.
///
/// Overlapping spans are resolved by higher score, then earlier start
/// (then shorter span, then category order, for full determinism). Email
/// pattern masks rank below every surviving span mask. A span out of
/// bounds is fatal for the ad.
pub fn apply_spans(
    record: &mut AdRecord,
    spans: &[RawSpan],
    opts: &MaskOptions,
) -> Result<SpanApplyStats, ExtractError> {
    let mut stats = SpanApplyStats::default();
    let chars: Vec<char> = record.description.chars().collect();
    let n = chars.len();

    for span in spans {
        if span.ad_id != record.ad_id {
            return Err(ExtractError::WrongAd {
                ad_id: record.ad_id,
                span_ad: span.ad_id,
            });
        }
        if span.start >= span.end || span.end > n {
            return Err(ExtractError::SpanOutOfBounds {
                ad_id: record.ad_id,
                start: span.start,
                end: span.end,
                len: n,
            });
        }
    }

    stats.spans_total = spans.len() as u64;
    let mut candidates: Vec<&RawSpan> = spans
        .iter()
        .filter(|s| {
            if s.score < opts.min_score {
                stats.below_min_score += 1;
                false
            } else {
                true
            }
        })
        .collect();

    // Overlap resolution: score desc, start asc, end asc, category order.
    candidates.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.start.cmp(&b.start))
            .then(a.end.cmp(&b.end))
            .then(a.category.cmp(&b.category))
    });
    let mut kept: Vec<&RawSpan> = Vec::new();
    for cand in candidates {
        let overlaps = kept
            .iter()
            .any(|k| cand.start < k.end && k.start < cand.end);
        if overlaps {
            stats.dropped_overlap += 1;
        } else {
            kept.push(cand);
        }
    }

    // (start, end, token, kind) for every region to be replaced.
    let mut masks: Vec<(usize, usize, &'static str, MaskKind)> = Vec::new();
    let mut entities: Vec<CanonicalEntity> = Vec::new();

    for span in &kept {
        let surface: String = chars[span.start..span.end].iter().collect();
        match canonicalize_span_value(span.category, &surface, opts.oh_as_zero) {
            Ok(value) => {
                stats.canonical_ok += 1;
                entities.push(CanonicalEntity {
                    category: span.category,
                    value,
                    source: EntitySource::Span,
                });
                masks.push((span.start, span.end, span.category.mask_token(), MaskKind::Span));
            }
            Err(reason) => {
                stats.canonical_rejected += 1;
                *stats.rejection_reasons.entry(reason).or_insert(0) += 1;
                log::debug!(
                    "ad {}: rejected {} span `{}`",
                    record.ad_id,
                    span.category,
                    surface
                );
                if opts.mask_rejected {
                    masks.push((span.start, span.end, span.category.mask_token(), MaskKind::Span));
                }
            }
        }
    }

    if opts.email_regex {
        for m in find_emails(&record.description) {
            stats.emails_found += 1;
            entities.push(CanonicalEntity {
                category: EntityCategory::Email,
                value: m.canonical,
                source: EntitySource::Regex,
            });
            // Email masks yield to span masks on overlap (and to earlier
            // email matches; the regex cannot produce overlapping matches).
            let overlaps = masks.iter().any(|k| m.start < k.1 && k.0 < m.end);
            if !overlaps {
                stats.email_masks += 1;
                masks.push((m.start, m.end, EntityCategory::Email.mask_token(), MaskKind::Email));
            }
        }
    }

    masks.sort_by_key(|m| m.0);
    stats.masked_spans = masks.iter().filter(|m| m.3 == MaskKind::Span).count() as u64;

    let mut out = String::with_capacity(record.description.len());
    let mut cursor = 0usize;
    for (start, end, token, _) in &masks {
        let segment: String = chars[cursor..*start].iter().collect();
        out.push_str(&escape_mask_tokens(&segment));
        out.push_str(token);
        cursor = *end;
    }
    let tail: String = chars[cursor..].iter().collect();
    out.push_str(&escape_mask_tokens(&tail));
    record.masked_description = Some(out);

    merge_entities(record, entities);
    Ok(stats)
}

/// Canonicalizes metadata-borne mentions (structured phones, location
/// strings) into entities. Returns (ok, rejected) counts.
pub fn extract_metadata_entities(record: &mut AdRecord, oh_as_zero: bool) -> (u64, u64) {
    let mut ok = 0;
    let mut rejected = 0;
    let mut entities = Vec::new();
    for phone in &record.structured_phones {
        match canonicalize_phone(phone, oh_as_zero) {
            Ok(value) => {
                ok += 1;
                entities.push(CanonicalEntity {
                    category: EntityCategory::PhoneNumber,
                    value,
                    source: EntitySource::Metadata,
                });
            }
            Err(reason) => {
                rejected += 1;
                log::debug!("ad {}: rejected metadata phone `{phone}`: {reason}", record.ad_id);
            }
        }
    }
    for loc in &record.location_strings {
        match canonicalize_handle(loc, EntityCategory::Location) {
            Ok(value) => {
                ok += 1;
                entities.push(CanonicalEntity {
                    category: EntityCategory::Location,
                    value,
                    source: EntitySource::Metadata,
                });
            }
            Err(_) => rejected += 1,
        }
    }
    merge_entities(record, entities);
    (ok, rejected)
}

/// Inserts entities, deduplicating on (category, value); the first source
/// encountered wins. The list stays sorted for deterministic output.
fn merge_entities(record: &mut AdRecord, new: Vec<CanonicalEntity>) {
    let mut map: BTreeMap<(EntityCategory, String), EntitySource> = record
        .entities
        .iter()
        .map(|e| ((e.category, e.value.clone()), e.source))
        .collect();
    for e in new {
        map.entry((e.category, e.value)).or_insert(e.source);
    }
    record.entities = map
        .into_iter()
        .map(|((category, value), source)| CanonicalEntity {
            category,
            value,
            source,
        })
        .collect();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{deduplicate, RawAd};

    fn record(desc: &str) -> AdRecord {
        let raw = RawAd {
            post_id: "p0".into(),
            description: desc.into(),
            title: None,
            location_strings: vec![],
            posting_dates: vec![],
            structured_phones: vec![],
            image_hashes: vec![],
            provenance: "own".into(),
        };
        deduplicate(vec![raw], false).0.pop().unwrap()
    }

    fn span(start: usize, end: usize, category: EntityCategory, score: f64) -> RawSpan {
        RawSpan {
            ad_id: 0,
            start,
            end,
            category,
            score,
        }
    }

    #[test]
    fn phone_plain_formats() {
        assert_eq!(canonicalize_phone("(254) 123-4567", true).unwrap(), "+12541234567");
        assert_eq!(canonicalize_phone("254.123.4567", true).unwrap(), "+12541234567");
        assert_eq!(canonicalize_phone("1-254-123-4567", true).unwrap(), "+12541234567");
        assert_eq!(canonicalize_phone("+1 254 123 4567", true).unwrap(), "+12541234567");
    }

    #[test]
    fn phone_spelled_digits() {
        assert_eq!(canonicalize_phone("2five4onetwothree4567", true).unwrap(), "+12541234567");
        assert_eq!(
            canonicalize_phone("two five four one two three four five six seven", false).unwrap(),
            "+12541234567"
        );
    }

    #[test]
    fn phone_oh_flag() {
        assert_eq!(canonicalize_phone("3oh35550142", true).unwrap(), "+13035550142");
        assert_eq!(canonicalize_phone("3oh35550142", false), Err(PhoneRejection::TooFewDigits));
    }

    #[test]
    fn phone_rejections() {
        assert_eq!(canonicalize_phone("123-4567", true), Err(PhoneRejection::TooFewDigits));
        assert_eq!(canonicalize_phone("+44 20 7946 0958", true), Err(PhoneRejection::NonUs));
        assert_eq!(canonicalize_phone("25412345678", true), Err(PhoneRejection::NonUs));
        assert_eq!(canonicalize_phone("125412345678", true), Err(PhoneRejection::TooManyDigits));
        assert_eq!(canonicalize_phone("no digits here", false), Err(PhoneRejection::TooFewDigits));
    }

    #[test]
    fn email_extraction() {
        let text = "reach me at Bob.Smith+x@Mail.Example.COM or bob.smith+x@mail.example.com!";
        let emails = extract_emails(text);
        assert_eq!(emails, vec!["bob.smith+x@mail.example.com".to_string()]);
        assert!(extract_emails("no at sign").is_empty());
        assert_eq!(extract_emails("a@b.co."), vec!["a@b.co".to_string()]);
    }

    #[test]
    fn handle_normalization() {
        assert_eq!(
            canonicalize_handle("@Candy_TX ", EntityCategory::Snapchat).unwrap(),
            "candy_tx"
        );
        assert_eq!(
            canonicalize_handle("  Big \t Tex ", EntityCategory::NameNickname).unwrap(),
            "big tex"
        );
        // Non-handle categories keep a leading @.
        assert_eq!(
            canonicalize_handle("@home", EntityCategory::Location).unwrap(),
            "@home"
        );
        assert_eq!(
            canonicalize_handle("  ", EntityCategory::Twitter),
            Err(HandleRejection::Empty)
        );
        assert_eq!(
            canonicalize_handle("@", EntityCategory::Twitter),
            Err(HandleRejection::Empty)
        );
        assert_eq!(
            canonicalize_handle("@@x", EntityCategory::Twitter),
            Err(HandleRejection::Invalid)
        );
    }

    #[test]
    fn min_score_gate() {
        let mut rec = record("call (254) 123-4567 now");
        let spans = vec![span(5, 19, EntityCategory::PhoneNumber, 0.85)];
        let stats = apply_spans(&mut rec, &spans, &MaskOptions::default()).unwrap();
        assert_eq!(stats.below_min_score, 1);
        assert_eq!(rec.masked_description.as_deref(), Some("call (254) 123-4567 now"));
        assert!(rec.entities.is_empty());
    }

    #[test]
    fn overlap_resolution_prefers_score_then_start() {
        let mut rec = record("abcdefghij");
        let spans = vec![
            span(0, 5, EntityCategory::NameNickname, 0.95),
            span(3, 8, EntityCategory::Location, 0.97),
        ];
        let stats = apply_spans(&mut rec, &spans, &MaskOptions::default()).unwrap();
        assert_eq!(stats.dropped_overlap, 1);
        assert_eq!(rec.masked_description.as_deref(), Some("abc[LOCATION]ij"));

        let mut rec = record("abcdefghij");
        let spans = vec![
            span(3, 8, EntityCategory::Location, 0.95),
            span(0, 5, EntityCategory::NameNickname, 0.95),
        ];
        apply_spans(&mut rec, &spans, &MaskOptions::default()).unwrap();
        assert_eq!(rec.masked_description.as_deref(), Some("[NAME]fghij"));
    }

    #[test]
    fn masking_and_escaping() {
        let mut rec = record("Call (254) 123-4567 or [PHONE] maybe");
        let spans = vec![span(5, 19, EntityCategory::PhoneNumber, 0.99)];
        let stats = apply_spans(&mut rec, &spans, &MaskOptions::default()).unwrap();
        let masked = rec.masked_description.as_deref().unwrap();
        assert_eq!(masked, "Call [PHONE] or [[PHONE]] maybe");
        assert_eq!(count_mask_tokens(masked, "[PHONE]"), 1);
        assert_eq!(stats.masked_spans, 1);
        assert_eq!(
            rec.entities,
            vec![CanonicalEntity {
                category: EntityCategory::PhoneNumber,
                value: "+12541234567".into(),
                source: EntitySource::Span,
            }]
        );
    }

    #[test]
    fn rejected_span_masked_by_default_but_not_when_disabled() {
        let mut rec = record("call 123-4567 now");
        let spans = vec![span(5, 13, EntityCategory::PhoneNumber, 0.99)];
        let stats = apply_spans(&mut rec, &spans, &MaskOptions::default()).unwrap();
        assert_eq!(stats.canonical_rejected, 1);
        assert_eq!(stats.rejection_reasons["too_few_digits"], 1);
        assert_eq!(rec.masked_description.as_deref(), Some("call [PHONE] now"));
        assert!(rec.entities.is_empty());

        let mut rec = record("call 123-4567 now");
        let opts = MaskOptions {
            mask_rejected: false,
            ..MaskOptions::default()
        };
        apply_spans(&mut rec, &spans, &opts).unwrap();
        assert_eq!(rec.masked_description.as_deref(), Some("call 123-4567 now"));
    }

    #[test]
    fn email_mask_priority_below_spans() {
        let text = "write a@b.co today";
        let mut rec = record(text);
        // A name span covering the email wins the mask; the email entity
        // is still recorded by the regex pass.
        let spans = vec![span(6, 12, EntityCategory::NameNickname, 0.95)];
        let stats = apply_spans(&mut rec, &spans, &MaskOptions::default()).unwrap();
        assert_eq!(rec.masked_description.as_deref(), Some("write [NAME] today"));
        assert_eq!(stats.emails_found, 1);
        assert_eq!(stats.email_masks, 0);
        assert!(rec
            .entities
            .iter()
            .any(|e| e.category == EntityCategory::Email && e.value == "a@b.co"));

        let mut rec = record(text);
        let stats = apply_spans(&mut rec, &[], &MaskOptions::default()).unwrap();
        assert_eq!(rec.masked_description.as_deref(), Some("write [EMAIL] today"));
        assert_eq!(stats.email_masks, 1);
    }

    #[test]
    fn unicode_offsets_are_scalar_values() {
        let text = "💜💜 a@b.co 💜";
        let mut rec = record(text);
        let spans = vec![span(3, 9, EntityCategory::Email, 0.99)];
        apply_spans(&mut rec, &spans, &MaskOptions::default()).unwrap();
        assert_eq!(rec.masked_description.as_deref(), Some("💜💜 [EMAIL] 💜"));
    }

    #[test]
    fn span_out_of_bounds_is_fatal() {
        let mut rec = record("short");
        let spans = vec![span(2, 9, EntityCategory::NameNickname, 0.99)];
        let err = apply_spans(&mut rec, &spans, &MaskOptions::default()).unwrap_err();
        assert!(matches!(err, ExtractError::SpanOutOfBounds { .. }));
    }

    #[test]
    fn metadata_entities_canonicalized() {
        let mut rec = record("hello");
        rec.structured_phones.insert("(254) 123-4567".into());
        rec.structured_phones.insert("bogus".into());
        rec.location_strings.insert("Dallas, TX".into());
        let (ok, rejected) = extract_metadata_entities(&mut rec, true);
        assert_eq!((ok, rejected), (2, 1));
        assert_eq!(rec.entities.len(), 2);
        assert_eq!(rec.entities[0].category, EntityCategory::PhoneNumber);
        assert_eq!(rec.entities[0].value, "+12541234567");
        assert_eq!(rec.entities[1].category, EntityCategory::Location);
        assert_eq!(rec.entities[1].value, "dallas, tx");
    }

    #[test]
    fn span_line_parser_rejects_garbage() {
        assert!(parse_span_line("{}").is_err());
        assert!(parse_span_line("not json").is_err());
        assert!(parse_span_line(
            r#"{"ad_id":0,"start":5,"end":2,"category":"email","score":1.0}"#
        )
        .is_err());
        let ok = parse_span_line(
            r#"{"ad_id":3,"start":0,"end":4,"category":"phone_number","score":0.97}"#,
        )
        .unwrap();
        assert_eq!(ok.category, EntityCategory::PhoneNumber);
    }
}
