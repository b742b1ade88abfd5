//! Ad ingestion and exact-duplicate collapse.
//!
//! Ads arrive as JSONL with a configurable field mapping. Duplicate posts
//! are collapsed on byte-identical description text; all other metadata is
//! aggregated by set union so the collapse is order-independent.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::extract::CanonicalEntity;

/// Cap on per-line diagnostics retained in stats; the totals keep counting.
const DIAG_CAP: usize = 100;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Line { line: usize, msg: String },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// One raw ad as read from an input feed, before deduplication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawAd {
    pub post_id: String,
    pub description: String,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub location_strings: Vec<String>,
    #[serde(default)]
    pub posting_dates: Vec<String>,
    #[serde(default)]
    pub structured_phones: Vec<String>,
    #[serde(default)]
    pub image_hashes: Vec<String>,
    /// Tag naming the source feed this record came from.
    pub provenance: String,
}

/// Maps input JSON keys onto `RawAd` fields. Defaults use the canonical
/// field names, so a feed that already matches needs no mapping.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemaMap {
    pub post_id: String,
    pub description: String,
    pub title: String,
    pub location_strings: String,
    pub posting_dates: String,
    pub structured_phones: String,
    pub image_hashes: String,
    pub provenance: String,
}

impl Default for SchemaMap {
    fn default() -> Self {
        SchemaMap {
            post_id: "post_id".into(),
            description: "description".into(),
            title: "title".into(),
            location_strings: "location_strings".into(),
            posting_dates: "posting_dates".into(),
            structured_phones: "structured_phones".into(),
            image_hashes: "image_hashes".into(),
            provenance: "provenance".into(),
        }
    }
}

impl SchemaMap {
    /// Applies `from=to` overrides, e.g. `"id=post_id,body=description"`
    /// maps input key `id` onto `post_id`. Unknown targets are errors.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self, CorpusError> {
        for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (from, to) = part.split_once('=').ok_or_else(|| CorpusError::Line {
                line: 0,
                msg: format!("schema override `{part}` is not `input_key=field`"),
            })?;
            let from = from.trim().to_string();
            match to.trim() {
                "post_id" => self.post_id = from,
                "description" => self.description = from,
                "title" => self.title = from,
                "location_strings" => self.location_strings = from,
                "posting_dates" => self.posting_dates = from,
                "structured_phones" => self.structured_phones = from,
                "image_hashes" => self.image_hashes = from,
                "provenance" => self.provenance = from,
                other => {
                    return Err(CorpusError::Line {
                        line: 0,
                        msg: format!("unknown schema field `{other}`"),
                    })
                }
            }
        }
        Ok(self)
    }
}

/// One deduplicated ad. `ad_id` is the lexicographic rank of the distinct
/// description bytes, so ids are stable under input reordering.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdRecord {
    pub ad_id: u32,
    pub description: String,
    pub merged_post_ids: BTreeSet<String>,
    pub titles: BTreeSet<String>,
    /// Parsed posting dates, normalized to ISO `YYYY-MM-DD`.
    pub posting_dates: BTreeSet<String>,
    /// Date strings that failed lenient parsing, kept verbatim.
    pub raw_dates: BTreeSet<String>,
    pub location_strings: BTreeSet<String>,
    pub structured_phones: BTreeSet<String>,
    /// Lowercase hex image hashes.
    pub image_hashes: BTreeSet<String>,
    pub provenances: BTreeSet<String>,
    /// Filled by the extract stage.
    #[serde(default)]
    pub entities: Vec<CanonicalEntity>,
    /// Filled by the extract stage.
    #[serde(default)]
    pub masked_description: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct LineDiagnostic {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestStats {
    pub lines_total: u64,
    pub records_ok: u64,
    pub skipped_invalid_json: u64,
    pub skipped_not_object: u64,
    pub skipped_missing_post_id: u64,
    pub skipped_bad_field_type: u64,
    pub invalid_image_hashes: u64,
    /// First `DIAG_CAP` per-line diagnostics; counters above keep the totals.
    pub diagnostics: Vec<LineDiagnostic>,
}

impl IngestStats {
    fn diag(&mut self, line: usize, reason: impl Into<String>) {
        let reason = reason.into();
        log::warn!("ingest line {line}: {reason}");
        if self.diagnostics.len() < DIAG_CAP {
            self.diagnostics.push(LineDiagnostic { line, reason });
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DedupStats {
    pub input_count: u64,
    /// Records dropped for an empty description.
    pub dropped_empty: u64,
    pub unique_count: u64,
    /// Collapsed duplicates over kept records: (kept - unique) / kept.
    pub duplicate_rate: f64,
}

fn value_to_string(v: &serde_json::Value) -> Option<String> {
    match v {
        serde_json::Value::String(s) => Some(s.clone()),
        serde_json::Value::Number(n) => Some(n.to_string()),
        serde_json::Value::Bool(b) => Some(b.to_string()),
        _ => None,
    }
}

/// Accepts a scalar or an array of scalars; anything else is `None`.
fn value_to_string_list(v: &serde_json::Value) -> Option<Vec<String>> {
    match v {
        serde_json::Value::Array(items) => {
            let mut out = Vec::with_capacity(items.len());
            for item in items {
                out.push(value_to_string(item)?);
            }
            Some(out)
        }
        _ => value_to_string(v).map(|s| vec![s]),
    }
}

/// Parses one JSONL line into a `RawAd` under the given schema map.
///
/// Must never panic on arbitrary input; malformed lines are errors.
pub fn parse_raw_line(
    line: &str,
    schema: &SchemaMap,
) -> Result<RawAd, (String, &'static str)> {
    let value: serde_json::Value = serde_json::from_str(line)
        .map_err(|e| (format!("invalid json: {e}"), "invalid_json"))?;
    let obj = value
        .as_object()
        .ok_or_else(|| ("line is not a json object".to_string(), "not_object"))?;

    let post_id = match obj.get(&schema.post_id).map(value_to_string) {
        Some(Some(id)) if !id.is_empty() => id,
        _ => {
            return Err((
                format!("missing or empty `{}`", schema.post_id),
                "missing_post_id",
            ))
        }
    };

    let description = match obj.get(&schema.description) {
        None => String::new(),
        Some(v) => value_to_string(v)
            .ok_or_else(|| (format!("`{}` is not a string", schema.description), "bad_field"))?,
    };

    let title = match obj.get(&schema.title) {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => Some(
            value_to_string(v)
                .ok_or_else(|| (format!("`{}` is not a string", schema.title), "bad_field"))?,
        ),
    };

    let list_field = |key: &str| -> Result<Vec<String>, (String, &'static str)> {
        match obj.get(key) {
            None | Some(serde_json::Value::Null) => Ok(Vec::new()),
            Some(v) => value_to_string_list(v)
                .ok_or_else(|| (format!("`{key}` is not a string list"), "bad_field")),
        }
    };

    let provenance = match obj.get(&schema.provenance) {
        None | Some(serde_json::Value::Null) => "unknown".to_string(),
        Some(v) => value_to_string(v)
            .ok_or_else(|| (format!("`{}` is not a string", schema.provenance), "bad_field"))?,
    };

    Ok(RawAd {
        post_id,
        description,
        title,
        location_strings: list_field(&schema.location_strings)?,
        posting_dates: list_field(&schema.posting_dates)?,
        structured_phones: list_field(&schema.structured_phones)?,
        image_hashes: list_field(&schema.image_hashes)?,
        provenance,
    })
}

/// Reads a JSONL feed. Malformed lines are skipped and counted; image
/// hashes are lowercased, with non-hex strings dropped.
pub fn ingest(path: &Path, schema: &SchemaMap) -> Result<(Vec<RawAd>, IngestStats), CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    ingest_reader(BufReader::new(file), schema)
}

pub fn ingest_reader<R: BufRead>(
    reader: R,
    schema: &SchemaMap,
) -> Result<(Vec<RawAd>, IngestStats), CorpusError> {
    let mut stats = IngestStats::default();
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| CorpusError::Io {
            path: format!("<line {line_no}>"),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        stats.lines_total += 1;
        match parse_raw_line(&line, schema) {
            Ok(mut ad) => {
                let before = ad.image_hashes.len() as u64;
                ad.image_hashes = ad
                    .image_hashes
                    .into_iter()
                    .map(|h| h.to_ascii_lowercase())
                    .filter(|h| !h.is_empty() && h.bytes().all(|b| b.is_ascii_hexdigit()))
                    .collect();
                stats.invalid_image_hashes += before - ad.image_hashes.len() as u64;
                stats.records_ok += 1;
                out.push(ad);
            }
            Err((msg, kind)) => {
                match kind {
                    "invalid_json" => stats.skipped_invalid_json += 1,
                    "not_object" => stats.skipped_not_object += 1,
                    "missing_post_id" => stats.skipped_missing_post_id += 1,
                    _ => stats.skipped_bad_field_type += 1,
                }
                stats.diag(line_no, msg);
            }
        }
    }
    Ok((out, stats))
}

/// Lenient date parsing: RFC 3339, common datetime shapes, date-only, and
/// US `m/d/Y`. Returns the ISO date on success.
pub fn parse_date_lenient(s: &str) -> Option<String> {
    let t = s.trim();
    if t.is_empty() {
        return None;
    }
    if let Ok(dt) = chrono::DateTime::parse_from_rfc3339(t) {
        return Some(dt.date_naive().format("%Y-%m-%d").to_string());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(t, fmt) {
            return Some(dt.date().format("%Y-%m-%d").to_string());
        }
    }
    for fmt in ["%Y-%m-%d", "%Y/%m/%d", "%m/%d/%Y"] {
        if let Ok(d) = chrono::NaiveDate::parse_from_str(t, fmt) {
            return Some(d.format("%Y-%m-%d").to_string());
        }
    }
    None
}

/// Collapses exact duplicates on description bytes (optionally trimmed
/// first) and aggregates metadata by set union.
///
/// Empty descriptions are dropped and counted. `ad_id` is assigned by
/// sorting the distinct descriptions, so the result does not depend on
/// input order. Running the output back through is a fixed point.
pub fn deduplicate(raws: Vec<RawAd>, trim: bool) -> (Vec<AdRecord>, DedupStats) {
    let mut stats = DedupStats {
        input_count: raws.len() as u64,
        ..DedupStats::default()
    };

    let mut groups: HashMap<String, Vec<RawAd>> = HashMap::new();
    for raw in raws {
        let desc = if trim {
            raw.description.trim().to_string()
        } else {
            raw.description.clone()
        };
        if desc.is_empty() {
            stats.dropped_empty += 1;
            continue;
        }
        groups.entry(desc).or_default().push(raw);
    }

    // Lexicographic byte order of the distinct descriptions fixes ad_id.
    let ordered: BTreeMap<String, Vec<RawAd>> = groups.into_iter().collect();
    stats.unique_count = ordered.len() as u64;
    let kept = stats.input_count - stats.dropped_empty;
    stats.duplicate_rate = if kept == 0 {
        0.0
    } else {
        (kept - stats.unique_count) as f64 / kept as f64
    };

    let mut records = Vec::with_capacity(ordered.len());
    for (ad_id, (description, members)) in ordered.into_iter().enumerate() {
        let mut rec = AdRecord {
            ad_id: ad_id as u32,
            description,
            merged_post_ids: BTreeSet::new(),
            titles: BTreeSet::new(),
            posting_dates: BTreeSet::new(),
            raw_dates: BTreeSet::new(),
            location_strings: BTreeSet::new(),
            structured_phones: BTreeSet::new(),
            image_hashes: BTreeSet::new(),
            provenances: BTreeSet::new(),
            entities: Vec::new(),
            masked_description: None,
        };
        for m in members {
            rec.merged_post_ids.insert(m.post_id);
            if let Some(t) = m.title {
                if !t.is_empty() {
                    rec.titles.insert(t);
                }
            }
            for d in m.posting_dates {
                match parse_date_lenient(&d) {
                    Some(iso) => {
                        rec.posting_dates.insert(iso);
                    }
                    None => {
                        rec.raw_dates.insert(d);
                    }
                }
            }
            rec.location_strings
                .extend(m.location_strings.into_iter().filter(|s| !s.is_empty()));
            rec.structured_phones
                .extend(m.structured_phones.into_iter().filter(|s| !s.is_empty()));
            rec.image_hashes.extend(m.image_hashes);
            rec.provenances.insert(m.provenance);
        }
        records.push(rec);
    }
    (records, stats)
}

/// Writes the corpus as JSONL, one `AdRecord` per line, keys in struct
/// declaration order. Output is byte-deterministic for a given corpus.
pub fn write_corpus(path: &Path, records: &[AdRecord]) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    for rec in records {
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n").map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
    }
    w.flush().map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<Vec<AdRecord>, CorpusError> {
    let file = File::open(path).map_err(|e| CorpusError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CorpusError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AdRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Line {
            line: idx + 1,
            msg: format!("bad ad record: {e}"),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(post_id: &str, desc: &str) -> RawAd {
        RawAd {
            post_id: post_id.into(),
            description: desc.into(),
            title: None,
            location_strings: vec![],
            posting_dates: vec![],
            structured_phones: vec![],
            image_hashes: vec![],
            provenance: "own".into(),
        }
    }

    #[test]
    fn collapse_rate_example() {
        // 10 records, 9 sharing one description -> 2 ads, rate 0.8.
        let mut raws: Vec<RawAd> = (0..9).map(|i| raw(&format!("p{i}"), "same text")).collect();
        raws.push(raw("p9", "other text"));
        let (recs, stats) = deduplicate(raws, false);
        assert_eq!(recs.len(), 2);
        assert_eq!(stats.unique_count, 2);
        assert!((stats.duplicate_rate - 0.8).abs() < 1e-12);
    }

    #[test]
    fn empty_descriptions_dropped_and_counted() {
        let raws = vec![raw("a", ""), raw("b", "x"), raw("c", "")];
        let (recs, stats) = deduplicate(raws, false);
        assert_eq!(recs.len(), 1);
        assert_eq!(stats.dropped_empty, 2);
        assert_eq!(stats.input_count, 3);
    }

    #[test]
    fn trim_flag_controls_comparison_basis() {
        let raws = vec![raw("a", "  hi"), raw("b", "hi")];
        let (recs, _) = deduplicate(raws.clone(), false);
        assert_eq!(recs.len(), 2, "no trim: distinct byte strings");
        let (recs, _) = deduplicate(raws, true);
        assert_eq!(recs.len(), 1, "trim: collapse to one ad");
        assert_eq!(recs[0].description, "hi");
    }

    #[test]
    fn ad_ids_are_input_order_independent() {
        let mut raws = vec![raw("a", "bbb"), raw("b", "aaa"), raw("c", "ccc"), raw("d", "aaa")];
        let (fwd, _) = deduplicate(raws.clone(), false);
        raws.reverse();
        let (rev, _) = deduplicate(raws, false);
        assert_eq!(fwd, rev);
        let descs: Vec<&str> = fwd.iter().map(|r| r.description.as_str()).collect();
        assert_eq!(descs, vec!["aaa", "bbb", "ccc"]);
        assert_eq!(fwd[0].merged_post_ids.len(), 2);
    }

    #[test]
    fn aggregation_unions_metadata() {
        let mut a = raw("p1", "same");
        a.posting_dates = vec!["2016-01-02".into(), "bogus".into()];
        a.location_strings = vec!["Dallas, TX".into()];
        a.image_hashes = vec!["ABCDEF".into()];
        let mut b = raw("p2", "same");
        b.posting_dates = vec!["2016-01-02T10:30:00Z".into()];
        b.location_strings = vec!["Seattle, WA".into()];
        b.provenance = "feed2".into();
        // ingest lowercases hashes; mimic that here since we call dedup directly
        a.image_hashes = vec!["abcdef".into()];
        let (recs, _) = deduplicate(vec![a, b], false);
        assert_eq!(recs.len(), 1);
        let r = &recs[0];
        assert_eq!(
            r.posting_dates.iter().cloned().collect::<Vec<_>>(),
            vec!["2016-01-02".to_string()]
        );
        assert_eq!(r.raw_dates.iter().cloned().collect::<Vec<_>>(), vec!["bogus".to_string()]);
        assert_eq!(r.location_strings.len(), 2);
        assert_eq!(r.provenances.len(), 2);
        assert_eq!(r.image_hashes.iter().cloned().collect::<Vec<_>>(), vec!["abcdef".to_string()]);
    }

    #[test]
    fn dedup_is_idempotent_on_descriptions() {
        let raws = vec![raw("a", "x"), raw("b", "x"), raw("c", "y")];
        let (recs, _) = deduplicate(raws, false);
        let again: Vec<RawAd> = recs
            .iter()
            .map(|r| raw(r.merged_post_ids.iter().next().unwrap(), &r.description))
            .collect();
        let (recs2, stats2) = deduplicate(again, false);
        assert_eq!(recs2.len(), recs.len());
        assert_eq!(stats2.duplicate_rate, 0.0);
    }

    #[test]
    fn post_id_conservation() {
        let raws = vec![raw("a", "x"), raw("b", "x"), raw("c", ""), raw("d", "y")];
        let n = raws.len() as u64;
        let (recs, stats) = deduplicate(raws, false);
        let merged: u64 = recs.iter().map(|r| r.merged_post_ids.len() as u64).sum();
        assert_eq!(merged, n - stats.dropped_empty);
    }

    #[test]
    fn ingest_skips_malformed_lines_with_diagnostics() {
        let input = "\
{\"post_id\":\"a1\",\"description\":\"hello\",\"provenance\":\"own\"}
not json at all
{\"description\":\"no id\",\"provenance\":\"own\"}
{\"post_id\":\"a2\",\"description\":\"world\",\"image_hashes\":[\"ABC123\",\"zzz\"]}
";
        let (ads, stats) = ingest_reader(input.as_bytes(), &SchemaMap::default()).unwrap();
        assert_eq!(ads.len(), 2);
        assert_eq!(stats.lines_total, 4);
        assert_eq!(stats.skipped_invalid_json, 1);
        assert_eq!(stats.skipped_missing_post_id, 1);
        assert_eq!(stats.invalid_image_hashes, 1);
        assert_eq!(ads[1].image_hashes, vec!["abc123".to_string()]);
        assert_eq!(ads[1].provenance, "unknown");
        assert_eq!(stats.diagnostics.len(), 2);
    }

    #[test]
    fn schema_map_renames_fields() {
        let schema = SchemaMap::default()
            .with_overrides("id=post_id,body=description,src=provenance")
            .unwrap();
        let ad = parse_raw_line(r#"{"id":"a1","body":"hello","src":"own"}"#, &schema).unwrap();
        assert_eq!(ad.post_id, "a1");
        assert_eq!(ad.description, "hello");
        assert_eq!(ad.provenance, "own");
    }

    #[test]
    fn corpus_roundtrip() {
        let (recs, _) = deduplicate(vec![raw("a", "x"), raw("b", "y")], false);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.jsonl");
        write_corpus(&path, &recs).unwrap();
        let back = read_corpus(&path).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn lenient_dates() {
        assert_eq!(parse_date_lenient("2016-03-04"), Some("2016-03-04".into()));
        assert_eq!(parse_date_lenient("2016-03-04T10:00:00Z"), Some("2016-03-04".into()));
        assert_eq!(parse_date_lenient("2016-03-04 10:00:00"), Some("2016-03-04".into()));
        assert_eq!(parse_date_lenient("3/4/2016"), Some("2016-03-04".into()));
        assert_eq!(parse_date_lenient("posted yesterday"), None);
    }
}
