//! Component-level weak labeling.
//!
//! Each connected component is scored by two heuristics and an ad
//! inherits its component's verdict:
//!
//! * distance — some pair of US-resolved locations inside the component
//!   lies more than a threshold (default 300 miles) apart;
//! * identifiers — the component carries at least `identifier_min`
//!   distinct phone numbers or emails, or at least `handle_min` distinct
//!   handles of one trackable platform.
//!
//! Location strings resolve through a [`GeoProvider`] behind a
//! persistent JSONL cache with bounded retries and concurrency.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AdRecord;
use crate::extract::EntityCategory;
use crate::graph::RelatednessGraph;

pub const EARTH_RADIUS_KM: f64 = 6371.0088;
pub const KM_PER_MILE: f64 = 1.609344;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("geocode cache line {0}: {1}")]
    Cache(usize, String),
    #[error("labels csv line {0}: {1}")]
    LabelsCsv(usize, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub name: String,
    pub lat: f64,
    pub lon: f64,
    /// ISO 3166-1 alpha-2 code, e.g. "US".
    pub country: String,
}

/// Great-circle distance in kilometers (haversine).
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (la1, la2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + la1.cos() * la2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().min(1.0).asin()
}

pub fn haversine_miles(a: GeoPoint, b: GeoPoint) -> f64 {
    haversine_km(a, b) / KM_PER_MILE
}

/// Canonical form of a location query: trimmed, lowercased, inner
/// whitespace collapsed to single spaces.
pub fn canonical_query(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// The first candidate located in the United States, in provider order.
pub fn first_us_point(candidates: &[Candidate]) -> Option<GeoPoint> {
    candidates
        .iter()
        .find(|c| c.country == "US")
        .map(|c| GeoPoint { lat: c.lat, lon: c.lon })
}

pub trait GeoProvider {
    fn resolve(&self, query: &str) -> Result<Vec<Candidate>, GeoError>;
}

/// Offline provider backed by a JSONL fixture of
/// `{"query": ..., "candidates": [...]}` lines. Queries are matched in
/// canonical form; unknown queries resolve to no candidates.
pub struct FixtureProvider {
    table: BTreeMap<String, Vec<Candidate>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheLine {
    query: String,
    candidates: Vec<Candidate>,
}

/// Parses one fixture/cache JSONL line into (canonical query, candidates).
pub fn parse_cache_line(line: &str) -> Result<(String, Vec<Candidate>), String> {
    let line = line.trim();
    let parsed: CacheLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    for c in &parsed.candidates {
        if !c.lat.is_finite() || !c.lon.is_finite() {
            return Err("non-finite coordinate".into());
        }
        if c.lat.abs() > 90.0 || c.lon.abs() > 180.0 {
            return Err(format!("coordinate out of range: {},{}", c.lat, c.lon));
        }
    }
    Ok((canonical_query(&parsed.query), parsed.candidates))
}

impl FixtureProvider {
    pub fn from_path(path: &Path) -> Result<FixtureProvider, LabelError> {
        let file = std::fs::File::open(path)?;
        let mut table = BTreeMap::new();
        for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (q, cands) = parse_cache_line(&line).map_err(|e| LabelError::Cache(i + 1, e))?;
            table.insert(q, cands);
        }
        Ok(FixtureProvider { table })
    }
}

impl GeoProvider for FixtureProvider {
    fn resolve(&self, query: &str) -> Result<Vec<Candidate>, GeoError> {
        Ok(self.table.get(&canonical_query(query)).cloned().unwrap_or_default())
    }
}

/// HTTP provider: GET `<base_url>?q=<query>`, optional `X-Api-Key`
/// header, expecting a JSON array of candidates. Server errors and 429
/// map to retryable transport errors; other failures are malformed.
pub struct LiveProvider {
    pub base_url: String,
    pub api_key: Option<String>,
}

impl LiveProvider {
    pub fn from_env(base_url: &str) -> LiveProvider {
        LiveProvider {
            base_url: base_url.to_string(),
            api_key: std::env::var("ADGRAPH_GEO_KEY").ok(),
        }
    }
}

impl GeoProvider for LiveProvider {
    fn resolve(&self, query: &str) -> Result<Vec<Candidate>, GeoError> {
        let mut req = ureq::get(&self.base_url).query("q", query);
        if let Some(key) = &self.api_key {
            req = req.set("X-Api-Key", key);
        }
        match req.call() {
            Ok(resp) => {
                let body = resp
                    .into_string()
                    .map_err(|e| GeoError::Transport(e.to_string()))?;
                serde_json::from_str::<Vec<Candidate>>(&body)
                    .map_err(|e| GeoError::Malformed(e.to_string()))
            }
            Err(ureq::Error::Status(code, _)) if code == 429 || code >= 500 => {
                Err(GeoError::Transport(format!("status {code}")))
            }
            Err(ureq::Error::Status(code, _)) => {
                Err(GeoError::Malformed(format!("status {code}")))
            }
            Err(e) => Err(GeoError::Transport(e.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ResolveStats {
    pub queries: u64,
    pub cache_hits: u64,
    pub provider_calls: u64,
    pub failed: u64,
}

/// Wraps a provider with a persistent JSONL cache keyed by canonical
/// query. Empty candidate lists are cached; transport failures are
/// retried with exponential backoff and, if they persist, left uncached.
pub struct CachedResolver<P: GeoProvider> {
    provider: P,
    cache_path: Option<PathBuf>,
    cache: BTreeMap<String, Vec<Candidate>>,
    pub retries: u32,
    pub backoff_ms: u64,
    pub concurrency: usize,
}

impl<P: GeoProvider + Sync> CachedResolver<P> {
    pub fn new(provider: P, cache_path: Option<&Path>) -> Result<CachedResolver<P>, LabelError> {
        let mut cache = BTreeMap::new();
        if let Some(path) = cache_path {
            if path.exists() {
                let file = std::fs::File::open(path)?;
                for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let (q, cands) =
                        parse_cache_line(&line).map_err(|e| LabelError::Cache(i + 1, e))?;
                    cache.insert(q, cands);
                }
            }
        }
        Ok(CachedResolver {
            provider,
            cache_path: cache_path.map(Path::to_path_buf),
            cache,
            retries: 3,
            backoff_ms: 250,
            concurrency: 4,
        })
    }

    /// Resolves every query (canonicalized), using the cache first and a
    /// bounded worker pool for the rest. Returns candidates per
    /// canonical query; queries that failed after retries are absent.
    pub fn resolve_all(
        &mut self,
        queries: &BTreeSet<String>,
    ) -> Result<(BTreeMap<String, Vec<Candidate>>, ResolveStats), LabelError> {
        let mut stats = ResolveStats::default();
        let mut out: BTreeMap<String, Vec<Candidate>> = BTreeMap::new();
        let mut misses: Vec<String> = Vec::new();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for raw in queries {
            let q = canonical_query(raw);
            if q.is_empty() || !seen.insert(q.clone()) {
                continue;
            }
            stats.queries += 1;
            if let Some(cands) = self.cache.get(&q) {
                stats.cache_hits += 1;
                out.insert(q, cands.clone());
            } else {
                misses.push(q);
            }
        }

        if !misses.is_empty() {
            let work: Mutex<VecDeque<String>> = Mutex::new(misses.into_iter().collect());
            let results: Mutex<Vec<(String, Option<Vec<Candidate>>, u64)>> =
                Mutex::new(Vec::new());
            let workers = self.concurrency.max(1);
            let provider = &self.provider;
            let (retries, backoff_ms) = (self.retries, self.backoff_ms);
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let q = match work.lock().unwrap().pop_front() {
                            Some(q) => q,
                            None => break,
                        };
                        let mut calls = 0u64;
                        let mut outcome = None;
                        for attempt in 0..retries.max(1) {
                            calls += 1;
                            match provider.resolve(&q) {
                                Ok(cands) => {
                                    outcome = Some(cands);
                                    break;
                                }
                                Err(GeoError::Transport(msg)) => {
                                    log::warn!("geocode transport failure for {q:?}: {msg}");
                                    if attempt + 1 < retries.max(1) {
                                        std::thread::sleep(std::time::Duration::from_millis(
                                            backoff_ms << attempt,
                                        ));
                                    }
                                }
                                Err(GeoError::Malformed(msg)) => {
                                    log::warn!("geocode malformed response for {q:?}: {msg}");
                                    break;
                                }
                            }
                        }
                        results.lock().unwrap().push((q, outcome, calls));
                    });
                }
            });
            for (q, outcome, calls) in results.into_inner().unwrap() {
                stats.provider_calls += calls;
                match outcome {
                    Some(cands) => {
                        self.cache.insert(q.clone(), cands.clone());
                        out.insert(q, cands);
                    }
                    None => stats.failed += 1,
                }
            }
            self.persist()?;
        }
        Ok((out, stats))
    }

    /// Rewrites the cache file sorted by query, one JSON object per line.
    fn persist(&self) -> Result<(), LabelError> {
        let Some(path) = &self.cache_path else {
            return Ok(());
        };
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        for (query, candidates) in &self.cache {
            let line = serde_json::to_string(&CacheLine {
                query: query.clone(),
                candidates: candidates.clone(),
            })
            .expect("cache line serializes");
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LabelOptions {
    pub distance_miles: f64,
    pub identifier_min: usize,
    pub handle_min: usize,
}

impl Default for LabelOptions {
    fn default() -> Self {
        LabelOptions { distance_miles: 300.0, identifier_min: 2, handle_min: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceWitness {
    pub query_a: String,
    pub query_b: String,
    pub miles: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifierWitness {
    pub category: EntityCategory,
    pub distinct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentVerdict {
    pub component_id: u32,
    pub positive: bool,
    pub distance: Option<DistanceWitness>,
    pub identifiers: Option<IdentifierWitness>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicOverlap {
    pub distance_only: u64,
    pub identifiers_only: u64,
    pub both: u64,
    pub none: u64,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LabelStats {
    pub components_total: u64,
    pub components_positive: u64,
    pub ads_total: u64,
    pub ads_positive: u64,
    pub overlap: HeuristicOverlap,
    pub resolve: ResolveStats,
}

/// All distinct canonical location queries across the corpus.
pub fn collect_location_queries(records: &[AdRecord]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for rec in records {
        for ent in &rec.entities {
            if ent.category == EntityCategory::Location {
                let q = canonical_query(&ent.value);
                if !q.is_empty() {
                    out.insert(q);
                }
            }
        }
    }
    out
}

/// Checks whether any pair of points is farther apart than
/// `threshold_miles`, scanning pairs in the order given and returning
/// the first witness. A bounding-box corner pre-check skips the scan
/// when even the extreme corners stay inside the threshold (sound for
/// spans below 90 degrees of latitude and 180 of longitude, where the
/// pairwise maximum is attained at box corners).
fn distance_scan(
    points: &[(String, GeoPoint)],
    threshold_miles: f64,
) -> Option<DistanceWitness> {
    if points.len() < 2 {
        return None;
    }
    let (mut lat_min, mut lat_max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut lon_min, mut lon_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, p) in points {
        lat_min = lat_min.min(p.lat);
        lat_max = lat_max.max(p.lat);
        lon_min = lon_min.min(p.lon);
        lon_max = lon_max.max(p.lon);
    }
    if lat_max - lat_min < 90.0 && lon_max - lon_min < 180.0 {
        let corners = [
            GeoPoint { lat: lat_min, lon: lon_min },
            GeoPoint { lat: lat_min, lon: lon_max },
            GeoPoint { lat: lat_max, lon: lon_min },
            GeoPoint { lat: lat_max, lon: lon_max },
        ];
        let mut max_corner = 0.0f64;
        for i in 0..corners.len() {
            for j in i + 1..corners.len() {
                max_corner = max_corner.max(haversine_miles(corners[i], corners[j]));
            }
        }
        if max_corner <= threshold_miles {
            return None;
        }
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let miles = haversine_miles(points[i].1, points[j].1);
            if miles > threshold_miles {
                return Some(DistanceWitness {
                    query_a: points[i].0.clone(),
                    query_b: points[j].0.clone(),
                    miles,
                });
            }
        }
    }
    None
}

fn identifier_scan(
    records: &[AdRecord],
    members: &[u32],
    opts: &LabelOptions,
) -> Option<IdentifierWitness> {
    let mut distinct: BTreeMap<EntityCategory, BTreeSet<&str>> = BTreeMap::new();
    for &ad in members {
        for ent in &records[ad as usize].entities {
            distinct.entry(ent.category).or_default().insert(ent.value.as_str());
        }
    }
    let checks = [
        (EntityCategory::PhoneNumber, opts.identifier_min),
        (EntityCategory::Email, opts.identifier_min),
        (EntityCategory::Onlyfans, opts.handle_min),
        (EntityCategory::Snapchat, opts.handle_min),
        (EntityCategory::Twitter, opts.handle_min),
    ];
    for (cat, min) in checks {
        let n = distinct.get(&cat).map_or(0, BTreeSet::len);
        if min > 0 && n >= min {
            return Some(IdentifierWitness { category: cat, distinct: n });
        }
    }
    None
}

#[derive(Debug)]
pub struct LabelOutcome {
    pub verdicts: BTreeMap<u32, ComponentVerdict>,
    /// Per ad id, the inherited component verdict.
    pub ad_labels: Vec<bool>,
    pub stats: LabelStats,
}

/// Scores every component and labels its ads. `resolved` maps canonical
/// location queries to the point chosen for them (first US candidate);
/// queries missing from the map contribute nothing.
pub fn label_components(
    records: &[AdRecord],
    graph: &RelatednessGraph,
    resolved: &BTreeMap<String, GeoPoint>,
    opts: &LabelOptions,
) -> LabelOutcome {
    let mut verdicts = BTreeMap::new();
    let mut ad_labels = vec![false; records.len()];
    let mut stats = LabelStats {
        components_total: graph.component_index.len() as u64,
        ads_total: records.len() as u64,
        ..LabelStats::default()
    };
    for (&comp, members) in &graph.component_index {
        // Distinct resolved points in sorted-query order for a
        // deterministic first witness.
        let mut queries: BTreeSet<String> = BTreeSet::new();
        for &ad in members {
            for ent in &records[ad as usize].entities {
                if ent.category == EntityCategory::Location {
                    let q = canonical_query(&ent.value);
                    if !q.is_empty() {
                        queries.insert(q);
                    }
                }
            }
        }
        let points: Vec<(String, GeoPoint)> = queries
            .into_iter()
            .filter_map(|q| resolved.get(&q).map(|&p| (q, p)))
            .collect();
        let distance = distance_scan(&points, opts.distance_miles);
        let identifiers = identifier_scan(records, members, opts);
        let positive = distance.is_some() || identifiers.is_some();
        match (distance.is_some(), identifiers.is_some()) {
            (true, true) => stats.overlap.both += 1,
            (true, false) => stats.overlap.distance_only += 1,
            (false, true) => stats.overlap.identifiers_only += 1,
            (false, false) => stats.overlap.none += 1,
        }
        if positive {
            stats.components_positive += 1;
            for &ad in members {
                ad_labels[ad as usize] = true;
            }
        }
        verdicts.insert(
            comp,
            ComponentVerdict { component_id: comp, positive, distance, identifiers },
        );
    }
    stats.ads_positive = ad_labels.iter().filter(|&&b| b).count() as u64;
    LabelOutcome { verdicts, ad_labels, stats }
}

/// Reduces raw candidate lists to the point used for labeling.
pub fn pick_points(
    candidates: &BTreeMap<String, Vec<Candidate>>,
) -> BTreeMap<String, GeoPoint> {
    candidates
        .iter()
        .filter_map(|(q, cands)| first_us_point(cands).map(|p| (q.clone(), p)))
        .collect()
}

pub fn write_labels_csv(
    path: &Path,
    graph: &RelatednessGraph,
    outcome: &LabelOutcome,
) -> Result<(), LabelError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "ad_id,component_id,label,distance_fired,identifiers_fired")?;
    for (ad, &comp) in graph.components.iter().enumerate() {
        let v = &outcome.verdicts[&comp];
        writeln!(
            w,
            "{ad},{comp},{},{},{}",
            outcome.ad_labels[ad] as u8,
            v.distance.is_some() as u8,
            v.identifiers.is_some() as u8
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the per-ad labels back from a labels CSV. Every ad id in
/// `0..node_count` must appear exactly once.
pub fn read_labels_csv(path: &Path, node_count: usize) -> Result<Vec<bool>, LabelError> {
    let data = std::fs::read_to_string(path)?;
    let mut labels = vec![false; node_count];
    let mut seen = vec![false; node_count];
    for (i, line) in data.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let bad = || LabelError::LabelsCsv(i + 1, format!("bad labels row: {line:?}"));
        let ad: usize = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        let _component = fields.next().ok_or_else(bad)?;
        let label: u8 = fields.next().and_then(|f| f.parse().ok()).ok_or_else(bad)?;
        if ad >= node_count || label > 1 || seen[ad] {
            return Err(bad());
        }
        seen[ad] = true;
        labels[ad] = label == 1;
    }
    if let Some(missing) = seen.iter().position(|s| !s) {
        return Err(LabelError::LabelsCsv(0, format!("ad {missing} missing from labels file")));
    }
    Ok(labels)
}
