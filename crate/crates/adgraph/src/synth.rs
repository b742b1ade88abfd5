//! Deterministic synthetic corpus generator.
//!
//! Produces a raw ad feed with planted connector structure, a span file
//! aligned to post-dedup record ids, a geocoder fixture, and a ground
//! truth file listing every planted cluster together with the component
//! verdict it must receive under default options. Everything is a pure
//! function of the seed and the size knobs, byte for byte.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::RawAd;
use crate::extract::{EntityCategory, RawSpan};
use crate::labeler::{haversine_miles, GeoPoint};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("ad budget {ads} cannot hold {min_needed} cluster and repost ads")]
    BudgetTooSmall { ads: usize, min_needed: usize },
}

#[derive(Debug, Clone, Copy)]
pub struct SynthOptions {
    /// Total raw ads to emit, duplicates included.
    pub ads: usize,
    /// Number of planted clusters; kinds rotate through a fixed cycle.
    pub clusters: usize,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions { ads: 100_000, clusters: 200, seed: 404 }
    }
}

/// What a planted cluster is built to trigger.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterKind {
    /// Two distinct phone numbers, cities inside one metro group.
    MultiPhoneNear,
    /// One shared phone, two cities far apart.
    SinglePhoneFar,
    /// One shared phone, cities inside one metro group: a true negative.
    NearNegative,
    /// Two distinct email addresses.
    EmailRing,
    /// Three distinct messaging handles.
    HandleRing,
    /// A shared image hash and nothing else: a true negative.
    ImageNegative,
    /// Distinct phones and far cities at once.
    BothHeuristics,
}

const KIND_CYCLE: [ClusterKind; 7] = [
    ClusterKind::MultiPhoneNear,
    ClusterKind::SinglePhoneFar,
    ClusterKind::NearNegative,
    ClusterKind::EmailRing,
    ClusterKind::HandleRing,
    ClusterKind::ImageNegative,
    ClusterKind::BothHeuristics,
];

impl ClusterKind {
    pub fn expect_identifiers(self) -> bool {
        matches!(
            self,
            ClusterKind::MultiPhoneNear
                | ClusterKind::EmailRing
                | ClusterKind::HandleRing
                | ClusterKind::BothHeuristics
        )
    }

    pub fn expect_distance(self) -> bool {
        matches!(self, ClusterKind::SinglePhoneFar | ClusterKind::BothHeuristics)
    }

    fn far(self) -> bool {
        self.expect_distance()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GtCluster {
    pub kind: ClusterKind,
    /// Post-dedup record ids of the members, ascending.
    pub ad_ids: Vec<u32>,
    pub expect_identifiers: bool,
    pub expect_distance: bool,
    pub positive: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub raw_ads: usize,
    pub unique_ads: usize,
    pub duplicate_reposts: usize,
    pub clusters: Vec<GtCluster>,
}

impl GroundTruth {
    /// Every ad id claimed by some planted cluster.
    pub fn cluster_ad_ids(&self) -> BTreeSet<u32> {
        self.clusters.iter().flat_map(|c| c.ad_ids.iter().copied()).collect()
    }
}

pub struct SynthOutput {
    pub ads: Vec<RawAd>,
    pub spans: Vec<RawSpan>,
    pub fixture_lines: Vec<String>,
    pub ground_truth: GroundTruth,
}

struct City {
    query: &'static str,
    display: &'static str,
    lat: f64,
    lon: f64,
}

impl City {
    fn point(&self) -> GeoPoint {
        GeoPoint { lat: self.lat, lon: self.lon }
    }
}

/// Metro groups. Members of one group are pairwise well inside the
/// default 300-mile radius; far pairs are drawn across groups and
/// re-verified against `FAR_MILES` at selection time.
static CITY_GROUPS: &[&[City]] = &[
    &[
        City { query: "dallas", display: "Dallas", lat: 32.7767, lon: -96.7970 },
        City { query: "fort worth", display: "Fort Worth", lat: 32.7555, lon: -97.3308 },
        City { query: "austin", display: "Austin", lat: 30.2672, lon: -97.7431 },
        City { query: "houston", display: "Houston", lat: 29.7604, lon: -95.3698 },
        City { query: "san antonio", display: "San Antonio", lat: 29.4241, lon: -98.4936 },
    ],
    &[
        City { query: "seattle", display: "Seattle", lat: 47.6062, lon: -122.3321 },
        City { query: "tacoma", display: "Tacoma", lat: 47.2529, lon: -122.4443 },
        City { query: "portland", display: "Portland", lat: 45.5152, lon: -122.6784 },
    ],
    &[
        City { query: "los angeles", display: "Los Angeles", lat: 34.0522, lon: -118.2437 },
        City { query: "san diego", display: "San Diego", lat: 32.7157, lon: -117.1611 },
        City { query: "anaheim", display: "Anaheim", lat: 33.8366, lon: -117.9143 },
        City { query: "long beach", display: "Long Beach", lat: 33.7701, lon: -118.1937 },
        City { query: "santa barbara", display: "Santa Barbara", lat: 34.4208, lon: -119.6982 },
    ],
    &[
        City { query: "new york", display: "New York", lat: 40.7128, lon: -74.0060 },
        City { query: "philadelphia", display: "Philadelphia", lat: 39.9526, lon: -75.1652 },
        City { query: "baltimore", display: "Baltimore", lat: 39.2904, lon: -76.6122 },
        City { query: "washington", display: "Washington", lat: 38.9072, lon: -77.0369 },
        City { query: "alexandria", display: "Alexandria", lat: 38.8048, lon: -77.0469 },
    ],
    &[
        City { query: "miami", display: "Miami", lat: 25.7617, lon: -80.1918 },
        City { query: "orlando", display: "Orlando", lat: 28.5383, lon: -81.3792 },
        City { query: "tampa", display: "Tampa", lat: 27.9506, lon: -82.4572 },
        City { query: "fort lauderdale", display: "Fort Lauderdale", lat: 26.1224, lon: -80.1373 },
    ],
    &[
        City { query: "chicago", display: "Chicago", lat: 41.8781, lon: -87.6298 },
        City { query: "milwaukee", display: "Milwaukee", lat: 43.0389, lon: -87.9065 },
        City { query: "indianapolis", display: "Indianapolis", lat: 39.7684, lon: -86.1581 },
        City { query: "detroit", display: "Detroit", lat: 42.3314, lon: -83.0458 },
    ],
    &[City { query: "denver", display: "Denver", lat: 39.7392, lon: -104.9903 }],
    &[City { query: "phoenix", display: "Phoenix", lat: 33.4484, lon: -112.0740 }],
    &[City { query: "las vegas", display: "Las Vegas", lat: 36.1699, lon: -115.1398 }],
];

/// Index of the metro group holding Washington and Alexandria, used to
/// pin one negative cluster onto the ambiguous "alexandria" query.
const EAST_GROUP: usize = 3;
const ALEXANDRIA: usize = 4;
const WASHINGTON: usize = 3;

/// Margins on either side of the 300-mile default threshold.
const FAR_MILES: f64 = 330.0;
#[cfg(test)]
const NEAR_MILES: f64 = 280.0;

static FILLER: &[&str] = &[
    "amber", "breeze", "cedar", "dawn", "ember", "fable", "grove", "haven", "ivory", "jade",
    "koi", "lumen", "maple", "noble", "opal", "pearl", "quartz", "raven", "sable", "tide",
    "umber", "velvet", "willow", "zephyr", "arbor", "bloom", "cliff", "drift", "echo", "fern",
    "glint", "hollow",
];

static EMOJI: &[&str] = &["✨", "💜", "🌙", "🔥"];
static NAMES: &[&str] = &["Candy", "Roxy", "Diamond", "Lola", "Misty", "Jewel"];

/// Vocabulary exclusive to positive-verdict clusters; it gives the
/// emitted datasets a learnable lexical signal aligned with the labels.
static RISK_WORDS: &[&str] = &[
    "allure", "boudoir", "carousel", "decadent", "elite", "fervor", "gilded", "hush",
    "incognito", "jetset", "kismet", "lavish",
];

static DIGIT_WORDS: [&str; 10] =
    ["zero", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine"];

/// A description under assembly, tracking entity surfaces as char spans.
#[derive(Default)]
struct DescParts {
    text: String,
    spans: Vec<(usize, usize, EntityCategory, f64)>,
}

impl DescParts {
    fn sep(&mut self) {
        if !self.text.is_empty() {
            self.text.push(' ');
        }
    }

    fn word(&mut self, w: &str) {
        self.sep();
        self.text.push_str(w);
    }

    fn entity(&mut self, surface: &str, category: EntityCategory, score: f64) {
        self.sep();
        let start = self.text.chars().count();
        self.text.push_str(surface);
        let end = self.text.chars().count();
        self.spans.push((start, end, category, score));
    }
}

struct Gen {
    rng: ChaCha20Rng,
    ads: Vec<RawAd>,
    used: HashSet<String>,
    /// Distinct description -> its planted spans, kept in byte order so
    /// iteration matches the dedup stage's id assignment.
    planted: BTreeMap<String, Vec<(usize, usize, EntityCategory, f64)>>,
    serial: usize,
}

impl Gen {
    fn filler(&mut self, parts: &mut DescParts, n: usize) {
        for _ in 0..n {
            parts.word(FILLER[self.rng.gen_range(0..FILLER.len())]);
        }
    }

    fn date(&mut self) -> String {
        format!(
            "201{}-{:02}-{:02}",
            6 + self.rng.gen_range(0..3u32),
            1 + self.rng.gen_range(0..12u32),
            1 + self.rng.gen_range(0..28u32)
        )
    }

    fn provenance(&mut self) -> String {
        if self.rng.gen_bool(0.5) { "feedA".to_string() } else { "feedB".to_string() }
    }

    fn title(&mut self) -> Option<String> {
        if self.rng.gen_bool(0.5) {
            let a = FILLER[self.rng.gen_range(0..FILLER.len())];
            let b = FILLER[self.rng.gen_range(0..FILLER.len())];
            Some(format!("{a} {b}"))
        } else {
            None
        }
    }

    /// One of several obfuscations of a ten-digit number whose area code
    /// has a zero in the middle. Every variant canonicalizes back to the
    /// same +1 number.
    fn phone_surface(&mut self, digits: &str) -> String {
        debug_assert_eq!(digits.len(), 10);
        let (a, b, c) = (&digits[..3], &digits[3..6], &digits[6..]);
        match self.rng.gen_range(0..5u32) {
            0 => format!("{a}-{b}-{c}"),
            1 => format!("({a}) {b}-{c}"),
            2 => format!("{a} {b} {c}"),
            3 => {
                debug_assert_eq!(&a[1..2], "0");
                format!("{}oh{}-{b}-{c}", &a[..1], &a[2..])
            }
            _ => {
                let first = a.as_bytes()[0] - b'0';
                format!("{}{} {b} {c}", DIGIT_WORDS[first as usize], &a[1..])
            }
        }
    }

    fn span_score(&mut self) -> f64 {
        0.9 + 0.09 * self.rng.gen::<f64>()
    }

    /// Registers the finished description, renaming on collision, and
    /// files its spans for later id assignment.
    fn finish(&mut self, mut parts: DescParts) -> String {
        while self.used.contains(&parts.text) {
            parts.word(&format!("q{}", self.serial));
            self.serial += 1;
        }
        self.used.insert(parts.text.clone());
        if !parts.spans.is_empty() {
            self.planted.insert(parts.text.clone(), parts.spans);
        }
        parts.text
    }

    fn push_ad(
        &mut self,
        description: String,
        location: Option<&City>,
        image_hashes: Vec<String>,
        structured_phones: Vec<String>,
    ) {
        let post_id = format!("p{:06}", self.ads.len());
        let title = self.title();
        let dates = vec![self.date()];
        let provenance = self.provenance();
        self.ads.push(RawAd {
            post_id,
            description,
            title,
            location_strings: location.map(|c| vec![c.display.to_string()]).unwrap_or_default(),
            posting_dates: dates,
            structured_phones,
            image_hashes,
            provenance,
        });
    }
}

/// Picks a cross-group far pair, re-verified against the distance
/// formula so the planted witness always clears the threshold.
fn far_pair(rng: &mut ChaCha20Rng) -> (usize, usize, usize, usize) {
    for _ in 0..200 {
        let ga = rng.gen_range(0..CITY_GROUPS.len());
        let gb = rng.gen_range(0..CITY_GROUPS.len());
        if ga == gb {
            continue;
        }
        let ca = rng.gen_range(0..CITY_GROUPS[ga].len());
        let cb = rng.gen_range(0..CITY_GROUPS[gb].len());
        let d = haversine_miles(CITY_GROUPS[ga][ca].point(), CITY_GROUPS[gb][cb].point());
        if d > FAR_MILES {
            return (ga, ca, gb, cb);
        }
    }
    // Dallas / Seattle: ~1680 miles, always valid.
    (0, 0, 1, 0)
}

pub fn generate(opts: &SynthOptions) -> Result<SynthOutput, SynthError> {
    let mut gen = Gen {
        rng: ChaCha20Rng::seed_from_u64(opts.seed),
        ads: Vec::with_capacity(opts.ads),
        used: HashSet::new(),
        planted: BTreeMap::new(),
        serial: 0,
    };

    // description -> (cluster index) for ground truth assembly.
    let mut membership: Vec<(String, usize)> = Vec::new();
    let mut kinds: Vec<ClusterKind> = Vec::new();
    let n_dupes = opts.ads * 8 / 100;
    let mut alexandria_used = false;

    for ci in 0..opts.clusters {
        let kind = KIND_CYCLE[ci % KIND_CYCLE.len()];
        kinds.push(kind);
        let size = 4 + gen.rng.gen_range(0..5usize);

        // City plan: far kinds carry a verified witness pair on members 0
        // and 1; everyone else stays within one metro group.
        let (home_group, witness) = if kind.far() {
            let (ga, ca, gb, cb) = far_pair(&mut gen.rng);
            (ga, Some((ca, gb, cb)))
        } else if kind == ClusterKind::NearNegative && !alexandria_used {
            alexandria_used = true;
            (EAST_GROUP, None)
        } else {
            (gen.rng.gen_range(0..CITY_GROUPS.len()), None)
        };
        let pin_alexandria = kind == ClusterKind::NearNegative && home_group == EAST_GROUP;

        let phone =
            |k: usize| -> String { format!("303{:03}{:04}", ci % 1000, k) };
        let email = |k: usize| -> String { format!("Club{ci}K{k}@Night.test") };
        let handle = |k: usize| -> String { format!("@Snap{ci}X{k}") };
        let shared_image = format!("{:010x}", 0xC1_0000_0000u64 + ci as u64);
        // Email rings alternate between span-annotated mentions and bare
        // text left for the pattern pass.
        let email_via_span = gen.rng.gen_bool(0.5);

        for m in 0..size {
            let mut parts = DescParts::default();
            if gen.rng.gen_bool(0.05) {
                parts.word(EMOJI[gen.rng.gen_range(0..EMOJI.len())]);
            }
            let n_words = 3 + gen.rng.gen_range(0..3usize);
            gen.filler(&mut parts, n_words);
            if kind.expect_identifiers() || kind.expect_distance() {
                // A distinct triple keeps positive texts diverse enough to
                // survive the near-duplicate gate in useful numbers.
                let mut picks: Vec<usize> = (0..RISK_WORDS.len()).collect();
                for _ in 0..3 {
                    let j = gen.rng.gen_range(0..picks.len());
                    parts.word(RISK_WORDS[picks.swap_remove(j)]);
                }
            }

            let mut structured = Vec::new();
            let mut images = Vec::new();
            match kind {
                ClusterKind::MultiPhoneNear | ClusterKind::BothHeuristics => {
                    let p0 = phone(0);
                    let s = gen.phone_surface(&p0);
                    let score = gen.span_score();
                    parts.entity(&s, EntityCategory::PhoneNumber, score);
                    if m == 1 {
                        let p1 = phone(1);
                        let s1 = gen.phone_surface(&p1);
                        let score1 = gen.span_score();
                        parts.entity(&s1, EntityCategory::PhoneNumber, score1);
                    }
                    if gen.rng.gen_bool(0.2) {
                        structured.push(format!("+1 {} {}", &p0[..3], &p0[3..]));
                    }
                }
                ClusterKind::SinglePhoneFar | ClusterKind::NearNegative => {
                    let p0 = phone(0);
                    let s = gen.phone_surface(&p0);
                    let score = gen.span_score();
                    parts.entity(&s, EntityCategory::PhoneNumber, score);
                }
                ClusterKind::EmailRing => {
                    // The shared address keeps the ring connected; the
                    // second member brings the second distinct address.
                    let mut emails = vec![email(0)];
                    if m == 1 {
                        emails.push(email(1));
                    }
                    for e in emails {
                        if email_via_span {
                            let score = gen.span_score();
                            parts.entity(&e, EntityCategory::Email, score);
                        } else {
                            parts.word(&e);
                        }
                    }
                }
                ClusterKind::HandleRing => {
                    let score = gen.span_score();
                    parts.entity(&handle(0), EntityCategory::Snapchat, score);
                    if m == 1 || m == 2 {
                        let score2 = gen.span_score();
                        parts.entity(&handle(m), EntityCategory::Snapchat, score2);
                    }
                }
                ClusterKind::ImageNegative => {
                    images.push(shared_image.clone());
                    if gen.rng.gen_bool(0.3) {
                        images.push(format!(
                            "{:010x}",
                            0xD2_0000_0000u64 + (ci * 16 + m) as u64
                        ));
                    }
                }
            }

            // Location plan.
            let city: Option<&City> = if let Some((ca, gb, cb)) = witness {
                match m {
                    0 => Some(&CITY_GROUPS[home_group][ca]),
                    1 => Some(&CITY_GROUPS[gb][cb]),
                    _ => {
                        let g = CITY_GROUPS[home_group];
                        if gen.rng.gen_bool(0.7) {
                            Some(&g[gen.rng.gen_range(0..g.len())])
                        } else {
                            None
                        }
                    }
                }
            } else if pin_alexandria && m == 0 {
                Some(&CITY_GROUPS[EAST_GROUP][ALEXANDRIA])
            } else if pin_alexandria && m == 1 {
                Some(&CITY_GROUPS[EAST_GROUP][WASHINGTON])
            } else {
                let g = CITY_GROUPS[home_group];
                if gen.rng.gen_bool(0.7) {
                    Some(&g[gen.rng.gen_range(0..g.len())])
                } else {
                    None
                }
            };

            let desc = gen.finish(parts);
            membership.push((desc.clone(), ci));
            gen.push_ad(desc, city, images, structured);
        }
    }

    let cluster_raw = gen.ads.len();
    let min_needed = cluster_raw + n_dupes;
    if opts.ads < min_needed {
        return Err(SynthError::BudgetTooSmall { ads: opts.ads, min_needed });
    }
    let n_singles = opts.ads - min_needed;

    // Background singletons: every identifier value and image hash is
    // unique to its ad, so none of them can join a cluster.
    for i in 0..n_singles {
        let mut parts = DescParts::default();
        if gen.rng.gen_bool(0.05) {
            parts.word(EMOJI[gen.rng.gen_range(0..EMOJI.len())]);
        }
        let n_words = 3 + gen.rng.gen_range(0..6usize);
        gen.filler(&mut parts, n_words);

        if gen.rng.gen_bool(0.30) {
            let digits = format!("909{:07}", i);
            let s = gen.phone_surface(&digits);
            let score = gen.span_score();
            parts.entity(&s, EntityCategory::PhoneNumber, score);
        }
        if gen.rng.gen_bool(0.10) {
            parts.word(&format!("Solo{i}@Mail.test"));
        }
        if gen.rng.gen_bool(0.10) {
            let name = NAMES[gen.rng.gen_range(0..NAMES.len())];
            let score = if gen.rng.gen_bool(0.7) { 0.95 } else { 0.45 };
            parts.entity(name, EntityCategory::NameNickname, score);
        }
        // A handle shared by exactly two singletons in a category that is
        // neither a connector nor an identifier: they must stay apart.
        if i < 2 {
            parts.entity("@TrapInsta99", EntityCategory::Instagram, 0.95);
        }

        let city: Option<&City> = if gen.rng.gen_bool(0.20) {
            let g = CITY_GROUPS[gen.rng.gen_range(0..CITY_GROUPS.len())];
            Some(&g[gen.rng.gen_range(0..g.len())])
        } else {
            None
        };
        let mut images = Vec::new();
        if gen.rng.gen_bool(0.15) {
            images.push(format!("{:010x}", 0xB0_0000_0000u64 + i as u64));
        }

        let desc = gen.finish(parts);
        gen.push_ad(desc, city, images, Vec::new());
        // A slice of singletons carries a non-US or unresolvable query in
        // place of a city, exercising the empty-candidate paths.
        if gen.rng.gen_bool(0.03) {
            let last = gen.ads.last_mut().expect("just pushed");
            last.location_strings = vec![if gen.rng.gen_bool(0.5) {
                "Toronto".to_string()
            } else {
                "Springfield Nowhere".to_string()
            }];
        }
    }

    // Reposts: copy an earlier ad's description and connector-bearing
    // metadata verbatim under a fresh post id.
    for _ in 0..n_dupes {
        let idx = gen.rng.gen_range(0..gen.ads.len());
        let src = gen.ads[idx].clone();
        let post_id = format!("p{:06}", gen.ads.len());
        let title = gen.title();
        let dates = vec![gen.date()];
        let provenance = gen.provenance();
        gen.ads.push(RawAd {
            post_id,
            description: src.description,
            title,
            location_strings: src.location_strings,
            posting_dates: dates,
            structured_phones: src.structured_phones,
            image_hashes: src.image_hashes,
            provenance,
        });
    }

    // Id assignment mirrors the dedup stage: ascending byte order of the
    // distinct descriptions.
    let id_of: BTreeMap<&str, u32> = gen
        .used
        .iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .enumerate()
        .map(|(i, d)| (d.as_str(), i as u32))
        .collect();

    let spans: Vec<RawSpan> = gen
        .planted
        .iter()
        .flat_map(|(desc, list)| {
            let ad_id = id_of[desc.as_str()];
            list.iter().map(move |&(start, end, category, score)| RawSpan {
                ad_id,
                start,
                end,
                category,
                score,
            })
        })
        .collect();

    let mut cluster_ids: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); opts.clusters];
    for (desc, ci) in &membership {
        cluster_ids[*ci].insert(id_of[desc.as_str()]);
    }
    let clusters: Vec<GtCluster> = kinds
        .iter()
        .zip(cluster_ids)
        .map(|(&kind, ids)| GtCluster {
            kind,
            ad_ids: ids.into_iter().collect(),
            expect_identifiers: kind.expect_identifiers(),
            expect_distance: kind.expect_distance(),
            positive: kind.expect_identifiers() || kind.expect_distance(),
        })
        .collect();

    let ground_truth = GroundTruth {
        seed: opts.seed,
        raw_ads: gen.ads.len(),
        unique_ads: gen.used.len(),
        duplicate_reposts: n_dupes,
        clusters,
    };

    Ok(SynthOutput {
        ads: gen.ads,
        spans,
        fixture_lines: fixture_lines(),
        ground_truth,
    })
}

/// One fixture line per known query. "alexandria" lists a non-US
/// candidate first, so taking `candidates[0]` instead of the first US
/// candidate flips a planted negative to positive.
fn fixture_lines() -> Vec<String> {
    let mut lines = Vec::new();
    for group in CITY_GROUPS {
        for city in *group {
            let mut candidates = Vec::new();
            if city.query == "alexandria" {
                candidates.push(serde_json::json!({
                    "name": "Alexandria",
                    "lat": 31.2001,
                    "lon": 29.9187,
                    "country": "EG",
                }));
            }
            candidates.push(serde_json::json!({
                "name": city.display,
                "lat": city.lat,
                "lon": city.lon,
                "country": "US",
            }));
            lines.push(
                serde_json::json!({ "query": city.query, "candidates": candidates })
                    .to_string(),
            );
        }
    }
    lines.push(
        serde_json::json!({
            "query": "toronto",
            "candidates": [{ "name": "Toronto", "lat": 43.6532, "lon": -79.3832, "country": "CA" }],
        })
        .to_string(),
    );
    lines.push(
        serde_json::json!({ "query": "springfield nowhere", "candidates": [] }).to_string(),
    );
    lines
}

impl SynthOutput {
    pub fn ads_jsonl(&self) -> String {
        let mut out = String::new();
        for ad in &self.ads {
            out.push_str(&serde_json::to_string(ad).expect("ad serializes"));
            out.push('\n');
        }
        out
    }

    pub fn spans_jsonl(&self) -> String {
        let mut out = String::new();
        for span in &self.spans {
            out.push_str(&serde_json::to_string(span).expect("span serializes"));
            out.push('\n');
        }
        out
    }

    pub fn fixture_jsonl(&self) -> String {
        let mut out = self.fixture_lines.join("\n");
        out.push('\n');
        out
    }
}

/// Writes ads.jsonl, spans.jsonl, geo_fixture.jsonl and
/// ground_truth.json under `dir`.
pub fn write_synth(dir: &Path, out: &SynthOutput) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(std::fs::File::create(dir.join("ads.jsonl"))?);
    w.write_all(out.ads_jsonl().as_bytes())?;
    w.flush()?;
    std::fs::write(dir.join("spans.jsonl"), out.spans_jsonl())?;
    std::fs::write(dir.join("geo_fixture.jsonl"), out.fixture_jsonl())?;
    let gt = serde_json::to_string_pretty(&out.ground_truth).expect("ground truth serializes");
    std::fs::write(dir.join("ground_truth.json"), gt)?;
    Ok(())
}
