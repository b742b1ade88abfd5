//! Core library for `adgraph`: a pipeline that turns raw classified-ad
//! records into deduplicated corpora, canonical entities, a relatedness
//! graph, heuristic weak labels, pair/classification datasets, and a small
//! trainable text classifier with integrated-gradients attribution.
//!
//! Modules mirror the pipeline stages:
//!
//! * [`corpus`] — JSONL ingestion and exact-duplicate collapse
//! * [`extract`] — entity canonicalization, span application, masking
//! * [`ner_eval`] — span-match evaluation (correct/incorrect/partial/missing/spurious)
//! * [`graph`] — connector-based relatedness graph and connected components
//! * [`labeler`] — geocoding, geodesic distance, and labeling heuristics
//! * [`datasets`] — similarity screening, splits, dataset emission, bias stats
//! * [`model_lab`] — vocab, tiny classifier, training, metrics, attribution
//! * [`config`] — flat `key = value` pipeline configuration
//! * [`synth`] — synthetic corpus generator with ground truth

pub mod config;
pub mod corpus;
pub mod datasets;
pub mod extract;
pub mod graph;
pub mod labeler;
pub mod model_lab;
pub mod ner_eval;
pub mod synth;

pub use corpus::{AdRecord, DedupStats, RawAd, SchemaMap};
pub use extract::{CanonicalEntity, EntityCategory, RawSpan};
pub use graph::RelatednessGraph;
pub use labeler::GeoPoint;
pub use ner_eval::MatchCounts;
