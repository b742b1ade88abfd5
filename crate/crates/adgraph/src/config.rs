//! Flat `key = value` run configuration.
//!
//! The format is deliberately small: one assignment per line, `#` lines
//! are comments, unknown or repeated keys are errors. Emission is
//! canonical (sorted keys, normalized values), so a config hashes to a
//! stable 12-hex-digit run id and `parse(emit(c)) == c` always holds.

use std::collections::BTreeSet;
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::extract::EntityCategory;
use crate::graph::GraphOptions;
use crate::labeler::LabelOptions;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config line {0}: expected `key = value`, got {1:?}")]
    Syntax(usize, String),
    #[error("config line {0}: unknown key {1:?}")]
    UnknownKey(usize, String),
    #[error("config line {0}: duplicate key {1:?}")]
    DuplicateKey(usize, String),
    #[error("config line {0}: bad value for {1}: {2}")]
    BadValue(usize, String, String),
    #[error("config: {0}")]
    Invalid(String),
}

trait ConfigValue: Sized {
    fn parse_value(s: &str) -> Result<Self, String>;
    fn emit_value(&self) -> String;
}

impl ConfigValue for bool {
    fn parse_value(s: &str) -> Result<Self, String> {
        match s {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(format!("expected true or false, got {other:?}")),
        }
    }
    fn emit_value(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for f64 {
    fn parse_value(s: &str) -> Result<Self, String> {
        let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
        if !v.is_finite() {
            return Err("must be finite".into());
        }
        Ok(v)
    }
    fn emit_value(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for usize {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("{e}"))
    }
    fn emit_value(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for u32 {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("{e}"))
    }
    fn emit_value(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for u64 {
    fn parse_value(s: &str) -> Result<Self, String> {
        s.parse().map_err(|e| format!("{e}"))
    }
    fn emit_value(&self) -> String {
        self.to_string()
    }
}

impl ConfigValue for String {
    fn parse_value(s: &str) -> Result<Self, String> {
        Ok(s.to_string())
    }
    fn emit_value(&self) -> String {
        self.clone()
    }
}

macro_rules! config_keys {
    ($(($key:literal, $field:ident, $ty:ty, $default:expr)),+ $(,)?) => {
        #[derive(Debug, Clone, PartialEq)]
        pub struct Config {
            $(pub $field: $ty),+
        }

        impl Default for Config {
            fn default() -> Self {
                Config { $($field: $default.into()),+ }
            }
        }

        impl Config {
            /// Every recognized key, in canonical (sorted) order.
            pub const KEYS: &'static [&'static str] = &[$($key),+];

            fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
                match key {
                    $($key => {
                        self.$field = <$ty as ConfigValue>::parse_value(value)
                            .map_err(|e| ConfigError::BadValue(line, key.to_string(), e))?;
                        Ok(())
                    })+
                    _ => Err(ConfigError::UnknownKey(line, key.to_string())),
                }
            }

            /// Canonical text form: sorted `key = value` lines.
            pub fn emit(&self) -> String {
                let mut out = String::new();
                $(
                    out.push_str($key);
                    out.push_str(" = ");
                    out.push_str(&ConfigValue::emit_value(&self.$field));
                    out.push('\n');
                )+
                out
            }
        }
    };
}

// Keys stay lexicographically sorted so emit() is canonical.
config_keys![
    ("dedup.trim", dedup_trim, bool, false),
    ("graph.connectors", graph_connectors, String, "phone_number,email,onlyfans,snapchat,twitter"),
    ("graph.star_cap", graph_star_cap, usize, 0usize),
    ("graph.use_images", graph_use_images, bool, true),
    ("htrp.per_class_gate", htrp_per_class_gate, bool, false),
    ("ig.baseline", ig_baseline, String, "pad"),
    ("ig.steps", ig_steps, usize, 64usize),
    ("ig.target", ig_target, String, "logit"),
    ("label.backoff_ms", label_backoff_ms, u64, 250u64),
    ("label.concurrency", label_concurrency, usize, 4usize),
    ("label.distance_miles", label_distance_miles, f64, 300.0),
    ("label.geocode_cache", label_geocode_cache, String, ""),
    ("label.geocode_url", label_geocode_url, String, ""),
    ("label.handle_min", label_handle_min, usize, 3usize),
    ("label.identifier_min", label_identifier_min, usize, 2usize),
    ("label.retries", label_retries, u32, 3u32),
    ("mask.email_regex", mask_email_regex, bool, true),
    ("mask.min_score", mask_min_score, f64, 0.9),
    ("mask.rejected", mask_rejected, bool, true),
    ("ner.alpha", ner_alpha, f64, 0.5),
    ("ner.conventional", ner_conventional, bool, false),
    ("ner.min_score", ner_min_score, f64, 0.9),
    ("ngram.min_count", ngram_min_count, usize, 2usize),
    ("ngram.n", ngram_n, usize, 2usize),
    ("ngram.top", ngram_top, usize, 25usize),
    ("oad.gate_negatives", oad_gate_negatives, bool, false),
    ("phone.oh_as_zero", phone_oh_as_zero, bool, true),
    ("seed.oad", seed_oad, u64, 202u64),
    ("seed.split", seed_split, u64, 101u64),
    ("seed.synth", seed_synth, u64, 404u64),
    ("seed.train", seed_train, u64, 303u64),
    ("sim.gate", sim_gate, f64, 0.5),
    ("split.target", split_target, f64, 0.8),
    ("synth.ads", synth_ads, usize, 100_000usize),
    ("synth.clusters", synth_clusters, usize, 200usize),
    ("train.batch", train_batch, usize, 32usize),
    ("train.dim", train_dim, usize, 32usize),
    ("train.epochs", train_epochs, usize, 10usize),
    ("train.hidden", train_hidden, usize, 64usize),
    ("train.lr", train_lr, f64, 0.1),
    ("train.min_freq", train_min_freq, usize, 1usize),
    ("train.momentum", train_momentum, f64, 0.9),
    ("train.val_fraction", train_val_fraction, f64, 0.05),
];

impl Config {
    pub fn parse(text: &str) -> Result<Config, ConfigError> {
        let mut config = Config::default();
        let mut seen: BTreeSet<String> = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax(line_no, raw.to_string()))?;
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() {
                return Err(ConfigError::Syntax(line_no, raw.to_string()));
            }
            if !seen.insert(key.to_string()) {
                return Err(ConfigError::DuplicateKey(line_no, key.to_string()));
            }
            config.set(key, value, line_no)?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Config, ConfigError> {
        Config::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies one `key = value` override on top of an existing config,
    /// with the same parsing and validation as a file line.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        self.set(key.trim(), value.trim(), 0)?;
        self.validate()
    }

    /// First 12 hex digits of the SHA-256 of the canonical emission.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.emit().as_bytes());
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        hex[..12].to_string()
    }

    pub fn run_dir_name(&self) -> String {
        format!("run-{}", self.hash())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let unit = |name: &str, v: f64| -> Result<(), ConfigError> {
            if !(0.0..=1.0).contains(&v) {
                return Err(ConfigError::Invalid(format!("{name} must be in [0, 1], got {v}")));
            }
            Ok(())
        };
        unit("mask.min_score", self.mask_min_score)?;
        unit("ner.alpha", self.ner_alpha)?;
        unit("ner.min_score", self.ner_min_score)?;
        unit("sim.gate", self.sim_gate)?;
        unit("train.momentum", self.train_momentum)?;
        if !(self.split_target > 0.0 && self.split_target <= 1.0) {
            return Err(ConfigError::Invalid(format!(
                "split.target must be in (0, 1], got {}",
                self.split_target
            )));
        }
        if !(0.0..=0.5).contains(&self.train_val_fraction) {
            return Err(ConfigError::Invalid(format!(
                "train.val_fraction must be in [0, 0.5], got {}",
                self.train_val_fraction
            )));
        }
        if self.train_lr <= 0.0 {
            return Err(ConfigError::Invalid("train.lr must be positive".into()));
        }
        if self.label_distance_miles < 0.0 {
            return Err(ConfigError::Invalid("label.distance_miles must be >= 0".into()));
        }
        for (name, v) in [
            ("train.epochs", self.train_epochs),
            ("train.batch", self.train_batch),
            ("train.dim", self.train_dim),
            ("train.min_freq", self.train_min_freq),
            ("ig.steps", self.ig_steps),
            ("ngram.n", self.ngram_n),
            ("ngram.min_count", self.ngram_min_count),
            ("ngram.top", self.ngram_top),
        ] {
            if v == 0 {
                return Err(ConfigError::Invalid(format!("{name} must be at least 1")));
            }
        }
        match self.ig_baseline.as_str() {
            "pad" | "zeros" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "ig.baseline must be pad or zeros, got {other:?}"
                )))
            }
        }
        match self.ig_target.as_str() {
            "logit" | "prob" => {}
            other => {
                return Err(ConfigError::Invalid(format!(
                    "ig.target must be logit or prob, got {other:?}"
                )))
            }
        }
        self.connector_categories()?;
        Ok(())
    }

    pub fn connector_categories(&self) -> Result<BTreeSet<EntityCategory>, ConfigError> {
        let mut out = BTreeSet::new();
        for part in self.graph_connectors.split(',') {
            let part = part.trim();
            if part.is_empty() {
                continue;
            }
            let cat: EntityCategory = part.parse().map_err(|_| {
                ConfigError::Invalid(format!("graph.connectors: unknown category {part:?}"))
            })?;
            out.insert(cat);
        }
        Ok(out)
    }

    pub fn mask_options(&self) -> crate::extract::MaskOptions {
        crate::extract::MaskOptions {
            min_score: self.mask_min_score,
            mask_rejected: self.mask_rejected,
            oh_as_zero: self.phone_oh_as_zero,
            email_regex: self.mask_email_regex,
        }
    }

    pub fn graph_options(&self) -> Result<GraphOptions, ConfigError> {
        Ok(GraphOptions {
            connector_categories: self.connector_categories()?,
            use_images: self.graph_use_images,
            star_cap: self.graph_star_cap,
        })
    }

    pub fn label_options(&self) -> LabelOptions {
        LabelOptions {
            distance_miles: self.label_distance_miles,
            identifier_min: self.label_identifier_min,
            handle_min: self.label_handle_min,
        }
    }

    pub fn oad_options(&self) -> crate::datasets::OadOptions {
        crate::datasets::OadOptions {
            gate: self.sim_gate,
            gate_negatives: self.oad_gate_negatives,
            seed: self.seed_oad,
        }
    }

    pub fn htrp_options(&self) -> crate::datasets::HtrpOptions {
        crate::datasets::HtrpOptions {
            gate: self.sim_gate,
            per_class_gate: self.htrp_per_class_gate,
        }
    }
}
