//! Human-readable attribution reports: a plain-text token heat view
//! and a standalone HTML page with per-token coloring, plus n-gram and
//! per-mask summary tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ngrams::NgramRow;
use crate::extract::MASK_TOKENS;

/// One attributed example, ready for rendering or JSONL storage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub ad_id_a: u32,
    /// Present for pair examples.
    pub ad_id_b: Option<u32>,
    pub label: u8,
    /// Model probability of the positive class.
    pub score: f64,
    pub tokens_a: Vec<String>,
    pub attributions_a: Vec<f64>,
    pub tokens_b: Vec<String>,
    pub attributions_b: Vec<f64>,
    pub convergence_delta: f64,
}

impl AttributionRecord {
    fn sides(&self) -> Vec<(&[String], &[f64])> {
        let mut out: Vec<(&[String], &[f64])> =
            vec![(&self.tokens_a, &self.attributions_a)];
        if !self.tokens_b.is_empty() {
            out.push((&self.tokens_b, &self.attributions_b));
        }
        out
    }
}

/// Mean attribution per mask token across every occurrence.
pub fn mask_summary(records: &[AttributionRecord]) -> BTreeMap<&'static str, (f64, usize)> {
    let mut sums: BTreeMap<&'static str, (f64, usize)> =
        MASK_TOKENS.iter().map(|&t| (t, (0.0, 0))).collect();
    for rec in records {
        for (tokens, attrs) in rec.sides() {
            for (tok, &a) in tokens.iter().zip(attrs) {
                if let Some(entry) = sums.get_mut(tok.as_str()) {
                    entry.0 += a;
                    entry.1 += 1;
                }
            }
        }
    }
    sums.into_iter()
        .map(|(t, (sum, n))| (t, (if n == 0 { 0.0 } else { sum / n as f64 }, n)))
        .collect()
}

pub fn text_report(records: &[AttributionRecord], ngrams: &[NgramRow]) -> String {
    let mut out = String::new();
    out.push_str("TOKEN ATTRIBUTIONS\n==================\n");
    for rec in records {
        match rec.ad_id_b {
            Some(b) => out.push_str(&format!(
                "\npair ({}, {b}) label={} score={:.4} delta={:.2e}\n",
                rec.ad_id_a, rec.label, rec.score, rec.convergence_delta
            )),
            None => out.push_str(&format!(
                "\nad {} label={} score={:.4} delta={:.2e}\n",
                rec.ad_id_a, rec.label, rec.score, rec.convergence_delta
            )),
        }
        for (i, (tokens, attrs)) in rec.sides().into_iter().enumerate() {
            if rec.ad_id_b.is_some() {
                out.push_str(if i == 0 { "  a: " } else { "  b: " });
            } else {
                out.push_str("  ");
            }
            let rendered: Vec<String> = tokens
                .iter()
                .zip(attrs)
                .map(|(t, a)| format!("{t}({a:+.3})"))
                .collect();
            out.push_str(&rendered.join(" "));
            out.push('\n');
        }
    }

    out.push_str("\nMASK SUMMARY (mean attribution, occurrences)\n");
    out.push_str("============================================\n");
    for (token, (mean, n)) in mask_summary(records) {
        out.push_str(&format!("{token:<12} {mean:+.4}  n={n}\n"));
    }

    out.push_str("\nTOP N-GRAMS (mean, std, count)\n");
    out.push_str("==============================\n");
    for row in ngrams {
        out.push_str(&format!(
            "{:<40} {:+.4}  {:.4}  {}\n",
            row.ngram, row.mean, row.std, row.count
        ));
    }
    out
}

pub fn escape_html(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            other => out.push(other),
        }
    }
    out
}

fn token_span(token: &str, attr: f64, max_abs: f64) -> String {
    let strength = if max_abs > 0.0 { (attr.abs() / max_abs).min(1.0) } else { 0.0 };
    let alpha = 0.12 + 0.55 * strength;
    let color = if attr >= 0.0 {
        format!("rgba(208, 48, 56, {alpha:.3})")
    } else {
        format!("rgba(32, 84, 196, {alpha:.3})")
    };
    format!(
        "<span class=\"tok\" style=\"background:{color}\" title=\"{:+.5}\">{}</span>",
        attr,
        escape_html(token)
    )
}

/// A self-contained HTML page: red tokens push toward the positive
/// class, blue away; intensity is relative within each example.
pub fn html_report(records: &[AttributionRecord], ngrams: &[NgramRow]) -> String {
    let mut out = String::new();
    out.push_str(
        "<!doctype html>\n<html><head><meta charset=\"utf-8\">\n\
         <title>attribution report</title>\n<style>\n\
         body{font-family:sans-serif;margin:2em;max-width:70em}\n\
         .ex{margin:1em 0;padding:0.6em;border:1px solid #ccc;border-radius:4px}\n\
         .tok{padding:0 0.15em;margin:0 0.05em;border-radius:3px;display:inline-block}\n\
         .meta{color:#555;font-size:0.85em;margin-bottom:0.3em}\n\
         table{border-collapse:collapse;margin-top:0.6em}\n\
         td,th{border:1px solid #bbb;padding:0.2em 0.6em;text-align:left}\n\
         </style></head><body>\n<h1>Attribution report</h1>\n",
    );
    for rec in records {
        out.push_str("<div class=\"ex\"><div class=\"meta\">");
        match rec.ad_id_b {
            Some(b) => out.push_str(&format!("pair ({}, {b})", rec.ad_id_a)),
            None => out.push_str(&format!("ad {}", rec.ad_id_a)),
        }
        out.push_str(&format!(
            " &mdash; label {} &mdash; score {:.4} &mdash; delta {:.2e}</div>",
            rec.label, rec.score, rec.convergence_delta
        ));
        let max_abs = rec
            .attributions_a
            .iter()
            .chain(rec.attributions_b.iter())
            .fold(0.0f64, |m, &a| m.max(a.abs()));
        for (i, (tokens, attrs)) in rec.sides().into_iter().enumerate() {
            if rec.ad_id_b.is_some() {
                out.push_str(if i == 0 { "<div><b>a:</b> " } else { "<div><b>b:</b> " });
            } else {
                out.push_str("<div>");
            }
            for (t, &a) in tokens.iter().zip(attrs) {
                out.push_str(&token_span(t, a, max_abs));
                out.push(' ');
            }
            out.push_str("</div>");
        }
        out.push_str("</div>\n");
    }

    out.push_str("<h2>Mask summary</h2>\n<table><tr><th>mask</th><th>mean attribution</th><th>occurrences</th></tr>\n");
    for (token, (mean, n)) in mask_summary(records) {
        out.push_str(&format!(
            "<tr><td>{}</td><td>{mean:+.4}</td><td>{n}</td></tr>\n",
            escape_html(token)
        ));
    }
    out.push_str("</table>\n");

    out.push_str("<h2>Top n-grams</h2>\n<table><tr><th>n-gram</th><th>mean</th><th>std</th><th>count</th></tr>\n");
    for row in ngrams {
        out.push_str(&format!(
            "<tr><td>{}</td><td>{:+.4}</td><td>{:.4}</td><td>{}</td></tr>\n",
            escape_html(&row.ngram),
            row.mean,
            row.std,
            row.count
        ));
    }
    out.push_str("</table>\n</body></html>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record() -> AttributionRecord {
        AttributionRecord {
            ad_id_a: 3,
            ad_id_b: None,
            label: 1,
            score: 0.91,
            tokens_a: vec!["call".into(), "[PHONE]".into(), "<b>".into()],
            attributions_a: vec![0.1, 0.8, -0.4],
            tokens_b: vec![],
            attributions_b: vec![],
            convergence_delta: 1e-6,
        }
    }

    #[test]
    fn mask_summary_averages_occurrences() {
        let mut r1 = record();
        r1.attributions_a[1] = 0.8;
        let mut r2 = record();
        r2.attributions_a[1] = 0.4;
        let summary = mask_summary(&[r1, r2]);
        let (mean, n) = summary["[PHONE]"];
        assert_eq!(n, 2);
        assert!((mean - 0.6).abs() < 1e-12);
        assert_eq!(summary["[EMAIL]"], (0.0, 0));
    }

    #[test]
    fn text_report_contains_tokens_and_values() {
        let txt = text_report(&[record()], &[]);
        assert!(txt.contains("ad 3"));
        assert!(txt.contains("[PHONE](+0.800)"));
        assert!(txt.contains("MASK SUMMARY"));
    }

    #[test]
    fn html_escapes_and_colors() {
        let html = html_report(
            &[record()],
            &[NgramRow { ngram: "a <b>".into(), mean: 0.5, std: 0.0, count: 2 }],
        );
        // Raw angle brackets from tokens must be escaped.
        assert!(html.contains("&lt;b&gt;"));
        assert!(!html.contains("<b></span>"));
        // Positive red, negative blue.
        assert!(html.contains("rgba(208, 48, 56"));
        assert!(html.contains("rgba(32, 84, 196"));
        assert!(html.starts_with("<!doctype html>"));
        assert!(html.contains("[PHONE]"));
    }

    #[test]
    fn pair_records_render_both_sides() {
        let mut rec = record();
        rec.ad_id_b = Some(9);
        rec.tokens_b = vec!["hello".into()];
        rec.attributions_b = vec![0.2];
        let txt = text_report(&[rec.clone()], &[]);
        assert!(txt.contains("pair (3, 9)"));
        assert!(txt.contains("b: hello(+0.200)"));
        let html = html_report(&[rec], &[]);
        assert!(html.contains("pair (3, 9)"));
    }
}
