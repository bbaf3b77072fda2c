//! Report rendering: JSON (canonical, embeds the manifest), CSV
//! (RFC 4180: CRLF rows, quoting only where needed), and plain text.

use clap::ValueEnum;
use serde::Serialize;

use schatten::{Error, Result};

use crate::manifest::RunManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

/// JSON envelope: every JSON report embeds its manifest.
#[derive(Serialize)]
pub struct Envelope<T: Serialize> {
    pub manifest: RunManifest,
    pub report: T,
}

pub fn render_json<T: Serialize>(manifest: RunManifest, report: T) -> Result<String> {
    let envelope = Envelope { manifest, report };
    let mut s = serde_json::to_string_pretty(&envelope)
        .map_err(|e| Error::Numerical(format!("report serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

/// Assembles an RFC 4180 CSV document: CRLF line endings, fields quoted
/// only when they contain a comma, quote, or line break.
pub fn csv_document(rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    for row in rows {
        let mut first = true;
        for field in row {
            if !first {
                out.push(',');
            }
            first = false;
            if field.contains([',', '"', '\n', '\r']) {
                out.push('"');
                out.push_str(&field.replace('"', "\"\""));
                out.push('"');
            } else {
                out.push_str(field);
            }
        }
        out.push_str("\r\n");
    }
    out
}

/// One `key = value` line per entry; empty values render as `-`.
pub fn text_document(pairs: &[(String, String)]) -> String {
    let mut out = String::new();
    for (k, v) in pairs {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(if v.is_empty() { "-" } else { v });
        out.push('\n');
    }
    out
}

/// Shortest-round-trip decimal for a float; empty string for `None`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_only_fields_that_need_it() {
        let rows = vec![
            vec!["plain".to_string(), "with,comma".to_string()],
            vec!["with \"quote\"".to_string(), "with\nnewline".to_string()],
        ];
        let doc = csv_document(&rows);
        assert_eq!(
            doc,
            "plain,\"with,comma\"\r\n\"with \"\"quote\"\"\",\"with\nnewline\"\r\n"
        );
    }

    #[test]
    fn text_renders_empty_as_dash() {
        let doc = text_document(&[("a".into(), "1".into()), ("b".into(), String::new())]);
        assert_eq!(doc, "a = 1\nb = -\n");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1, 5.6, 1.0 / 3.0, 1e-300, 12345678.9] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_opt(None), "");
    }
}
