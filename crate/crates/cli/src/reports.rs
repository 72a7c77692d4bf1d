//! Report plumbing: JSON documents with a `meta` header, and CSV files with
//! `# key=value` comment lines. Everything written here is deterministic —
//! no timestamps, no machine identifiers — so reruns (and runs with
//! different thread counts) are byte-identical.

use std::path::Path;

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    /// Hash of the canonical config re-serialization.
    pub config_hash: String,
}

impl Meta {
    pub fn new(config_hash: String) -> Self {
        Self {
            tool: "semigroup-dim",
            version: env!("CARGO_PKG_VERSION"),
            config_hash,
        }
    }

    /// The standard leading CSV comment lines.
    pub fn csv_comments(&self, extra: &[(&str, String)]) -> Vec<String> {
        let mut out = vec![
            format!("tool={}", self.tool),
            format!("version={}", self.version),
            format!("config_hash={}", self.config_hash),
        ];
        for (k, v) in extra {
            out.push(format!("{k}={v}"));
        }
        out
    }
}

/// Writes `{ "meta": …, "report": … }` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, report: &T) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        meta: &'a Meta,
        report: &'a T,
    }
    let mut text = serde_json::to_string_pretty(&Doc { meta, report })?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

/// Writes a CSV file: `# key=value` comments, one header row, data rows.
pub fn write_csv<I>(path: &Path, comments: &[String], header: &str, rows: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut text = String::new();
    for c in comments {
        text.push_str(&format!("# {c}\n"));
    }
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Canonical float formatting for CSV cells.
pub fn fmt(x: f64) -> String {
    format!("{x:.12e}")
}
