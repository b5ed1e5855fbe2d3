//! Check outcomes and rendering of output artifacts.

use std::io::Write;

use rug::Float;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    /// A documented disagreement with a printed value; never fails a run.
    Flagged,
}

impl Outcome {
    pub fn label(self) -> &'static str {
        match self {
            Outcome::Pass => "PASS",
            Outcome::Fail => "FAIL",
            Outcome::Flagged => "FLAGGED",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub group: String,
    pub name: String,
    pub outcome: Outcome,
    pub detail: String,
}

impl Check {
    pub fn new(group: &str, name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Check {
            group: group.into(),
            name: name.into(),
            outcome: if ok { Outcome::Pass } else { Outcome::Fail },
            detail: detail.into(),
        }
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.outcome == Outcome::Fail)
    }

    pub fn flagged(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.outcome == Outcome::Flagged)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }
}

/// Provenance embedded in every artifact.
#[derive(Clone, Debug, Serialize)]
pub struct Meta<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_hash: String,
    pub config: &'a RunConfig,
}

impl<'a> Meta<'a> {
    pub fn new(config: &'a RunConfig) -> Self {
        Meta {
            tool: "sptree",
            version: env!("CARGO_PKG_VERSION"),
            config_hash: config.hash(),
            config,
        }
    }
}

/// Write `rows` as CSV with a commented provenance header, or as a JSON
/// object `{meta, kind, rows}`.
pub fn render<T: Serialize>(out: &mut dyn Write, format: Format, meta: &Meta, kind: &str, rows: &[T]) -> Result<(), CliError> {
    match format {
        Format::Json => {
            let doc = serde_json::json!({ "meta": meta, "kind": kind, "rows": rows });
            serde_json::to_writer_pretty(&mut *out, &doc)?;
            writeln!(out)?;
        }
        Format::Csv => {
            writeln!(out, "# {} {} {kind}", meta.tool, meta.version)?;
            writeln!(out, "# config_hash {}", meta.config_hash)?;
            writeln!(out, "# config {}", serde_json::to_string(meta.config)?)?;
            let mut w = csv::Writer::from_writer(&mut *out);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

/// JSON object keyed by `key(row)`, for ledgers.
pub fn render_keyed<T: Serialize>(
    out: &mut dyn Write,
    meta: &Meta,
    kind: &str,
    rows: &[T],
    key: impl Fn(&T) -> String,
) -> Result<(), CliError> {
    let mut map = serde_json::Map::new();
    for r in rows {
        map.insert(key(r), serde_json::to_value(r)?);
    }
    let doc = serde_json::json!({ "meta": meta, "kind": kind, "rows": map });
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    Ok(())
}

/// Decimal rendering with `digits` significant digits.
pub fn decimal(x: &Float, digits: usize) -> String {
    format!("{x:.digits$}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize)]
    struct Row {
        n: usize,
        value: String,
    }

    #[test]
    fn csv_has_provenance_and_header() {
        let cfg = RunConfig::default();
        let mut buf = Vec::new();
        render(&mut buf, Format::Csv, &Meta::new(&cfg), "demo", &[Row { n: 4, value: "60".into() }]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].contains(&cfg.hash()));
        assert_eq!(lines[3], "n,value");
        assert_eq!(lines[4], "4,60");
    }

    #[test]
    fn json_is_parseable() {
        let cfg = RunConfig::default();
        let mut buf = Vec::new();
        render(
            &mut buf,
            Format::Json,
            &Meta::new(&cfg),
            "demo",
            &[Row {
                n: 1,
                value: "5/24".into(),
            }],
        )
        .unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["rows"][0]["value"], "5/24");
        assert_eq!(v["meta"]["config_hash"], cfg.hash());
    }

    #[test]
    fn report_outcomes() {
        let mut r = Report::default();
        r.extend([
            Check::new("g", "a", true, ""),
            Check {
                outcome: Outcome::Flagged,
                ..Check::new("g", "b", true, "")
            },
        ]);
        assert!(r.passed());
        assert_eq!(r.flagged().count(), 1);
        r.extend([Check::new("g", "c", false, "")]);
        assert!(!r.passed());
    }
}
