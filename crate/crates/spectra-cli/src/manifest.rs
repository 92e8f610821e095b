//! The run manifest recorded under `"manifest"` in every JSON output, plus
//! the JSON/CSV emission helpers shared by all subcommands.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

/// Version tag stamped as `"schema"` at the top of every JSON output.
pub const SCHEMA_VERSION: u32 = 1;

/// One explicitly-passed flag, recorded verbatim.
#[derive(Debug, Clone, Serialize)]
pub struct FlagOverride {
    pub flag: String,
    pub value: String,
}

/// Provenance block: what ran, on which input, with which overrides, writing
/// which files. The timestamp stays `null` unless opted into, so identical
/// invocations emit identical bytes.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub subcommand: &'static str,
    pub input: Option<String>,
    pub overrides: Vec<FlagOverride>,
    pub outputs: Vec<String>,
    pub tool_version: String,
    /// Unix seconds; `SOURCE_DATE_EPOCH` wins over the wall clock.
    pub timestamp: Option<u64>,
}

impl RunManifest {
    pub fn new(subcommand: &'static str, input: Option<&Path>, stamp: bool) -> Result<Self> {
        Ok(RunManifest {
            subcommand,
            input: input.map(|p| p.display().to_string()),
            overrides: Vec::new(),
            outputs: Vec::new(),
            tool_version: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            timestamp: resolve_timestamp(stamp)?,
        })
    }

    /// Records one explicitly-passed flag override.
    pub fn flag(&mut self, flag: &str, value: impl Display) {
        self.overrides.push(FlagOverride {
            flag: flag.to_string(),
            value: value.to_string(),
        });
    }

    /// Records a file this run writes.
    pub fn output(&mut self, path: impl Into<String>) {
        self.outputs.push(path.into());
    }
}

fn resolve_timestamp(requested: bool) -> Result<Option<u64>> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(raw) => {
            let seconds: u64 = raw
                .trim()
                .parse()
                .with_context(|| format!("SOURCE_DATE_EPOCH must be unix seconds, got {raw:?}"))?;
            Ok(Some(seconds))
        }
        Err(std::env::VarError::NotPresent) => {
            if requested {
                let now = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .context("system clock predates the unix epoch")?;
                Ok(Some(now.as_secs()))
            } else {
                Ok(None)
            }
        }
        Err(err) => Err(err).context("reading SOURCE_DATE_EPOCH"),
    }
}

/// Pretty-prints a JSON document to stdout with a trailing newline. Struct
/// fields serialize in declaration order, so output bytes are deterministic.
pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).context("serializing output JSON")?;
    text.push('\n');
    std::io::stdout()
        .write_all(text.as_bytes())
        .context("writing output JSON")?;
    Ok(())
}

/// Writes one CSV file: a single header row, then `rows`. Numbers should be
/// formatted with `{}` — Rust's shortest round-trip form for `f64`.
pub fn write_csv(path: &str, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut text = String::with_capacity(4096);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    std::fs::write(path, text).with_context(|| format!("writing {path}"))?;
    Ok(())
}
