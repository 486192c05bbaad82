//! File plumbing: number formatting, CSV and JSON writers, run manifests.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use floquet_engine::ode::DEFAULT_TOL;
use floquet_engine::protocol::LoadedProtocol;
use serde::Serialize;

use crate::Failure;

/// Tolerance of the residual assertions, reported in every manifest.
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Shortest round-trip decimal; exponent form only for very small or large magnitudes.
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// CSV text with a fixed header, comma separators and LF line endings.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, values: &[f64]) {
        let cells: Vec<String> = values.iter().map(|&v| num(v)).collect();
        let _ = writeln!(self.text, "{}", cells.join(","));
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Failure::runtime(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

/// `dir/stem.<suffix>.json` next to `out`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out.file_stem().map_or_else(|| "out".into(), |s| s.to_string_lossy().into_owned());
    out.with_file_name(format!("{stem}.{suffix}.json"))
}

#[derive(Debug, Serialize)]
pub struct Tolerances {
    pub ode: f64,
    pub residual: f64,
}

/// Provenance written next to every output. Holds no clock or host data,
/// so repeated runs produce identical bytes.
#[derive(Debug, Serialize)]
pub struct RunManifest<'a, A: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    pub arguments: A,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<&'a LoadedProtocol>,
    pub tolerances: Tolerances,
    pub outputs: Vec<String>,
    /// Every computation is seedless and schedule-independent.
    pub deterministic: bool,
}

impl<'a, A: Serialize> RunManifest<'a, A> {
    pub fn new(command: &'static str, arguments: A, config: Option<&'a LoadedProtocol>, tol: f64, outputs: &[&Path]) -> Self {
        RunManifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            arguments,
            config,
            tolerances: Tolerances {
                ode: tol,
                residual: RESIDUAL_TOL,
            },
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            deterministic: true,
        }
    }
}

pub const DEFAULT_ODE_TOL: f64 = DEFAULT_TOL;
