//! Artifacts written next to every result: the manifest, the timing record
//! and the evaluation report.
//!
//! Wall time lives only in `timing.json`, so everything else a run writes is
//! a pure function of its manifest.

use std::fs;
use std::path::{Path, PathBuf};

use clues::ingest::CorpusConfig;
use clues::metrics::{EvalReport, ViolationSummary};
use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::Failure;

pub const TOOL: &str = "clues";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// The full invocation; its arguments carry the coarsening settings.
    pub invocation: Command,
    pub seed: Option<u64>,
    /// Resolved corpus settings for commands that ingest text.
    pub corpus: Option<CorpusConfig>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(invocation: &Command) -> Self {
        RunManifest {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            invocation: invocation.clone(),
            seed: None,
            corpus: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<(), Failure> {
        write_json(&dir.join("manifest.json"), self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    /// Monotonic seconds of Step I and Step II, I/O excluded.
    pub wall_time: f64,
}

impl Timing {
    pub fn read(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Failure::in_file(path, e.into()))
    }
}

/// An [`EvalReport`] without its wall time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub dasgupta_cost: f64,
    pub violation_rate: f64,
    pub violations: ViolationSummary,
    pub warnings: Vec<String>,
}

impl From<&EvalReport> for Report {
    fn from(r: &EvalReport) -> Self {
        Report {
            dasgupta_cost: r.dasgupta_cost,
            violation_rate: r.violation_rate,
            violations: r.violations.clone(),
            warnings: r.warnings.clone(),
        }
    }
}

impl Report {
    /// One row for the whole hierarchy, then one per layer.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scope,constraints,violated,violation_rate,dasgupta_cost\n");
        let v = &self.violations;
        s.push_str(&format!(
            "all,{},{},{},{}\n",
            v.total, v.violated, v.rate, self.dasgupta_cost
        ));
        for l in &v.per_layer {
            s.push_str(&format!(
                "layer {},{},{},{},\n",
                l.layer,
                l.constraints,
                l.violated_must_links + l.violated_cannot_links,
                l.rate
            ));
        }
        s
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    let mut body = text.to_owned();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    fs::write(path, body).map_err(|e| Failure::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(clues::Error::from)?;
    write_text(path, &text)
}
