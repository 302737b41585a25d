//! Output documents: every run embeds its configuration and a
//! reproducibility block.

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::ValueEnum;
use num_complex::Complex64;
use serde::Serialize;

use condtel::analysis::ConvergenceReport;
use condtel::export::to_json_string;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Complex amplitudes as `[re, im]` pairs.
pub fn pairs(amps: &[Complex64]) -> Vec<[f64; 2]> {
    amps.iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceSummary {
    pub quantity: String,
    pub cutoff_low: usize,
    pub cutoff_high: usize,
    pub value_low: f64,
    pub value_high: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl From<&ConvergenceReport> for ConvergenceSummary {
    fn from(r: &ConvergenceReport) -> Self {
        Self {
            quantity: serde_json::to_string(&r.quantity).expect("quantity serializes"),
            cutoff_low: r.cutoff_low,
            cutoff_high: r.cutoff_high,
            value_low: r.value_low,
            value_high: r.value_high,
            difference: r.difference,
            tolerance: r.tolerance,
            passed: r.passed,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Reproducibility {
    pub cutoff: usize,
    /// `None` when no check was requested.
    pub convergence: Option<ConvergenceSummary>,
    pub version: &'static str,
}

impl Reproducibility {
    pub fn new(cutoff: usize, convergence: Option<ConvergenceSummary>) -> Self {
        Self {
            cutoff,
            convergence,
            version: env!("CARGO_PKG_VERSION"),
        }
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize, C: Serialize> {
    #[serde(flatten)]
    result: &'a T,
    config: &'a C,
    reproducibility: &'a Reproducibility,
}

/// Where output goes: a file or stdout.
pub struct Sink {
    pub path: Option<PathBuf>,
}

impl Sink {
    pub fn write(&self, bytes: &[u8]) -> Result<()> {
        match &self.path {
            Some(p) => std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)?;
                out.flush()?;
                Ok(())
            }
        }
    }

    pub fn json<T: Serialize, C: Serialize>(&self, result: &T, config: &C, repro: &Reproducibility) -> Result<()> {
        let doc = Document {
            result,
            config,
            reproducibility: repro,
        };
        self.write(to_json_string(&doc)?.as_bytes())
    }

    /// `table` receives the comment header and writes the CSV body.
    pub fn csv<C: Serialize>(
        &self,
        config: &C,
        repro: &Reproducibility,
        table: impl FnOnce(&mut Vec<u8>, &str) -> std::io::Result<()>,
    ) -> Result<()> {
        let comment = format!(
            "config: {}\nreproducibility: {}",
            serde_json::to_string(config)?,
            serde_json::to_string(repro)?
        );
        let mut buf = Vec::new();
        table(&mut buf, &comment)?;
        self.write(&buf)
    }
}
