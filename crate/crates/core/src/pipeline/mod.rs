//! End-to-end pipeline over plain-file artifacts.
//!
//! Each stage reads its inputs from the corpus, the lexicon, or an upstream
//! stage's directory under `out_dir`, and writes its own directory
//! `out_dir/<stage>/` plus a `manifest.json` with input and artifact
//! digests. Running the stages one at a time gives the same bytes as `all`.

pub mod config;
pub mod io;
mod stages;
mod summary;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{CugConfig, PcaConfig, PipelineConfig, RegressionConfig};
pub use stages::{NetworkBundle, StatsReport, Table2Row, TABLE2};
pub use summary::{NarrativeRow, Report};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Extract,
    Code,
    Network,
    Stats,
    Cug,
    Pca,
    Regress,
    Report,
    All,
}

impl Stage {
    pub const SEQUENCE: [Stage; 8] = [
        Stage::Extract,
        Stage::Code,
        Stage::Network,
        Stage::Stats,
        Stage::Cug,
        Stage::Pca,
        Stage::Regress,
        Stage::Report,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Extract => "extract",
            Stage::Code => "code",
            Stage::Network => "network",
            Stage::Stats => "stats",
            Stage::Cug => "cug",
            Stage::Pca => "pca",
            Stage::Regress => "regress",
            Stage::Report => "report",
            Stage::All => "all",
        }
    }

    /// The concrete stages this invocation runs.
    pub fn expand(self) -> Vec<Stage> {
        match self {
            Stage::All => Stage::SEQUENCE.to_vec(),
            s => vec![s],
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::SEQUENCE
            .into_iter()
            .chain([Stage::All])
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

/// Output format for the summary printed after a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Json,
    Md,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "md" => Ok(OutputFormat::Md),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(Error::Config(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunOutcome {
    pub stages: Vec<Stage>,
    /// Every artifact written, in write order.
    pub artifacts: Vec<PathBuf>,
    /// `Some(false)` when the regression fit did not converge.
    pub converged: Option<bool>,
}

/// Runs `stage` (or every stage for [`Stage::All`]).
pub fn run(stage: Stage, config: &PipelineConfig) -> Result<RunOutcome> {
    config.validate(stage)?;
    let mut ctx = stages::Context::new(config)?;
    let mut outcome = RunOutcome::default();
    for s in stage.expand() {
        let written = match s {
            Stage::Extract => stages::extract(&mut ctx)?,
            Stage::Code => stages::code(&mut ctx)?,
            Stage::Network => stages::network(&mut ctx)?,
            Stage::Stats => stages::stats(&mut ctx)?,
            Stage::Cug => stages::cug(&mut ctx)?,
            Stage::Pca => stages::pca(&mut ctx)?,
            Stage::Regress => {
                let (written, converged) = stages::regress(&mut ctx)?;
                outcome.converged = Some(converged);
                written
            }
            Stage::Report => summary::report(&mut ctx)?,
            Stage::All => unreachable!("expanded above"),
        };
        outcome.stages.push(s);
        outcome.artifacts.extend(written);
    }
    Ok(outcome)
}

/// The artifact that best summarizes `stage` in `format`, if one exists.
pub fn summary_artifact(stage: Stage, format: OutputFormat, out_dir: &std::path::Path) -> Option<PathBuf> {
    use OutputFormat::*;
    let rel = match (stage, format) {
        (Stage::Extract, Json | Md) => "extract/extraction_report.json",
        (Stage::Extract, Csv) => "extract/skips.csv",
        (Stage::Code, Json | Md) => "code/coding_report.json",
        (Stage::Code, Csv) => "code/concept_frequencies.csv",
        (Stage::Network, Json | Md) => "network/strata.json",
        (Stage::Network, Csv) => "network/degree_table.csv",
        (Stage::Stats, Json | Md) => "stats/stats.json",
        (Stage::Stats, Csv) => "stats/stats.csv",
        (Stage::Cug, Json | Md) => "cug/cug.json",
        (Stage::Cug, Csv) => "cug/cug.csv",
        (Stage::Pca, Json | Md) => "pca/pca.json",
        (Stage::Pca, Csv) => "pca/eigenvalues.csv",
        (Stage::Regress, Json) => "regress/fit.json",
        (Stage::Regress, Md) => "regress/table.md",
        (Stage::Regress, Csv) => "regress/table.csv",
        (Stage::Report | Stage::All, Json) => "report/report.json",
        (Stage::Report | Stage::All, Md) => "report/report.md",
        (Stage::Report | Stage::All, Csv) => "report/top_narratives.csv",
    };
    let path = out_dir.join(rel);
    path.is_file().then_some(path)
}
