//! `discourse`: runs the pipeline stages over plain-file artifacts.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 regression did not converge.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use discourse_core::pipeline::{self, OutputFormat, PipelineConfig, Stage};
use discourse_core::regression::CumulativeWindow;
use discourse_core::synth::{generate, SynthConfig};
use discourse_core::{Epoch, Error, Stratifier};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "discourse", version, about = "Causal discourse networks from agency messages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split messages into cause and effect subparts.
    Extract(RunArgs),
    /// Map subparts to lexicon concepts.
    Code(RunArgs),
    /// Build the valued concept networks.
    Network(RunArgs),
    /// Descriptive statistics with CUG p-values.
    Stats(RunArgs),
    /// CUG tests for the configured statistics and conditionings.
    Cug(RunArgs),
    /// Network principal components over a set of strata.
    Pca(RunArgs),
    /// Negative binomial model of retransmission counts.
    Regress(RunArgs),
    /// Bundle every stage's results into one report.
    Report(RunArgs),
    /// Run every stage in order.
    All(RunArgs),
    /// Write the seeded synthetic corpus as JSONL.
    Synth(SynthArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Md,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StratifyArg {
    Total,
    Month,
    Role,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum WindowArg {
    Before,
    Through,
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// TOML config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Corpus file (.jsonl or .csv).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Lexicon TOML; the bundled demo lexicon when omitted.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = "DISCOURSE_OUT")]
    out: Option<PathBuf>,
    /// Root seed for CUG draws and sampling.
    #[arg(long)]
    seed: Option<u64>,
    /// First month of the observation window (YYYY-MM).
    #[arg(long)]
    epoch: Option<String>,
    /// CUG replicates per statistic.
    #[arg(long)]
    replicates: Option<usize>,
    /// Strata that form the PCA graph set.
    #[arg(long, value_enum)]
    stratify: Option<StratifyArg>,
    /// Retained principal components.
    #[arg(long)]
    components: Option<usize>,
    /// Drop retransmissions from the regression sample.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    originals_only: Option<bool>,
    /// Cumulative usage window relative to the message month.
    #[arg(long, value_enum)]
    cum_window: Option<WindowArg>,
    /// Print the stage summary in this format.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Destination file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 3000)]
    messages: usize,
}

impl RunArgs {
    fn config(&self) -> Result<PipelineConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.corpus {
            cfg.corpus = Some(v.clone());
        }
        if let Some(v) = &self.lexicon {
            cfg.lexicon = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = Some(v);
        }
        if let Some(v) = &self.epoch {
            cfg.epoch = v.parse::<Epoch>()?;
        }
        if let Some(v) = self.replicates {
            cfg.cug.replicates = v;
        }
        if let Some(v) = self.stratify {
            let s = match v {
                StratifyArg::Total => Stratifier::Total,
                StratifyArg::Month => Stratifier::Month,
                StratifyArg::Role => Stratifier::Role,
            };
            cfg.pca.stratifier = s;
            if !cfg.stratifiers.contains(&s) {
                cfg.stratifiers.push(s);
            }
        }
        if let Some(v) = self.components {
            cfg.pca.components = v;
        }
        if let Some(v) = self.originals_only {
            cfg.regression.originals_only = v;
        }
        if let Some(v) = self.cum_window {
            cfg.regression.cum_window = match v {
                WindowArg::Before => CumulativeWindow::Before,
                WindowArg::Through => CumulativeWindow::Through,
            };
        }
        Ok(cfg)
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::MissingArtifact { .. } | Error::InvalidEpoch(_) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn run_stage(stage: Stage, args: &RunArgs) -> Result<u8, Error> {
    let cfg = args.config()?;
    let outcome = pipeline::run(stage, &cfg)?;
    if let Some(format) = args.format {
        let format = match format {
            Format::Json => OutputFormat::Json,
            Format::Md => OutputFormat::Md,
            Format::Csv => OutputFormat::Csv,
        };
        if let Some(path) = pipeline::summary_artifact(stage, format, &cfg.out_dir) {
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            print!("{text}");
        }
    } else {
        for path in &outcome.artifacts {
            println!("{}", path.display());
        }
    }
    if outcome.converged == Some(false) {
        eprintln!("warning: the regression did not converge; see regress/fit.json");
        return Ok(EXIT_NOT_CONVERGED);
    }
    Ok(0)
}

fn synth(args: &SynthArgs) -> Result<u8, Error> {
    let set = generate(&SynthConfig {
        seed: args.seed,
        messages: args.messages,
        ..SynthConfig::default()
    });
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    let mut w = BufWriter::new(file);
    set.write_jsonl(&mut w)?;
    w.flush().map_err(|e| Error::io(&args.out, e))?;
    println!("{}", args.out.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Extract(a) => run_stage(Stage::Extract, a),
        Command::Code(a) => run_stage(Stage::Code, a),
        Command::Network(a) => run_stage(Stage::Network, a),
        Command::Stats(a) => run_stage(Stage::Stats, a),
        Command::Cug(a) => run_stage(Stage::Cug, a),
        Command::Pca(a) => run_stage(Stage::Pca, a),
        Command::Regress(a) => run_stage(Stage::Regress, a),
        Command::Report(a) => run_stage(Stage::Report, a),
        Command::All(a) => run_stage(Stage::All, a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
