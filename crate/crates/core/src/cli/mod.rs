//! The `rulewalk` command line: argument parsing, per-run output
//! directories, manifests and the exit-code mapping.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 numerical
//! failure.

mod commands;
mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::eval::RankMode;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "rulewalk", version, about = "Rule-guided walk agent for knowledge-graph link prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy with REINFORCE.
    Train(TrainArgs),
    /// Rank held-out pairs and report filtered hits@k and MRR.
    Evaluate(EvaluateArgs),
    /// Write candidate rankings for chosen source entities.
    Rank(RankArgs),
    /// Re-estimate rule scores by path sampling.
    EstimateConfidence(ConfidenceArgs),
    /// Generate a synthetic graph with a planted rule.
    GenerateSynthetic(SyntheticArgs),
    /// Entity, edge and relation counts.
    Stats(StatsArgs),
    /// Seeded 80/10/10 split of one relation's edges.
    MakeSplit(MakeSplitArgs),
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Triples file (head, relation, tail; tab-separated).
    #[arg(long)]
    pub graph: PathBuf,
    /// Entity type file (entity, type; tab-separated).
    #[arg(long)]
    pub types: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Overrides the seed from the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Parent directory for the run directory.
    #[arg(long, default_value = "runs")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Split file; validation and test edges are removed before training.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Partition {
    Valid,
    Test,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "full")]
    pub mode: RankMode,
    #[arg(long, value_enum, default_value = "test")]
    pub partition: Partition,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    /// Split file; held-out edges are removed before decoding.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "full")]
    pub mode: RankMode,
    /// Source entity to rank for (repeatable); defaults to every entity of
    /// the head source type.
    #[arg(long = "compound")]
    pub compounds: Vec<String>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ConfidenceArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long)]
    pub rules: PathBuf,
    /// Body instances sampled per rule.
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    /// Generator config (TOML); built-in defaults when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "treats")]
    pub head_relation: String,
    /// Count after adding inverse relations.
    #[arg(long)]
    pub augment: bool,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct MakeSplitArgs {
    #[command(flatten)]
    pub graph: GraphArgs,
    #[arg(long, default_value = "treats")]
    pub relation: String,
    #[command(flatten)]
    pub run: RunArgs,
}

/// Content hash of an input file, recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub(crate) struct InputRecord {
    pub path: String,
    pub sha256: String,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub(crate) fn read_input(path: &Path) -> Result<(Vec<u8>, InputRecord), CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let rec = InputRecord {
        path: path.display().to_string(),
        sha256: sha256_hex(&bytes),
    };
    Ok((bytes, rec))
}

/// Provenance of a run. Contains nothing time-dependent, so identical
/// invocations produce identical manifests.
#[derive(Debug, Serialize)]
pub(crate) struct Manifest {
    pub tool: String,
    pub command: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, InputRecord>,
    /// Output file name to sha256; `null` for files that are not
    /// reproducible by nature (wall-clock timings).
    pub outputs: BTreeMap<String, Option<String>>,
    pub checkpoint: Option<String>,
}

/// A fresh output directory `<out>/<command>-<unix time>-<fingerprint>`.
pub(crate) struct RunDir {
    pub path: PathBuf,
    outputs: BTreeMap<String, Option<String>>,
}

impl RunDir {
    pub fn create(out: &Path, command: &str, fingerprint: &str) -> Result<Self, CliError> {
        fs::create_dir_all(out).map_err(|e| CliError::Data(format!("{}: {e}", out.display())))?;
        let ts = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let base = format!("{command}-{ts}-{}", &fingerprint[..8]);
        for n in 0.. {
            let name = if n == 0 { base.clone() } else { format!("{base}-{n}") };
            let path = out.join(name);
            match fs::create_dir(&path) {
                Ok(()) => {
                    return Ok(Self {
                        path,
                        outputs: BTreeMap::new(),
                    })
                }
                Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
                Err(e) => return Err(CliError::Data(format!("{}: {e}", path.display()))),
            }
        }
        unreachable!()
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    /// Writes a reproducible output and records its hash.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let p = self.file(name);
        fs::write(&p, bytes).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        self.outputs.insert(name.to_owned(), Some(sha256_hex(bytes)));
        Ok(())
    }

    pub fn record(&mut self, name: &str, sha: Option<String>) {
        self.outputs.insert(name.to_owned(), sha);
    }

    pub fn finish(mut self, mut manifest: Manifest) -> Result<PathBuf, CliError> {
        manifest.outputs = std::mem::take(&mut self.outputs);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
        let p = self.file("manifest.json");
        fs::write(&p, text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        Ok(self.path)
    }
}

/// Fingerprint of everything that determines a run's outputs.
pub(crate) fn fingerprint(command: &str, seed: u64, config: &serde_json::Value, inputs: &BTreeMap<String, InputRecord>) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(seed.to_le_bytes());
    h.update(config.to_string().as_bytes());
    for (k, v) in inputs {
        h.update(k.as_bytes());
        h.update(v.sha256.as_bytes());
    }
    hex::encode(h.finalize())
}

pub(crate) fn tool_version() -> String {
    format!("rulewalk {}", env!("CARGO_PKG_VERSION"))
}

/// Runs a parsed command inside a pool of the requested size and returns the
/// run directory.
pub fn run(cli: Cli) -> Result<PathBuf, CliError> {
    let threads = match &cli.command {
        Command::Train(a) => a.run.threads,
        Command::Evaluate(a) => a.run.threads,
        Command::Rank(a) => a.run.threads,
        Command::EstimateConfidence(a) => a.run.threads,
        Command::GenerateSynthetic(a) => a.run.threads,
        Command::Stats(a) => a.run.threads,
        Command::MakeSplit(a) => a.run.threads,
    };
    if threads == Some(0) {
        return Err(CliError::Config("--threads must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Rank(a) => commands::rank(a),
        Command::EstimateConfidence(a) => commands::estimate_confidence(a),
        Command::GenerateSynthetic(a) => commands::generate_synthetic(a),
        Command::Stats(a) => commands::stats(a),
        Command::MakeSplit(a) => commands::make_split(a),
    })
}

/// Entry point for the binary: parses `args`, runs, prints the run directory
/// on stdout and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(dir) => {
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{}", dir.display());
            0
        }
        Err(e) => {
            eprintln!("rulewalk: {e}");
            e.exit_code()
        }
    }
}
