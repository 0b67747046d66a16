//! Command-line front end: each subcommand writes its CSVs, a short report
//! and a `manifest.toml` into the output directory.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use eanet::network::{NetworkConfig, UserPair};

mod commands;
mod demo;
mod manifest;
mod output;

pub use manifest::{RunManifest, MANIFEST_FILE};
pub use commands::{monobit_z, MONOBIT_Z_LIMIT};
pub use output::OutDir;

pub const DEMO_INPUTS: [u64; 4] = [55_406, 116_559, 988_150, 2_839_885];

#[derive(Debug, Parser)]
#[command(name = "eanet", version, about = "Entanglement access network simulator")]
pub struct Cli {
    /// Network configuration file (TOML, keys as in NetworkConfig).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "eanet-out")]
    pub out: PathBuf,
    /// Replay the run recorded in this manifest instead of using the flags,
    /// then check every artifact against the recorded hashes.
    #[arg(long, global = true)]
    pub manifest: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Coincidence fringe of one pair against Bob's analyzer angle.
    Fringe(FringeArgs),
    /// CHSH value of one pair with its bootstrap error.
    Chsh(ChshArgs),
    /// One E91 key-distribution session.
    Qkd(QkdArgs),
    /// The ring secure-sum protocol.
    SecureSum(SecureSumArgs),
    /// Every experiment on the four-user demo setup in one run.
    DemoPaper(DemoArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fringe(_) => "fringe",
            Command::Chsh(_) => "chsh",
            Command::Qkd(_) => "qkd",
            Command::SecureSum(_) => "secure-sum",
            Command::DemoPaper(_) => "demo-paper",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    Z,
    X,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TransportChoice {
    Lockstep,
    Threads,
    Tcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyChoice {
    /// Run QKD on every ring link.
    Qkd,
    /// Seeded uniform pads, no key distribution.
    Seeded,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FringeArgs {
    #[arg(long, default_value = "A1B1")]
    pub pair: String,
    #[arg(long, value_enum, default_value_t = BasisChoice::Both)]
    pub basis: BasisChoice,
    /// Analyzer angles, equally spaced over [0°, 180°).
    #[arg(long, default_value_t = 16)]
    pub points: usize,
    /// Pump pulses at each angle.
    #[arg(long, default_value_t = 1_000_000)]
    pub pulses: u64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ChshArgs {
    #[arg(long, default_value = "A1B1")]
    pub pair: String,
    /// Coincidences per setting pair.
    #[arg(long, default_value_t = 100_000)]
    pub samples: u64,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct QkdArgs {
    #[arg(long, default_value = "A1B1")]
    pub pair: String,
    #[arg(long, default_value_t = 12_000)]
    pub target_sifted: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SecureSumArgs {
    #[arg(long, value_delimiter = ',', default_values_t = DEMO_INPUTS)]
    pub inputs: Vec<u64>,
    /// Ring order; defaults to A1,B1,A2,B2,... alternating sides.
    #[arg(long, value_delimiter = ',')]
    pub parties: Vec<String>,
    #[arg(long, default_value_t = 25)]
    pub bits: u32,
    #[arg(long, default_value_t = 30)]
    pub rounds: u64,
    #[arg(long, value_enum, default_value_t = TransportChoice::Lockstep)]
    pub transport: TransportChoice,
    #[arg(long, value_enum, default_value_t = KeyChoice::Qkd)]
    pub keys: KeyChoice,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 16)]
    pub fringe_points: usize,
    #[arg(long, default_value_t = 1_000_000)]
    pub fringe_pulses: u64,
    #[arg(long, default_value_t = 100_000)]
    pub chsh_samples: u64,
    #[arg(long, default_value_t = 12_000)]
    pub target_sifted: usize,
    #[arg(long, default_value_t = 30)]
    pub rounds: u64,
    #[arg(long, value_enum, default_value_t = TransportChoice::Lockstep)]
    pub transport: TransportChoice,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("aborted: {0}")]
    Abort(String),
    #[error("I/O: {0}")]
    Io(String),
    #[error("rerun does not reproduce the manifest: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Abort(_) => 3,
            CliError::Io(_) => 4,
            CliError::Mismatch(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// One resolved run: what to do, on which network, with which seed.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    pub config: NetworkConfig,
    pub seed: u64,
}

/// What a finished run wrote and what it has to say about it.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub summary: String,
}

pub fn load_config(path: Option<&Path>) -> Result<NetworkConfig, CliError> {
    match path {
        None => Ok(NetworkConfig::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            NetworkConfig::from_toml_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))
        }
    }
}

pub(crate) fn parse_pair(text: &str, config: &NetworkConfig) -> Result<UserPair, CliError> {
    let pair: UserPair = text.parse().map_err(|e| CliError::Usage(format!("{e}")))?;
    config.check_pair(pair).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(pair)
}

/// Runs `spec` into `out` and writes the manifest last.
pub fn execute(spec: &RunSpec, out: &Path) -> Result<RunOutcome, CliError> {
    let mut dir = OutDir::create(out)?;
    let summary = match &spec.command {
        Command::Fringe(a) => commands::fringe(a, &spec.config, spec.seed, &mut dir)?,
        Command::Chsh(a) => commands::chsh(a, &spec.config, spec.seed, &mut dir)?,
        Command::Qkd(a) => commands::qkd(a, &spec.config, spec.seed, &mut dir)?,
        Command::SecureSum(a) => commands::secure_sum(a, &spec.config, spec.seed, &mut dir)?,
        Command::DemoPaper(a) => demo::demo_paper(a, &spec.config, spec.seed, &mut dir)?,
    };
    let manifest = RunManifest::new(spec, &dir)?;
    dir.write_str(MANIFEST_FILE, &manifest.to_toml()?)?;
    Ok(RunOutcome { manifest, summary })
}

/// Entry point behind `main`: resolves flags or a manifest into a run.
pub fn run(cli: Cli) -> Result<RunOutcome, CliError> {
    match &cli.manifest {
        None => {
            let spec = RunSpec {
                command: cli.command.clone(),
                config: load_config(cli.config.as_deref())?,
                seed: cli.seed,
            };
            execute(&spec, &cli.out)
        }
        Some(path) => {
            let recorded = RunManifest::load(path)?;
            if recorded.subcommand != cli.command.name() {
                return Err(CliError::Usage(format!(
                    "manifest records `{}`, not `{}`",
                    recorded.subcommand,
                    cli.command.name()
                )));
            }
            let outcome = execute(&recorded.spec(), &cli.out)?;
            recorded.verify(&outcome.manifest)?;
            Ok(outcome)
        }
    }
}
