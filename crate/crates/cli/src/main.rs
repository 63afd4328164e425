//! `stv-audit`: tabulate STV elections, build audit graphs and run
//! ballot-comparison audits from the command line.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stv_audit::audit::DesignScenario;
use stv_audit::stats::DiscrepancyCount;

#[derive(Parser, Debug)]
#[command(name = "stv-audit", version, about = "STV tabulation and graph-based risk-limiting audits")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// Key-value file preloading any flag; explicit flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Directory artifacts are written to.
    #[arg(long, global = true, env = "STV_AUDIT_OUT", value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,
    /// Seed for noise, sampling and Monte Carlo trials.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Count an election and print the round table.
    Tabulate(TabulateArgs),
    /// Build the audit graph at a least auditable margin.
    Graph(GraphArgs),
    /// Audit reported CVRs against paper ballots.
    Audit(AuditArgs),
    /// Search for the smallest sample size that certifies reliably.
    Asn(AsnArgs),
    /// Monte Carlo check of the per-edge risk allocation designs.
    VerifyDesign(VerifyDesignArgs),
    /// Write a noised copy of a ballot file.
    Simulate(SimulateArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Tabulate(_) => "tabulate",
            Command::Graph(_) => "graph",
            Command::Audit(_) => "audit",
            Command::Asn(_) => "asn",
            Command::VerifyDesign(_) => "verify-design",
            Command::Simulate(_) => "simulate",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct BallotArgs {
    /// Ballot file, BLT or CSV (by extension).
    pub ballots: PathBuf,
    /// Seats to fill; required for CSV, overrides the BLT header.
    #[arg(long)]
    pub seats: Option<usize>,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct MeekArgs {
    /// Convergence tolerance on winner excess, in votes.
    #[arg(long, default_value_t = 1e-6)]
    pub omega: f64,
    /// Minimum surplus added to the quota, in votes.
    #[arg(long, default_value_t = 1e-6)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_iterations: usize,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct GhostArgs {
    /// Ghost (empty) ballots as a fraction of N, rounded up.
    #[arg(long, value_name = "RATE", conflicts_with = "ghost_count")]
    pub ghosts: Option<f64>,
    /// Exact number of ghost ballots.
    #[arg(long, value_name = "COUNT")]
    pub ghost_count: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DiscrepancyArg {
    MarginBallots,
    MarginEntries,
    Any,
}

impl From<DiscrepancyArg> for DiscrepancyCount {
    fn from(d: DiscrepancyArg) -> Self {
        match d {
            DiscrepancyArg::MarginBallots => DiscrepancyCount::MarginBallots,
            DiscrepancyArg::MarginEntries => DiscrepancyCount::MarginEntries,
            DiscrepancyArg::Any => DiscrepancyCount::AnyDiscrepancy,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
pub struct StatsArgs {
    /// Risk spent on the normal confidence bounds.
    #[arg(long, default_value_t = 0.045)]
    pub alpha0: f64,
    /// Risk spent on the hypergeometric variance bound.
    #[arg(long, default_value_t = 0.005)]
    pub alpha_k: f64,
    /// How discrepancies are counted for the variance bound.
    #[arg(long, value_enum, default_value_t = DiscrepancyArg::MarginBallots)]
    pub discrepancy_count: DiscrepancyArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Rule {
    Meek,
    Wigm,
}

#[derive(Args, Debug)]
pub struct TabulateArgs {
    #[command(flatten)]
    pub input: BallotArgs,
    #[arg(long, value_enum)]
    pub rule: Rule,
    #[command(flatten)]
    pub meek: MeekArgs,
    /// Round-log JSON path (default rounds.json under --out).
    #[arg(long, value_name = "PATH")]
    pub log: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GraphArgs {
    #[command(flatten)]
    pub input: BallotArgs,
    /// Least auditable margin, in votes.
    #[arg(long)]
    pub lam: f64,
    #[arg(long)]
    pub vertex_cap: Option<usize>,
    #[command(flatten)]
    pub meek: MeekArgs,
    #[command(flatten)]
    pub ghosts: GhostArgs,
    /// Graphviz output (default graph.dot under --out).
    #[arg(long, value_name = "PATH")]
    pub dot: Option<PathBuf>,
    /// JSON output (default graph.json under --out).
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AuditArgs {
    /// Reported cast vote records.
    #[command(flatten)]
    pub input: BallotArgs,
    /// Paper ballots in the same order; synthesized with --eta when absent.
    #[arg(long, value_name = "FILE")]
    pub actual: Option<PathBuf>,
    /// Fraction of CVRs perturbed when synthesizing paper ballots.
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long)]
    pub sample_size: usize,
    /// Least auditable margin, in votes.
    #[arg(long)]
    pub lam: f64,
    #[arg(long)]
    pub vertex_cap: Option<usize>,
    #[command(flatten)]
    pub meek: MeekArgs,
    #[command(flatten)]
    pub ghosts: GhostArgs,
    #[command(flatten)]
    pub stats: StatsArgs,
    /// Audit report JSON (default audit.json under --out).
    #[arg(long, value_name = "PATH")]
    pub report: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AsnArgs {
    #[command(flatten)]
    pub input: BallotArgs,
    /// Least auditable margin; searched over --lam-grid when absent.
    #[arg(long)]
    pub lam: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,60,80,100")]
    pub lam_grid: Vec<f64>,
    #[arg(long)]
    pub vertex_cap: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    /// Trials per sample size.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Required share of certifying trials.
    #[arg(long, default_value_t = 0.9)]
    pub target: f64,
    /// Profile label in the CSV (default: the file stem).
    #[arg(long)]
    pub profile: Option<String>,
    #[command(flatten)]
    pub meek: MeekArgs,
    #[command(flatten)]
    pub ghosts: GhostArgs,
    #[command(flatten)]
    pub stats: StatsArgs,
    /// CSV output (default asn.csv under --out).
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug)]
pub enum ScenarioArg {
    All,
    One(DesignScenario),
}

fn parse_scenario(s: &str) -> Result<ScenarioArg, String> {
    if s.eq_ignore_ascii_case("all") {
        Ok(ScenarioArg::All)
    } else {
        s.parse().map(ScenarioArg::One)
    }
}

#[derive(Args, Debug)]
pub struct VerifyDesignArgs {
    /// P6, P9-naive, P9-budgeted, P9-single-edge or all.
    #[arg(long, value_parser = parse_scenario, default_value = "all")]
    pub scenario: ScenarioArg,
    #[arg(long, default_value_t = 50_000)]
    pub trials: usize,
    /// CSV output (default design.csv under --out).
    #[arg(long, value_name = "PATH")]
    pub csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: BallotArgs,
    /// Fraction of ballots perturbed.
    #[arg(long)]
    pub eta: f64,
    #[command(flatten)]
    pub ghosts: GhostArgs,
    /// Noised BLT output (default noised.blt under --out).
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(clap::Error),
    /// Bad input or configuration.
    Validation(String),
    /// The audit ran but did not certify the outcome.
    NotRejected(String),
    Failed(String),
}

impl From<stv_audit::Error> for CliError {
    fn from(e: stv_audit::Error) -> Self {
        use stv_audit::Error as E;
        match e {
            E::Parse(_)
            | E::Config(_)
            | E::EmptyBallot { .. }
            | E::Incoherent
            | E::GraphTooLarge { .. }
            | E::Infeasible(_) => CliError::Validation(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let result = config::parse_args(std::env::args_os().collect()).and_then(commands::run);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(e)) => {
            let _ = e.print();
            ExitCode::from(e.exit_code() as u8)
        }
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::NotRejected(m)) => {
            eprintln!("{m}");
            ExitCode::from(3)
        }
        Err(CliError::Failed(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
