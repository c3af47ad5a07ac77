//! `mpr`: build, check, orthogonalize and simulate polynomial martingale
//! families from the command line. [`run`] is the whole program; the binary
//! only forwards `argv` and the exit code.

pub mod config;
mod commands;
pub mod output;

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::RunConfig;
pub use output::{exit_code, Summary, SummaryEntry};

/// Usage or input problem; always exit 3.
#[derive(Debug)]
pub struct InputError(pub String);

impl<E: std::fmt::Display> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.to_string())
    }
}

pub const EXIT_USAGE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "mpr", version, about = "Polynomial martingales for processes with polynomial regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Construct and certify the family; emit its JSON.
    Build(BuildArgs),
    /// Run structural checkers.
    Check(CheckArgs),
    /// Marginal and transitional orthogonal polynomials.
    Ortho(OrthoArgs),
    /// Monte Carlo martingale and moment tests.
    Sim(SimArgs),
    /// Re-aggregate the reports in a directory.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Builtin model: wiener, gamma, poisson:λ, bernoulli-jumps:λ.
    #[arg(long, conflicts_with = "model_file")]
    pub model: Option<String>,
    /// Model file with `g[n] = <polynomial in t>` lines.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Highest family order.
    #[arg(short = 'N', default_value_t = 4)]
    pub n: usize,
    /// Report directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[command(flatten)]
    pub model: ModelArgs,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated: ii, levy, reversed, ortho, cgs, harness, qh, m2-reversed.
    #[arg(long, value_delimiter = ',')]
    pub checks: Vec<String>,
    /// Every checker, in dependency order.
    #[arg(long)]
    pub all: bool,
    /// Shorthand for `--checks ortho`.
    #[arg(long)]
    pub ortho: bool,
    /// Time triple `s,t,u` with s < t < u; repeatable.
    #[arg(long = "triple")]
    pub triples: Vec<String>,
}

#[derive(Args, Debug)]
pub struct OrthoArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Marginal time; repeatable.
    #[arg(long = "time")]
    pub times: Vec<String>,
    /// Transitional law `s,y,t`; repeatable.
    #[arg(long = "transitional")]
    pub transitional: Vec<String>,
    /// Highest marginal degree (default N).
    #[arg(short = 'K')]
    pub k: Option<usize>,
    /// Highest transitional degree (default N/2).
    #[arg(long)]
    pub transitional_degree: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SimArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = mpr_simkit::DEFAULT_ZMAX)]
    pub zmax: f64,
    /// Simulation grid, ascending.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    pub grid: Vec<String>,
    /// Test functions M_0..M_K at the earlier time.
    #[arg(short = 'K', default_value_t = 2)]
    pub k: usize,
    /// Threads (0 = all cores); results do not depend on it.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Directory holding prior reports.
    pub dir: PathBuf,
    /// Where to write `summary.json` (default: the input directory).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

/// Run with the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Run with explicit streams; returns the exit code.
pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    let result = match cli.command {
        Command::Build(a) => commands::build(a, stdout),
        Command::Check(a) => commands::check(a, stdout),
        Command::Ortho(a) => commands::ortho(a, stdout),
        Command::Sim(a) => commands::sim(a, stdout),
        Command::Report(a) => commands::report(a, stdout),
    };
    match result {
        Ok(code) => code,
        Err(InputError(msg)) => {
            let _ = writeln!(stderr, "error: {msg}");
            EXIT_USAGE
        }
    }
}
