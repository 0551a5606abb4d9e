use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use slowbond::experiments::{self, config, Experiment, RunSpec};
use slowbond::Error;

#[derive(Parser)]
#[command(
    name = "slowbond",
    version,
    about = "Exclusion process with a slow bond: solvers, simulator and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the lattice heat equation and print the trajectory
    #[command(allow_negative_numbers = true)]
    Solve(Flags),
    /// Robin solutions across an alpha grid against the Neumann and periodic limits
    #[command(allow_negative_numbers = true)]
    SweepAlpha(Flags),
    /// Run the particle system and print ensemble statistics
    #[command(allow_negative_numbers = true)]
    Simulate(Flags),
    /// Compare simulated empirical pairings with the limiting equations
    #[command(allow_negative_numbers = true)]
    HydroCompare(Flags),
    /// Property residuals of the Robin inverse Laplacian
    #[command(allow_negative_numbers = true)]
    GreenCheck(Flags),
    /// Energy of Robin solutions across an alpha grid
    #[command(allow_negative_numbers = true)]
    Energy(Flags),
}

/// Every flag is also a config-file key; flags override the file.
#[derive(Args, Default)]
struct Flags {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<String>,
    /// Comma-separated lattice sizes
    #[arg(long)]
    ns: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// `lo:hi:points-per-decade` or a comma-separated list
    #[arg(long)]
    alpha_grid: Option<String>,
    /// Slow-bond exponent, a number or `inf`
    #[arg(long)]
    beta: Option<String>,
    #[arg(long)]
    betas: Option<String>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    theta: Option<String>,
    /// Final macroscopic time
    #[arg(short = 'T', long = "t-final")]
    t_final: Option<String>,
    #[arg(long)]
    stride: Option<String>,
    /// constant(c), halfcos, cos2pi, step or linear-saw
    #[arg(long)]
    profile: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    #[arg(long)]
    epsilon: Option<String>,
    /// Comma-separated snapshot times
    #[arg(long)]
    times: Option<String>,
    #[arg(long)]
    n_ref: Option<String>,
    #[arg(long)]
    dt_ref: Option<String>,
    #[arg(long)]
    kappa: Option<String>,
    /// Per-replica rows for `simulate`
    #[arg(long)]
    long_form: bool,
    /// Write CSV here instead of stdout
    #[arg(long)]
    output: Option<String>,
    /// Worker threads; results do not depend on it
    #[arg(long)]
    threads: Option<String>,
}

impl Flags {
    fn pairs(&self) -> Result<Vec<(String, String)>, Error> {
        let mut pairs = match &self.config {
            Some(path) => config::read_config_file(path)?,
            None => Vec::new(),
        };
        let flags = [
            ("n", &self.n),
            ("ns", &self.ns),
            ("alpha", &self.alpha),
            ("alpha-grid", &self.alpha_grid),
            ("beta", &self.beta),
            ("betas", &self.betas),
            ("dt", &self.dt),
            ("theta", &self.theta),
            ("T", &self.t_final),
            ("stride", &self.stride),
            ("profile", &self.profile),
            ("seed", &self.seed),
            ("replicas", &self.replicas),
            ("epsilon", &self.epsilon),
            ("times", &self.times),
            ("n-ref", &self.n_ref),
            ("dt-ref", &self.dt_ref),
            ("kappa", &self.kappa),
            ("output", &self.output),
            ("threads", &self.threads),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                pairs.push((k.to_string(), v.clone()));
            }
        }
        if self.long_form {
            pairs.push(("long-form".into(), "true".into()));
        }
        Ok(pairs)
    }
}

fn run(experiment: Experiment, flags: &Flags) -> Result<(), Error> {
    let spec = RunSpec::from_pairs(Some(experiment), &flags.pairs()?)?;
    let table = match spec.threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?
            .install(|| experiments::run(&spec))?,
        None => experiments::run(&spec)?,
    };
    match &spec.output {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write_to(&mut w)?;
            w.flush()?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = BufWriter::new(stdout.lock());
            table.write_to(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn exit_code(category: &str) -> u8 {
    match category {
        "usage" => 2,
        "config" => 3,
        "invalid-input" => 4,
        "grid-mismatch" => 5,
        "numerical" => 6,
        "io" => 7,
        _ => 1,
    }
}

fn fail(category: &str, message: &str) -> ExitCode {
    let one_line = message.split_whitespace().collect::<Vec<_>>().join(" ");
    eprintln!("error category={category} message={one_line}");
    ExitCode::from(exit_code(category))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e.to_string();
            let first = first
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            return fail("usage", first);
        }
    };
    let (experiment, flags) = match &cli.command {
        Command::Solve(f) => (Experiment::Solve, f),
        Command::SweepAlpha(f) => (Experiment::SweepAlpha, f),
        Command::Simulate(f) => (Experiment::Simulate, f),
        Command::HydroCompare(f) => (Experiment::HydroCompare, f),
        Command::GreenCheck(f) => (Experiment::GreenCheck, f),
        Command::Energy(f) => (Experiment::Energy, f),
    };
    match run(experiment, flags) {
        Ok(()) => ExitCode::SUCCESS,
        // a closed pipe (e.g. `| head`) is not a failure
        Err(Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => fail(e.category(), &e.to_string()),
    }
}
