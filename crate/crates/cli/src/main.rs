use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shadowvqs::analysis::GConvention;
use shadowvqs::{DerandomizationParams, EvolutionMode, Strategy};
use shadowvqs_cli::{
    cmd_derandomize, cmd_evolve, cmd_haar_check, cmd_variance, haar_report_text, write_file, CliResult,
    ExperimentConfig, OutputFormat,
};

#[derive(Parser)]
#[command(name = "shadowvqs", version, about = "Variational quantum simulation with shadow-based measurements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Paired (strategy, exact) evolutions with per-step infidelity.
    Evolve(ExperimentArgs),
    /// Variance / Approximation / Diff table for the V_k estimators.
    Variance(ExperimentArgs),
    /// Export a derandomized measurement plan, one basis per line.
    Derandomize {
        #[arg(long, default_value = "builtin:two-family")]
        hamiltonian: String,
        #[arg(long, default_value_t = 10)]
        shots: usize,
        /// Prepend the ancilla X to every term before building the plan.
        #[arg(long)]
        extend: bool,
        #[arg(long, default_value_t = 0.9)]
        eta: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare Haar averages of the variance functional with closed forms.
    HaarCheck {
        /// System qubits (the ancilla is added).
        #[arg(long, default_value_t = 2)]
        qubits: usize,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Rte,
    Ite,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Exact,
    Naive,
    Cs,
    Derand,
    Ldf,
    Hybrid,
}

#[derive(Clone, Copy, ValueEnum)]
enum Convention {
    Half,
    Unit,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Text,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
            Format::Text => OutputFormat::Text,
        }
    }
}

#[derive(Args)]
struct ExperimentArgs {
    /// `builtin:heisenberg`, `builtin:two-family`, or a Hamiltonian file.
    #[arg(long, default_value = "builtin:heisenberg")]
    hamiltonian: String,
    #[arg(long, value_enum, default_value_t = Mode::Ite)]
    mode: Mode,
    #[arg(long, value_enum, default_value_t = StrategyArg::Derand)]
    strategy: StrategyArg,
    #[arg(long, default_value_t = 0.01)]
    dt: f64,
    #[arg(long, default_value_t = 5)]
    steps: usize,
    /// Shots per V_k estimate per step (default: 5 per Hamiltonian term).
    #[arg(long)]
    shots_total: Option<usize>,
    #[arg(long, default_value_t = 5)]
    trials: usize,
    #[arg(long, default_value_t = 4)]
    layers: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fraction of shots for each sampled M element (hybrid strategy).
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    svd_cutoff: f64,
    #[arg(long, value_enum, default_value_t = Convention::Half)]
    g_convention: Convention,
    #[arg(long, default_value_t = 0.9)]
    eta: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Output file; printed to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

impl ExperimentArgs {
    fn config(&self) -> ExperimentConfig {
        ExperimentConfig {
            hamiltonian_source: self.hamiltonian.clone(),
            mode: match self.mode {
                Mode::Rte => EvolutionMode::Rte,
                Mode::Ite => EvolutionMode::Ite,
            },
            strategy: match self.strategy {
                StrategyArg::Exact => Strategy::Exact,
                StrategyArg::Naive => Strategy::Naive,
                StrategyArg::Cs => Strategy::ClassicalShadow,
                StrategyArg::Derand => Strategy::Derandomization,
                StrategyArg::Ldf => Strategy::Ldf,
                StrategyArg::Hybrid => Strategy::Hybrid,
            },
            dt: self.dt,
            steps: self.steps,
            shots_total: self.shots_total,
            trials: self.trials,
            layers: self.layers,
            seed: self.seed,
            alpha: self.alpha,
            svd_cutoff: self.svd_cutoff,
            g_convention: match self.g_convention {
                Convention::Half => GConvention::Half,
                Convention::Unit => GConvention::Unit,
            },
            derandomization: DerandomizationParams { eta: self.eta, gamma: self.gamma },
        }
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => write_file(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Evolve(args) => {
            let output = cmd_evolve(&args.config())?;
            match &args.out {
                Some(p) => {
                    for path in output.write(p, args.format.into())? {
                        eprintln!("wrote {}", path.display());
                    }
                }
                None => match args.format {
                    Format::Csv => print!("{}", output.summary_csv()?),
                    Format::Json => println!("{}", output.to_json()?),
                    Format::Text => print!("{}", output.summary_text()),
                },
            }
        }
        Command::Variance(args) => {
            let output = cmd_variance(&args.config())?;
            emit(args.out.as_ref(), &output.render(args.format.into())?)?;
        }
        Command::Derandomize { hamiltonian, shots, extend, eta, gamma, out } => {
            let text = cmd_derandomize(&hamiltonian, shots, extend, DerandomizationParams { eta, gamma })?;
            emit(out.as_ref(), &text)?;
        }
        Command::HaarCheck { qubits, samples, seed, format, out } => {
            let report = cmd_haar_check(qubits, samples, seed)?;
            let text = match format {
                Format::Text => haar_report_text(&report),
                Format::Json | Format::Csv => serde_json::to_string_pretty(&report)? + "\n",
            };
            emit(out.as_ref(), &text)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
