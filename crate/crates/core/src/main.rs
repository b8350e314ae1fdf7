use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gossip_opinions::io::commands::{
    self, CommandOutput, EnsembleOptions, RunContext, SimulateOptions,
};
use gossip_opinions::io::{write_atomic, Format, IoError, ModelSource, OUT_DIR_ENV};

/// Gossip opinion dynamics with stubborn agents.
///
/// MODEL is a path to a model file or `builtin:friedkin_example.model` /
/// `builtin:gossip_example.model`.
#[derive(Debug, Parser)]
#[command(name = "gossip-opinions", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate assumptions, stochasticity and stability.
    Check(Common),
    /// Limit opinions and the associated matrices.
    Limit(Common),
    /// Map an FJ model to the equivalent gossip model.
    Map(Common),
    /// Run one trajectory and its time averages.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of steps [default: 10000].
        #[arg(long)]
        steps: Option<u64>,
        /// Random seed (gossip models) [default: 1].
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated step indices [default: powers of ten and K].
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
    },
    /// Mean-square error of time averages over independent replicates.
    Ensemble {
        #[command(flatten)]
        common: Common,
        /// Steps per replicate [default: 100000].
        #[arg(long)]
        steps: Option<u64>,
        /// Number of replicates [default: 200].
        #[arg(long)]
        replicates: Option<u64>,
        /// Base seed; replicate r uses stream r [default: 1].
        #[arg(long)]
        seed: Option<u64>,
        /// Comma-separated step indices [default: powers of ten and K].
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<u64>>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Model file, or builtin:<fixture name>.
    model: String,
    /// Output file. Defaults to $GOSSIP_OPINIONS_OUT_DIR/<command>.<ext>, or stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Divide rows of W / Gamma by their sums before validation.
    #[arg(long)]
    renormalize: bool,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

fn context(common: &Common) -> Result<RunContext, IoError> {
    Ok(RunContext {
        source: ModelSource::read(&common.model)?,
        renormalize: common.renormalize,
        format: common.format.into(),
    })
}

fn run(cli: Cli) -> Result<i32, IoError> {
    let (common, output) = match &cli.command {
        Command::Check(c) => (c, commands::check(&context(c)?)?),
        Command::Limit(c) => (c, commands::limit(&context(c)?)?),
        Command::Map(c) => (c, commands::map(&context(c)?)?),
        Command::Simulate {
            common,
            steps,
            seed,
            checkpoints,
        } => {
            let opts = SimulateOptions {
                steps: *steps,
                seed: *seed,
                checkpoints: checkpoints.clone(),
            };
            (common, commands::simulate(&context(common)?, &opts)?)
        }
        Command::Ensemble {
            common,
            steps,
            replicates,
            seed,
            checkpoints,
        } => {
            let opts = EnsembleOptions {
                steps: *steps,
                replicates: *replicates,
                seed: *seed,
                checkpoints: checkpoints.clone(),
            };
            (common, commands::ensemble(&context(common)?, &opts)?)
        }
    };
    emit(common, output)
}

fn emit(common: &Common, output: CommandOutput) -> Result<i32, IoError> {
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    let target = match (&common.out, std::env::var_os(OUT_DIR_ENV)) {
        (Some(path), _) => Some(path.clone()),
        (None, Some(dir)) => output
            .artifact
            .as_ref()
            .map(|a| PathBuf::from(dir).join(&a.default_name)),
        (None, None) => None,
    };
    match (output.artifact, target) {
        (Some(artifact), Some(path)) => {
            write_atomic(&path, &artifact.contents)?;
            print!("{}", output.report);
            println!("wrote {}", path.display());
        }
        (Some(artifact), None) => {
            eprint!("{}", output.report);
            print!("{}", artifact.contents);
        }
        (None, _) => print!("{}", output.report),
    }
    Ok(output.exit_code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
