use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cascal::cli::{self, CliError, ConfigFile, RouterKind, RunConfig, SEED_ENV};
use cascal::Error;

#[derive(Parser)]
#[command(
    name = "cascal",
    version,
    about = "Label-free LLM routing by consensus and skill clustering"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Shared {
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Falls back to the config file, then to $CASCAL_SEED.
    #[arg(long)]
    seed: Option<u64>,
    /// TOML file with defaults for any of the long flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct TrainFlags {
    #[arg(long, value_enum)]
    router: Option<RouterKind>,
    #[arg(long)]
    k_select: Option<usize>,
    #[arg(long)]
    silhouette_threshold: Option<f64>,
    #[arg(long)]
    merge_tau: Option<f64>,
    #[arg(long)]
    jaccard_threshold: Option<f64>,
    #[arg(long)]
    avengers_k: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-skill dataset from a TOML spec (--input).
    Synth {
        #[command(flatten)]
        shared: Shared,
        /// Also write the dataset with flipped gold labels here.
        #[arg(long)]
        flipped_output: Option<PathBuf>,
    },
    /// Task-stratified train/test split; --output receives the train side.
    Split {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        test_output: PathBuf,
        #[arg(long)]
        split_fraction: Option<f64>,
    },
    /// Fit a router and write a versioned artifact.
    Train {
        #[command(flatten)]
        shared: Shared,
        #[command(flatten)]
        flags: TrainFlags,
    },
    /// Route every record of --input through an artifact.
    Route {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        artifact: PathBuf,
    },
    /// Accuracy report of an artifact on a gold-labelled dataset.
    Eval {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        artifact: PathBuf,
    },
    /// Consensus filter over generated data.
    Filter {
        #[command(flatten)]
        shared: Shared,
        /// Also write the retained records as a dataset.
        #[arg(long)]
        retained_output: Option<PathBuf>,
    },
    /// Kendall's tau between the model rankings of two datasets.
    Tau {
        #[command(flatten)]
        shared: Shared,
        #[arg(long)]
        reference: PathBuf,
    },
}

fn resolve(name: &str, shared: &Shared, flags: &TrainFlags) -> Result<RunConfig, CliError> {
    resolve_seeded(name, shared, flags).map(|(c, _)| c)
}

/// Also reports whether any source set the seed explicitly.
fn resolve_seeded(name: &str, shared: &Shared, flags: &TrainFlags) -> Result<(RunConfig, bool), CliError> {
    let wrap = |source: Error| CliError {
        context: "configuration".into(),
        source,
    };
    let mut config = RunConfig::new(name);
    let file = shared
        .config
        .as_deref()
        .map(ConfigFile::load)
        .transpose()
        .map_err(wrap)?;
    if let Some(f) = &file {
        config.apply_file(f);
    }
    let env = std::env::var(SEED_ENV).ok();
    let explicit = shared.seed.is_some() || file.as_ref().is_some_and(|f| f.seed.is_some()) || env.is_some();
    config.apply_seed_env(file.as_ref(), env.as_deref()).map_err(wrap)?;

    if shared.input.is_some() {
        config.input = shared.input.clone();
    }
    if shared.output.is_some() {
        config.output = shared.output.clone();
    }
    if let Some(s) = shared.seed {
        config.seed = s;
    }
    macro_rules! flag {
        ($($f:ident),*) => { $( if let Some(v) = flags.$f { config.$f = v; } )* };
    }
    flag!(
        router,
        k_select,
        silhouette_threshold,
        merge_tau,
        jaccard_threshold,
        avengers_k
    );
    config.validate().map_err(wrap)?;
    Ok((config, explicit))
}

fn run(cli: Cli) -> Result<(), CliError> {
    let none = TrainFlags::default();
    match cli.command {
        Command::Synth { shared, flipped_output } => {
            let (config, seed_set) = resolve_seeded("synth", &shared, &none)?;
            let spec = config.input.clone().ok_or_else(|| CliError {
                context: "arguments".into(),
                source: Error::InvalidArgument("--input <spec.toml> is required".into()),
            })?;
            let output = config.output.clone().ok_or_else(|| CliError {
                context: "arguments".into(),
                source: Error::InvalidArgument("--output is required".into()),
            })?;
            cli::cmd_synth(
                &spec,
                &output,
                seed_set.then_some(config.seed),
                flipped_output.as_deref(),
            )
        }
        Command::Split {
            shared,
            test_output,
            split_fraction,
        } => {
            let mut config = resolve("split", &shared, &none)?;
            if let Some(f) = split_fraction {
                config.split_fraction = f;
            }
            cli::cmd_split(&config, &test_output)
        }
        Command::Train { shared, flags } => cli::cmd_train(&resolve("train", &shared, &flags)?).map(drop),
        Command::Route { shared, artifact } => cli::cmd_route(&resolve("route", &shared, &none)?, &artifact),
        Command::Eval { shared, artifact } => {
            let report = cli::cmd_eval(&resolve("eval", &shared, &none)?, &artifact)?;
            println!(
                "accuracy {:.4} ({}/{})",
                report.overall.accuracy, report.overall.correct, report.overall.total
            );
            Ok(())
        }
        Command::Filter {
            shared,
            retained_output,
        } => {
            let diags = cli::cmd_filter(&resolve("filter", &shared, &none)?, retained_output.as_deref())?;
            let kept = diags.iter().filter(|d| d.retained).count();
            println!("retained {kept} of {}", diags.len());
            Ok(())
        }
        Command::Tau { shared, reference } => {
            let tau = cli::cmd_tau(&resolve("tau", &shared, &none)?, &reference)?;
            println!("tau {tau}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
