use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use portrayal::synth::PlantSpec;
use portrayal_cli::commands::{self, Analysis, Written};
use portrayal_cli::{CliError, Overrides, RunConfig};

#[derive(Parser)]
#[command(name = "portrayal", version, about = "Group portrayal analysis over diachronic n-gram corpora")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Run configuration (TOML).
    #[arg(short, long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(short, long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    first_decade: Option<i32>,
    #[arg(long, global = true)]
    last_decade: Option<i32>,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    plots: bool,
    /// More log output (repeat for more).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Match roster names in the shards and write per-decade context tables.
    Scan,
    /// Train one vector per group and decade.
    Train,
    /// Correlation heatmaps, semantic axes, or toxicity rates.
    Analyze {
        #[arg(value_enum)]
        which: Which,
    },
    /// Train and analyze axes over the k x n grid.
    Sweep,
    /// Write a synthetic bundle with planted biases (to --out).
    Synth,
    /// scan, train and all analyses.
    Report,
    /// Fetch the roster export from the endpoint, or replay the fixture.
    FetchRoster,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which {
    Corr,
    Axes,
    Toxicity,
}

impl From<Which> for Analysis {
    fn from(w: Which) -> Self {
        match w {
            Which::Corr => Analysis::Corr,
            Which::Axes => Analysis::Axes,
            Which::Toxicity => Analysis::Toxicity,
        }
    }
}

fn overrides(g: &Global) -> Overrides {
    Overrides {
        output_dir: g.out.clone(),
        seed: g.seed,
        workers: g.workers,
        first_decade: g.first_decade,
        last_decade: g.last_decade,
        plots: g.plots,
    }
}

fn load_config(g: &Global) -> Result<RunConfig, CliError> {
    let path = g
        .config
        .as_ref()
        .ok_or_else(|| CliError::Config("--config is required for this command".into()))?;
    RunConfig::load(path, &overrides(g))
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let g = &cli.global;
    if let Command::Synth = cli.command {
        let mut spec = match &g.config {
            Some(_) => load_config(g)?.synth,
            None => PlantSpec::default(),
        };
        if let Some(seed) = g.seed {
            spec.seed = seed;
        }
        let dir = g
            .out
            .clone()
            .ok_or_else(|| CliError::Config("synth needs --out".into()))?;
        let (_, written) = commands::cmd_synth(&spec, &dir)?;
        let mut cfg = RunConfig::default();
        cfg.apply(&overrides(g), &serde_json::to_vec(&spec).expect("spec serializes"));
        commands::write_manifest(&cfg, "synth", &written, &dir)?;
        println!("wrote synthetic bundle to {}", dir.display());
        return Ok(());
    }

    let cfg = load_config(g)?;
    let (name, written): (String, Written) = match &cli.command {
        Command::Scan => ("scan".into(), commands::cmd_scan(&cfg)?),
        Command::Train => ("train".into(), commands::cmd_train(&cfg)?),
        Command::Analyze { which } => {
            let a = Analysis::from(*which);
            (format!("analyze-{}", a.name()), commands::cmd_analyze(&cfg, a)?)
        }
        Command::Sweep => ("sweep".into(), commands::cmd_sweep(&cfg)?),
        Command::Report => ("report".into(), commands::cmd_report(&cfg)?),
        Command::FetchRoster => ("fetch-roster".into(), commands::cmd_fetch_roster(&cfg)?),
        Command::Synth => unreachable!(),
    };
    let manifest = commands::write_manifest(&cfg, &name, &written, &cfg.output())?;
    println!("{name}: {} files, manifest {}", written.0.len(), manifest.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
