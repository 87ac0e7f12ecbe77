use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use bnarena::bench::{self, BenchConfig};
use bnarena::climate::{self, SweepConfig};
use bnarena::criteria::Criterion;
use bnarena::learn::{learn, LearnOptions, LearnerKind};
use bnarena::model::Dataset;

type Failure = Box<dyn std::error::Error>;

#[derive(Parser)]
#[command(name = "bnarena", version, about = "Bayesian network structure learning and benchmarking")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Benchmark sweeps over reference networks.
    #[command(subcommand)]
    Bench(BenchCmd),
    /// Sampling from and learning single networks.
    #[command(subcommand)]
    Net(NetCmd),
    /// Gridded climate anomalies.
    #[command(subcommand)]
    Climate(ClimateCmd),
}

#[derive(Subcommand)]
enum BenchCmd {
    /// Runs a sweep described by a JSON config and writes one row per run.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Defaults to the config's `output`, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-panel means and quadrants of a results CSV.
    Summarize {
        csv: PathBuf,
        #[arg(long)]
        include_invalid: bool,
    },
}

#[derive(Subcommand)]
enum NetCmd {
    /// Draws a dataset from a bn-text network.
    Sample {
        bn: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Learns a structure from a CSV and prints it in graph text form.
    Learn {
        data: PathBuf,
        #[arg(long)]
        algo: String,
        #[arg(long, default_value = "bic")]
        criterion: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ClimateCmd {
    Sweep(SweepArgs),
    /// Conditions a Gaussian network on evidence and reports mean shifts.
    Propagate {
        #[arg(long)]
        bn: PathBuf,
        /// `node=value,node=value`
        #[arg(long)]
        evidence: String,
        /// Adds coordinates to the report.
        #[arg(long)]
        coords: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Sweeps `BIC_γ` over learners and column permutations.
#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    coords: PathBuf,
    #[arg(long)]
    series: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = climate::DEFAULT_GAMMAS)]
    gammas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "pc-stable,hc,tabu")]
    algos: Vec<String>,
    #[arg(long, default_value_t = 5)]
    perms: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = climate::DEFAULT_TELECONNECTION_KM)]
    threshold_km: f64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| format!("{}: {e}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn open(path: &Path) -> Result<File, Failure> {
    Ok(File::open(path).map_err(|e| format!("{}: {e}", path.display()))?)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Bench(BenchCmd::Run { config, out }) => {
            let text = std::fs::read_to_string(&config).map_err(|e| format!("{}: {e}", config.display()))?;
            let cfg = BenchConfig::from_json(&text)?;
            let records = bench::run_benchmark(&cfg)?;
            bench::write_records(&records, output(out.as_deref().or(cfg.output.as_deref()))?)?;
        }
        Command::Bench(BenchCmd::Summarize { csv, include_invalid }) => {
            let records = bench::read_records(open(&csv)?)?;
            print!("{}", bench::summary_table(&bench::summarise(&records, include_invalid)));
        }
        Command::Net(NetCmd::Sample { bn, n, seed, out }) => {
            let net = bench::load_bn_text(&bn)?;
            net.sample(n, seed).write_csv(output(out.as_deref())?)?;
        }
        Command::Net(NetCmd::Learn { data, algo, criterion, seed, out }) => {
            let data = Arc::new(Dataset::read_csv(open(&data)?)?);
            let kind: LearnerKind = algo.parse()?;
            let crit = Criterion::from_key(data, &criterion)?;
            let outcome = learn(kind, &crit, &LearnOptions { seed, ..Default::default() })?;
            if !outcome.valid {
                eprintln!("warning: the result is not a valid CPDAG; writing the diagnostic graph");
            }
            eprintln!("{} edges, {} criterion calls", outcome.graph.n_edges(), outcome.calls);
            output(out.as_deref())?.write_all(outcome.graph.cpdag().to_text().as_bytes())?;
        }
        Command::Climate(ClimateCmd::Sweep(a)) => {
            let (data, grid) = climate::ingest_grid(&a.coords, &a.series)?;
            let learners = a.algos.iter().map(|k| k.parse()).collect::<Result<Vec<LearnerKind>, _>>()?;
            let cfg = SweepConfig {
                gammas: a.gammas,
                learners,
                permutations: a.perms,
                seed: a.seed,
                threshold_km: a.threshold_km,
                workers: a.workers,
                ..Default::default()
            };
            let records = climate::gamma_sweep(&data, &grid, &cfg)?;
            climate::write_sweep(&records, output(a.out.as_deref())?)?;
        }
        Command::Climate(ClimateCmd::Propagate { bn, evidence, coords, out }) => {
            let net = bench::load_bn_text(&bn)?;
            let grid = coords.map(|c| open(&c).map(climate::read_coords)).transpose()?.transpose()?;
            let rows = climate::propagate_report(&net, &climate::parse_evidence(&evidence)?, grid.as_ref())?;
            climate::write_propagation(&rows, output(out.as_deref())?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
