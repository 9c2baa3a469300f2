//! Command-line front end: experiment configs, presets and the `gml` commands.

pub mod commands;
pub mod config;
pub mod data;
pub mod error;
pub mod presets;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::commands::{Env, Sweep};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "gml", version, about = "Train cohorts of graph networks with mutual learning")]
pub struct Cli {
    /// Worker threads; more than one trains cohort members in parallel.
    #[arg(long, global = true, default_value_t = 1)]
    pub parallel: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a cohort once per seed.
    Train {
        /// Config file or preset name.
        #[arg(long)]
        config: String,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out: PathBuf,
        /// Save per-layer activations of every member.
        #[arg(long)]
        dump_activations: bool,
    },
    /// Distill the target model of a finished run into an MLP.
    Distill {
        /// Run directory written by `train`.
        #[arg(long)]
        teacher: PathBuf,
        /// Config for the student; defaults to the teacher run's config.
        #[arg(long)]
        config: Option<String>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[arg(long)]
        out: PathBuf,
        /// Also train the MLP on labels alone.
        #[arg(long)]
        with_baseline: bool,
    },
    /// Post-hoc analyses of finished runs.
    Analyze {
        #[command(subcommand)]
        what: Analysis,
    },
    /// Sweeps over cohort size, feature noise or graph structure.
    Bench {
        #[command(subcommand)]
        sweep: BenchKind,
    },
    /// List shipped presets, or write them as TOML files.
    Presets {
        #[arg(long)]
        write: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Analysis {
    /// Linear CKA between the layers of two activation dumps.
    Cka {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy of averaged member predictions.
    Ensemble {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_delimiter = ',')]
        sizes: Option<Vec<usize>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Signed-rank test between the target accuracies of two runs.
    Wilcoxon {
        #[arg(long)]
        x: PathBuf,
        #[arg(long)]
        y: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum BenchKind {
    /// Accuracy and time for cohorts of `bench.cohort_sizes` members.
    CohortSize(BenchArgs),
    /// Laplace feature noise at `bench.noise_scales`.
    Noise(BenchArgs),
    /// Tabular data with no graph, a random graph and a preferential-attachment graph.
    Structure(BenchArgs),
}

#[derive(Debug, clap::Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub config: String,
    #[arg(long, value_delimiter = ',')]
    pub seeds: Option<Vec<u64>>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e);
            e.exit_code()
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    if cli.parallel == 0 {
        return Err(CliError::Config("--parallel: must be at least 1".into()));
    }
    if cli.parallel > 1 {
        // a second call in the same process keeps the existing pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.parallel).build_global();
    }
    let env = Env::from_env(cli.parallel > 1);
    match cli.command {
        Command::Train { config, seeds, out, dump_activations } => {
            let cfg = commands::load_config(&config)?;
            let seeds = seeds.unwrap_or_else(|| cfg.seeds.clone());
            let runs = commands::train(&cfg, &seeds, &out, &env, dump_activations)?;
            println!("{}: mean target test accuracy {} over {} seeds", cfg.name, commands::pct(commands::mean_target(&runs)), runs.len());
        }
        Command::Distill { teacher, config, seeds, out, with_baseline } => {
            let cfg = match config {
                Some(c) => commands::load_config(&c)?,
                None => commands::run_config(&teacher)?,
            };
            let seeds = seeds.unwrap_or_else(|| cfg.seeds.clone());
            commands::distill_run(&cfg, &teacher, &seeds, &out, &env, with_baseline)?;
        }
        Command::Analyze { what } => match what {
            Analysis::Cka { a, b, out } => {
                let m = commands::analyze_cka(&a, &b, &out)?;
                for i in 0..m.rows() {
                    let row: Vec<String> = m.row(i).iter().map(|v| format!("{:.3}", v)).collect();
                    println!("{}", row.join(" "));
                }
            }
            Analysis::Ensemble { run, sizes, out } => {
                let sizes = match sizes {
                    Some(s) => s,
                    None => commands::run_config(&run)?.bench.ensemble_sizes,
                };
                for (seed, n, acc) in commands::analyze_ensemble(&run, &sizes, &out, &env)? {
                    println!("seed {} members {} test {}", seed, n, commands::pct(acc));
                }
            }
            Analysis::Wilcoxon { x, y, out } => {
                let w = commands::analyze_wilcoxon(&x, &y, &out)?;
                println!("n {} statistic {} p {:.6e} ({})", w.n, w.statistic, w.p_value, if w.exact { "exact" } else { "normal" });
            }
        },
        Command::Bench { sweep } => {
            let (kind, args) = match sweep {
                BenchKind::CohortSize(a) => (Sweep::CohortSize, a),
                BenchKind::Noise(a) => (Sweep::Noise, a),
                BenchKind::Structure(a) => (Sweep::Structure, a),
            };
            let cfg = commands::load_config(&args.config)?;
            let seeds = args.seeds.unwrap_or_else(|| cfg.seeds.clone());
            commands::bench(&cfg, kind, &seeds, &args.out, &env)?;
        }
        Command::Presets { write } => match write {
            None => {
                for n in presets::names() {
                    println!("{}", n);
                }
            }
            Some(dir) => {
                std::fs::create_dir_all(&dir)?;
                for n in presets::names() {
                    let cfg = presets::preset(&n).expect("listed preset exists");
                    std::fs::write(dir.join(format!("{}.toml", n)), cfg.to_toml())?;
                }
            }
        },
    }
    Ok(())
}
