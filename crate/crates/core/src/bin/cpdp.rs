use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use cpdp_core::dataset::DEFAULT_BUG_COLUMN;
use cpdp_core::error::{Error, Result};
use cpdp_core::fwtnb::FwtnbModel;
use cpdp_core::harness::runner::{self, directory_stats, load_pair_datasets, resolve_pairs, write_sweep};
use cpdp_core::harness::{compare, report, ExperimentConfig, SweepParam};

#[derive(Parser)]
#[command(
    name = "cpdp",
    version,
    about = "Cross-project defect prediction with TOMO and FWTNB"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print instance counts and defective rates for every CSV in a directory.
    Stats {
        dir: PathBuf,
        #[arg(long, default_value = DEFAULT_BUG_COLUMN)]
        bug_column: String,
    },
    /// Run the experiment described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the configured output path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compare two results files with the rank-sum test and Cliff's delta.
    Compare { a: PathBuf, b: PathBuf },
    /// Vary lambda or sigma over a list of values.
    Sweep {
        #[arg(long)]
        param: SweepParam,
        #[arg(long, num_args = 1.., value_delimiter = ',', required = true)]
        values: Vec<f64>,
        #[arg(long)]
        config: PathBuf,
        /// Write the sweep table as CSV here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Summarize a results CSV, or a saved model when given a .json file.
    Report { path: PathBuf },
}

fn summary_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".summary.txt");
    PathBuf::from(s)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Stats { dir, bug_column } => {
            let start = Instant::now();
            let stats = directory_stats(&dir, &bug_column)?;
            if stats.is_empty() {
                return Err(Error::EmptyInput(format!("no CSV files in {}", dir.display())));
            }
            println!(
                "{:<16} {:>7} {:>9} {:>9} {:>7}",
                "dataset", "metrics", "instances", "defective", "rate"
            );
            for s in &stats {
                println!(
                    "{:<16} {:>7} {:>9} {:>9} {:>7.4}",
                    s.name, s.n_metrics, s.n_instances, s.n_defective, s.defective_rate
                );
            }
            log::info!("stats took {:?}", start.elapsed());
        }
        Command::Run { config, output } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(o) = output {
                cfg.output = o;
            }
            let results = runner::run_experiment(&cfg)?;
            runner::write_results_file(&results, &cfg.output)?;
            let table = report::results_table(&results);
            let sp = summary_path(&cfg.output);
            std::fs::write(&sp, &table).map_err(|e| Error::io(&sp, e))?;
            print!("{table}");
            eprintln!("wrote {}", cfg.output.display());
        }
        Command::Compare { a, b } => {
            let ra = runner::read_results_file(&a)?;
            let rb = runner::read_results_file(&b)?;
            print!("{}", compare::render(&compare::compare(&ra, &rb)?));
        }
        Command::Sweep {
            param,
            values,
            config,
            output,
        } => {
            let cfg = ExperimentConfig::load(&config)?;
            let pairs = resolve_pairs(&cfg)?;
            let data = load_pair_datasets(&cfg, &pairs)?;
            let rows = runner::sweep(param, &values, &cfg, &data, &pairs)?;
            match output {
                Some(p) => {
                    let f = std::fs::File::create(&p).map_err(|e| Error::io(&p, e))?;
                    write_sweep(param, &rows, f)?;
                }
                None => write_sweep(param, &rows, std::io::stdout().lock())?,
            }
        }
        Command::Report { path } => {
            if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
                let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                print!("{}", report::model_summary(&FwtnbModel::from_json(&text)?));
            } else {
                print!("{}", report::results_table(&runner::read_results_file(&path)?));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
