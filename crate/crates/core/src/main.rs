use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use ttv::pipeline::{compare_runs, generate_synthetic_city, run_pipeline, PipelineError, RunConfig, SynthSpec};

#[derive(Parser)]
#[command(name = "ttv", version, about = "Transit travel-time variability analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full analysis described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads; defaults to all cores. Does not affect outputs.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic grid city and a config to run it.
    Synth {
        /// Rows x columns, e.g. 10x10.
        #[arg(long, default_value = "10x10")]
        grid: Grid,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Minutes between downtown departures.
        #[arg(long, default_value_t = 10)]
        downtown_headway: u32,
        /// Minutes between departures elsewhere.
        #[arg(long, default_value_t = 60)]
        rural_headway: u32,
        #[arg(long, default_value_t = 10)]
        knn_k: usize,
    },
    /// Pairwise correlation of zone TTV between finished runs, as CSV on stdout.
    CompareRuns {
        #[arg(required = true, num_args = 2..)]
        runs: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy)]
struct Grid(usize, usize);

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (r, c) = s.split_once(['x', 'X']).ok_or("expected ROWSxCOLS")?;
        let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
        Ok(Grid(parse(r)?, parse(c)?))
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Run { config, workers, out } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(out) = out {
                // Relative to the working directory, like any CLI path.
                cfg.output_dir = std::env::current_dir()
                    .map_err(|e| PipelineError::stage("setup", e))?
                    .join(out);
            }
            let outcome = run_pipeline(&cfg, workers)?;
            for note in &outcome.notes {
                eprintln!("note: {note}");
            }
            eprintln!("wrote {}", outcome.output_dir.display());
        }
        Command::Synth {
            grid,
            seed,
            out,
            downtown_headway,
            rural_headway,
            knn_k,
        } => {
            let spec = SynthSpec {
                rows: grid.0,
                cols: grid.1,
                downtown_headway,
                rural_headway,
                seed,
                knn_k,
            };
            generate_synthetic_city(&spec, &out)?;
            eprintln!("wrote {}", out.join("run.toml").display());
        }
        Command::CompareRuns { runs } => {
            let table = compare_runs(&runs)?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            let fail = |e: csv::Error| PipelineError::stage("compare", e);
            w.write_record(&table.header).map_err(fail)?;
            for row in &table.rows {
                w.write_record(row).map_err(fail)?;
            }
            w.flush().map_err(|e| fail(e.into()))?;
        }
    }
    Ok(())
}
