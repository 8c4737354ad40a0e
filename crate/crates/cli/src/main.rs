use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use greenroute::caching::Strategy;
use greenroute::experiment::{
    default_climates, mix_report, rerun_cell, run_experiment, synthetic_weather_for, write_mix_csv, Manifest,
    RunConfig, SyntheticWeather,
};
use greenroute::sim::Scenario;
use greenroute::topology::{load_topology, synthetic_isp, write_topology};
use greenroute::weather::{write_weather_csv, Season};

#[derive(Parser)]
#[command(
    name = "greenroute",
    version,
    about = "Renewable-aware routing and caching simulator for ISP networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an alpha sweep; flags override the config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated alpha values in [0, 1].
        #[arg(long, value_delimiter = ',')]
        alpha: Vec<f64>,
        /// none, all, cachedbit, nbsc or nbsc-green; comma-separated.
        #[arg(long, value_delimiter = ',')]
        strategy: Vec<Strategy>,
        #[arg(long, value_delimiter = ',')]
        scenario: Vec<Scenario>,
        #[arg(long, value_delimiter = ',')]
        season: Vec<Season>,
        /// Master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-router optimal wind share and mean green ratio as CSV.
    MixReport {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "A")]
        scenario: Scenario,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run one cell of a finished sweep from its manifest.
    Rerun {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        cell: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic POP-structured topology file.
    SynthTopology {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        locations: usize,
        #[arg(long, default_value_t = 2)]
        links: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write synthetic hourly weather for every location of a topology file.
    SynthWeather {
        #[arg(long)]
        topology: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 8760)]
        hours: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output(path: Option<&PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate {
            config,
            alpha,
            strategy,
            scenario,
            season,
            seed,
            out,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            let ex = &mut cfg.experiment;
            if !alpha.is_empty() {
                ex.alphas = alpha;
            }
            if !strategy.is_empty() {
                ex.strategies = strategy;
            }
            if !scenario.is_empty() {
                ex.scenarios = scenario;
            }
            if !season.is_empty() {
                ex.seasons = season;
            }
            if let Some(s) = seed {
                ex.seed = s;
            }
            if let Some(o) = out {
                ex.output_dir = o;
            }
            let outcome = run_experiment(cfg)?;
            println!(
                "{} cells written to {}",
                outcome.reports.len(),
                outcome.output_dir.display()
            );
            if outcome.failed.is_empty() {
                return Ok(ExitCode::SUCCESS);
            }
            for f in &outcome.failed {
                eprintln!("cell {} ({}) failed: {}", f.index, f.cell.file_name(), f.error);
            }
            Ok(ExitCode::from(2))
        }
        Command::MixReport { config, scenario, out } => {
            let rows = mix_report(RunConfig::load(&config)?, scenario)?;
            let mut w = output(out.as_ref())?;
            write_mix_csv(&mut w, &rows)?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Rerun { manifest, cell, out } => {
            let m = Manifest::load(&manifest)?;
            let report = rerun_cell(&m, cell, &out)?;
            println!(
                "cell {cell}: alpha {} {} {} {} written to {}",
                report.meta.alpha,
                report.meta.season,
                report.meta.strategy,
                report.meta.scenario,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::SynthTopology {
            nodes,
            locations,
            links,
            seed,
            out,
        } => {
            if nodes < 3 || locations == 0 || links == 0 {
                bail!("need at least 3 nodes, 1 location and 1 link per node");
            }
            let topo = synthetic_isp(nodes, locations, links, seed);
            let mut w = output(out.as_ref())?;
            write_topology(&mut w, &topo)?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SynthWeather {
            topology,
            seed,
            hours,
            out,
        } => {
            let topo = load_topology(&topology)?;
            let set = synthetic_weather_for(
                &topo,
                &SyntheticWeather {
                    seed,
                    horizon_hours: hours,
                    profiles: default_climates(),
                },
            )?;
            let mut w = output(out.as_ref())?;
            write_weather_csv(&mut w, set.series.values())?;
            w.flush()?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            // library errors already embed their source; print a cause only when it adds something
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
