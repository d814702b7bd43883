use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use scooter_guard::scenario::{builtin, run, sweep, Scenario, SweepGrid, BUILTIN_NAMES};

/// Simulate the e-scooter collision avoidance safety filter.
///
/// Exit status: 0 when no collision occurred, 2 when a collision was
/// detected, 1 on any error.
#[derive(Parser)]
#[command(name = "scooter-guard", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its trace.
    Run {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Override the fault model seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Trace CSV output (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Metrics JSON output.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Plot CSV with velocities smoothed by a centred moving average.
        #[arg(long)]
        plot_out: Option<PathBuf>,
        /// Moving-average window for --plot-out, in samples.
        #[arg(long, default_value_t = 20)]
        plot_window: usize,
        /// key=value override of a scenario field (repeatable).
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Run a scenario over a grid of fault rates, commands and seeds.
    Sweep {
        scenario: PathBuf,
        /// Grid JSON file.
        #[arg(long)]
        grid: PathBuf,
        /// Per-run table CSV.
        #[arg(long)]
        out: PathBuf,
    },
    /// List or export the built-in scenarios.
    Scenarios {
        #[command(subcommand)]
        action: ScenarioAction,
    },
}

#[derive(Subcommand)]
enum ScenarioAction {
    List,
    /// Print a built-in scenario as editable JSON.
    Emit {
        name: String,
        /// Write to a file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn writer(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn execute(cli: Cli) -> anyhow::Result<bool> {
    match cli.command {
        Command::Run {
            scenario,
            seed,
            out,
            metrics,
            plot_out,
            plot_window,
            mut overrides,
        } => {
            let base = Scenario::load(&scenario)
                .with_context(|| format!("loading {}", scenario.display()))?;
            if let Some(seed) = seed {
                overrides.push(format!("fault.seed={seed}"));
            }
            let scenario = base.with_overrides(&overrides)?;
            let output = run(&scenario)?;
            output.trace.write_csv(writer(&out)?)?;
            if let Some(path) = plot_out {
                output
                    .trace
                    .write_plot_csv(writer(&Some(path))?, plot_window)?;
            }
            if let Some(path) = metrics {
                let mut w = writer(&Some(path))?;
                serde_json::to_writer_pretty(&mut w, &output.metrics)?;
                writeln!(w)?;
            }
            if let Some(e) = output.failure {
                bail!("run aborted: {e}");
            }
            Ok(output.metrics.collided)
        }
        Command::Sweep {
            scenario,
            grid,
            out,
        } => {
            let base = Scenario::load(&scenario)
                .with_context(|| format!("loading {}", scenario.display()))?;
            let grid =
                SweepGrid::load(&grid).with_context(|| format!("loading {}", grid.display()))?;
            let report = sweep(&base, &grid)?;
            report.write_csv(writer(&Some(out))?)?;
            let s = &report.summary;
            eprintln!(
                "runs: {}  failed: {}  collisions: {}  worst min distance: {}",
                s.runs,
                s.failed,
                s.collisions,
                s.worst_min_true_distance
                    .map_or_else(|| "n/a".to_string(), |d| format!("{d:.4} m"))
            );
            Ok(s.collisions > 0)
        }
        Command::Scenarios { action } => {
            match action {
                ScenarioAction::List => {
                    for name in BUILTIN_NAMES {
                        println!("{name}");
                    }
                }
                ScenarioAction::Emit { name, out } => {
                    let Some(s) = builtin(&name) else {
                        bail!(
                            "unknown scenario {name:?}; known: {}",
                            BUILTIN_NAMES.join(", ")
                        );
                    };
                    let mut w = writer(&out)?;
                    writeln!(w, "{}", s.to_json()?)?;
                }
            }
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
