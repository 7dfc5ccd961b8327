//! `dqc` — scenario runner for the dq-consensus library.
//!
//! Subcommands: `run` simulates a scenario JSON file and writes
//! `trajectory.csv` plus `metrics.json`; `gen-scenario` writes one of the
//! stock scenario families; `check-graph` reports whether the communication
//! graph admits consensus. Exit codes: 0 success, 2 invalid input,
//! 3 numerical failure (and 1 from `check-graph` when the graph has no
//! directed spanning tree).
//!
//! The `DQ_CONSENSUS_THREADS` environment variable caps the worker pool used
//! for large teams.

use clap::{Parser, Subcommand, ValueEnum};
use dq_consensus::graph::DirectedGraph;
use dq_consensus::scenario::{
    circle_scenario, manipulator_box_scenario, time_varying_scenario, Scenario,
};
use dq_consensus::{sim, Error};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dqc", version, about = "Dual quaternion pose-consensus scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario; writes trajectory.csv and metrics.json.
    Run {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Override the integration step from the scenario file.
        #[arg(long)]
        dt: Option<f64>,
        /// Override the horizon (seconds) from the scenario file.
        #[arg(long)]
        horizon: Option<f64>,
        /// Override the seed recorded in the scenario file. States are stored
        /// explicitly, so this only affects the provenance metadata.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Write a stock scenario JSON file.
    GenScenario {
        #[arg(long, value_enum)]
        family: Family,
        /// Team size. Defaults: circle 5, timevarying 20; manipulator-box is
        /// fixed at 3.
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output scenario file.
        #[arg(long)]
        out: PathBuf,
    },
    /// Report whether the scenario's graph has a directed spanning tree.
    CheckGraph {
        /// Scenario JSON file.
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    /// Five agents holding a rigid circle (twist-level law).
    Circle,
    /// Breathing circle with a time-varying reference on a complete digraph.
    Timevarying,
    /// Two mobile manipulators carrying a box with a static leader.
    ManipulatorBox,
}

/// Failure with process exit code; `Ok(code)` carries verdict codes such as
/// `check-graph`'s 1 for "no spanning tree".
type CmdResult = Result<u8, (u8, String)>;

fn error_code(e: &Error) -> u8 {
    match e {
        Error::Graph(_) | Error::Scenario(_) | Error::Config(_) | Error::TreeTransformSize(_) => 2,
        Error::NotUnit { .. }
        | Error::NotUnitDual { .. }
        | Error::ImpureTwist { .. }
        | Error::SingularMapping { .. }
        | Error::RetryLimit(_)
        | Error::Numerical(_) => 3,
    }
}

fn load_scenario(path: &Path) -> Result<Scenario, (u8, String)> {
    let text = fs::read_to_string(path)
        .map_err(|e| (2, format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| (2, format!("parsing {}: {e}", path.display())))
}

fn cmd_run(
    scenario_path: &Path,
    out_dir: &Path,
    dt: Option<f64>,
    horizon: Option<f64>,
    seed: Option<u64>,
) -> CmdResult {
    let mut scenario = load_scenario(scenario_path)?;
    if let Some(dt) = dt {
        scenario.dt = dt;
    }
    if let Some(horizon) = horizon {
        scenario.horizon = horizon;
    }
    if let Some(seed) = seed {
        scenario.seed = seed;
    }

    let log = sim::run(&scenario).map_err(|e| (error_code(&e), e.to_string()))?;

    fs::create_dir_all(out_dir)
        .map_err(|e| (2, format!("creating {}: {e}", out_dir.display())))?;
    let csv_path = out_dir.join("trajectory.csv");
    let mut csv = BufWriter::new(
        fs::File::create(&csv_path)
            .map_err(|e| (2, format!("creating {}: {e}", csv_path.display())))?,
    );
    log.write_csv(&mut csv)
        .and_then(|()| csv.flush())
        .map_err(|e| (2, format!("writing {}: {e}", csv_path.display())))?;

    let metrics = log.metrics();
    let metrics_path = out_dir.join("metrics.json");
    let metrics_json = serde_json::to_string_pretty(&metrics).expect("metrics serialize");
    fs::write(&metrics_path, metrics_json + "\n")
        .map_err(|e| (2, format!("writing {}: {e}", metrics_path.display())))?;

    println!(
        "{}",
        serde_json::json!({
            "steps": metrics.steps,
            "final_disagreement": metrics.final_disagreement,
            "time_to_tol": metrics.time_to_tol,
            "max_range_residual": log.max_range_residual,
            "trajectory": csv_path,
            "metrics": metrics_path,
        })
    );
    Ok(0)
}

fn cmd_gen_scenario(family: Family, n: Option<usize>, seed: u64, out: &Path) -> CmdResult {
    let scenario = match family {
        Family::Circle => circle_scenario(n.unwrap_or(5), seed),
        Family::Timevarying => time_varying_scenario(n.unwrap_or(20), seed),
        Family::ManipulatorBox => match n {
            Some(n) if n != 3 => Err(Error::Scenario(format!(
                "the manipulator-box family always has 3 agents, got --n {n}"
            ))),
            _ => Ok(manipulator_box_scenario()),
        },
    }
    .map_err(|e| (error_code(&e), e.to_string()))?;

    let text = serde_json::to_string_pretty(&scenario).expect("scenario serialize");
    fs::write(out, text + "\n").map_err(|e| (2, format!("writing {}: {e}", out.display())))?;
    println!(
        "{}",
        serde_json::json!({
            "family": family.to_possible_value().expect("no skipped variants").get_name(),
            "n": scenario.graph.n,
            "seed": scenario.seed,
            "path": out,
        })
    );
    Ok(0)
}

fn cmd_check_graph(scenario_path: &Path) -> CmdResult {
    let scenario = load_scenario(scenario_path)?;
    let graph = DirectedGraph::new(scenario.graph.n, &scenario.graph.edges)
        .map_err(|e| (2, e.to_string()))?;
    let report = graph.spanning_tree_report();
    println!(
        "{}",
        serde_json::json!({
            "n": scenario.graph.n,
            "edges": scenario.graph.edges.len(),
            "has_spanning_tree": report.has_spanning_tree,
            "zero_eigenvalues": report.zero_count,
            "min_nonzero_re": report.min_nonzero_re,
        })
    );
    Ok(if report.has_spanning_tree { 0 } else { 1 })
}

fn dispatch() -> CmdResult {
    if let Ok(value) = std::env::var("DQ_CONSENSUS_THREADS") {
        let threads: usize = value
            .parse()
            .ok()
            .filter(|&t| t >= 1)
            .ok_or_else(|| (2, format!("DQ_CONSENSUS_THREADS must be a positive integer, got {value:?}")))?;
        sim::limit_threads(threads).map_err(|e| (2, e.to_string()))?;
    }
    match Cli::parse().command {
        Command::Run { scenario, out, dt, horizon, seed } => {
            cmd_run(&scenario, &out, dt, horizon, seed)
        }
        Command::GenScenario { family, n, seed, out } => cmd_gen_scenario(family, n, seed, &out),
        Command::CheckGraph { scenario } => cmd_check_graph(&scenario),
    }
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(code) => ExitCode::from(code),
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}
