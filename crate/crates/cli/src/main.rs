//! `mtd`: solve, sweep and simulate ensemble-switching games from JSON fixtures.
//!
//! Results go to stdout, diagnostics to stderr. Exit codes: 0 success,
//! 1 usage or validation error, 2 internal invariant breach.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use indexmap::IndexMap;
use mtd_core::io::{
    curve_rows, fmt6, fmt_simplex6, load_fixture, parse_alpha_grid, write_curve_csv,
    write_subsets_csv,
};
use mtd_core::{
    differential_immunity, simulate, solve_stackelberg, subset_analysis, BayesianGame,
    MixedStrategy, ObservationWindow, Policy, SimulationConfig, SolveError,
};
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "mtd",
    version,
    about = "Moving-target defense over classifier ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Stackelberg equilibrium at one attack probability.
    Solve {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// Print the equilibrium as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Equilibrium, pure and uniform baselines over an alpha grid, as CSV.
    Sweep {
        #[arg(long)]
        game: PathBuf,
        /// LO:HI:STEP or a comma-separated list.
        #[arg(long)]
        alphas: String,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Differential immunity of the ensemble.
    Immunity {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Play the repeated game and report empirical accuracy as JSON.
    Simulate {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        alpha: f64,
        /// equilibrium | uniform | pure:<label|index> | custom:p1,p2,...
        #[arg(long, default_value = "equilibrium")]
        policy: String,
        #[arg(long)]
        rounds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Attacker observation window in rounds, or `all`.
        #[arg(long, default_value = "all")]
        window: String,
    },
    /// Best ensemble of every size, as CSV.
    Subsets {
        #[arg(long)]
        game: PathBuf,
        #[arg(long)]
        alphas: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a fixture.
    Check {
        #[arg(long)]
        game: PathBuf,
    },
}

enum Failure {
    Usage(String),
    Invariant(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load(path: &Path) -> Result<(String, BayesianGame), Failure> {
    let (fixture, game) = load_fixture(path).map_err(|e| usage(format!("{} [{}]", e, e.code())))?;
    Ok((fixture.name, game))
}

fn parse_policy(game: &BayesianGame, text: &str) -> Result<Policy, Failure> {
    let bad = || {
        usage(format!("invalid policy {text:?}: expected equilibrium, uniform, pure:<config> or custom:p1,p2,..."))
    };
    match text.split_once(':') {
        None if text == "equilibrium" => Ok(Policy::Equilibrium),
        None if text == "uniform" => Ok(Policy::Uniform),
        Some(("pure", what)) => match game.config_index(what) {
            Some(i) => Ok(Policy::Pure(i)),
            None => what
                .parse::<usize>()
                .map(Policy::Pure)
                .map_err(|_| usage(format!("unknown configuration {what:?}"))),
        },
        Some(("custom", list)) => {
            let probs = list
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad())?;
            Ok(Policy::Custom(MixedStrategy::new(probs)?))
        }
        _ => Err(bad()),
    }
}

fn parse_window(text: &str) -> Result<ObservationWindow, Failure> {
    if text == "all" {
        return Ok(ObservationWindow::AllHistory);
    }
    text.parse::<usize>()
        .map(ObservationWindow::Last)
        .map_err(|_| {
            usage(format!(
                "invalid window {text:?}: expected a round count or `all`"
            ))
        })
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => {
            Box::new(BufWriter::new(File::create(p).map_err(|e| {
                usage(format!("cannot write {}: {e}", p.display()))
            })?))
        }
        None => Box::new(io::stdout().lock()),
    })
}

fn certify(game: &BayesianGame, eq: &mtd_core::Equilibrium) -> Result<(), Failure> {
    eq.certify(game).map_err(|e| match e {
        SolveError::Invariant(msg) => Failure::Invariant(msg),
        other => usage(other.to_string()),
    })
}

fn print_json(value: &impl Serialize) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize)]
struct ImmunityJson<'a> {
    game: &'a str,
    delta: f64,
    argmin_attack: &'a str,
    per_attack: IndexMap<&'a str, f64>,
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Solve { game, alpha, json } => {
            let (name, game) = load(&game)?;
            let eq = solve_stackelberg(&game, alpha)?;
            certify(&game, &eq)?;
            if json {
                return print_json(&eq);
            }
            let mut out = io::stdout().lock();
            writeln!(out, "game       {name}")?;
            writeln!(out, "alpha      {}", fmt6(alpha))?;
            writeln!(out, "objective  {}", fmt6(eq.objective))?;
            writeln!(out, "strategy")?;
            for (c, p) in game.configs().iter().zip(fmt_simplex6(eq.strategy.probs())) {
                writeln!(out, "  {:<16} {p}", c.label)?;
            }
            writeln!(out, "responses")?;
            for r in &eq.responses {
                writeln!(
                    out,
                    "  {:<12} {:<24} follower {}  defender {}",
                    r.kind.to_string(),
                    r.action_label,
                    fmt6(r.follower_value),
                    fmt6(r.leader_value)
                )?;
            }
        }
        Command::Sweep { game, alphas, out } => {
            let (_, game) = load(&game)?;
            let grid = parse_alpha_grid(&alphas)?;
            let rows = curve_rows(&game, &grid)?;
            for row in &rows {
                certify(&game, &row.equilibrium)?;
            }
            write_curve_csv(&game, &rows, output(out.as_deref())?)?;
        }
        Command::Immunity { game, json } => {
            let (name, game) = load(&game)?;
            let report = differential_immunity(game.fooling())?;
            let attacks = game.attacks();
            if json {
                return print_json(&ImmunityJson {
                    game: &name,
                    delta: report.delta,
                    argmin_attack: &attacks[report.argmin_attack].label,
                    per_attack: attacks
                        .iter()
                        .map(|a| a.label.as_str())
                        .zip(report.per_attack.iter().copied())
                        .collect(),
                });
            }
            let mut out = io::stdout().lock();
            writeln!(out, "delta   {}", fmt6(report.delta))?;
            writeln!(out, "argmin  {}", attacks[report.argmin_attack].label)?;
            writeln!(out, "per attack")?;
            for (a, v) in attacks.iter().zip(&report.per_attack) {
                writeln!(out, "  {:<16} {}", a.label, fmt6(*v))?;
            }
        }
        Command::Simulate {
            game,
            alpha,
            policy,
            rounds,
            seed,
            window,
        } => {
            let (_, game) = load(&game)?;
            let config = SimulationConfig {
                observation_window: parse_window(&window)?,
                ..SimulationConfig::new(rounds, seed, alpha, parse_policy(&game, &policy)?)
            };
            if config.policy == Policy::Equilibrium {
                certify(&game, &solve_stackelberg(&game, alpha)?)?;
            }
            print_json(&simulate(&game, &config)?)?;
        }
        Command::Subsets { game, alphas, out } => {
            let (_, game) = load(&game)?;
            let grid = parse_alpha_grid(&alphas)?;
            let rows = subset_analysis(&game, &grid)?;
            write_subsets_csv(&rows, output(out.as_deref())?)?;
        }
        Command::Check { game } => {
            let (fixture, parsed) =
                load_fixture(&game).map_err(|e| usage(format!("{} [{}]", e, e.code())))?;
            let mut out = io::stdout().lock();
            writeln!(
                out,
                "ok: {} ({} configurations, {} attacks)",
                fixture.name,
                parsed.num_configs(),
                parsed.num_attacks()
            )?;
            if let Some(status) = &fixture.legit_accuracy_status {
                writeln!(out, "note: legit_accuracy is {status}; only alpha = 1 results are independent of it")?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invariant(msg)) => {
            eprintln!("internal invariant violated: {msg}");
            ExitCode::from(2)
        }
    }
}
