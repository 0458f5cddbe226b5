//! Command-line interface: validate scenarios, compute best responses,
//! equilibria, social optima, PoBA, and parameter sweeps. Every numeric
//! result is mirrored into a structured JSON report.
//!
//! Exit codes: 0 success, 2 parse/validation error, 3 solver
//! non-convergence, 4 I/O error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use secgame::cost::{evaluate, InvestmentProfile};
use secgame::equilibrium::{find_equilibria, DynamicsConfig, Equilibrium};
use secgame::error::{Error, Severity};
use secgame::io::{
    self, DefenderInvestment, EquilibriumRecord, ReportFile, ReportResult, SweepRecord,
};
use secgame::poba::{poba, social_optimum, sweep, SweepGrid, SweepRow};
use secgame::scenario::Scenario;
use secgame::solver::{best_response, SolverConfig};

#[derive(Parser)]
#[command(name = "secgame", version, about = "Behavioral security game solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario file and print all diagnostics.
    Validate {
        scenario: PathBuf,
    },
    /// Compute one defender's best response to a fixed joint profile
    /// (zero investments by default).
    BestResponse {
        scenario: PathBuf,
        /// Defender id whose response is optimized.
        #[arg(long)]
        defender: String,
        /// JSON file with the other defenders' fixed investments.
        #[arg(long)]
        fixed: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Where to write the JSON report (defaults beside the scenario
        /// name in the working directory).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Find pure Nash equilibria by best-response dynamics from multiple
    /// starting profiles.
    Pne {
        scenario: PathBuf,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compute the pooled planner's socially optimal allocation.
    SocialOpt {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Compute the Price of Behavioral Anarchy.
    Poba {
        scenario: PathBuf,
        #[arg(long, default_value_t = 8)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Sweep PoBA over an (alpha, budget) grid and emit a CSV.
    Sweep {
        scenario: PathBuf,
        /// Alpha grid as start:end:steps (inclusive endpoints).
        #[arg(long)]
        alpha: String,
        /// Total-budget grid as start:end:steps (per-defender budgets are
        /// rescaled proportionally).
        #[arg(long)]
        budget: String,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Reuse rows already present in the output CSV instead of
        /// recomputing them.
        #[arg(long)]
        resume: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io(_) => 4,
        Error::NonConvergence(_) | Error::NoEquilibria(_) => 3,
        _ => 2,
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn default_report(scenario: &Path, command: &str) -> PathBuf {
    let stem = scenario.file_stem().and_then(|s| s.to_str()).unwrap_or("scenario");
    PathBuf::from(format!("{stem}-{command}.report.json"))
}

fn parse_grid(spec: &str, what: &str) -> secgame::Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("{what} grid {spec:?}: expected start:end:steps")));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|e| Error::Parse(format!("{what} grid start {:?}: {e}", parts[0])))?;
    let end: f64 = parts[1]
        .parse()
        .map_err(|e| Error::Parse(format!("{what} grid end {:?}: {e}", parts[1])))?;
    let steps: usize = parts[2]
        .parse()
        .map_err(|e| Error::Parse(format!("{what} grid steps {:?}: {e}", parts[2])))?;
    if steps == 0 {
        return Err(Error::Parse(format!("{what} grid {spec:?}: steps must be >= 1")));
    }
    Ok(SweepGrid::linspace(start, end, steps))
}

struct Run {
    scenario_path: PathBuf,
    scenario: Scenario,
    hash: String,
    started: Instant,
}

fn open(scenario_path: &Path) -> secgame::Result<Run> {
    let file = io::load_scenario_file(scenario_path)?;
    let scenario = Scenario::from_spec(&file.to_spec())?;
    for w in scenario.warnings() {
        eprintln!("warning: {}", w.message);
    }
    Ok(Run {
        scenario_path: scenario_path.to_path_buf(),
        scenario,
        hash: file.content_hash(),
        started: Instant::now(),
    })
}

fn finish(
    run: &Run,
    command: &str,
    seed: Option<u64>,
    report_path: Option<PathBuf>,
    result: ReportResult,
) -> secgame::Result<()> {
    let path = report_path.unwrap_or_else(|| default_report(&run.scenario_path, command));
    let report = ReportFile {
        version: io::SCHEMA_VERSION,
        command: command.to_string(),
        scenario_path: run.scenario_path.display().to_string(),
        scenario_hash: run.hash.clone(),
        seed,
        elapsed_seconds: run.started.elapsed().as_secs_f64(),
        result,
    };
    io::save_report(&report, &path)?;
    println!("report: {}", path.display());
    Ok(())
}

fn equilibrium_records(scenario: &Scenario, eqs: &[Equilibrium]) -> Vec<EquilibriumRecord> {
    eqs.iter()
        .map(|e| EquilibriumRecord {
            profile: io::profile_to_records(scenario, &e.profile),
            perceived_costs: e.costs.perceived_costs.clone(),
            true_costs: e.costs.true_costs.clone(),
            total_true_cost: e.costs.total_true_cost,
            rounds: e.rounds,
        })
        .collect()
}

fn print_allocation(scenario: &Scenario, amounts: &[f64]) {
    for e in scenario.graph().edges() {
        if amounts[e.index] != 0.0 {
            println!(
                "  {} -> {}: {:.6}",
                scenario.graph().label(e.from),
                scenario.graph().label(e.to),
                amounts[e.index]
            );
        }
    }
}

fn run(command: Command) -> secgame::Result<()> {
    match command {
        Command::Validate { scenario } => {
            let file = io::load_scenario_file(&scenario)?;
            let diags = secgame::scenario::validate(&file.to_spec());
            for d in &diags {
                match d.severity {
                    Severity::Error => println!("error: {}", d.message),
                    Severity::Warning => println!("warning: {}", d.message),
                }
            }
            let errors: Vec<_> =
                diags.iter().filter(|d| d.severity == Severity::Error).cloned().collect();
            if errors.is_empty() {
                println!(
                    "ok: {} nodes, {} edges, {} defenders",
                    file.nodes.len(),
                    file.edges.len(),
                    file.defenders.len()
                );
                Ok(())
            } else {
                Err(Error::Validation(errors))
            }
        }

        Command::BestResponse { scenario, defender, fixed, seed, report } => {
            let run = open(&scenario)?;
            let s = &run.scenario;
            let k = s.defender_index(&defender)?;
            let mut profile =
                InvestmentProfile::zeros(s.defenders().len(), s.graph().edge_count());
            if let Some(path) = &fixed {
                let text = std::fs::read_to_string(path)?;
                let records: Vec<DefenderInvestment> = serde_json::from_str(&text)
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
                profile = io::records_to_profile(s, &records)?;
            }
            let cfg = SolverConfig { seed: seed.unwrap_or(0), ..Default::default() };
            let br = best_response(s, k, &profile, &cfg)?;
            profile.set_row(k, &br.investment);
            let costs = evaluate(s, &profile)?;
            println!("best response for {defender}:");
            print_allocation(s, &br.investment);
            println!("perceived cost: {:.9e}", br.cost);
            println!("true cost:      {:.9e}", costs.true_costs[k]);
            finish(
                &run,
                "best-response",
                seed,
                report,
                ReportResult::BestResponse {
                    defender,
                    investment: io::investment_entries(s, &br.investment),
                    perceived_cost: br.cost,
                    true_cost: costs.true_costs[k],
                    polished: br.polished,
                },
            )
        }

        Command::Pne { scenario, restarts, seed, report } => {
            let run = open(&scenario)?;
            let s = &run.scenario;
            let cfg = DynamicsConfig {
                seed,
                solver: SolverConfig { seed, ..Default::default() },
                ..Default::default()
            };
            let eqs = find_equilibria(s, &[], restarts, &cfg)?;
            println!("{} distinct pure Nash equilibrium/a found", eqs.len());
            for (i, eq) in eqs.iter().enumerate() {
                println!("equilibrium {} (converged in {} rounds):", i + 1, eq.rounds);
                for (k, d) in s.defenders().iter().enumerate() {
                    println!(
                        "  {}: perceived {:.9e}, true {:.9e}",
                        d.id, eq.costs.perceived_costs[k], eq.costs.true_costs[k]
                    );
                    print_allocation(s, eq.profile.row(k));
                }
            }
            finish(
                &run,
                "pne",
                Some(seed),
                report,
                ReportResult::Equilibria { equilibria: equilibrium_records(s, &eqs) },
            )
        }

        Command::SocialOpt { scenario, seed, report } => {
            let run = open(&scenario)?;
            let s = &run.scenario;
            let cfg = SolverConfig { seed: seed.unwrap_or(0), ..Default::default() };
            let opt = social_optimum(s, &cfg)?;
            println!("social optimum (pooled budget {}):", s.total_budget());
            print_allocation(s, &opt.investment);
            println!("total true cost: {:.9e}", opt.cost);
            finish(
                &run,
                "social-opt",
                seed,
                report,
                ReportResult::SocialOptimum {
                    investment: io::investment_entries(s, &opt.investment),
                    cost: opt.cost,
                },
            )
        }

        Command::Poba { scenario, restarts, seed, report } => {
            let run = open(&scenario)?;
            let s = &run.scenario;
            let cfg = DynamicsConfig {
                seed,
                solver: SolverConfig { seed, ..Default::default() },
                ..Default::default()
            };
            let rep = poba(s, &[], restarts, &cfg)?;
            println!("equilibria found: {}", rep.equilibria.len());
            println!("worst PNE total true cost: {:.9e}", rep.worst_pne_cost);
            println!("social optimum cost:       {:.9e}", rep.social.cost);
            println!("PoBA: {:.9}", rep.poba);
            println!(
                "bounds [1, e^B={:.3e}]: lower {}, upper {}",
                rep.upper_bound,
                if rep.lower_bound_ok { "ok" } else { "VIOLATED" },
                if rep.upper_bound_ok { "ok" } else { "VIOLATED" }
            );
            finish(
                &run,
                "poba",
                Some(seed),
                report,
                ReportResult::Poba {
                    poba: rep.poba,
                    worst_pne_cost: rep.worst_pne_cost,
                    social_cost: rep.social.cost,
                    upper_bound: rep.upper_bound,
                    lower_bound_ok: rep.lower_bound_ok,
                    upper_bound_ok: rep.upper_bound_ok,
                    equilibria: equilibrium_records(s, &rep.equilibria),
                },
            )
        }

        Command::Sweep { scenario, alpha, budget, out, restarts, seed, resume, report } => {
            let run = open(&scenario)?;
            let s = &run.scenario;
            let grid = SweepGrid {
                alphas: parse_grid(&alpha, "alpha")?,
                budgets: parse_grid(&budget, "budget")?,
            };
            let cached: Vec<SweepRow> = if resume && out.exists() {
                let rows = io::read_sweep_csv(&out)?;
                println!("resuming: {} cached rows from {}", rows.len(), out.display());
                rows
            } else {
                Vec::new()
            };
            let cfg = DynamicsConfig {
                seed,
                solver: SolverConfig { seed, ..Default::default() },
                ..Default::default()
            };
            let rows = sweep(s, &grid, restarts, &cfg, &cached)?;
            io::emit_sweep_csv(&rows, &out)?;
            println!("{} rows written to {}", rows.len(), out.display());
            finish(
                &run,
                "sweep",
                Some(seed),
                report,
                ReportResult::Sweep {
                    csv_path: out.display().to_string(),
                    rows: rows.iter().map(SweepRecord::from).collect(),
                },
            )
        }
    }
}
