//! `dipps`: run, sweep and benchmark receding-horizon PV + storage
//! schedules from a TOML config.

mod config;

use clap::{Args, Parser, Subcommand};
use config::{Config, ConfigError, PolicyArg};
use dipps_core::horizon::{sweep_window, Case, HorizonError, ScenarioConfig, SolverError};
use dipps_core::nonlinear::EnumerateError;
use dipps_core::report::{
    bench_case, bench_csv, monotonicity_notes, run_cases, schedule_csv, sweep_csv, totals_csv,
    windows_csv, BenchError, CaseReport, RunReport, SCHEMA_VERSION,
};
use serde_json::json;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dipps", version, about = "Receding-horizon scheduling for PV + storage microgrids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Schedule a day for each case; writes JSON and CSV reports.
    Run(Common),
    /// Total cost against window length.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Shortest window, overrides the config's `sweep.from`.
        #[arg(long)]
        from: Option<usize>,
        /// Longest window, overrides the config's `sweep.to`.
        #[arg(long)]
        to: Option<usize>,
    },
    /// Per-window MILP vs enumeration wall time.
    Bench(Common),
    /// Check a config and its scenario without solving.
    Validate(Common),
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config; the bundled demo when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict to these cases (repeatable).
    #[arg(long, value_parser = parse_case)]
    case: Vec<Case>,
    /// Window length in steps.
    #[arg(long)]
    np: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Absolute optimality gap.
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long, value_enum)]
    terminal_policy: Option<PolicyArg>,
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
}

fn parse_case(s: &str) -> Result<Case, String> {
    match s {
        "A" | "a" => Ok(Case::A),
        "B" | "b" => Ok(Case::B),
        "C" | "c" => Ok(Case::C),
        _ => Err(format!("unknown case {s:?}, expected A, B or C")),
    }
}

/// Failure surfaced to the caller: exit code plus a JSON record on stderr.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
    extra: serde_json::Value,
    /// Already written to stderr.
    reported: bool,
}

impl Failure {
    fn new(code: u8, kind: &'static str, message: impl ToString) -> Self {
        Self {
            code,
            kind,
            message: message.to_string(),
            extra: serde_json::Value::Null,
            reported: false,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        let mut f = Failure::new(2, "config", &e);
        if let ConfigError::Field { field, .. } = &e {
            f.extra = json!({ "field": field });
        }
        f
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(1, "io", e)
    }
}

fn horizon_failure(case: Option<Case>, e: &HorizonError) -> Failure {
    let case = case.map(|c| c.to_string());
    match e {
        HorizonError::WindowInfeasible { epoch, policy } => Failure {
            extra: json!({ "case": case, "epoch": epoch, "terminal_policy": policy.to_string() }),
            ..Failure::new(3, "window_infeasible", e)
        },
        HorizonError::InvalidConfig(_) => Failure {
            extra: json!({ "case": case }),
            ..Failure::new(2, "invalid_config", e)
        },
        HorizonError::Solver { epoch, .. } => Failure {
            extra: json!({ "case": case, "epoch": epoch }),
            ..Failure::new(4, "solver", e)
        },
    }
}

fn load_config(common: &Common) -> Result<(Config, ScenarioConfig), Failure> {
    let mut config = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if common.np.is_some() {
        config.n_p = common.np;
    }
    if common.workers.is_some() {
        config.workers = common.workers;
    }
    if common.gap.is_some() {
        config.gap = common.gap;
    }
    if common.terminal_policy.is_some() {
        config.terminal_policy = common.terminal_policy;
    }
    if !common.case.is_empty() {
        config.cases = Some(common.case.clone());
    }
    // Flag values go through the same checks as file values.
    config.check()?;
    let scenario = config.scenario_config()?;
    Ok((config, scenario))
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> std::io::Result<()> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(dir.join(name)).map_err(|e| e.error)?;
    Ok(())
}

fn cmd_run(common: &Common) -> Result<(), Failure> {
    let (config, scenario) = load_config(common)?;
    std::fs::create_dir_all(&common.out_dir)?;
    let mut reports = Vec::new();
    let mut first_failure = None;
    for (case, result) in run_cases(&scenario, &config.cases()) {
        match result {
            Ok(day) => {
                let case_cfg = scenario.for_case(case);
                let dir = &common.out_dir;
                let report = CaseReport::new(case, day);
                let single = RunReport::new(&case_cfg, vec![report.clone()]);
                write_atomic(dir, &format!("case_{case}.json"), &single.to_json())?;
                write_atomic(dir, &format!("schedule_{case}.csv"), &schedule_csv(&report.result, &case_cfg.scenario))?;
                write_atomic(dir, &format!("windows_{case}.csv"), &windows_csv(&report.result))?;
                reports.push(report);
            }
            Err(e) => {
                let f = horizon_failure(Some(case), &e);
                report_failure(&f);
                first_failure.get_or_insert(f);
            }
        }
    }
    let run = RunReport::new(&scenario, reports);
    write_atomic(&common.out_dir, "report.json", &run.to_json())?;
    write_atomic(&common.out_dir, "totals.csv", &totals_csv(&run.totals))?;
    println!("{:<5} {:>12} {:>12} {:>12} {:>12} {:>10}", "case", "P_S_G", "P_ES_G", "P_G_B", "cost", "mean_s");
    for (row, c) in run.totals.iter().zip(&run.cases) {
        println!(
            "{:<5} {:>12.4} {:>12.4} {:>12.4} {:>12.4} {:>10.4}",
            row.case.to_string(),
            row.p_s_g,
            row.p_es_g,
            row.p_g_b,
            row.total_cost,
            c.timing.mean
        );
    }
    match first_failure {
        Some(f) => Err(Failure { reported: true, ..f }),
        None => Ok(()),
    }
}

fn cmd_sweep(common: &Common, from: Option<usize>, to: Option<usize>) -> Result<(), Failure> {
    let (config, scenario) = load_config(common)?;
    let from = from.unwrap_or(config.sweep.from);
    let to = to.unwrap_or(config.sweep.to);
    if from == 0 || from > to {
        return Err(Failure {
            extra: json!({ "field": "sweep" }),
            ..Failure::new(2, "config", "sweep: need 1 <= from <= to")
        });
    }
    std::fs::create_dir_all(&common.out_dir)?;
    let range: Vec<usize> = (from..=to).collect();
    let mut rows = Vec::new();
    for case in config.cases() {
        for row in sweep_window(&scenario.for_case(case), &range) {
            rows.push((case, row));
        }
    }
    write_atomic(&common.out_dir, "sweep.csv", &sweep_csv(&rows))?;
    print!("{}", sweep_csv(&rows));
    for note in monotonicity_notes(&rows) {
        println!("note: {note}");
    }
    Ok(())
}

fn cmd_bench(common: &Common) -> Result<(), Failure> {
    let (config, scenario) = load_config(common)?;
    std::fs::create_dir_all(&common.out_dir)?;
    for case in config.cases() {
        let report = match bench_case(&scenario, case) {
            Ok(r) => r,
            Err(BenchError::Horizon(e)) => return Err(horizon_failure(Some(case), &e)),
            Err(e) => {
                let kind = match &e {
                    BenchError::Solver(SolverError::Enumerate(EnumerateError::WindowTooLarge { .. })) => {
                        "window_too_large"
                    }
                    _ => "bench",
                };
                return Err(Failure {
                    extra: json!({ "case": case.to_string() }),
                    ..Failure::new(4, kind, e)
                });
            }
        };
        write_atomic(&common.out_dir, &format!("bench_{case}.csv"), &bench_csv(&report))?;
        write_atomic(
            &common.out_dir,
            &format!("bench_{case}.json"),
            &serde_json::to_string_pretty(&report).expect("reports serialize"),
        )?;
        println!(
            "case {case}: {} windows, MILP mean {:.6}s (sd {:.6}), enumeration mean {:.6}s (sd {:.6}), speedup {:.1}x, max objective diff {:.3e}",
            report.rows.len(),
            report.milp.mean,
            report.milp.stddev,
            report.enumeration.mean,
            report.enumeration.stddev,
            report.speedup,
            report.max_objective_diff
        );
    }
    Ok(())
}

fn cmd_validate(common: &Common) -> Result<(), Failure> {
    let (config, scenario) = load_config(common)?;
    let s = &scenario.scenario;
    let summary = json!({
        "schema": SCHEMA_VERSION,
        "valid": true,
        "steps": s.grid().steps,
        "n_p": scenario.window_steps,
        "cases": config.cases().iter().map(|c| c.to_string()).collect::<Vec<_>>(),
        "terminal_policy": scenario.terminal_policy.to_string(),
        "load_kwh": s.load().energy(s.grid().dt_hours),
        "pv_kwh": s.pv().energy(s.grid().dt_hours),
        "bonus_weight": s.mask().bonus_weight,
    });
    println!("{}", serde_json::to_string_pretty(&summary).expect("json"));
    Ok(())
}

fn report_failure(f: &Failure) {
    let record = json!({
        "schema": SCHEMA_VERSION,
        "error": { "kind": f.kind, "message": f.message, "detail": f.extra },
    });
    eprintln!("{record}");
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(c) => cmd_run(c),
        Command::Sweep { common, from, to } => cmd_sweep(common, *from, *to),
        Command::Bench(c) => cmd_bench(c),
        Command::Validate(c) => cmd_validate(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.reported {
                report_failure(&f);
            }
            ExitCode::from(f.code)
        }
    }
}
