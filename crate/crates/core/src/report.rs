//! Plot-ready reports: per-case totals, schedules, window sweeps and the
//! MILP-vs-enumeration benchmark, as serializable structs and CSV text.
//!
//! Every CSV keeps wall-clock fields in trailing `*_seconds` columns so that
//! reruns can be compared byte for byte once those columns are dropped.

use crate::domain::{Flow, Scenario};
use crate::horizon::{
    run_day, solve_window_enumerate, solve_window_milp, Case, DailyResult, HorizonError,
    ScenarioConfig, SolverError, SweepRow, TerminalPolicy, Totals,
};
use crate::nonlinear::EnumerateError;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt::Write as _;
use std::time::Instant;
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Mean, extremes and sample standard deviation of a set of durations.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TimingSummary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// N − 1 denominator; zero for fewer than two samples.
    pub stddev: f64,
}

impl TimingSummary {
    pub fn of(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Self::default();
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            count: n,
            mean,
            min: samples.iter().copied().fold(f64::INFINITY, f64::min),
            max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            stddev: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TotalsRow {
    pub case: Case,
    #[serde(rename = "P_S_G")]
    pub p_s_g: f64,
    #[serde(rename = "P_ES_G")]
    pub p_es_g: f64,
    #[serde(rename = "P_G_B")]
    pub p_g_b: f64,
    pub total_cost: f64,
}

impl TotalsRow {
    pub fn new(case: Case, result: &DailyResult) -> Self {
        let Totals { p_s_g, p_es_g, p_g_b } = result.totals;
        Self {
            case,
            p_s_g,
            p_es_g,
            p_g_b,
            total_cost: result.total_cost,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseReport {
    pub case: Case,
    pub result: DailyResult,
    /// Over the windows of `result`, seconds.
    pub timing: TimingSummary,
}

impl CaseReport {
    pub fn new(case: Case, result: DailyResult) -> Self {
        let times: Vec<f64> = result.windows.iter().map(|w| w.stats.wall_time).collect();
        Self {
            case,
            timing: TimingSummary::of(&times),
            result,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub scenario: Scenario,
    pub n_p: usize,
    pub terminal_policy: TerminalPolicy,
    pub cases: Vec<CaseReport>,
    pub totals: Vec<TotalsRow>,
}

impl RunReport {
    pub fn new(config: &ScenarioConfig, cases: Vec<CaseReport>) -> Self {
        let totals = cases
            .iter()
            .map(|c| TotalsRow::new(c.case, &c.result))
            .collect();
        Self {
            schema: SCHEMA_VERSION,
            scenario: config.scenario.clone(),
            n_p: config.window_steps,
            terminal_policy: config.terminal_policy,
            cases,
            totals,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }
}

/// Runs each case's day concurrently; results come back in input order.
pub fn run_cases(
    config: &ScenarioConfig,
    cases: &[Case],
) -> Vec<(Case, Result<DailyResult, HorizonError>)> {
    cases
        .par_iter()
        .map(|&case| (case, run_day(&config.for_case(case))))
        .collect()
}

pub fn totals_csv(rows: &[TotalsRow]) -> String {
    let mut out = String::from("case,P_S_G,P_ES_G,P_G_B,total_cost\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{}", r.case, r.p_s_g, r.p_es_g, r.p_g_b, r.total_cost);
    }
    out
}

/// One row per committed step: flows, modes, SoC at both ends of the step.
pub fn schedule_csv(result: &DailyResult, scenario: &Scenario) -> String {
    let mut out = String::from("step,hour");
    for f in Flow::ALL {
        out.push(',');
        out.push_str(f.name());
    }
    out.push_str(",b_v,b_g,b_c,soc_start,soc_end,load,pv,buy_price,sell_price\n");
    let grid = scenario.grid();
    for (t, s) in result.schedule.steps.iter().enumerate() {
        let _ = write!(out, "{t},{}", grid.hour_of(t));
        for f in Flow::ALL {
            let _ = write!(out, ",{}", s.flow(f));
        }
        let m = s.modes();
        let _ = writeln!(
            out,
            ",{},{},{},{},{},{},{},{},{}",
            u8::from(m.b_v),
            u8::from(m.b_g),
            u8::from(m.b_c),
            result.schedule.soc_trajectory[t],
            result.schedule.soc_trajectory[t + 1],
            scenario.load().values[t],
            scenario.pv().values[t],
            scenario.tariff().buy_price[t],
            scenario.tariff().sell_price[t],
        );
    }
    out
}

/// Per-window solver statistics; wall time last.
pub fn windows_csv(result: &DailyResult) -> String {
    let mut out = String::from("epoch,soc_start,objective,nodes,lp_iterations,wall_seconds\n");
    for w in &result.windows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            w.epoch, w.soc_start, w.stats.objective, w.stats.nodes_explored, w.stats.lp_iterations, w.stats.wall_time
        );
    }
    out
}

/// Infeasible rows leave `total_cost` empty.
pub fn sweep_csv(rows: &[(Case, SweepRow)]) -> String {
    let mut out = String::from("n_p,case,total_cost,feasible\n");
    for (case, r) in rows {
        let cost = r.total_cost.map(|c| c.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{case},{cost},{}", r.n_p, r.feasible);
    }
    out
}

/// Notes, per case, the window lengths whose cost does not improve on the
/// next shorter feasible one. Informational; longer windows are not
/// guaranteed to help a receding-horizon schedule.
pub fn monotonicity_notes(rows: &[(Case, SweepRow)]) -> Vec<String> {
    let mut notes = Vec::new();
    for case in Case::ALL {
        let mut feasible: Vec<(usize, f64)> = rows
            .iter()
            .filter(|(c, _)| *c == case)
            .filter_map(|(_, r)| r.total_cost.map(|cost| (r.n_p, cost)))
            .collect();
        feasible.sort_by_key(|&(n, _)| n);
        let flat: Vec<String> = feasible
            .windows(2)
            .filter(|w| w[1].1 >= w[0].1 - 1e-9)
            .map(|w| w[1].0.to_string())
            .collect();
        if !flat.is_empty() {
            notes.push(format!(
                "case {case}: cost does not improve on the previous window length at N_p = {}",
                flat.join(", ")
            ));
        }
    }
    notes
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Horizon(#[from] HorizonError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("window at step {0} is infeasible for one of the solvers")]
    Disagreement(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub epoch: usize,
    pub soc_start: f64,
    pub milp_objective: f64,
    pub enum_objective: f64,
    pub milp_seconds: f64,
    pub enum_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub schema: u32,
    pub case: Case,
    pub n_p: usize,
    pub rows: Vec<BenchRow>,
    pub milp: TimingSummary,
    pub enumeration: TimingSummary,
    /// Mean enumeration time over mean MILP time.
    pub speedup: f64,
    pub max_objective_diff: f64,
}

/// Solves every window of `case`'s day with both solvers, one thread each.
///
/// The day is first run with the MILP; each of its windows is then
/// re-solved from the same start SoC by both paths and timed.
pub fn bench_case(config: &ScenarioConfig, case: Case) -> Result<BenchReport, BenchError> {
    let mut config = config.for_case(case);
    config.milp.workers = 1;
    config.enumerate.workers = 1;
    let bits = 3 * config.window_steps;
    if bits > config.enumerate.max_bits {
        return Err(SolverError::Enumerate(EnumerateError::WindowTooLarge {
            steps: config.window_steps,
            bits,
            max_bits: config.enumerate.max_bits,
        })
        .into());
    }
    let day = run_day(&config)?;
    let mut rows = Vec::with_capacity(day.windows.len());
    for w in &day.windows {
        let window = config.window_at(w.epoch, w.soc_start);
        let started = Instant::now();
        let milp = solve_window_milp(&window, config.objective, &config.milp)?;
        let milp_seconds = started.elapsed().as_secs_f64();
        let started = Instant::now();
        let en = solve_window_enumerate(&window, config.objective, &config.enumerate)?;
        let enum_seconds = started.elapsed().as_secs_f64();
        let (Some((_, m)), Some((_, e))) = (milp, en) else {
            return Err(BenchError::Disagreement(w.epoch));
        };
        rows.push(BenchRow {
            epoch: w.epoch,
            soc_start: w.soc_start,
            milp_objective: m.objective,
            enum_objective: e.objective,
            milp_seconds,
            enum_seconds,
        });
    }
    let milp = TimingSummary::of(&rows.iter().map(|r| r.milp_seconds).collect::<Vec<_>>());
    let enumeration = TimingSummary::of(&rows.iter().map(|r| r.enum_seconds).collect::<Vec<_>>());
    let max_objective_diff = rows
        .iter()
        .map(|r| (r.milp_objective - r.enum_objective).abs())
        .fold(0.0, f64::max);
    Ok(BenchReport {
        schema: SCHEMA_VERSION,
        case,
        n_p: config.window_steps,
        speedup: if milp.mean > 0.0 { enumeration.mean / milp.mean } else { f64::INFINITY },
        rows,
        milp,
        enumeration,
        max_objective_diff,
    })
}

pub fn bench_csv(report: &BenchReport) -> String {
    let mut out = String::from("epoch,soc_start,milp_objective,enum_objective,milp_seconds,enum_seconds\n");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch, r.soc_start, r.milp_objective, r.enum_objective, r.milp_seconds, r.enum_seconds
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_uses_sample_stddev() {
        let s = TimingSummary::of(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.count, 4);
        assert_eq!(s.mean, 2.5);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        // Sum of squared deviations 5, over 3.
        assert!((s.stddev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn summary_of_one_or_none() {
        assert_eq!(TimingSummary::of(&[]).count, 0);
        let one = TimingSummary::of(&[0.5]);
        assert_eq!((one.mean, one.stddev), (0.5, 0.0));
    }

    fn row(n_p: usize, cost: Option<f64>) -> SweepRow {
        SweepRow {
            n_p,
            feasible: cost.is_some(),
            total_cost: cost,
            error: None,
        }
    }

    #[test]
    fn sweep_csv_marks_infeasible_rows() {
        let rows = vec![(Case::A, row(5, None)), (Case::A, row(6, Some(1.25)))];
        assert_eq!(sweep_csv(&rows), "n_p,case,total_cost,feasible\n5,A,,false\n6,A,1.25,true\n");
    }

    #[test]
    fn notes_flag_non_improving_lengths() {
        let rows = vec![
            (Case::B, row(6, Some(2.0))),
            (Case::B, row(7, Some(1.5))),
            (Case::B, row(8, Some(1.5))),
            (Case::B, row(9, Some(1.7))),
            (Case::C, row(6, Some(3.0))),
            (Case::C, row(7, Some(2.0))),
        ];
        let notes = monotonicity_notes(&rows);
        assert_eq!(notes.len(), 1);
        assert!(notes[0].starts_with("case B") && notes[0].ends_with("8, 9"));
    }
}
