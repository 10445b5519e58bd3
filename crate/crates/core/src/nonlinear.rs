//! The original mixed-integer nonlinear dispatch model: residuals of a
//! candidate schedule, its tariff cost, and an exact solver that enumerates
//! every mode assignment of a window.
//!
//! With the binaries fixed, every product in the model collapses to either
//! a flow or zero, so each assignment induces a plain LP. The enumeration is
//! slow by design; it is the reference the lifted MILP is checked against.

use crate::domain::{
    DispatchSchedule, DispatchStep, Flow, Modes, Objective, Scenario, TariffSchedule, WindowData,
};
use crate::lp::{LinearProgram, LpError, LpStatus, Relation, Simplex};
use crate::milp::SolveStats;
use rayon::prelude::*;
use serde::Serialize;
use std::time::Instant;
use thiserror::Error;

/// Largest enumerated bit count accepted by default (six hourly steps).
pub const DEFAULT_MAX_BITS: usize = 18;

/// Strict-improvement margin when replacing the incumbent assignment.
const IMPROVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residual {
    pub constraint: &'static str,
    pub step: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ResidualReport {
    pub entries: Vec<Residual>,
    pub max_residual: f64,
}

impl ResidualReport {
    fn push(&mut self, constraint: &'static str, step: usize, value: f64) {
        let value = value.max(0.0);
        self.max_residual = self.max_residual.max(value);
        self.entries.push(Residual {
            constraint,
            step,
            value,
        });
    }

    pub fn get(&self, constraint: &str, step: usize) -> Option<f64> {
        self.entries
            .iter()
            .find(|r| r.constraint == constraint && r.step == step)
            .map(|r| r.value)
    }

    /// The entry with the largest residual.
    pub fn worst(&self) -> Option<&Residual> {
        self.entries
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
    }
}

fn gated(step: &DispatchStep, flow: Flow) -> f64 {
    if step.modes().gate(flow) {
        step.flow(flow)
    } else {
        0.0
    }
}

/// Charge and discharge powers seen by the storage.
pub fn storage_powers(step: &DispatchStep) -> (f64, f64) {
    (
        gated(step, Flow::GridToEss) + gated(step, Flow::PvToEss),
        gated(step, Flow::EssToGrid) + gated(step, Flow::EssToLoad),
    )
}

/// Residuals of every model constraint for `schedule` on `window`.
///
/// Mismatched lengths are reported as a `length` residual of `inf` rather
/// than a panic.
pub fn evaluate_constraints(schedule: &DispatchSchedule, window: &WindowData) -> ResidualReport {
    let mut report = ResidualReport::default();
    let n = window.steps();
    if schedule.steps.len() != n || schedule.soc_trajectory.len() != n + 1 {
        report.push("length", 0, f64::INFINITY);
        return report;
    }
    let ess = &window.ess;
    let gain = ess.charge_gain(window.dt_hours);
    let loss = ess.discharge_loss(window.dt_hours);
    report.push("soc_initial", 0, (schedule.soc_trajectory[0] - window.soc_start).abs());

    for (t, s) in schedule.steps.iter().enumerate() {
        let negative = Flow::ALL
            .iter()
            .map(|&f| -s.flow(f))
            .fold(0.0, f64::max);
        report.push("nonnegativity", t, negative);

        let served = gated(s, Flow::GridToLoad) + gated(s, Flow::EssToLoad) + s.p_pv_l;
        report.push("load_balance", t, (window.load[t] - served).abs());
        let used = gated(s, Flow::PvToGrid) + gated(s, Flow::PvToEss) + s.p_pv_l;
        report.push("pv_balance", t, (window.pv[t] - used).abs());

        let (charge, discharge) = storage_powers(s);
        let soc = schedule.soc_trajectory[t];
        let next = schedule.soc_trajectory[t + 1];
        report.push("soc_update", t, (next - (soc + gain * charge - loss * discharge)).abs());
        report.push("trajectory", t, (next - s.soc_next).abs());
        report.push("charge_limit", t, charge - ess.p_charge_max_kw);
        report.push("discharge_limit", t, discharge - ess.p_discharge_max_kw);
        report.push("import_limit", t, s.import() - window.grid_limit_kw);
        report.push("export_limit", t, s.export() - window.grid_limit_kw);

        let (lo, hi) = window.soc_bounds(t + 1);
        report.push("soc_bounds", t, (lo - next).max(next - hi));
    }
    report
}

/// Tariff cost of a schedule whose step 0 lines up with tariff index 0.
pub fn cost_j1(schedule: &DispatchSchedule, tariff: &TariffSchedule, dt_hours: f64) -> f64 {
    schedule
        .steps
        .iter()
        .enumerate()
        .map(|(t, s)| (tariff.buy_price[t] * s.import() - tariff.sell_price[t] * s.export()) * dt_hours)
        .sum()
}

/// Objective of a schedule on a window, static or with the sell bonus.
pub fn window_objective(schedule: &DispatchSchedule, window: &WindowData, objective: Objective) -> f64 {
    schedule
        .steps
        .iter()
        .enumerate()
        .map(|(t, s)| window.import_cost(t) * s.import() + window.export_cost(t, objective) * s.export())
        .sum()
}

#[derive(Debug, Error)]
pub enum EnumerateError {
    #[error("no mode assignment admits a feasible dispatch")]
    Infeasible,
    #[error("window of {steps} steps needs {bits} binaries; the guard allows {max_bits}")]
    WindowTooLarge {
        steps: usize,
        bits: usize,
        max_bits: usize,
    },
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnumerateOptions {
    /// Upper limit on `3 · steps`.
    pub max_bits: usize,
    pub workers: usize,
}

impl Default for EnumerateOptions {
    fn default() -> Self {
        Self {
            max_bits: DEFAULT_MAX_BITS,
            workers: 1,
        }
    }
}

/// Per-step modes that cannot satisfy the balances whatever the SoC is.
fn step_admits(window: &WindowData, t: usize, modes: Modes) -> bool {
    let caps = window.flow_caps(t);
    let cap = |f: Flow| if modes.gate(f) { caps[f.index()] } else { 0.0 };
    let slack = 1e-9 * (1.0 + window.load[t] + window.pv[t]);
    let load_room = cap(Flow::GridToLoad) + cap(Flow::EssToLoad) + cap(Flow::PvToLoad);
    let pv_room = cap(Flow::PvToGrid) + cap(Flow::PvToEss) + cap(Flow::PvToLoad);
    window.load[t] <= load_room + slack && window.pv[t] <= pv_room + slack
}

fn modes_of(code: u64, steps: usize, t: usize) -> Modes {
    Modes::from_bits(((code >> (3 * (steps - 1 - t))) & 0b111) as u32)
}

/// Column of each flow in the LP of one assignment, `None` when gated off.
type Columns = Vec<[Option<usize>; 7]>;

/// The LP induced by fixing every binary of the window.
fn assignment_lp(window: &WindowData, modes: &[Modes], objective: Objective) -> (LinearProgram, Columns, Vec<usize>) {
    let n = window.steps();
    let ess = &window.ess;
    let gain = ess.charge_gain(window.dt_hours);
    let loss = ess.discharge_loss(window.dt_hours);
    let mut lp = LinearProgram::new();
    let mut cols: Columns = Vec::with_capacity(n);
    for (t, m) in modes.iter().enumerate() {
        let caps = window.flow_caps(t);
        let mut c = [None; 7];
        for f in Flow::ALL {
            if !m.gate(f) || caps[f.index()] <= 0.0 {
                continue;
            }
            let cost = match f {
                Flow::GridToLoad | Flow::GridToEss => window.import_cost(t),
                Flow::EssToGrid | Flow::PvToGrid => window.export_cost(t, objective),
                _ => 0.0,
            };
            c[f.index()] = Some(lp.add_var(cost, 0.0, caps[f.index()]));
        }
        cols.push(c);
    }
    let soc: Vec<usize> = (1..=n)
        .map(|k| {
            let (lo, hi) = window.soc_bounds(k);
            lp.add_var(0.0, lo, hi)
        })
        .collect();

    for t in 0..n {
        let c = &cols[t];
        let sum = |flows: &[Flow]| -> Vec<(usize, f64)> {
            flows.iter().filter_map(|f| c[f.index()]).map(|j| (j, 1.0)).collect()
        };
        lp.add_row(
            sum(&[Flow::GridToLoad, Flow::EssToLoad, Flow::PvToLoad]),
            Relation::Eq,
            window.load[t],
        );
        lp.add_row(
            sum(&[Flow::PvToGrid, Flow::PvToEss, Flow::PvToLoad]),
            Relation::Eq,
            window.pv[t],
        );
        // Limits on sums only bind when both terms are present; single
        // terms are already capped by their bounds.
        for (pair, limit) in [
            ([Flow::GridToEss, Flow::PvToEss], ess.p_charge_max_kw),
            ([Flow::EssToGrid, Flow::EssToLoad], ess.p_discharge_max_kw),
            ([Flow::GridToEss, Flow::GridToLoad], window.grid_limit_kw),
            ([Flow::EssToGrid, Flow::PvToGrid], window.grid_limit_kw),
        ] {
            let terms = sum(&pair);
            if terms.len() == 2 {
                lp.add_row(terms, Relation::Le, limit);
            }
        }
        let mut row = vec![(soc[t], 1.0)];
        let mut rhs = 0.0;
        if t == 0 {
            rhs = window.soc_start;
        } else {
            row.push((soc[t - 1], -1.0));
        }
        for f in [Flow::GridToEss, Flow::PvToEss] {
            if let Some(j) = c[f.index()] {
                row.push((j, -gain));
            }
        }
        for f in [Flow::EssToGrid, Flow::EssToLoad] {
            if let Some(j) = c[f.index()] {
                row.push((j, loss));
            }
        }
        lp.add_row(row, Relation::Eq, rhs);
    }
    (lp, cols, soc)
}

struct Candidate {
    code: u64,
    objective: f64,
    values: Vec<f64>,
}

#[derive(Default)]
struct Tally {
    lps: usize,
    iterations: usize,
    skipped: usize,
}

fn search(
    window: &WindowData,
    objective: Objective,
    admits: &[[bool; 8]],
    codes: std::ops::Range<u64>,
) -> Result<(Option<Candidate>, Tally), EnumerateError> {
    let n = window.steps();
    let mut best: Option<Candidate> = None;
    let mut tally = Tally::default();
    let mut modes = vec![Modes::default(); n];
    'codes: for code in codes {
        for (t, m) in modes.iter_mut().enumerate() {
            *m = modes_of(code, n, t);
            let bits = ((code >> (3 * (n - 1 - t))) & 0b111) as usize;
            if !admits[t][bits] {
                tally.skipped += 1;
                continue 'codes;
            }
        }
        let (lp, _, _) = assignment_lp(window, &modes, objective);
        let mut simplex = Simplex::new(&lp)?;
        let status = simplex.solve()?;
        tally.lps += 1;
        tally.iterations += simplex.iterations();
        if status != LpStatus::Optimal {
            continue;
        }
        let obj = simplex.objective();
        if best.as_ref().map_or(true, |b| obj < b.objective - IMPROVE_TOL) {
            best = Some(Candidate {
                code,
                objective: obj,
                values: simplex.values().to_vec(),
            });
        }
    }
    Ok((best, tally))
}

/// Exact optimum of a window by trying every mode assignment.
///
/// Assignments are visited in lexicographic order of the bit string
/// `(b_V, b_G, b_C)` of step 0, then step 1, and so on; a later assignment
/// replaces the incumbent only if it is strictly better, so ties resolve to
/// the smallest bit string. Steps whose modes cannot meet the balances for
/// any SoC are skipped without an LP.
pub fn solve_minlp_enumerate(
    window: &WindowData,
    objective: Objective,
    options: &EnumerateOptions,
) -> Result<(DispatchSchedule, SolveStats), EnumerateError> {
    let started = Instant::now();
    let n = window.steps();
    let bits = 3 * n;
    if bits > options.max_bits || bits > 60 {
        return Err(EnumerateError::WindowTooLarge {
            steps: n,
            bits,
            max_bits: options.max_bits,
        });
    }
    let admits: Vec<[bool; 8]> = (0..n)
        .map(|t| std::array::from_fn(|b| step_admits(window, t, Modes::from_bits(b as u32))))
        .collect();
    let total: u64 = 1 << bits;

    let (best, tally) = if options.workers <= 1 {
        search(window, objective, &admits, 0..total)?
    } else {
        let chunks = (options.workers as u64 * 8).min(total).max(1);
        let ranges: Vec<_> = (0..chunks)
            .map(|k| (k * total / chunks)..((k + 1) * total / chunks))
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(options.workers)
            .build()
            .map_err(|e| LpError::NumericalBreakdown(e.to_string()))?;
        let parts: Vec<_> = pool.install(|| {
            ranges
                .into_par_iter()
                .map(|r| search(window, objective, &admits, r))
                .collect::<Result<Vec<_>, _>>()
        })?;
        let mut best: Option<Candidate> = None;
        let mut tally = Tally::default();
        for (cand, t) in parts {
            tally.lps += t.lps;
            tally.iterations += t.iterations;
            tally.skipped += t.skipped;
            if let Some(c) = cand {
                if best.as_ref().map_or(true, |b| c.objective < b.objective - IMPROVE_TOL) {
                    best = Some(c);
                }
            }
        }
        (best, tally)
    };

    let best = best.ok_or(EnumerateError::Infeasible)?;
    let modes: Vec<Modes> = (0..n).map(|t| modes_of(best.code, n, t)).collect();
    let (_, cols, soc) = assignment_lp(window, &modes, objective);
    let mut schedule = DispatchSchedule {
        steps: Vec::with_capacity(n),
        soc_trajectory: vec![window.soc_start],
    };
    for t in 0..n {
        let mut step = DispatchStep::default();
        step.set_modes(modes[t]);
        for f in Flow::ALL {
            if let Some(j) = cols[t][f.index()] {
                step.set_flow(f, best.values[j].max(0.0));
            }
        }
        step.soc_next = best.values[soc[t]];
        schedule.soc_trajectory.push(step.soc_next);
        schedule.steps.push(step);
    }
    let stats = SolveStats {
        wall_time: started.elapsed().as_secs_f64(),
        nodes_explored: (total - tally.skipped as u64) as usize,
        lp_iterations: tally.iterations,
        lps_solved: tally.lps,
        objective: best.objective,
        gap: 0.0,
    };
    Ok((schedule, stats))
}

/// Enumeration over the scenario's whole grid as one window.
pub fn solve_scenario_enumerate(
    scenario: &Scenario,
    objective: Objective,
    options: &EnumerateOptions,
) -> Result<(DispatchSchedule, SolveStats), EnumerateError> {
    solve_minlp_enumerate(&scenario.full_horizon(), objective, options)
}
