//! Receding-horizon scheduling: solve a window, commit its first step,
//! carry the SoC forward, shift by one step.

use crate::domain::{
    AnchorKind, DispatchSchedule, Objective, Scenario, SellWindowMask, SocAnchor, TimeGrid,
    WindowData, WindowSpec,
};
use crate::linearize::{build_milp, recover_schedule, LinearizeError};
use crate::milp::{solve_milp, MilpError, MilpOptions, SolveStats};
use crate::nonlinear::{cost_j1, solve_minlp_enumerate, EnumerateError, EnumerateOptions};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Where the terminal SoC target is imposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TerminalPolicy {
    /// Only the window that reaches the end of the day pins the SoC there.
    DayEnd,
    /// As `DayEnd`, and every window ending earlier must finish at or
    /// above the target.
    #[default]
    EveryWindow,
}

impl fmt::Display for TerminalPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TerminalPolicy::DayEnd => "DayEnd",
            TerminalPolicy::EveryWindow => "EveryWindow",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    /// Static objective.
    A,
    /// Sell bonus on hours [0, 6).
    B,
    /// Sell bonus on hours [18, 24).
    C,
}

impl Case {
    pub const ALL: [Case; 3] = [Case::A, Case::B, Case::C];

    pub fn objective(self) -> Objective {
        match self {
            Case::A => Objective::Static,
            Case::B | Case::C => Objective::Dynamic,
        }
    }

    /// Hours of day `[from, to)` carrying the sell bonus.
    pub fn bonus_hours(self) -> Option<(f64, f64)> {
        match self {
            Case::A => None,
            Case::B => Some((0.0, 6.0)),
            Case::C => Some((18.0, 24.0)),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// The sell mask of a case study on `grid`.
pub fn make_case_mask(case: Case, grid: &TimeGrid, bonus_weight: f64) -> SellWindowMask {
    let mask = (0..grid.steps)
        .map(|t| {
            let h = grid.hour_of(t);
            case.bonus_hours().is_some_and(|(a, b)| h >= a && h < b)
        })
        .collect();
    SellWindowMask { mask, bonus_weight }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowSolver {
    #[default]
    Milp,
    Enumerate,
}

#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub window_steps: usize,
    pub objective: Objective,
    pub terminal_policy: TerminalPolicy,
    pub solver: WindowSolver,
    pub milp: MilpOptions,
    pub enumerate: EnumerateOptions,
}

impl ScenarioConfig {
    pub fn new(scenario: Scenario, window_steps: usize, objective: Objective) -> Self {
        Self {
            scenario,
            window_steps,
            objective,
            terminal_policy: TerminalPolicy::default(),
            solver: WindowSolver::default(),
            milp: MilpOptions::default(),
            enumerate: EnumerateOptions::default(),
        }
    }

    /// The scenario of `case` with its mask and objective.
    pub fn for_case(&self, case: Case) -> Self {
        let bonus = self.scenario.mask().bonus_weight;
        let mask = make_case_mask(case, self.scenario.grid(), bonus);
        let scenario = self
            .scenario
            .with_mask(mask)
            .expect("case masks match the grid");
        Self {
            scenario,
            objective: case.objective(),
            ..self.clone()
        }
    }

    /// The window solved at epoch `t`, starting from `soc`.
    pub fn window_at(&self, t: usize, soc: f64) -> WindowData {
        let day = self.scenario.grid().steps;
        let n = self.window_steps;
        let target = self.scenario.params().ess.soc_final_target;
        let mut anchors = Vec::new();
        let to_day_end = day - t;
        if n >= to_day_end {
            anchors.push(SocAnchor {
                boundary: to_day_end,
                kind: AnchorKind::Exactly,
                value: target,
            });
        } else if self.terminal_policy == TerminalPolicy::EveryWindow {
            anchors.push(SocAnchor {
                boundary: n,
                kind: AnchorKind::AtLeast,
                value: target,
            });
        }
        self.scenario.window(&WindowSpec {
            start: t,
            steps: n,
            soc_start: soc,
            anchors,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Totals {
    /// Energy sold to the grid, kWh.
    pub p_s_g: f64,
    /// Storage energy sold to the grid, kWh.
    pub p_es_g: f64,
    /// Energy bought from the grid, kWh.
    pub p_g_b: f64,
}

impl Totals {
    pub fn of(schedule: &DispatchSchedule, dt_hours: f64) -> Self {
        let mut t = Totals::default();
        for s in &schedule.steps {
            t.p_s_g += s.export() * dt_hours;
            t.p_es_g += s.ess_export() * dt_hours;
            t.p_g_b += s.import() * dt_hours;
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRecord {
    pub epoch: usize,
    pub soc_start: f64,
    pub stats: SolveStats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyResult {
    pub schedule: DispatchSchedule,
    pub windows: Vec<WindowRecord>,
    /// Tariff cost of the committed steps, bonus excluded.
    pub total_cost: f64,
    pub totals: Totals,
}

#[derive(Debug, Error)]
pub enum HorizonError {
    #[error("window at step {epoch} is infeasible under the {policy} terminal policy")]
    WindowInfeasible { epoch: usize, policy: TerminalPolicy },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("window at step {epoch}: {source}")]
    Solver {
        epoch: usize,
        #[source]
        source: SolverError,
    },
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Enumerate(#[from] EnumerateError),
    #[error(transparent)]
    Linearize(#[from] LinearizeError),
}

/// Solves one window with the MILP path; `Ok(None)` when infeasible.
pub fn solve_window_milp(
    window: &WindowData,
    objective: Objective,
    options: &MilpOptions,
) -> Result<Option<(DispatchSchedule, SolveStats)>, SolverError> {
    let problem = build_milp(window, objective)?;
    match solve_milp(&problem, options) {
        Ok((values, stats)) => Ok(Some((recover_schedule(&problem, &values)?, stats))),
        Err(MilpError::Infeasible) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Solves one window by enumeration; `Ok(None)` when infeasible.
pub fn solve_window_enumerate(
    window: &WindowData,
    objective: Objective,
    options: &EnumerateOptions,
) -> Result<Option<(DispatchSchedule, SolveStats)>, SolverError> {
    match solve_minlp_enumerate(window, objective, options) {
        Ok(r) => Ok(Some(r)),
        Err(EnumerateError::Infeasible) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Runs the receding-horizon loop over the scenario's day.
pub fn run_day(config: &ScenarioConfig) -> Result<DailyResult, HorizonError> {
    if config.window_steps == 0 {
        return Err(HorizonError::InvalidConfig("window_steps must be at least 1".into()));
    }
    let scenario = &config.scenario;
    let day = scenario.grid().steps;
    let mut soc = scenario.params().ess.soc_initial;
    let mut schedule = DispatchSchedule {
        steps: Vec::with_capacity(day),
        soc_trajectory: vec![soc],
    };
    let mut windows = Vec::with_capacity(day);
    for t in 0..day {
        let window = config.window_at(t, soc);
        let solved = match config.solver {
            WindowSolver::Milp => solve_window_milp(&window, config.objective, &config.milp),
            WindowSolver::Enumerate => {
                solve_window_enumerate(&window, config.objective, &config.enumerate)
            }
        }
        .map_err(|source| HorizonError::Solver { epoch: t, source })?;
        let Some((plan, stats)) = solved else {
            return Err(HorizonError::WindowInfeasible {
                epoch: t,
                policy: config.terminal_policy,
            });
        };
        let step = plan.steps[0];
        soc = step.soc_next;
        schedule.steps.push(step);
        schedule.soc_trajectory.push(soc);
        windows.push(WindowRecord {
            epoch: t,
            soc_start: window.soc_start,
            stats,
        });
    }
    let dt = scenario.grid().dt_hours;
    Ok(DailyResult {
        total_cost: cost_j1(&schedule, scenario.tariff(), dt),
        totals: Totals::of(&schedule, dt),
        schedule,
        windows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n_p: usize,
    pub feasible: bool,
    pub total_cost: Option<f64>,
    pub error: Option<String>,
}

/// One day run per window length, in the order given. Failed runs are kept
/// as rows with `feasible = false`.
pub fn sweep_window(config: &ScenarioConfig, n_p_values: &[usize]) -> Vec<SweepRow> {
    n_p_values
        .par_iter()
        .map(|&n_p| {
            let cfg = ScenarioConfig {
                window_steps: n_p,
                ..config.clone()
            };
            match run_day(&cfg) {
                Ok(r) => SweepRow {
                    n_p,
                    feasible: true,
                    total_cost: Some(r.total_cost),
                    error: None,
                },
                Err(e) => SweepRow {
                    n_p,
                    feasible: false,
                    total_cost: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{
        validate_scenario, EssParams, MicrogridParams, PowerProfile, ProfileKind, TariffSchedule,
    };

    fn quiet_day() -> Scenario {
        validate_scenario(
            MicrogridParams {
                ess: EssParams::with_capacity(10.0),
                pv_capacity_kw: 0.0,
                grid_limit_kw: 5.0,
            },
            TimeGrid::hourly_day(),
            PowerProfile::zeros(ProfileKind::Load, 24),
            PowerProfile::zeros(ProfileKind::Pv, 24),
            TariffSchedule::flat(24, 0.2, 0.1),
            SellWindowMask::none(24),
        )
        .unwrap()
    }

    #[test]
    fn quiet_day_is_idle() {
        let cfg = ScenarioConfig::new(quiet_day(), 3, Objective::Static);
        let r = run_day(&cfg).unwrap();
        assert_eq!(r.total_cost, 0.0);
        assert!(r.schedule.soc_trajectory.iter().all(|&s| (s - 0.5).abs() < 1e-12));
        assert_eq!(r.windows.len(), 24);
    }

    #[test]
    fn case_masks() {
        let g = TimeGrid::hourly_day();
        assert_eq!(make_case_mask(Case::A, &g, 1.0).active_steps(), 0);
        let b = make_case_mask(Case::B, &g, 1.0);
        assert!((0..24).all(|h| b.mask[h] == (h < 6)));
        let c = make_case_mask(Case::C, &g, 1.0);
        assert!((0..24).all(|h| c.mask[h] == (h >= 18)));
    }

    #[test]
    fn anchors_follow_the_policy() {
        let mut cfg = ScenarioConfig::new(quiet_day(), 4, Objective::Static);
        let w = cfg.window_at(5, 0.5);
        assert_eq!(w.anchors[0].kind, AnchorKind::AtLeast);
        assert_eq!(w.anchors[0].boundary, 4);
        let w = cfg.window_at(22, 0.5);
        assert_eq!((w.anchors[0].kind, w.anchors[0].boundary), (AnchorKind::Exactly, 2));
        cfg.terminal_policy = TerminalPolicy::DayEnd;
        assert!(cfg.window_at(5, 0.5).anchors.is_empty());
    }

    #[test]
    fn zero_window_is_rejected() {
        let cfg = ScenarioConfig::new(quiet_day(), 0, Objective::Static);
        assert!(matches!(run_day(&cfg), Err(HorizonError::InvalidConfig(_))));
    }

    #[test]
    fn sweep_keeps_order_and_duplicates() {
        let cfg = ScenarioConfig::new(quiet_day(), 1, Objective::Static);
        let rows = sweep_window(&cfg, &[2, 1, 2]);
        assert_eq!(rows.iter().map(|r| r.n_p).collect::<Vec<_>>(), vec![2, 1, 2]);
        assert!(rows.iter().all(|r| r.feasible));
    }
}
