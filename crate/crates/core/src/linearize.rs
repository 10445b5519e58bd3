//! Exact linearization of the dispatch model.
//!
//! Every product in the nonlinear model is a bounded flow times one or more
//! mode literals. Each literal is peeled off with one lifted variable and
//! three envelope rows (plus `z ≥ 0` as a bound); for an integral gate the
//! envelope pins the lifted value to the product, so the MILP is exact.
//! Products of several literals chain through intermediate lifts
//! (`z → y → w`).

use crate::domain::{DispatchSchedule, DispatchStep, Flow, Modes, Objective, WindowData};
use crate::lp::{LinearProgram, Relation};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

/// Columns per step: 7 flows, 3 binaries, 14 lifted and aggregate variables.
pub const VARS_PER_STEP: usize = 24;

/// Offsets of the binaries within a step block.
pub const B_V: usize = 7;
pub const B_G: usize = 8;
pub const B_C: usize = 9;

/// Lifted variables in column order after the binaries. The first ten are
/// gated products, the last four are linear aggregates of them.
pub const LIFTED: [&str; 14] = [
    "z_g_es", "y_g_es", "w_g_es", "w_g_l", "y_es_g", "w_es_g", "w_pv_g", "y_pv_es", "w_pv_es",
    "w_es_l", "y_c_es", "y_es_d", "y_g_b", "y_s_g",
];

const BINARIES: [&str; 3] = ["b_v", "b_g", "b_c"];

/// Lifted values may differ from their products by this much on recovery.
pub const LIFT_TOL: f64 = 1e-6;
/// Binaries within this distance of 0 or 1 count as integral.
pub const INT_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum LinearizeError {
    #[error("variable {0} has no finite upper bound")]
    UnboundedVariable(String),
    #[error("lift {lift} at step {step} does not match its product")]
    LiftInconsistency { lift: String, step: usize },
    #[error("binary {0} is not integral")]
    FractionalBinary(String),
    #[error("solution has {found} values, problem has {expected} columns")]
    SizeMismatch { expected: usize, found: usize },
}

/// A binary literal: `b` or, with `complement`, `1 − b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub binary: usize,
    pub complement: bool,
}

impl Gate {
    pub fn on(binary: usize) -> Self {
        Self {
            binary,
            complement: false,
        }
    }

    pub fn off(binary: usize) -> Self {
        Self {
            binary,
            complement: true,
        }
    }

    pub fn value(&self, b: f64) -> f64 {
        if self.complement {
            1.0 - b
        } else {
            b
        }
    }
}

/// `var = base_var · gate`, with `0 ≤ base_var ≤ upper_bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedVar {
    pub name: &'static str,
    pub step: usize,
    pub var: usize,
    pub base_var: usize,
    pub gate: Gate,
    pub upper_bound: f64,
}

#[derive(Debug, Clone, Default)]
pub struct MilpProblem {
    pub lp: LinearProgram,
    pub binaries: Vec<usize>,
    pub names: Vec<String>,
    pub row_names: Vec<String>,
    pub lifts: Vec<LiftedVar>,
    pub steps: usize,
    index: HashMap<String, usize>,
}

impl MilpProblem {
    pub fn num_vars(&self) -> usize {
        self.lp.num_vars()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn flow_var(&self, t: usize, flow: Flow) -> usize {
        t * VARS_PER_STEP + flow.index()
    }

    pub fn binary_var(&self, t: usize, offset: usize) -> usize {
        t * VARS_PER_STEP + offset
    }

    pub fn lifted_var(&self, t: usize, name: &str) -> Option<usize> {
        LIFTED
            .iter()
            .position(|&n| n == name)
            .map(|k| t * VARS_PER_STEP + 10 + k)
    }

    pub fn soc_var(&self, k: usize) -> usize {
        self.steps * VARS_PER_STEP + k
    }

    fn row(&mut self, name: String, terms: &[(usize, f64)], relation: Relation, rhs: f64) {
        let coeffs = terms.iter().copied().filter(|&(_, a)| a != 0.0).collect();
        self.lp.add_row(coeffs, relation, rhs);
        self.row_names.push(name);
    }
}

/// Bounds `z` by `[0, upper]` and adds the envelope rows
/// `z ≤ U·g`, `z ≤ x`, `z ≥ x − U·(1 − g)`.
pub fn lift_product(
    problem: &mut MilpProblem,
    name: &'static str,
    step: usize,
    z: usize,
    x: usize,
    upper: f64,
    gate: Gate,
) -> Result<LiftedVar, LinearizeError> {
    if !upper.is_finite() || upper < 0.0 {
        return Err(LinearizeError::UnboundedVariable(format!("{name}[{step}]")));
    }
    problem.lp.lower[z] = 0.0;
    problem.lp.upper[z] = upper;
    let b = gate.binary;
    let tag = |s: &str| format!("{name}[{step}].{s}");
    if gate.complement {
        // z ≤ U(1 − b)
        problem.row(tag("gate"), &[(z, 1.0), (b, upper)], Relation::Le, upper);
        // z ≥ x − U·b
        problem.row(tag("floor"), &[(z, 1.0), (x, -1.0), (b, upper)], Relation::Ge, 0.0);
    } else {
        problem.row(tag("gate"), &[(z, 1.0), (b, -upper)], Relation::Le, 0.0);
        // z ≥ x − U(1 − b)
        problem.row(tag("floor"), &[(z, 1.0), (x, -1.0), (b, -upper)], Relation::Ge, -upper);
    }
    problem.row(tag("base"), &[(z, 1.0), (x, -1.0)], Relation::Le, 0.0);
    Ok(LiftedVar {
        name,
        step,
        var: z,
        base_var: x,
        gate,
        upper_bound: upper,
    })
}

/// Builds the lifted MILP of a window.
pub fn build_milp(window: &WindowData, objective: Objective) -> Result<MilpProblem, LinearizeError> {
    let n = window.steps();
    let ess = &window.ess;
    let mut p = MilpProblem {
        lp: LinearProgram::new(),
        binaries: Vec::with_capacity(3 * n),
        names: Vec::new(),
        row_names: Vec::new(),
        lifts: Vec::with_capacity(10 * n),
        steps: n,
        index: HashMap::new(),
    };
    let declare = |p: &mut MilpProblem, name: String, lo: f64, up: f64| {
        let j = p.lp.add_var(0.0, lo, up);
        p.index.insert(name.clone(), j);
        p.names.push(name);
        j
    };
    for t in 0..n {
        let caps = window.flow_caps(t);
        for f in Flow::ALL {
            let cap = caps[f.index()];
            if !cap.is_finite() {
                return Err(LinearizeError::UnboundedVariable(format!("{}[{t}]", f.name())));
            }
            declare(&mut p, format!("{}[{t}]", f.name()), 0.0, cap);
        }
        for b in BINARIES {
            let j = declare(&mut p, format!("{b}[{t}]"), 0.0, 1.0);
            p.binaries.push(j);
        }
        for l in LIFTED {
            declare(&mut p, format!("{l}[{t}]"), 0.0, 0.0);
        }
    }
    for k in 0..=n {
        let (lo, hi) = if k == 0 {
            (window.soc_start, window.soc_start)
        } else {
            window.soc_bounds(k)
        };
        declare(&mut p, format!("soc[{k}]"), lo, hi);
    }

    let gain = ess.charge_gain(window.dt_hours);
    let loss = ess.discharge_loss(window.dt_hours);
    for t in 0..n {
        let caps = window.flow_caps(t);
        let cap = |f: Flow| caps[f.index()];
        let flow = |f: Flow| t * VARS_PER_STEP + f.index();
        let lift = |name: &str| t * VARS_PER_STEP + 10 + LIFTED.iter().position(|&l| l == name).unwrap();
        let (bv, bg, bc) = (t * VARS_PER_STEP + B_V, t * VARS_PER_STEP + B_G, t * VARS_PER_STEP + B_C);

        let chain: [(&'static str, usize, f64, Gate); 10] = [
            ("z_g_es", flow(Flow::GridToEss), cap(Flow::GridToEss), Gate::off(bv)),
            ("y_g_es", lift("z_g_es"), cap(Flow::GridToEss), Gate::on(bc)),
            ("w_g_es", lift("y_g_es"), cap(Flow::GridToEss), Gate::on(bg)),
            ("w_g_l", flow(Flow::GridToLoad), cap(Flow::GridToLoad), Gate::on(bg)),
            ("y_es_g", flow(Flow::EssToGrid), cap(Flow::EssToGrid), Gate::off(bc)),
            ("w_es_g", lift("y_es_g"), cap(Flow::EssToGrid), Gate::off(bg)),
            ("w_pv_g", flow(Flow::PvToGrid), cap(Flow::PvToGrid), Gate::off(bg)),
            ("y_pv_es", flow(Flow::PvToEss), cap(Flow::PvToEss), Gate::on(bc)),
            ("w_pv_es", lift("y_pv_es"), cap(Flow::PvToEss), Gate::on(bv)),
            ("w_es_l", flow(Flow::EssToLoad), cap(Flow::EssToLoad), Gate::off(bc)),
        ];
        for (name, base, upper, gate) in chain {
            let l = lift_product(&mut p, name, t, lift(name), base, upper, gate)?;
            p.lifts.push(l);
        }

        let aggregates = [
            ("y_c_es", ["w_g_es", "w_pv_es"], ess.p_charge_max_kw, 0.0),
            ("y_es_d", ["w_es_g", "w_es_l"], ess.p_discharge_max_kw, 0.0),
            ("y_g_b", ["w_g_es", "w_g_l"], window.grid_limit_kw, window.import_cost(t)),
            ("y_s_g", ["w_es_g", "w_pv_g"], window.grid_limit_kw, window.export_cost(t, objective)),
        ];
        for (name, [a, b], limit, cost) in aggregates {
            let j = lift(name);
            let reach = p.lp.upper[lift(a)] + p.lp.upper[lift(b)];
            p.lp.upper[j] = limit.min(reach);
            p.lp.objective[j] = cost;
            p.row(
                format!("{name}[{t}]"),
                &[(j, 1.0), (lift(a), -1.0), (lift(b), -1.0)],
                Relation::Eq,
                0.0,
            );
        }

        p.row(
            format!("load_balance[{t}]"),
            &[(lift("w_g_l"), 1.0), (lift("w_es_l"), 1.0), (flow(Flow::PvToLoad), 1.0)],
            Relation::Eq,
            window.load[t],
        );
        p.row(
            format!("pv_balance[{t}]"),
            &[(lift("w_pv_g"), 1.0), (lift("w_pv_es"), 1.0), (flow(Flow::PvToLoad), 1.0)],
            Relation::Eq,
            window.pv[t],
        );
        let (s0, s1) = (p.soc_var(t), p.soc_var(t + 1));
        p.row(
            format!("soc_update[{t}]"),
            &[(s1, 1.0), (s0, -1.0), (lift("y_c_es"), -gain), (lift("y_es_d"), loss)],
            Relation::Eq,
            0.0,
        );
    }
    Ok(p)
}

/// Reads a dispatch schedule back from an integral MILP solution.
///
/// Binaries are snapped to {0, 1}; every lift is checked against its
/// product, and each flow is reported at its gated value, so flows that a
/// mode switches off read as zero.
pub fn recover_schedule(problem: &MilpProblem, values: &[f64]) -> Result<DispatchSchedule, LinearizeError> {
    if values.len() != problem.num_vars() {
        return Err(LinearizeError::SizeMismatch {
            expected: problem.num_vars(),
            found: values.len(),
        });
    }
    let mut snapped = values.to_vec();
    for &j in &problem.binaries {
        let r = values[j].round();
        if (values[j] - r).abs() > INT_TOL || !(r == 0.0 || r == 1.0) {
            return Err(LinearizeError::FractionalBinary(problem.names[j].clone()));
        }
        snapped[j] = r;
    }
    for l in &problem.lifts {
        let product = snapped[l.base_var] * l.gate.value(snapped[l.gate.binary]);
        if (snapped[l.var] - product).abs() > LIFT_TOL {
            return Err(LinearizeError::LiftInconsistency {
                lift: l.name.to_string(),
                step: l.step,
            });
        }
    }
    let n = problem.steps;
    let mut schedule = DispatchSchedule {
        steps: Vec::with_capacity(n),
        soc_trajectory: vec![snapped[problem.soc_var(0)]],
    };
    for t in 0..n {
        let modes = Modes {
            b_v: snapped[problem.binary_var(t, B_V)] == 1.0,
            b_g: snapped[problem.binary_var(t, B_G)] == 1.0,
            b_c: snapped[problem.binary_var(t, B_C)] == 1.0,
        };
        let mut step = DispatchStep::default();
        step.set_modes(modes);
        for f in Flow::ALL {
            if modes.gate(f) {
                step.set_flow(f, snapped[problem.flow_var(t, f)].max(0.0));
            }
        }
        step.soc_next = snapped[problem.soc_var(t + 1)];
        schedule.soc_trajectory.push(step.soc_next);
        schedule.steps.push(step);
    }
    Ok(schedule)
}

fn fmt_terms(out: &mut String, names: &[String], terms: &[(usize, f64)]) {
    if terms.is_empty() {
        out.push_str(" 0");
    }
    for &(j, a) in terms {
        let _ = write!(out, " {:+} {}", a, names[j]);
    }
}

/// Plain-text dump of the problem: objective, one named constraint per
/// line, bounds and the binary list.
pub fn emit_text(problem: &MilpProblem) -> String {
    let lp = &problem.lp;
    let mut out = String::from("minimize\n obj:");
    let terms: Vec<(usize, f64)> = lp
        .objective
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(j, &c)| (j, c))
        .collect();
    fmt_terms(&mut out, &problem.names, &terms);
    out.push_str("\nsubject to\n");
    for (row, name) in lp.rows.iter().zip(&problem.row_names) {
        let _ = write!(out, " {name}:");
        fmt_terms(&mut out, &problem.names, &row.coeffs);
        let rel = match row.relation {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        };
        let _ = writeln!(out, " {rel} {}", row.rhs);
    }
    out.push_str("bounds\n");
    for (j, name) in problem.names.iter().enumerate() {
        let _ = writeln!(out, " {} <= {name} <= {}", lp.lower[j], lp.upper[j]);
    }
    out.push_str("binary\n");
    for &j in &problem.binaries {
        let _ = writeln!(out, " {}", problem.names[j]);
    }
    out.push_str("end\n");
    out
}
