//! Scenario data, dispatch schedules and validation.
//!
//! Every power is a non-negative flow whose direction is fixed by the flow's
//! identity. SoC is a fraction of `capacity_kwh`. Prices are currency/kWh and
//! the time step is `dt_hours`, so power × price × dt is currency.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

/// Hours in the scheduling day.
pub const DAY_HOURS: f64 = 24.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start_hour: usize,
    pub steps: usize,
    #[serde(default = "default_dt")]
    pub dt_hours: f64,
}

fn default_dt() -> f64 {
    1.0
}

impl TimeGrid {
    pub fn new(start_hour: usize, steps: usize) -> Self {
        Self {
            start_hour,
            steps,
            dt_hours: 1.0,
        }
    }

    /// 24 one-hour steps starting at midnight.
    pub fn hourly_day() -> Self {
        Self::new(0, 24)
    }

    /// Hour of day at which step `t` begins.
    pub fn hour_of(&self, t: usize) -> f64 {
        self.start_hour as f64 + t as f64 * self.dt_hours
    }

    fn check(&self, errors: &mut Vec<ValidationError>) {
        if self.steps == 0 {
            errors.push(ValidationError::invariant("grid.steps", "steps >= 1"));
        }
        if !(self.dt_hours > 0.0 && self.dt_hours.is_finite()) {
            errors.push(ValidationError::invariant("grid.dt_hours", "dt_hours > 0"));
        }
        if self.start_hour as f64 + self.steps as f64 * self.dt_hours > DAY_HOURS + 1e-9 {
            errors.push(ValidationError::invariant(
                "grid",
                "start_hour + steps * dt_hours <= 24",
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProfileKind {
    Load,
    Pv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile {
    pub kind: ProfileKind,
    pub values: Vec<f64>,
}

impl PowerProfile {
    pub fn new(kind: ProfileKind, values: Vec<f64>) -> Self {
        Self { kind, values }
    }

    pub fn zeros(kind: ProfileKind, steps: usize) -> Self {
        Self::new(kind, vec![0.0; steps])
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Energy over the profile, in kWh.
    pub fn energy(&self, dt_hours: f64) -> f64 {
        self.values.iter().sum::<f64>() * dt_hours
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TariffSchedule {
    pub buy_price: Vec<f64>,
    pub sell_price: Vec<f64>,
}

impl TariffSchedule {
    pub fn flat(steps: usize, buy: f64, sell: f64) -> Self {
        Self {
            buy_price: vec![buy; steps],
            sell_price: vec![sell; steps],
        }
    }
}

/// How the discharge efficiency enters the SoC update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EfficiencyConvention {
    /// `SoC' = SoC + (η_c·P_c − η_d·P_d)·dt/cap`; both efficiencies scale the power.
    #[default]
    Symmetric,
    /// `SoC' = SoC + (η_c·P_c − P_d/η_d)·dt/cap`.
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EssParams {
    pub capacity_kwh: f64,
    pub eta_c: f64,
    pub eta_d: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    pub soc_initial: f64,
    pub soc_final_target: f64,
    pub p_charge_max_kw: f64,
    pub p_discharge_max_kw: f64,
    #[serde(default)]
    pub convention: EfficiencyConvention,
}

impl EssParams {
    /// Defaults: η = 0.95 both ways, SoC in [0.2, 0.8] anchored at 0.5,
    /// charge limit 40 % and discharge limit 20 % of capacity per hour.
    pub fn with_capacity(capacity_kwh: f64) -> Self {
        Self {
            capacity_kwh,
            eta_c: 0.95,
            eta_d: 0.95,
            soc_min: 0.2,
            soc_max: 0.8,
            soc_initial: 0.5,
            soc_final_target: 0.5,
            p_charge_max_kw: 0.4 * capacity_kwh,
            p_discharge_max_kw: 0.2 * capacity_kwh,
            convention: EfficiencyConvention::Symmetric,
        }
    }

    /// SoC gained per kW of charging held for one step.
    pub fn charge_gain(&self, dt_hours: f64) -> f64 {
        self.eta_c * dt_hours / self.capacity_kwh
    }

    /// SoC lost per kW of discharging held for one step.
    pub fn discharge_loss(&self, dt_hours: f64) -> f64 {
        let factor = match self.convention {
            EfficiencyConvention::Symmetric => self.eta_d,
            EfficiencyConvention::Physical => 1.0 / self.eta_d,
        };
        factor * dt_hours / self.capacity_kwh
    }

    fn check(&self, errors: &mut Vec<ValidationError>) {
        let finite = [
            self.capacity_kwh,
            self.eta_c,
            self.eta_d,
            self.soc_min,
            self.soc_max,
            self.soc_initial,
            self.soc_final_target,
            self.p_charge_max_kw,
            self.p_discharge_max_kw,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            errors.push(ValidationError::invariant("ess", "all fields finite"));
            return;
        }
        if self.capacity_kwh <= 0.0 {
            errors.push(ValidationError::invariant("ess.capacity_kwh", "capacity_kwh > 0"));
        }
        for (name, eta) in [("ess.eta_c", self.eta_c), ("ess.eta_d", self.eta_d)] {
            if !(eta > 0.0 && eta <= 1.0) {
                errors.push(ValidationError::invariant(name, "0 < eta <= 1"));
            }
        }
        if self.soc_min < 0.0 {
            errors.push(ValidationError::invariant("ess.soc_min", "soc_min >= 0"));
        }
        if self.soc_max > 1.0 {
            errors.push(ValidationError::invariant("ess.soc_max", "soc_max <= 1"));
        }
        if self.soc_min >= self.soc_max {
            errors.push(ValidationError::invariant("ess.soc_min", "soc_min < soc_max"));
        }
        for (name, v) in [
            ("ess.soc_initial", self.soc_initial),
            ("ess.soc_final_target", self.soc_final_target),
        ] {
            if v < self.soc_min || v > self.soc_max {
                errors.push(ValidationError::invariant(name, "soc_min <= value <= soc_max"));
            }
        }
        if self.p_charge_max_kw < 0.0 {
            errors.push(ValidationError::invariant("ess.p_charge_max_kw", "p_charge_max_kw >= 0"));
        }
        if self.p_discharge_max_kw < 0.0 {
            errors.push(ValidationError::invariant(
                "ess.p_discharge_max_kw",
                "p_discharge_max_kw >= 0",
            ));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MicrogridParams {
    pub ess: EssParams,
    pub pv_capacity_kw: f64,
    /// Cap on each of total import and total export.
    pub grid_limit_kw: f64,
}

impl MicrogridParams {
    /// Grid limit defaulting to twice the larger of the load and PV peaks.
    pub fn default_grid_limit(load: &PowerProfile, pv: &PowerProfile) -> f64 {
        let peak = load.peak().max(pv.peak());
        if peak > 0.0 {
            2.0 * peak
        } else {
            1.0
        }
    }
}

/// The time-varying sell incentive: `mask[t] = 1` adds `bonus_weight` per
/// kWh exported at step `t` to the dynamic objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SellWindowMask {
    pub mask: Vec<bool>,
    pub bonus_weight: f64,
}

impl SellWindowMask {
    pub fn none(steps: usize) -> Self {
        Self {
            mask: vec![false; steps],
            bonus_weight: 0.0,
        }
    }

    pub fn active_steps(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    /// Default bonus for a tariff.
    ///
    /// The bonus has to outweigh any difference in sell price between hours
    /// so that masked hours win regardless of the tariff, and it has to stay
    /// below the cheapest buy price minus the dearest sell price so that
    /// buying energy only to resell it under the bonus never pays. When both
    /// hold for some value the midpoint is used; otherwise the bonus falls
    /// back to `1 + max sell price`.
    pub fn default_bonus(tariff: &TariffSchedule) -> f64 {
        let max_sell = tariff.sell_price.iter().copied().fold(f64::MIN, f64::max);
        let min_sell = tariff.sell_price.iter().copied().fold(f64::MAX, f64::min);
        let min_buy = tariff.buy_price.iter().copied().fold(f64::MAX, f64::min);
        if tariff.sell_price.is_empty() || tariff.buy_price.is_empty() {
            return 1.0;
        }
        let spread = max_sell - min_sell;
        let gap = min_buy - max_sell;
        if gap > spread {
            0.5 * (spread + gap)
        } else {
            1.0 + max_sell
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Objective {
    /// Tariff cost only.
    Static,
    /// Tariff cost minus the masked sell bonus.
    Dynamic,
}

/// The seven power flows, in a fixed order used for variable layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Flow {
    GridToLoad,
    GridToEss,
    EssToLoad,
    EssToGrid,
    PvToGrid,
    PvToEss,
    PvToLoad,
}

impl Flow {
    pub const ALL: [Flow; 7] = [
        Flow::GridToLoad,
        Flow::GridToEss,
        Flow::EssToLoad,
        Flow::EssToGrid,
        Flow::PvToGrid,
        Flow::PvToEss,
        Flow::PvToLoad,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Flow::GridToLoad => "p_g_l",
            Flow::GridToEss => "p_g_es",
            Flow::EssToLoad => "p_es_l",
            Flow::EssToGrid => "p_es_g",
            Flow::PvToGrid => "p_pv_g",
            Flow::PvToEss => "p_pv_es",
            Flow::PvToLoad => "p_pv_l",
        }
    }
}

/// Mode binaries of one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Modes {
    /// PV (1) or grid (0) charges the storage.
    pub b_v: bool,
    /// Buying (1) or selling (0).
    pub b_g: bool,
    /// Charging (1) or discharging (0).
    pub b_c: bool,
}

impl Modes {
    /// Modes from the 3-bit code `b_v b_g b_c` (b_v most significant).
    pub fn from_bits(bits: u32) -> Self {
        Self {
            b_v: bits & 0b100 != 0,
            b_g: bits & 0b010 != 0,
            b_c: bits & 0b001 != 0,
        }
    }

    /// Whether a flow can be non-zero: the product of mode literals that
    /// multiplies it in the balances, exchanges and SoC update.
    pub fn gate(self, flow: Flow) -> bool {
        let Modes { b_v, b_g, b_c } = self;
        match flow {
            Flow::GridToLoad => b_g,
            Flow::GridToEss => b_g && !b_v && b_c,
            Flow::EssToLoad => !b_c,
            Flow::EssToGrid => !b_g && !b_c,
            Flow::PvToGrid => !b_g,
            Flow::PvToEss => b_v && b_c,
            Flow::PvToLoad => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DispatchStep {
    pub p_g_l: f64,
    pub p_g_es: f64,
    pub p_es_l: f64,
    pub p_es_g: f64,
    pub p_pv_g: f64,
    pub p_pv_es: f64,
    pub p_pv_l: f64,
    pub b_v: bool,
    pub b_g: bool,
    pub b_c: bool,
    pub soc_next: f64,
}

impl DispatchStep {
    pub fn flow(&self, flow: Flow) -> f64 {
        match flow {
            Flow::GridToLoad => self.p_g_l,
            Flow::GridToEss => self.p_g_es,
            Flow::EssToLoad => self.p_es_l,
            Flow::EssToGrid => self.p_es_g,
            Flow::PvToGrid => self.p_pv_g,
            Flow::PvToEss => self.p_pv_es,
            Flow::PvToLoad => self.p_pv_l,
        }
    }

    pub fn set_flow(&mut self, flow: Flow, value: f64) {
        let slot = match flow {
            Flow::GridToLoad => &mut self.p_g_l,
            Flow::GridToEss => &mut self.p_g_es,
            Flow::EssToLoad => &mut self.p_es_l,
            Flow::EssToGrid => &mut self.p_es_g,
            Flow::PvToGrid => &mut self.p_pv_g,
            Flow::PvToEss => &mut self.p_pv_es,
            Flow::PvToLoad => &mut self.p_pv_l,
        };
        *slot = value;
    }

    pub fn modes(&self) -> Modes {
        Modes {
            b_v: self.b_v,
            b_g: self.b_g,
            b_c: self.b_c,
        }
    }

    pub fn set_modes(&mut self, modes: Modes) {
        self.b_v = modes.b_v;
        self.b_g = modes.b_g;
        self.b_c = modes.b_c;
    }

    /// Effective import `P^G_B·b_G`.
    pub fn import(&self) -> f64 {
        let m = self.modes();
        let gated = |f: Flow| if m.gate(f) { self.flow(f) } else { 0.0 };
        gated(Flow::GridToEss) + gated(Flow::GridToLoad)
    }

    /// Effective export `P^S_G·(1 − b_G)`.
    pub fn export(&self) -> f64 {
        let m = self.modes();
        let gated = |f: Flow| if m.gate(f) { self.flow(f) } else { 0.0 };
        gated(Flow::EssToGrid) + gated(Flow::PvToGrid)
    }

    /// Effective storage discharge sold to the grid.
    pub fn ess_export(&self) -> f64 {
        if self.modes().gate(Flow::EssToGrid) {
            self.p_es_g
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DispatchSchedule {
    pub steps: Vec<DispatchStep>,
    /// SoC at every step boundary; `steps.len() + 1` entries.
    pub soc_trajectory: Vec<f64>,
}

impl DispatchSchedule {
    /// All-zero flows holding SoC constant.
    pub fn idle(steps: usize, soc: f64) -> Self {
        Self {
            steps: vec![
                DispatchStep {
                    soc_next: soc,
                    ..Default::default()
                };
                steps
            ],
            soc_trajectory: vec![soc; steps + 1],
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub enum ValidationError {
    #[error("length mismatch in {series}: expected {expected}, found {found}")]
    LengthMismatch {
        series: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invariant violated for {field}: {bound}")]
    InvariantViolation { field: String, bound: String },
}

impl ValidationError {
    fn invariant(field: &str, bound: &str) -> Self {
        Self::InvariantViolation {
            field: field.to_string(),
            bound: bound.to_string(),
        }
    }
}

/// A list of validation failures.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, e) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// A validated, immutable day scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    params: MicrogridParams,
    grid: TimeGrid,
    load: PowerProfile,
    pv: PowerProfile,
    tariff: TariffSchedule,
    mask: SellWindowMask,
}

pub fn validate_scenario(
    params: MicrogridParams,
    grid: TimeGrid,
    load: PowerProfile,
    pv: PowerProfile,
    tariff: TariffSchedule,
    mask: SellWindowMask,
) -> Result<Scenario, ValidationErrors> {
    let mut errors = Vec::new();
    grid.check(&mut errors);
    params.ess.check(&mut errors);
    if !(params.pv_capacity_kw >= 0.0 && params.pv_capacity_kw.is_finite()) {
        errors.push(ValidationError::invariant("pv_capacity_kw", "pv_capacity_kw >= 0"));
    }
    if !(params.grid_limit_kw > 0.0 && params.grid_limit_kw.is_finite()) {
        errors.push(ValidationError::invariant("grid_limit_kw", "grid_limit_kw > 0"));
    }

    let n = grid.steps;
    let mut length = |series: &'static str, found: usize| {
        if found != n {
            errors.push(ValidationError::LengthMismatch {
                series,
                expected: n,
                found,
            });
        }
    };
    length("load", load.values.len());
    length("pv", pv.values.len());
    length("buy_price", tariff.buy_price.len());
    length("sell_price", tariff.sell_price.len());
    length("mask", mask.mask.len());

    if load.kind != ProfileKind::Load {
        errors.push(ValidationError::invariant("load.kind", "kind = Load"));
    }
    if pv.kind != ProfileKind::Pv {
        errors.push(ValidationError::invariant("pv.kind", "kind = Pv"));
    }
    let series: [(&str, &[f64]); 4] = [
        ("load", &load.values),
        ("pv", &pv.values),
        ("buy_price", &tariff.buy_price),
        ("sell_price", &tariff.sell_price),
    ];
    for (name, values) in series {
        if let Some(t) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            errors.push(ValidationError::InvariantViolation {
                field: format!("{name}[{t}]"),
                bound: "finite and >= 0".into(),
            });
        }
    }
    if !(mask.bonus_weight >= 0.0 && mask.bonus_weight.is_finite()) {
        errors.push(ValidationError::invariant("mask.bonus_weight", "bonus_weight >= 0"));
    }

    if errors.is_empty() {
        Ok(Scenario {
            params,
            grid,
            load,
            pv,
            tariff,
            mask,
        })
    } else {
        Err(ValidationErrors(errors))
    }
}

/// Terminal or intermediate condition on the SoC at a step boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SocAnchor {
    /// Boundary index inside the window, `1..=steps`.
    pub boundary: usize,
    pub kind: AnchorKind,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AnchorKind {
    AtLeast,
    Exactly,
}

/// A window request: `steps` steps starting at day step `start`, from a
/// known SoC. Steps past the end of the day wrap onto the same day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub start: usize,
    pub steps: usize,
    pub soc_start: f64,
    pub anchors: Vec<SocAnchor>,
}

/// Everything one window optimization needs, materialized per step.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowData {
    pub start: usize,
    pub dt_hours: f64,
    pub load: Vec<f64>,
    pub pv: Vec<f64>,
    pub buy: Vec<f64>,
    pub sell: Vec<f64>,
    pub mask: Vec<bool>,
    pub bonus_weight: f64,
    pub ess: EssParams,
    pub grid_limit_kw: f64,
    pub soc_start: f64,
    pub anchors: Vec<SocAnchor>,
}

impl WindowData {
    pub fn steps(&self) -> usize {
        self.load.len()
    }

    /// Upper bound of each flow at step `t`, indexed by [`Flow::index`].
    ///
    /// Each cap is implied by a balance or a power limit whenever the flow
    /// is gated on, so it never cuts off a feasible dispatch.
    pub fn flow_caps(&self, t: usize) -> [f64; 7] {
        let (load, pv, grid) = (self.load[t], self.pv[t], self.grid_limit_kw);
        let (pc, pd) = (self.ess.p_charge_max_kw, self.ess.p_discharge_max_kw);
        [
            grid.min(load),
            grid.min(pc),
            pd.min(load),
            pd.min(grid),
            pv.min(grid),
            pv.min(pc),
            pv.min(load),
        ]
    }

    /// Objective coefficient per kW of import at step `t`.
    pub fn import_cost(&self, t: usize) -> f64 {
        self.buy[t] * self.dt_hours
    }

    /// Objective coefficient per kW of export at step `t` (negative).
    pub fn export_cost(&self, t: usize, objective: Objective) -> f64 {
        let bonus = match objective {
            Objective::Dynamic if self.mask[t] => self.bonus_weight,
            _ => 0.0,
        };
        -(self.sell[t] + bonus) * self.dt_hours
    }

    /// SoC bounds at boundary `k` (`1..=steps`) after applying anchors.
    pub fn soc_bounds(&self, k: usize) -> (f64, f64) {
        let (mut lo, mut hi) = (self.ess.soc_min, self.ess.soc_max);
        for a in self.anchors.iter().filter(|a| a.boundary == k) {
            match a.kind {
                AnchorKind::AtLeast => lo = lo.max(a.value),
                AnchorKind::Exactly => {
                    lo = a.value;
                    hi = a.value;
                }
            }
        }
        (lo, hi)
    }
}

impl Scenario {
    pub fn params(&self) -> &MicrogridParams {
        &self.params
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn load(&self) -> &PowerProfile {
        &self.load
    }

    pub fn pv(&self) -> &PowerProfile {
        &self.pv
    }

    pub fn tariff(&self) -> &TariffSchedule {
        &self.tariff
    }

    pub fn mask(&self) -> &SellWindowMask {
        &self.mask
    }

    /// Same data with a different sell mask.
    pub fn with_mask(&self, mask: SellWindowMask) -> Result<Scenario, ValidationErrors> {
        validate_scenario(
            self.params,
            self.grid,
            self.load.clone(),
            self.pv.clone(),
            self.tariff.clone(),
            mask,
        )
    }

    /// Same data with different storage or grid parameters.
    pub fn with_params(&self, params: MicrogridParams) -> Result<Scenario, ValidationErrors> {
        validate_scenario(
            params,
            self.grid,
            self.load.clone(),
            self.pv.clone(),
            self.tariff.clone(),
            self.mask.clone(),
        )
    }

    pub fn window(&self, spec: &WindowSpec) -> WindowData {
        let n = self.grid.steps;
        let idx = |t: usize| (spec.start + t) % n;
        let pick = |v: &[f64]| (0..spec.steps).map(|t| v[idx(t)]).collect::<Vec<_>>();
        WindowData {
            start: spec.start,
            dt_hours: self.grid.dt_hours,
            load: pick(&self.load.values),
            pv: pick(&self.pv.values),
            buy: pick(&self.tariff.buy_price),
            sell: pick(&self.tariff.sell_price),
            mask: (0..spec.steps).map(|t| self.mask.mask[idx(t)]).collect(),
            bonus_weight: self.mask.bonus_weight,
            ess: self.params.ess,
            grid_limit_kw: self.params.grid_limit_kw,
            soc_start: spec.soc_start,
            anchors: spec.anchors.clone(),
        }
    }

    /// The whole scenario as one window, starting from the initial SoC and
    /// ending exactly at the final target.
    pub fn full_horizon(&self) -> WindowData {
        let ess = &self.params.ess;
        self.window(&WindowSpec {
            start: 0,
            steps: self.grid.steps,
            soc_start: ess.soc_initial,
            anchors: vec![SocAnchor {
                boundary: self.grid.steps,
                kind: AnchorKind::Exactly,
                value: ess.soc_final_target,
            }],
        })
    }
}
