//! TOML run configuration.

use chrono::NaiveDate;
use dipps_core::data::{
    demo_load, load_csv, profile_from_csv, resample_hourly, scenario_from_load, ColumnSpec, DataError,
    DemoSpec, PvShape, TariffShape, Unit,
};
use dipps_core::domain::{
    validate_scenario, EssParams, MicrogridParams, Objective, ProfileKind, Scenario, SellWindowMask,
    TimeGrid,
};
use dipps_core::horizon::{Case, ScenarioConfig, TerminalPolicy};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error(transparent)]
    Data(#[from] DataError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    DayEnd,
    EveryWindow,
}

impl From<PolicyArg> for TerminalPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::DayEnd => TerminalPolicy::DayEnd,
            PolicyArg::EveryWindow => TerminalPolicy::EveryWindow,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub n_p: Option<usize>,
    pub cases: Option<Vec<Case>>,
    pub terminal_policy: Option<PolicyArg>,
    pub workers: Option<usize>,
    pub gap: Option<f64>,
    pub node_limit: Option<usize>,
    /// Guard on 3·N_p for the enumeration path.
    pub max_enum_bits: Option<usize>,
    #[serde(default)]
    pub sweep: SweepRange,
    #[serde(default)]
    pub scenario: ScenarioSection,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub from: usize,
    pub to: usize,
}

impl Default for SweepRange {
    fn default() -> Self {
        Self { from: 1, to: 24 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    /// The bundled demo day.
    #[default]
    Demo,
    /// One-minute household CSV (`path`), resampled to hourly means of `day`.
    Household,
    /// Hourly `hour,kw` profiles; PV is synthesized when `pv` is absent.
    Profiles,
}

/// Where the day comes from. Storage, grid limit, PV shape and tariff
/// default to the bundled demo's.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    #[serde(default)]
    pub source: Source,
    pub path: Option<PathBuf>,
    /// `YYYY-MM-DD`.
    pub day: Option<String>,
    pub unit: Option<Unit>,
    pub load: Option<PathBuf>,
    pub pv: Option<PathBuf>,
    pub ess_capacity_kwh: Option<f64>,
    pub grid_limit_kw: Option<f64>,
    pub pv_sunrise: Option<f64>,
    pub pv_sunset: Option<f64>,
    pub tariff: Option<TariffShape>,
    pub bonus_weight: Option<f64>,
}

impl ScenarioSection {
    fn spec(&self) -> DemoSpec {
        let mut spec = DemoSpec::default();
        if let Some(c) = self.ess_capacity_kwh {
            spec.ess_capacity_kwh = c;
        }
        if let Some(g) = self.grid_limit_kw {
            spec.grid_limit_kw = g;
        }
        spec.pv = PvShape {
            sunrise: self.pv_sunrise.unwrap_or(spec.pv.sunrise),
            sunset: self.pv_sunset.unwrap_or(spec.pv.sunset),
        };
        if let Some(t) = &self.tariff {
            spec.tariff = t.clone();
        }
        spec
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn field(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.into(),
    }
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text, path)?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.n_p == Some(0) {
            return Err(field("n_p", "must be at least 1"));
        }
        if self.workers == Some(0) {
            return Err(field("workers", "must be at least 1"));
        }
        if let Some(g) = self.gap {
            if !(g >= 0.0 && g.is_finite()) {
                return Err(field("gap", "must be finite and >= 0"));
            }
        }
        if self.sweep.from == 0 || self.sweep.from > self.sweep.to {
            return Err(field("sweep", "need 1 <= from <= to"));
        }
        if matches!(&self.cases, Some(c) if c.is_empty()) {
            return Err(field("cases", "must list at least one case"));
        }
        let sc = &self.scenario;
        match sc.source {
            Source::Demo => {}
            Source::Household => {
                if sc.path.is_none() {
                    return Err(field("scenario.path", "required for source = \"household\""));
                }
                match &sc.day {
                    None => return Err(field("scenario.day", "required for source = \"household\"")),
                    Some(d) if d.parse::<NaiveDate>().is_err() => {
                        return Err(field("scenario.day", format!("expected YYYY-MM-DD, got {d:?}")))
                    }
                    Some(_) => {}
                }
            }
            Source::Profiles => {
                if sc.load.is_none() {
                    return Err(field("scenario.load", "required for source = \"profiles\""));
                }
            }
        }
        Ok(())
    }

    fn resolve_paths(&mut self, base: &Path) {
        let sc = &mut self.scenario;
        for p in [&mut sc.path, &mut sc.load, &mut sc.pv].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn scenario(&self) -> Result<Scenario, ConfigError> {
        let sc = &self.scenario;
        let load = match sc.source {
            Source::Demo => demo_load(),
            Source::Household => {
                let path = sc.path.as_ref().expect("checked");
                let day: NaiveDate = sc.day.as_deref().expect("checked").parse().expect("checked");
                let raw = load_csv(path, &ColumnSpec::household(), sc.unit.unwrap_or(Unit::Kw))?;
                resample_hourly(&raw, day)?
            }
            Source::Profiles => profile_from_csv(&read(sc.load.as_ref().expect("checked"))?, ProfileKind::Load)?,
        };
        let spec = sc.spec();
        let mut scenario = scenario_from_load(load, &spec)?;
        if let Some(pv_path) = &sc.pv {
            let pv = profile_from_csv(&read(pv_path)?, ProfileKind::Pv)?;
            let params = MicrogridParams {
                ess: EssParams::with_capacity(spec.ess_capacity_kwh),
                pv_capacity_kw: pv.peak(),
                grid_limit_kw: spec.grid_limit_kw,
            };
            scenario = validate_scenario(
                params,
                TimeGrid::hourly_day(),
                scenario.load().clone(),
                pv,
                scenario.tariff().clone(),
                scenario.mask().clone(),
            )
            .map_err(DataError::from)?;
        }
        if let Some(w) = sc.bonus_weight {
            let mut mask: SellWindowMask = scenario.mask().clone();
            mask.bonus_weight = w;
            scenario = scenario.with_mask(mask).map_err(DataError::from)?;
        }
        Ok(scenario)
    }

    pub fn scenario_config(&self) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = ScenarioConfig::new(self.scenario()?, self.n_p.unwrap_or(6), Objective::Static);
        if let Some(p) = self.terminal_policy {
            cfg.terminal_policy = p.into();
        }
        if let Some(w) = self.workers {
            cfg.milp.workers = w;
            cfg.enumerate.workers = w;
        }
        if let Some(g) = self.gap {
            cfg.milp.gap = g;
        }
        if let Some(n) = self.node_limit {
            cfg.milp.node_limit = n;
        }
        if let Some(b) = self.max_enum_bits {
            cfg.enumerate.max_bits = b;
        }
        Ok(cfg)
    }

    pub fn cases(&self) -> Vec<Case> {
        self.cases.clone().unwrap_or_else(|| Case::ALL.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Config, ConfigError> {
        Config::from_toml(text, Path::new("test.toml"))
    }

    #[test]
    fn empty_config_is_the_demo() {
        let c = parse("").unwrap();
        assert_eq!(c.scenario.source, Source::Demo);
        assert_eq!(c.cases(), Case::ALL.to_vec());
        let cfg = c.scenario_config().unwrap();
        assert_eq!(cfg.window_steps, 6);
        assert_eq!(cfg.terminal_policy, TerminalPolicy::EveryWindow);
    }

    #[test]
    fn overrides_reach_the_scenario() {
        let c = parse(
            "n_p = 8\nterminal_policy = \"day-end\"\ncases = [\"B\"]\n\
             [scenario]\nsource = \"demo\"\ngrid_limit_kw = 4.0\nbonus_weight = 0.5\n",
        )
        .unwrap();
        let cfg = c.scenario_config().unwrap();
        assert_eq!(cfg.window_steps, 8);
        assert_eq!(cfg.terminal_policy, TerminalPolicy::DayEnd);
        assert_eq!(cfg.scenario.params().grid_limit_kw, 4.0);
        assert_eq!(cfg.scenario.mask().bonus_weight, 0.5);
        assert_eq!(c.cases(), vec![Case::B]);
    }

    #[test]
    fn wrong_type_names_the_key() {
        let err = parse("n_p = \"six\"\n").unwrap_err().to_string();
        assert!(err.contains("n_p"), "{err}");
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse("np = 6\n").unwrap_err().to_string();
        assert!(err.contains("unknown field `np`"), "{err}");
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let err = parse("workers = 0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref field, .. } if field == "workers"));
        let err = parse("[scenario]\nsource = \"household\"\npath = \"x.csv\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Field { ref field, .. } if field == "scenario.day"));
    }
}
