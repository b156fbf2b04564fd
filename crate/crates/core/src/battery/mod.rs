//! Battery storage: state, specification, the two step models, efficiency
//! lookup and capacity fade with replacement.

mod ageing;
mod ec;
mod efficiency;
mod ep;

pub use ageing::{age_update, AgeingParams, REPLACEMENT_SOH};
pub use ec::{ec_max_discharge_kw, ec_step, ec_terminal_voltage, EcParams};
pub use efficiency::{efficiency_lookup, EfficiencyTable};
pub use ep::ep_step;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_MODULE_KWH: f64 = 6.5;
pub const DEFAULT_SOC_MIN: f64 = 0.05;
pub const DEFAULT_SOC_MAX: f64 = 0.95;

/// Evolving storage state. `soc` is a fraction of the current capacity
/// (`rated_kwh * soh`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatteryState {
    pub soc: f64,
    pub soh: f64,
    pub rated_kwh: f64,
    /// Cumulative |energy| moved at the cell boundary.
    pub throughput_kwh: f64,
    pub replacements: u32,
    pub age_years: f64,
}

impl BatteryState {
    pub fn new(rated_kwh: f64, soc: f64) -> Self {
        Self {
            soc,
            soh: 1.0,
            rated_kwh,
            throughput_kwh: 0.0,
            replacements: 0,
            age_years: 0.0,
        }
    }

    pub fn capacity_kwh(&self) -> f64 {
        self.rated_kwh * self.soh
    }

    /// Equivalent full cycles so far.
    pub fn efc(&self) -> f64 {
        self.throughput_kwh / (2.0 * self.rated_kwh)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum EfficiencyMode {
    /// Fixed `eta_charge` / `eta_discharge`.
    #[default]
    Constant,
    /// Interpolated from the (soc, c-rate, temperature) table.
    Table,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BatteryModelKind {
    /// Energy/power book-keeping with prescribed efficiencies.
    #[default]
    Ep,
    /// OCV source plus series resistance.
    Ec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatterySpec {
    pub module_kwh: f64,
    pub n_modules: u32,
    pub eta_charge: f64,
    pub eta_discharge: f64,
    pub efficiency_mode: EfficiencyMode,
    pub efficiency_table: Option<EfficiencyTable>,
    pub ec_params: Option<EcParams>,
    pub ageing: AgeingParams,
    pub soc_min: f64,
    pub soc_max: f64,
    /// Power limit as a multiple of current capacity per hour.
    pub max_c_rate: Option<f64>,
    pub temperature_c: f64,
}

impl Default for BatterySpec {
    fn default() -> Self {
        Self {
            module_kwh: DEFAULT_MODULE_KWH,
            n_modules: 1,
            eta_charge: 0.95,
            eta_discharge: 0.95,
            efficiency_mode: EfficiencyMode::Constant,
            efficiency_table: None,
            ec_params: None,
            ageing: AgeingParams::default(),
            soc_min: DEFAULT_SOC_MIN,
            soc_max: DEFAULT_SOC_MAX,
            max_c_rate: None,
            temperature_c: 25.0,
        }
    }
}

impl BatterySpec {
    pub fn rated_kwh(&self) -> f64 {
        self.module_kwh * f64::from(self.n_modules)
    }

    /// Whole number of modules closest to `size_kwh` (at least one).
    pub fn modules_for(&self, size_kwh: f64) -> Result<u32> {
        if !(size_kwh > 0.0 && size_kwh.is_finite()) {
            return Err(Error::param(
                "battery.size_kwh",
                format!("{size_kwh} must be positive"),
            ));
        }
        Ok(((size_kwh / self.module_kwh).round() as u32).max(1))
    }

    pub fn with_size_kwh(&self, size_kwh: f64) -> Result<Self> {
        let mut s = self.clone();
        s.n_modules = self.modules_for(size_kwh)?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.module_kwh > 0.0 && self.module_kwh.is_finite()) {
            return Err(Error::param("battery.module_kwh", "must be positive"));
        }
        if self.n_modules == 0 {
            return Err(Error::param(
                "battery.size_kwh",
                "at least one module is required",
            ));
        }
        for (k, v) in [
            ("battery.eta_charge", self.eta_charge),
            ("battery.eta_discharge", self.eta_discharge),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::param(k, "must be in (0, 1]"));
            }
        }
        if !(0.0 <= self.soc_min && self.soc_min < self.soc_max && self.soc_max <= 1.0) {
            return Err(Error::param(
                "battery.soc_min",
                "need 0 <= soc_min < soc_max <= 1",
            ));
        }
        if let Some(c) = self.max_c_rate {
            if !(c > 0.0) {
                return Err(Error::param("battery.max_c_rate", "must be positive"));
            }
        }
        if self.efficiency_mode == EfficiencyMode::Table && self.efficiency_table.is_none() {
            return Err(Error::param(
                "battery.efficiency_table",
                "table efficiency selected but no table given",
            ));
        }
        self.ageing.validate()?;
        Ok(())
    }

    fn c_rate_limit_kw(&self, state: &BatteryState) -> f64 {
        self.max_c_rate
            .map(|c| c * state.capacity_kwh())
            .unwrap_or(f64::INFINITY)
    }
}

/// Outcome of one battery step. Powers are at the battery terminals,
/// positive when charging.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryStep {
    pub state: BatteryState,
    pub power_kw: f64,
    /// Change of stored energy at the cell boundary.
    pub stored_delta_kwh: f64,
    pub loss_kwh: f64,
    /// One-way efficiency applied during the step (1.0 when idle).
    pub efficiency: f64,
}

impl BatteryStep {
    pub(crate) fn idle(state: &BatteryState) -> Self {
        Self {
            state: *state,
            power_kw: 0.0,
            stored_delta_kwh: 0.0,
            loss_kwh: 0.0,
            efficiency: 1.0,
        }
    }
}

/// Rated capacity needed to keep `useful_kwh` available at end of life,
/// given the usable depth of discharge and the fade tolerated before
/// replacement.
pub fn min_rated_capacity(useful_kwh: f64, dod: f64, max_fade: f64) -> Result<f64> {
    if !(dod > 0.0 && dod <= 1.0) {
        return Err(Error::param("dod", "must be in (0, 1]"));
    }
    if !(0.0..1.0).contains(&max_fade) {
        return Err(Error::param("max_fade", "must be in [0, 1)"));
    }
    Ok(useful_kwh / (dod * (1.0 - max_fade)))
}

/// Either model behind one interface.
pub fn battery_step(
    kind: BatteryModelKind,
    state: &BatteryState,
    spec: &BatterySpec,
    p_request_kw: f64,
    dt_h: f64,
) -> BatteryStep {
    match kind {
        BatteryModelKind::Ep => ep_step(state, spec, p_request_kw, dt_h),
        BatteryModelKind::Ec => ec_step(state, spec, p_request_kw, dt_h),
    }
}

/// Largest charge and discharge powers (terminal side, both ≥ 0) the model
/// can take this step.
pub fn power_limits(
    kind: BatteryModelKind,
    state: &BatteryState,
    spec: &BatterySpec,
    dt_h: f64,
) -> (f64, f64) {
    match kind {
        BatteryModelKind::Ep => ep::limits(state, spec, dt_h),
        BatteryModelKind::Ec => ec::limits(state, spec, dt_h),
    }
}
