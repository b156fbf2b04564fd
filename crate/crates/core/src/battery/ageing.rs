use serde::{Deserialize, Serialize};

use super::{BatterySpec, BatteryState};
use crate::error::{Error, Result};

/// State of health at which the pack is replaced.
pub const REPLACEMENT_SOH: f64 = 0.7;

/// Additive linear capacity fade: calendar plus cycling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgeingParams {
    pub enabled: bool,
    pub calendar_fade_per_year: f64,
    pub cycle_fade_per_efc: f64,
}

impl Default for AgeingParams {
    fn default() -> Self {
        Self {
            enabled: true,
            calendar_fade_per_year: 0.015,
            cycle_fade_per_efc: 6.0e-5,
        }
    }
}

impl AgeingParams {
    pub fn disabled() -> Self {
        Self {
            enabled: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.calendar_fade_per_year >= 0.0 && self.cycle_fade_per_efc >= 0.0) {
            return Err(Error::param(
                "battery.ageing",
                "fade rates must be non-negative",
            ));
        }
        Ok(())
    }
}

/// Applies fade for `dt_years` and `efc_increment` equivalent full cycles.
/// Returns the new state and whether a replacement happened.
pub fn age_update(
    state: &BatteryState,
    spec: &BatterySpec,
    dt_years: f64,
    efc_increment: f64,
) -> (BatteryState, bool) {
    let mut next = *state;
    next.age_years += dt_years;
    if !spec.ageing.enabled {
        return (next, false);
    }
    let fade = spec.ageing.calendar_fade_per_year * dt_years
        + spec.ageing.cycle_fade_per_efc * efc_increment;
    if fade == 0.0 {
        return (next, false);
    }
    next.soh -= fade;
    if next.soh <= REPLACEMENT_SOH {
        next.soh = 1.0;
        next.replacements += 1;
        return (next, true);
    }
    (next, false)
}
