use serde::{Deserialize, Serialize};

use super::{DispatchDecision, StorageEnvelope};
use crate::error::{Error, Result};
use crate::timeseries::{centered_moving_average, minute_of_day, TimeSeries};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InjectionParams {
    /// Taken from the PV plant by the engine.
    #[serde(skip)]
    pub installed_kwp: f64,
    /// Unpenalised deviation band as a fraction of installed power.
    pub tolerance_fraction: f64,
    /// Peak window as minutes of day, `[start, end)`.
    pub peak_start_minute: u32,
    pub peak_end_minute: u32,
    /// Guaranteed injection during the window as a fraction of installed power.
    pub peak_min_fraction: f64,
    pub smoothing_minutes: u32,
    /// Announced ramp limit per minute as a fraction of installed power.
    pub ramp_fraction_per_minute: f64,
    /// Extra energy kept back for the peak window, relative to its need.
    pub reserve_margin: f64,
}

impl Default for InjectionParams {
    fn default() -> Self {
        Self {
            installed_kwp: 1000.0,
            tolerance_fraction: 0.05,
            peak_start_minute: 19 * 60,
            peak_end_minute: 21 * 60,
            peak_min_fraction: 0.2,
            smoothing_minutes: 20,
            ramp_fraction_per_minute: 0.01,
            reserve_margin: 0.1,
        }
    }
}

impl InjectionParams {
    pub fn validate(&self) -> Result<()> {
        let key = "dispatch.pv_injection";
        if !(self.installed_kwp > 0.0) {
            return Err(Error::param(
                format!("{key}.installed_kwp"),
                "must be positive",
            ));
        }
        if !(self.tolerance_fraction >= 0.0) || !(self.peak_min_fraction >= 0.0) {
            return Err(Error::param(
                format!("{key}.tolerance_fraction"),
                "fractions must be non-negative",
            ));
        }
        if !(self.ramp_fraction_per_minute > 0.0) {
            return Err(Error::param(
                format!("{key}.ramp_fraction_per_minute"),
                "must be positive",
            ));
        }
        if self.peak_start_minute >= self.peak_end_minute || self.peak_end_minute > 1440 {
            return Err(Error::param(
                format!("{key}.peak_start_minute"),
                "window must be inside one day",
            ));
        }
        Ok(())
    }

    pub fn band_kw(&self) -> f64 {
        self.tolerance_fraction * self.installed_kwp
    }

    pub fn peak_floor_kw(&self) -> f64 {
        self.peak_min_fraction * self.installed_kwp
    }

    pub fn ramp_kw_per_step(&self, step_minutes: u32) -> f64 {
        self.ramp_fraction_per_minute * self.installed_kwp * step_minutes as f64
    }

    pub fn in_peak(&self, minute: u32) -> bool {
        (self.peak_start_minute..self.peak_end_minute).contains(&minute)
    }
}

/// Battery figures the announcement is built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnnounceModel {
    pub capacity_kwh: f64,
    pub soc: f64,
    pub soc_min: f64,
    pub soc_max: f64,
    /// AC to stored energy.
    pub eta_charge: f64,
    /// Stored energy to AC.
    pub eta_discharge: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnouncedProfile {
    pub profile: TimeSeries,
    /// Energy reserved for the peak window, taken from the morning.
    pub reserve_kwh: f64,
    /// The battery cannot hold what the window needs.
    pub warning: bool,
}

/// Builds the day-ahead injection commitment from a PV forecast.
///
/// The forecast is smoothed, ramp limited, trimmed before the peak window
/// by the energy the battery still has to collect, and lifted to the
/// guaranteed floor inside the window.
pub fn pv_injection_announce(
    pv_forecast: &TimeSeries,
    model: &AnnounceModel,
    params: &InjectionParams,
) -> Result<AnnouncedProfile> {
    params.validate()?;
    let step = pv_forecast.step_minutes();
    let dt = pv_forecast.step_hours();
    let mut window = (params.smoothing_minutes / step).max(1) as usize;
    if window.is_multiple_of(2) {
        window += 1;
    }
    let ma = centered_moving_average(pv_forecast.values(), window);
    let r = params.ramp_kw_per_step(step);
    let mut sm = Vec::with_capacity(ma.len());
    for (i, &m) in ma.iter().enumerate() {
        let v = if i == 0 {
            m
        } else {
            m.clamp(sm[i - 1] - r, sm[i - 1] + r)
        };
        sm.push(v.max(0.0));
    }

    let peak: Vec<bool> = (0..sm.len())
        .map(|i| params.in_peak(minute_of_day(pv_forecast.time_at(i))))
        .collect();
    let floor = params.peak_floor_kw();
    let pv = pv_forecast.values();
    let need_ac: f64 = (0..sm.len())
        .filter(|&i| peak[i])
        .map(|i| (sm[i].max(floor) - pv[i]).max(0.0) * dt)
        .sum();
    let need_cell = need_ac / model.eta_discharge;
    let usable = (model.soc_max - model.soc_min) * model.capacity_kwh;
    let have = ((model.soc - model.soc_min) * model.capacity_kwh).max(0.0);
    let reserve = (need_cell * (1.0 + params.reserve_margin) - have).max(0.0);

    let first_peak = peak.iter().position(|&p| p).unwrap_or(sm.len());
    let pre_energy: f64 = sm[..first_peak].iter().sum::<f64>() * dt;
    let k = if pre_energy > 0.0 {
        (reserve / (model.eta_charge * pre_energy)).min(1.0)
    } else {
        0.0
    };
    let out: Vec<f64> = sm
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if peak[i] {
                v.max(floor)
            } else if i < first_peak {
                v * (1.0 - k)
            } else {
                v
            }
        })
        .collect();
    let warning =
        need_cell > usable || (reserve > 0.0 && k >= 1.0) || (reserve > 0.0 && pre_energy == 0.0);
    Ok(AnnouncedProfile {
        profile: TimeSeries::new(pv_forecast.start(), step, out)?,
        reserve_kwh: reserve,
        warning,
    })
}

/// Checks the announcement rules: ramp limit between consecutive steps
/// (except across the window edges) and the floor inside the window.
pub fn validate_profile(profile: &TimeSeries, params: &InjectionParams) -> Result<()> {
    let r = params.ramp_kw_per_step(profile.step_minutes()) * (1.0 + 1e-9) + 1e-9;
    let v = profile.values();
    let peak = |i: usize| params.in_peak(minute_of_day(profile.time_at(i)));
    for i in 0..v.len() {
        if peak(i) && v[i] < params.peak_floor_kw() - 1e-9 {
            return Err(Error::InvalidSeries(format!(
                "announced {:.3} kW at step {i} is below the peak floor",
                v[i]
            )));
        }
        if i > 0 && peak(i) == peak(i - 1) && (v[i] - v[i - 1]).abs() > r {
            return Err(Error::InvalidSeries(format!(
                "ramp limit exceeded at step {i}"
            )));
        }
    }
    Ok(())
}

/// Deviation beyond the tolerance band, in kW.
pub fn penalized_deviation_kw(
    committed_kw: f64,
    injected_kw: f64,
    params: &InjectionParams,
) -> f64 {
    ((injected_kw - committed_kw).abs() - params.band_kw()).max(0.0)
}

/// Real-time tracking of the commitment. Surplus PV charges the battery,
/// then goes out within the band, then is curtailed. Deficits are
/// discharged; whatever remains shows up as under-injection.
pub fn pv_injection_step(
    pv_kw: f64,
    committed_kw: f64,
    env: &StorageEnvelope,
    params: &InjectionParams,
) -> DispatchDecision {
    let mut d = DispatchDecision::default();
    let b = pv_kw - committed_kw;
    if b >= 0.0 {
        let charge = b.min(env.max_charge_kw.max(0.0));
        let rest = b - charge;
        let extra = rest.min(params.band_kw());
        d.p_batt = charge;
        d.p_injected = committed_kw + extra;
        d.pv_curtailed = rest - extra;
    } else {
        let dis = (-b).min(env.max_discharge_kw.max(0.0));
        d.p_batt = -dis;
        d.p_injected = pv_kw + dis;
    }
    d
}
