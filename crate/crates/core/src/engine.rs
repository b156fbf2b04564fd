//! The time-stepping loop: dispatch, battery, ageing and per-year
//! aggregation over the project lifetime.

use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::battery::{
    age_update, battery_step, power_limits, BatteryModelKind, BatterySpec, BatteryState,
    REPLACEMENT_SOH,
};
use crate::components::{converter_clip, Converter, FlowDirection, Genset, PvPlant};
use crate::dispatch::{
    microgrid_basic_step, microgrid_optimized_day, microgrid_optimized_step,
    penalized_deviation_kw, pv_injection_announce, pv_injection_step, AnnounceModel, BasicParams,
    DayPlan, DispatchDecision, GensetStatus, InjectionParams, OptimizedParams, PlanModel,
    StorageEnvelope, Strategy,
};
use crate::economics::EconParams;
use crate::error::{Error, Result};
use crate::timeseries::{blend_forecast, minute_of_day, resample, TimeSeries, MINUTES_PER_DAY};

pub const DAYS_PER_YEAR: usize = 365;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Application {
    /// PV plant with storage selling a day-ahead announced profile.
    PvInjection,
    /// Off-grid PV, genset and storage serving a local load.
    Microgrid,
}

impl Application {
    pub fn name(self) -> &'static str {
        match self {
            Application::PvInjection => "pv_injection",
            Application::Microgrid => "microgrid",
        }
    }
}

/// One year (or more) of aligned inputs. PV series are per kWp installed.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSeries {
    pub load: TimeSeries,
    pub pv_producible: TimeSeries,
    pub load_forecast: TimeSeries,
    pub pv_forecast: TimeSeries,
}

impl InputSeries {
    pub fn new(
        load: TimeSeries,
        pv_producible: TimeSeries,
        load_forecast: TimeSeries,
        pv_forecast: TimeSeries,
    ) -> Result<Self> {
        for (name, s) in [
            ("load forecast", &load_forecast),
            ("PV", &pv_producible),
            ("PV forecast", &pv_forecast),
        ] {
            if !s.is_aligned_with(&load) {
                return Err(Error::Misaligned(format!(
                    "{name} series does not match the load series"
                )));
            }
        }
        load.ensure_non_negative("load")?;
        pv_producible.ensure_non_negative("PV producible")?;
        Ok(Self {
            load,
            pv_producible,
            load_forecast,
            pv_forecast,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DispatchConfig {
    pub strategy: Strategy,
    pub basic: BasicParams,
    pub optimized: OptimizedParams,
    pub injection: InjectionParams,
}

/// Everything a simulation needs.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    pub application: Application,
    pub inputs: Arc<InputSeries>,
    /// Weight of the actual series in the forecasts the controller sees.
    pub forecast_blend: f64,
    pub step_minutes: u32,
    pub pv: PvPlant,
    pub genset: Option<Genset>,
    pub converter: Converter,
    pub battery: BatterySpec,
    pub battery_model: BatteryModelKind,
    pub initial_soc: f64,
    pub dispatch: DispatchConfig,
    pub economics: EconParams,
    /// Simulate one year and extrapolate it over the lifetime.
    pub extrapolate: bool,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        self.battery.validate()?;
        if let Some(g) = &self.genset {
            g.validate()?;
        }
        self.economics.validate()?;
        if self.step_minutes == 0 || !MINUTES_PER_DAY.is_multiple_of(self.step_minutes) {
            return Err(Error::param(
                "simulation.step_minutes",
                "must divide one day",
            ));
        }
        if !(0.0..=1.0).contains(&self.forecast_blend) {
            return Err(Error::param("forecast.blend", "must be in [0, 1]"));
        }
        if !(self.battery.soc_min..=self.battery.soc_max).contains(&self.initial_soc) {
            return Err(Error::param(
                "battery.initial_soc",
                "must lie inside [soc_min, soc_max]",
            ));
        }
        if self.battery_model == BatteryModelKind::Ec && self.battery.ec_params.is_none() {
            return Err(Error::param(
                "battery.ec",
                "EC model selected without EC parameters",
            ));
        }
        match (self.application, self.dispatch.strategy) {
            (Application::PvInjection, Strategy::PvInjection) => InjectionParams {
                installed_kwp: self.pv.installed_kwp,
                ..self.dispatch.injection
            }
            .validate()?,
            (Application::Microgrid, Strategy::Basic | Strategy::Optimized) => {
                if self.genset.is_none() {
                    return Err(Error::param(
                        "components.genset",
                        "a microgrid needs a genset",
                    ));
                }
                if self.dispatch.strategy == Strategy::Optimized {
                    self.dispatch.optimized.validate()?;
                }
            }
            (app, s) => {
                return Err(Error::param(
                    "dispatch.strategy",
                    format!(
                        "`{}` does not apply to the {} application",
                        s.name(),
                        app.name()
                    ),
                ))
            }
        }
        Ok(())
    }

    pub fn with_size_kwh(&self, size_kwh: f64) -> Result<Self> {
        let mut c = self.clone();
        c.battery = self.battery.with_size_kwh(size_kwh)?;
        Ok(c)
    }

    pub fn lifetime_years(&self) -> u32 {
        self.economics.lifetime_years
    }
}

/// Inputs at the simulation step with the forecast blend applied.
#[derive(Debug, Clone)]
pub struct PreparedInputs {
    pub load: TimeSeries,
    pub pv_producible: TimeSeries,
    pub load_forecast: TimeSeries,
    pub pv_forecast: TimeSeries,
}

impl PreparedInputs {
    pub fn new(cfg: &SystemConfig) -> Result<Self> {
        let i = &cfg.inputs;
        let steps = DAYS_PER_YEAR * (MINUTES_PER_DAY / i.load.step_minutes()) as usize;
        if i.load.len() < steps {
            return Err(Error::TooShort {
                needed: steps,
                have: i.load.len(),
            });
        }
        let year = |s: &TimeSeries| -> Result<TimeSeries> {
            resample(&s.window(0, steps)?, cfg.step_minutes)
        };
        let load = year(&i.load)?;
        let pv = year(&i.pv_producible)?;
        let load_fc = blend_forecast(&year(&i.load_forecast)?, &load, cfg.forecast_blend)?;
        let pv_fc = blend_forecast(&year(&i.pv_forecast)?, &pv, cfg.forecast_blend)?;
        Ok(Self {
            load,
            pv_producible: pv,
            load_forecast: load_fc,
            pv_forecast: pv_fc,
        })
    }
}

/// Per-year totals.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct AnnualAggregates {
    pub energy_delivered_mwh: f64,
    pub energy_injected_mwh: f64,
    pub peak_window_energy_mwh: f64,
    pub penalized_deviation_mwh: f64,
    pub fuel_liters: f64,
    pub genset_starts: u32,
    pub genset_hours: f64,
    pub pv_curtailed_mwh: f64,
    pub battery_throughput_mwh: f64,
    pub unserved_mwh: f64,
    pub load_mwh: f64,
    pub pv_available_mwh: f64,
    pub genset_energy_mwh: f64,
    pub battery_charge_mwh: f64,
    pub battery_discharge_mwh: f64,
    /// SOH lost to fade during the year (replacements not netted).
    pub capacity_fade: f64,
    pub announce_warnings: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationResult {
    pub years: Vec<AnnualAggregates>,
    pub final_state: BatteryState,
    /// 1-based years in which the battery was replaced.
    pub replacement_years: Vec<u32>,
    pub runtime_s: f64,
    pub step_count: u64,
    pub max_balance_residual_kw: f64,
    /// Throughput-weighted one-way battery efficiency.
    pub mean_battery_efficiency: f64,
    pub extrapolated: bool,
}

impl SimulationResult {
    /// Sum of all years.
    pub fn totals(&self) -> AnnualAggregates {
        let mut t = AnnualAggregates::default();
        for a in &self.years {
            t.energy_delivered_mwh += a.energy_delivered_mwh;
            t.energy_injected_mwh += a.energy_injected_mwh;
            t.peak_window_energy_mwh += a.peak_window_energy_mwh;
            t.penalized_deviation_mwh += a.penalized_deviation_mwh;
            t.fuel_liters += a.fuel_liters;
            t.genset_starts += a.genset_starts;
            t.genset_hours += a.genset_hours;
            t.pv_curtailed_mwh += a.pv_curtailed_mwh;
            t.battery_throughput_mwh += a.battery_throughput_mwh;
            t.unserved_mwh += a.unserved_mwh;
            t.load_mwh += a.load_mwh;
            t.pv_available_mwh += a.pv_available_mwh;
            t.genset_energy_mwh += a.genset_energy_mwh;
            t.battery_charge_mwh += a.battery_charge_mwh;
            t.battery_discharge_mwh += a.battery_discharge_mwh;
            t.capacity_fade += a.capacity_fade;
            t.announce_warnings += a.announce_warnings;
        }
        t
    }
}

/// Battery envelope on the AC side of the converter.
fn envelope(cfg: &SystemConfig, state: &BatteryState, dt_h: f64) -> StorageEnvelope {
    let (dc_c, dc_d) = power_limits(cfg.battery_model, state, &cfg.battery, dt_h);
    let c = &cfg.converter;
    StorageEnvelope {
        soc: state.soc,
        max_charge_kw: c.rating_kva.min(dc_c / c.efficiency),
        max_discharge_kw: dc_d.min(c.rating_kva) * c.efficiency,
    }
}

fn plan_model(cfg: &SystemConfig, state: &BatteryState, genset: &Genset) -> PlanModel {
    let c = &cfg.converter;
    let b = &cfg.battery;
    let c_lim = b
        .max_c_rate
        .map_or(f64::INFINITY, |r| r * state.capacity_kwh());
    PlanModel {
        capacity_kwh: state.capacity_kwh(),
        soc_floor: cfg.dispatch.optimized.plan_soc_floor.max(b.soc_min),
        soc_max: b.soc_max,
        eta_charge: b.eta_charge * c.efficiency,
        eta_discharge: b.eta_discharge * c.efficiency,
        max_charge_kw: c.rating_kva.min(c_lim / c.efficiency),
        max_discharge_kw: c_lim.min(c.rating_kva) * c.efficiency,
        genset: genset.clone(),
    }
}

fn block_mean(values: &[f64], ratio: usize) -> Vec<f64> {
    values
        .chunks(ratio)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect()
}

/// Runs the scenario for `horizon_years`.
pub fn simulate(cfg: &SystemConfig, horizon_years: u32) -> Result<SimulationResult> {
    cfg.validate()?;
    let prepared = PreparedInputs::new(cfg)?;
    simulate_prepared(cfg, &prepared, horizon_years)
}

/// As [`simulate`], reusing inputs prepared for this config's step and blend.
pub fn simulate_prepared(
    cfg: &SystemConfig,
    inputs: &PreparedInputs,
    horizon_years: u32,
) -> Result<SimulationResult> {
    if horizon_years == 0 {
        return Err(Error::param(
            "simulation.lifetime_years",
            "must be at least 1",
        ));
    }
    if inputs.load.step_minutes() != cfg.step_minutes {
        return Err(Error::StepMismatch {
            expected: cfg.step_minutes,
            found: inputs.load.step_minutes(),
        });
    }
    run_from(cfg, inputs, horizon_years, None)
}

fn run_from(
    cfg: &SystemConfig,
    inputs: &PreparedInputs,
    horizon_years: u32,
    initial_soh: Option<f64>,
) -> Result<SimulationResult> {
    let t0 = Instant::now();
    let mut sim = Simulator::new(cfg, inputs);
    if let Some(soh) = initial_soh {
        sim.state.soh = soh;
    }
    for year in 0..horizon_years {
        sim.run_year(year)?;
    }
    let Simulator {
        years,
        state,
        replacement_years,
        steps,
        max_residual,
        eff_num,
        eff_den,
        ..
    } = sim;
    Ok(SimulationResult {
        years,
        final_state: state,
        replacement_years,
        runtime_s: t0.elapsed().as_secs_f64(),
        step_count: steps,
        max_balance_residual_kw: max_residual,
        mean_battery_efficiency: if eff_den > 0.0 {
            eff_num / eff_den
        } else {
            1.0
        },
        extrapolated: false,
    })
}

/// Full lifetime run, or with `extrapolate` a representative year spread
/// over the lifetime.
///
/// The representative year starts at the lifetime-mean state of health,
/// estimated from the fade of a first year with a fresh battery.
pub fn simulate_lifetime(cfg: &SystemConfig, inputs: &PreparedInputs) -> Result<SimulationResult> {
    if cfg.extrapolate {
        let t0 = Instant::now();
        let fresh = simulate_prepared(cfg, inputs, 1)?;
        let fade = fresh.years[0].capacity_fade;
        let mut one = if cfg.battery.ageing.enabled && fade > 0.0 {
            let soh = mean_lifetime_soh(fade, cfg.lifetime_years());
            let mut rep = run_from(cfg, inputs, 1, Some(soh))?;
            rep.years[0].capacity_fade = fade;
            rep.step_count += fresh.step_count;
            rep
        } else {
            fresh
        };
        one.runtime_s = t0.elapsed().as_secs_f64();
        extrapolate_single_year(&one, cfg, cfg.lifetime_years())
    } else {
        simulate_prepared(cfg, inputs, cfg.lifetime_years())
    }
}

struct Simulator<'a> {
    cfg: &'a SystemConfig,
    inputs: &'a PreparedInputs,
    injection: InjectionParams,
    state: BatteryState,
    genset: GensetStatus,
    years: Vec<AnnualAggregates>,
    replacement_years: Vec<u32>,
    steps: u64,
    max_residual: f64,
    eff_num: f64,
    eff_den: f64,
}

impl<'a> Simulator<'a> {
    fn new(cfg: &'a SystemConfig, inputs: &'a PreparedInputs) -> Self {
        let mut injection = cfg.dispatch.injection;
        injection.installed_kwp = cfg.pv.installed_kwp;
        Self {
            cfg,
            inputs,
            injection,
            state: BatteryState::new(cfg.battery.rated_kwh(), cfg.initial_soc),
            genset: GensetStatus {
                on: false,
                steps_in_state: u32::MAX / 2,
            },
            years: Vec::new(),
            replacement_years: Vec::new(),
            steps: 0,
            max_residual: 0.0,
            eff_num: 0.0,
            eff_den: 0.0,
        }
    }

    fn run_year(&mut self, year: u32) -> Result<()> {
        let cfg = self.cfg;
        let step = cfg.step_minutes;
        let dt = step as f64 / 60.0;
        let spd = (MINUTES_PER_DAY / step) as usize;
        let kwp = cfg.pv.installed_kwp * cfg.pv.degradation_factor(year);
        let mut agg = AnnualAggregates::default();
        let wrap = |step_idx: usize, e: Error| Error::Simulation {
            year: year + 1,
            step: step_idx,
            source: Box::new(e),
        };

        for day in 0..DAYS_PER_YEAR {
            let base = day * spd;
            let load = &self.inputs.load.values()[base..base + spd];
            let pv_unit = &self.inputs.pv_producible.values()[base..base + spd];

            let mut plan: Option<DayPlan> = None;
            let mut committed: Option<TimeSeries> = None;
            match cfg.dispatch.strategy {
                Strategy::Optimized => {
                    let genset = cfg.genset.as_ref().expect("validated");
                    let p = &cfg.dispatch.optimized;
                    let plan_step = p.plan_step_minutes.max(step);
                    if !plan_step.is_multiple_of(step) {
                        return Err(Error::param(
                            "dispatch.optimized.plan_step_minutes",
                            "must be a multiple of the simulation step",
                        ));
                    }
                    let ratio = (plan_step / step) as usize;
                    let lf =
                        block_mean(&self.inputs.load_forecast.values()[base..base + spd], ratio);
                    let pf: Vec<f64> =
                        block_mean(&self.inputs.pv_forecast.values()[base..base + spd], ratio)
                            .into_iter()
                            .map(|v| v * kwp)
                            .collect();
                    let model = plan_model(cfg, &self.state, genset);
                    let dp = microgrid_optimized_day(
                        &lf,
                        &pf,
                        plan_step,
                        self.state.soc,
                        self.genset.on,
                        &model,
                        p,
                    )
                    .map_err(|e| wrap(base, e))?;
                    plan = Some(dp);
                }
                Strategy::PvInjection => {
                    let fc = self.inputs.pv_forecast.window(base, spd)?.scaled(kwp);
                    let c = &cfg.converter;
                    let model = AnnounceModel {
                        capacity_kwh: self.state.capacity_kwh(),
                        soc: self.state.soc,
                        soc_min: cfg.battery.soc_min,
                        soc_max: cfg.battery.soc_max,
                        eta_charge: cfg.battery.eta_charge * c.efficiency,
                        eta_discharge: cfg.battery.eta_discharge * c.efficiency,
                    };
                    let a = pv_injection_announce(&fc, &model, &self.injection)
                        .map_err(|e| wrap(base, e))?;
                    agg.announce_warnings += u32::from(a.warning);
                    committed = Some(a.profile);
                }
                Strategy::Basic => {}
            }

            let mut forced_on = false;
            let mut forced_slot = usize::MAX;
            for k in 0..spd {
                let idx = base + k;
                let load_kw = load[k];
                let pv_kw = pv_unit[k] * kwp;
                let env = envelope(cfg, &self.state, dt);
                let mut d: DispatchDecision = match cfg.dispatch.strategy {
                    Strategy::Basic => {
                        let g = cfg.genset.as_ref().expect("validated");
                        microgrid_basic_step(
                            load_kw,
                            pv_kw,
                            &env,
                            self.genset,
                            g,
                            &cfg.dispatch.basic,
                        )
                    }
                    Strategy::Optimized => {
                        let dp = plan.as_ref().expect("planned");
                        let minute = k as u32 * step;
                        let slot_idx = (minute / dp.step_minutes) as usize;
                        if slot_idx != forced_slot {
                            forced_on = false;
                        }
                        let slot = &dp.slots[slot_idx];
                        let remaining =
                            ((slot_idx as u32 + 1) * dp.step_minutes - minute) as f64 / 60.0;
                        let g = cfg.genset.as_ref().expect("validated");
                        let model = plan_model(cfg, &self.state, g);
                        let d = microgrid_optimized_step(
                            load_kw,
                            pv_kw,
                            &env,
                            self.genset,
                            slot,
                            remaining,
                            &model,
                            forced_on,
                            &cfg.dispatch.optimized,
                        );
                        if d.forced {
                            forced_on = true;
                            forced_slot = slot_idx;
                        }
                        d
                    }
                    Strategy::PvInjection => {
                        let c = committed.as_ref().expect("announced").values()[k];
                        pv_injection_step(pv_kw, c, &env, &self.injection)
                    }
                };

                // battery, through the converter
                let conv = &cfg.converter;
                let dc_request = if d.p_batt > 0.0 {
                    converter_clip(d.p_batt, conv, FlowDirection::FromGrid)
                } else {
                    d.p_batt / conv.efficiency
                };
                let bs = battery_step(cfg.battery_model, &self.state, &cfg.battery, dc_request, dt);
                let ac_actual = if bs.power_kw > 0.0 {
                    bs.power_kw / conv.efficiency
                } else {
                    bs.power_kw * conv.efficiency
                };
                let g_max = cfg.genset.as_ref().map_or(0.0, Genset::max_output_kw);
                d.absorb_battery_shortfall(ac_actual, pv_kw, g_max);
                let residual = d.balance_residual(load_kw, pv_kw).abs();
                self.max_residual = self.max_residual.max(residual);

                // ageing
                let moved = bs.stored_delta_kwh.abs();
                if moved > 0.0 {
                    self.eff_num += bs.efficiency * moved;
                    self.eff_den += moved;
                }
                let efc = moved / (2.0 * self.state.rated_kwh);
                let ageing = &cfg.battery.ageing;
                if ageing.enabled {
                    agg.capacity_fade += ageing.calendar_fade_per_year * dt
                        / (24.0 * DAYS_PER_YEAR as f64)
                        + ageing.cycle_fade_per_efc * efc;
                }
                let (aged, replaced) = age_update(
                    &bs.state,
                    &cfg.battery,
                    dt / (24.0 * DAYS_PER_YEAR as f64),
                    efc,
                );
                self.state = aged;
                if replaced {
                    self.replacement_years.push(year + 1);
                }

                // genset state
                if d.genset_on == self.genset.on {
                    self.genset.steps_in_state = self.genset.steps_in_state.saturating_add(1);
                } else {
                    self.genset = GensetStatus {
                        on: d.genset_on,
                        steps_in_state: 1,
                    };
                }

                // aggregates, in kWh until the end of the year
                let minute = minute_of_day(self.inputs.load.time_at(idx));
                agg.load_mwh += load_kw * dt;
                agg.pv_available_mwh += pv_kw * dt;
                agg.pv_curtailed_mwh += d.pv_curtailed * dt;
                agg.unserved_mwh += d.unserved * dt;
                agg.battery_charge_mwh += d.charge() * dt;
                agg.battery_discharge_mwh += d.discharge() * dt;
                agg.battery_throughput_mwh += moved;
                agg.energy_injected_mwh += d.p_injected * dt;
                if d.genset_on {
                    let g = cfg.genset.as_ref().expect("validated");
                    agg.fuel_liters += g.fuel_liters(d.p_genset, dt);
                    agg.genset_hours += dt;
                    agg.genset_energy_mwh += d.p_genset * dt;
                }
                agg.genset_starts += u32::from(d.genset_started);
                if let Some(c) = &committed {
                    let committed_kw = c.values()[k];
                    agg.penalized_deviation_mwh +=
                        penalized_deviation_kw(committed_kw, d.p_injected, &self.injection) * dt;
                    if self.injection.in_peak(minute) {
                        agg.peak_window_energy_mwh += d.p_injected * dt;
                    }
                }
                self.steps += 1;
            }
        }
        agg.energy_delivered_mwh = match cfg.application {
            Application::Microgrid => agg.load_mwh - agg.unserved_mwh,
            Application::PvInjection => agg.energy_injected_mwh,
        };
        for v in [
            &mut agg.energy_delivered_mwh,
            &mut agg.energy_injected_mwh,
            &mut agg.peak_window_energy_mwh,
            &mut agg.penalized_deviation_mwh,
            &mut agg.pv_curtailed_mwh,
            &mut agg.battery_throughput_mwh,
            &mut agg.unserved_mwh,
            &mut agg.load_mwh,
            &mut agg.pv_available_mwh,
            &mut agg.genset_energy_mwh,
            &mut agg.battery_charge_mwh,
            &mut agg.battery_discharge_mwh,
        ] {
            *v = (*v / 1000.0).max(0.0);
        }
        self.years.push(agg);
        Ok(())
    }
}

/// Mean mid-year state of health over `lifetime_years` for a constant
/// annual fade, with a fresh battery whenever the replacement threshold is
/// reached.
pub fn mean_lifetime_soh(fade_per_year: f64, lifetime_years: u32) -> f64 {
    let usable = 1.0 - REPLACEMENT_SOH;
    let total: f64 = (1..=lifetime_years)
        .map(|n| 1.0 - (fade_per_year * (n as f64 - 0.5)) % usable)
        .sum();
    total / lifetime_years.max(1) as f64
}

/// Replicates a one-year result over `lifetime_years`.
///
/// PV-derived energies follow the PV degradation factor. In a microgrid the
/// PV energy lost to degradation first shrinks curtailment; the rest is
/// made up by the genset at the year-1 specific consumption. Replacements fall in the years where the
/// cumulative fade at the year-1 rate reaches each multiple of the
/// replacement threshold.
pub fn extrapolate_single_year(
    one_year: &SimulationResult,
    cfg: &SystemConfig,
    lifetime_years: u32,
) -> Result<SimulationResult> {
    if one_year.years.len() != 1 {
        return Err(Error::YearMismatch {
            expected: 1,
            found: one_year.years.len(),
        });
    }
    let y1 = one_year.years[0];
    let usable_fade = 1.0 - REPLACEMENT_SOH;
    let deg0 = cfg.pv.degradation_factor(0);
    let litres_per_mwh = if y1.genset_energy_mwh > 0.0 {
        y1.fuel_liters / y1.genset_energy_mwh
    } else {
        0.0
    };
    let mut years = Vec::with_capacity(lifetime_years as usize);
    let mut replacement_years = Vec::new();
    let mut done = 0u32;
    for n in 1..=lifetime_years {
        let f = cfg.pv.degradation_factor(n - 1) / deg0;
        let mut a = y1;
        a.pv_available_mwh *= f;
        match cfg.application {
            Application::PvInjection => {
                a.pv_curtailed_mwh *= f;
                a.energy_injected_mwh *= f;
                a.energy_delivered_mwh *= f;
                a.peak_window_energy_mwh *= f;
            }
            Application::Microgrid => {
                let lost = y1.pv_available_mwh * (1.0 - f);
                let short = (lost - y1.pv_curtailed_mwh).max(0.0);
                a.pv_curtailed_mwh = (y1.pv_curtailed_mwh - lost).max(0.0);
                a.genset_energy_mwh += short;
                a.fuel_liters += short * litres_per_mwh;
            }
        }
        if cfg.battery.ageing.enabled && y1.capacity_fade > 0.0 {
            let due = ((n as f64 * y1.capacity_fade) / usable_fade + 1e-9).floor() as u32;
            while done < due {
                replacement_years.push(n);
                done += 1;
            }
        }
        years.push(a);
    }
    Ok(SimulationResult {
        years,
        final_state: one_year.final_state,
        replacement_years,
        runtime_s: one_year.runtime_s,
        step_count: one_year.step_count,
        max_balance_residual_kw: one_year.max_balance_residual_kw,
        mean_battery_efficiency: one_year.mean_battery_efficiency,
        extrapolated: true,
    })
}
