use serde::{Deserialize, Serialize};

use super::{settle_microgrid, DispatchDecision, GensetStatus, StorageEnvelope};
use crate::components::Genset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizedParams {
    /// Number of SOC levels in the planning grid.
    pub n_soc: usize,
    /// Planning resolution; forecasts are block-averaged to it.
    pub plan_step_minutes: u32,
    /// Lowest SOC the plan may use.
    pub plan_soc_floor: f64,
    /// End-of-day SOC must reach `min(initial - slack, reserve)`.
    pub terminal_slack: f64,
    pub terminal_reserve: f64,
    /// Force the genset on at or below this SOC regardless of the plan.
    pub recourse_soc: f64,
}

impl Default for OptimizedParams {
    fn default() -> Self {
        Self {
            n_soc: 101,
            plan_step_minutes: 60,
            plan_soc_floor: 0.10,
            terminal_slack: 0.05,
            terminal_reserve: 0.30,
            recourse_soc: 0.07,
        }
    }
}

impl OptimizedParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_soc < 2 {
            return Err(Error::param(
                "dispatch.optimized.n_soc",
                "need at least 2 levels",
            ));
        }
        if self.plan_step_minutes == 0 {
            return Err(Error::param(
                "dispatch.optimized.plan_step_minutes",
                "must be positive",
            ));
        }
        if !(0.0..1.0).contains(&self.plan_soc_floor) {
            return Err(Error::param(
                "dispatch.optimized.plan_soc_floor",
                "must be in [0, 1)",
            ));
        }
        if self.terminal_slack < 0.0 || !(0.0..=1.0).contains(&self.terminal_reserve) {
            return Err(Error::param(
                "dispatch.optimized.terminal_reserve",
                "must be in [0, 1]",
            ));
        }
        Ok(())
    }
}

/// Battery and genset data the planner works with, frozen for the day.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanModel {
    pub capacity_kwh: f64,
    pub soc_floor: f64,
    pub soc_max: f64,
    /// AC to stored energy.
    pub eta_charge: f64,
    /// Stored energy to AC.
    pub eta_discharge: f64,
    pub max_charge_kw: f64,
    pub max_discharge_kw: f64,
    pub genset: Genset,
}

impl PlanModel {
    fn level(&self, i: usize, n: usize) -> f64 {
        self.soc_floor + (self.soc_max - self.soc_floor) * i as f64 / (n - 1) as f64
    }

    fn spacing(&self, n: usize) -> f64 {
        (self.soc_max - self.soc_floor) / (n - 1) as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub genset_kw: f64,
    pub fuel_cost: f64,
    /// Battery output on the AC bus, positive when discharging.
    pub battery_kw: f64,
}

/// Feasibility and running cost of moving from SOC level `i` to `j` over
/// one slot with the genset `on`. Start costs are not included.
///
/// Battery power is implied by the level change; PV fills the rest and may
/// be curtailed, the genset runs at whatever the residual needs (idling at
/// zero output when on without need). A half-level tolerance absorbs the
/// grid quantisation.
#[allow(clippy::too_many_arguments)]
pub fn plan_transition(
    model: &PlanModel,
    n_soc: usize,
    i: usize,
    j: usize,
    on: bool,
    load_kw: f64,
    pv_kw: f64,
    dt_h: f64,
) -> Option<Transition> {
    delta_transition(
        model,
        n_soc,
        j as isize - i as isize,
        on,
        load_kw,
        pv_kw,
        dt_h,
    )
}

/// Same as [`plan_transition`] for a level change of `k`; only the
/// difference matters on a uniform grid.
fn delta_transition(
    model: &PlanModel,
    n_soc: usize,
    k: isize,
    on: bool,
    load_kw: f64,
    pv_kw: f64,
    dt_h: f64,
) -> Option<Transition> {
    let de = k as f64 * model.spacing(n_soc) * model.capacity_kwh;
    let b = if de >= 0.0 {
        -de / (model.eta_charge * dt_h)
    } else {
        -de * model.eta_discharge / dt_h
    };
    let tol = 0.5 * model.capacity_kwh * model.spacing(n_soc) / dt_h;
    if b > model.max_discharge_kw + tol || -b > model.max_charge_kw + tol {
        return None;
    }
    // battery output cannot exceed what the load absorbs
    let demand = load_kw - b;
    if demand < -tol {
        return None;
    }
    if !on {
        if demand > pv_kw + tol {
            return None;
        }
        return Some(Transition {
            genset_kw: 0.0,
            fuel_cost: 0.0,
            battery_kw: b,
        });
    }
    let g_max = model.genset.max_output_kw();
    let g = (demand - pv_kw).max(0.0);
    if g > g_max + tol {
        return None;
    }
    let g = g.min(g_max);
    Some(Transition {
        genset_kw: g,
        fuel_cost: model.genset.fuel_price * model.genset.fuel_liters(g, dt_h),
        battery_kw: b,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanSlot {
    pub on: bool,
    pub started: bool,
    pub genset_kw: f64,
    pub soc_end: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DayPlan {
    pub step_minutes: u32,
    pub soc_start: f64,
    pub slots: Vec<PlanSlot>,
    /// Fuel plus start cost of the plan.
    pub cost: f64,
    /// The terminal SOC target had to be dropped to find a plan.
    pub terminal_relaxed: bool,
}

impl DayPlan {
    pub fn slot_at(&self, minute_of_plan: u32) -> Option<&PlanSlot> {
        self.slots
            .get((minute_of_plan / self.step_minutes) as usize)
    }
}

/// Cost-minimising genset commitment over one day by backward dynamic
/// programming on a SOC grid.
///
/// `load` and `pv` are the day's forecasts at the planning resolution.
pub fn microgrid_optimized_day(
    load: &[f64],
    pv: &[f64],
    step_minutes: u32,
    soc: f64,
    genset_on: bool,
    model: &PlanModel,
    params: &OptimizedParams,
) -> Result<DayPlan> {
    params.validate()?;
    if load.len() != pv.len() {
        return Err(Error::Misaligned(
            "load and PV forecasts differ in length".into(),
        ));
    }
    let dt = step_minutes as f64 / 60.0;
    let g_max = model.genset.max_output_kw();
    if let Some(step) = load
        .iter()
        .zip(pv)
        .position(|(l, p)| l - p > g_max + model.max_discharge_kw + 1e-9)
    {
        return Err(Error::InfeasibleDay { step });
    }
    let n = params.n_soc;
    let spacing = model.spacing(n);
    let i0 = (((soc.clamp(model.soc_floor, model.soc_max) - model.soc_floor) / spacing).round()
        as usize)
        .min(n - 1);
    let target = (model.level(i0, n) - params.terminal_slack).min(params.terminal_reserve);
    let i_term = (((target - model.soc_floor) / spacing) - 1e-9)
        .ceil()
        .max(0.0) as usize;

    let plan = solve(load, pv, dt, model, n, i0, genset_on, i_term.min(n - 1));
    let (choices, total, relaxed) = match plan {
        Some((c, v)) => (c, v, false),
        None => match solve(load, pv, dt, model, n, i0, genset_on, 0) {
            Some((c, v)) => (c, v, true),
            None => return Err(Error::InfeasibleDay { step: 0 }),
        },
    };

    let mut slots = Vec::with_capacity(load.len());
    let (mut on_prev, mut i) = (genset_on, i0);
    for (t, ch) in choices.iter().enumerate() {
        let (on, j) = ch[on_prev as usize][i];
        let tr = plan_transition(model, n, i, j, on, load[t], pv[t], dt)
            .expect("chosen transition is feasible");
        let started = on && !on_prev;
        slots.push(PlanSlot {
            on,
            started,
            genset_kw: tr.genset_kw,
            soc_end: model.level(j, n),
            cost: tr.fuel_cost
                + if started {
                    model.genset.start_cost
                } else {
                    0.0
                },
        });
        on_prev = on;
        i = j;
    }
    Ok(DayPlan {
        step_minutes,
        soc_start: model.level(i0, n),
        slots,
        cost: total,
        terminal_relaxed: relaxed,
    })
}

type Choice = [Vec<(bool, usize)>; 2];

#[allow(clippy::too_many_arguments)]
fn solve(
    load: &[f64],
    pv: &[f64],
    dt: f64,
    model: &PlanModel,
    n: usize,
    i0: usize,
    on0: bool,
    i_term: usize,
) -> Option<(Vec<Choice>, f64)> {
    let steps = load.len();
    let cell = model.capacity_kwh * model.spacing(n);
    let up = ((model.max_charge_kw * model.eta_charge * dt) / cell).floor() as usize + 1;
    let down = ((model.max_discharge_kw / model.eta_discharge * dt) / cell).floor() as usize + 1;
    let start = model.genset.start_cost;

    // value[prev_on][level]
    let mut next: [Vec<f64>; 2] = [
        (0..n)
            .map(|i| if i >= i_term { 0.0 } else { f64::INFINITY })
            .collect(),
        (0..n)
            .map(|i| if i >= i_term { 0.0 } else { f64::INFINITY })
            .collect(),
    ];
    let mut choices: Vec<Choice> = vec![[Vec::new(), Vec::new()]; steps];
    let width = up + down + 1;
    let mut off_ok = vec![false; width];
    let mut on_cost = vec![f64::INFINITY; width];
    for t in (0..steps).rev() {
        for (slot, k) in (-(down as isize)..=up as isize).enumerate() {
            off_ok[slot] = delta_transition(model, n, k, false, load[t], pv[t], dt).is_some();
            on_cost[slot] = delta_transition(model, n, k, true, load[t], pv[t], dt)
                .map_or(f64::INFINITY, |tr| tr.fuel_cost);
        }
        let mut cur = [vec![f64::INFINITY; n], vec![f64::INFINITY; n]];
        let mut ch: Choice = [vec![(false, 0); n], vec![(false, 0); n]];
        for i in 0..n {
            let (lo, hi) = (i.saturating_sub(down), (i + up).min(n - 1));
            // (value, choice) per previous genset state
            let mut best = [(f64::INFINITY, (false, 0)); 2];
            #[allow(clippy::needless_range_loop)]
            for j in lo..=hi {
                let slot = j + down - i;
                if off_ok[slot] {
                    let v = next[0][j];
                    for b in best.iter_mut() {
                        if v < b.0 {
                            *b = (v, (false, j));
                        }
                    }
                }
                let c = on_cost[slot];
                if c.is_finite() {
                    for (prev_on, b) in best.iter_mut().enumerate() {
                        let s = if prev_on == 1 { 0.0 } else { start };
                        let v = (c + s) + next[1][j];
                        if v < b.0 {
                            *b = (v, (true, j));
                        }
                    }
                }
            }
            for prev_on in 0..2 {
                cur[prev_on][i] = best[prev_on].0;
                ch[prev_on][i] = best[prev_on].1;
            }
        }
        choices[t] = ch;
        next = cur;
    }
    let v = next[on0 as usize][i0];
    v.is_finite().then_some((choices, v))
}

/// Real-time step under a day plan. The genset follows the plan's
/// commitment and, when on, steers the battery toward the slot's end SOC.
/// A start is forced when SOC falls to the recourse threshold or the
/// battery cannot carry the net load; `forced_on` keeps such a start alive
/// until the slot ends.
#[allow(clippy::too_many_arguments)]
pub fn microgrid_optimized_step(
    load_kw: f64,
    pv_kw: f64,
    env: &StorageEnvelope,
    status: GensetStatus,
    slot: &PlanSlot,
    slot_remaining_h: f64,
    model: &PlanModel,
    forced_on: bool,
    params: &OptimizedParams,
) -> DispatchDecision {
    let genset = &model.genset;
    let g_max = genset.max_output_kw();
    let net = load_kw - pv_kw;
    let mut forced = forced_on && !slot.on;
    let mut on = slot.on || forced;
    if !on && (env.soc <= params.recourse_soc || net > env.max_discharge_kw) {
        on = true;
        forced = true;
    }
    let g = if !on {
        0.0
    } else if forced {
        if net > genset.rated_kw {
            net.min(g_max)
        } else {
            (net + env.max_charge_kw).clamp(0.0, genset.rated_kw)
        }
    } else {
        let de = (slot.soc_end - env.soc) * model.capacity_kwh;
        let p = if de >= 0.0 {
            de / (model.eta_charge * slot_remaining_h)
        } else {
            de * model.eta_discharge / slot_remaining_h
        };
        (net + p.clamp(-env.max_discharge_kw, env.max_charge_kw)).clamp(0.0, g_max)
    };
    let mut d = settle_microgrid(load_kw, pv_kw, on, g, g_max, env);
    d.genset_started = on && !status.on;
    d.forced = forced;
    d
}
