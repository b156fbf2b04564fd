//! Control strategies deciding genset, battery, curtailment and injection
//! setpoints at each step.
//!
//! All powers here are on the AC bus. The battery envelope handed to a
//! strategy already includes converter rating and efficiency.

mod basic;
mod injection;
mod optimized;

pub use basic::{microgrid_basic_step, BasicParams};
pub use injection::{
    penalized_deviation_kw, pv_injection_announce, pv_injection_step, validate_profile,
    AnnounceModel, AnnouncedProfile, InjectionParams,
};
pub use optimized::{
    microgrid_optimized_day, microgrid_optimized_step, plan_transition, DayPlan, OptimizedParams,
    PlanModel, PlanSlot, Transition,
};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// SOC-threshold hysteresis on the genset.
    #[default]
    Basic,
    /// Daily cost-minimising genset commitment.
    Optimized,
    /// Day-ahead announced injection with smoothing and peak support.
    PvInjection,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Basic => "basic",
            Strategy::Optimized => "optimized",
            Strategy::PvInjection => "pv_injection",
        }
    }
}

/// What the battery can do this step, seen from the AC bus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StorageEnvelope {
    pub soc: f64,
    pub max_charge_kw: f64,
    pub max_discharge_kw: f64,
}

/// Genset commitment state carried between steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct GensetStatus {
    pub on: bool,
    /// Steps spent in the current on/off state.
    pub steps_in_state: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct DispatchDecision {
    /// Battery power on the AC bus, positive when charging.
    pub p_batt: f64,
    pub p_genset: f64,
    pub pv_curtailed: f64,
    pub p_injected: f64,
    pub unserved: f64,
    pub genset_on: bool,
    pub genset_started: bool,
    /// Genset start forced by the real-time recourse rule.
    pub forced: bool,
}

impl DispatchDecision {
    pub fn charge(&self) -> f64 {
        self.p_batt.max(0.0)
    }

    pub fn discharge(&self) -> f64 {
        (-self.p_batt).max(0.0)
    }

    /// `load + charge + curtailment + injection - (pv + genset + discharge + unserved)`.
    pub fn balance_residual(&self, load_kw: f64, pv_kw: f64) -> f64 {
        (load_kw + self.charge() + self.pv_curtailed + self.p_injected)
            - (pv_kw + self.p_genset + self.discharge() + self.unserved)
    }

    /// Re-balances after the battery delivered `p_actual` instead of the
    /// requested `p_batt`. Charge shortfalls become curtailment (then less
    /// genset); discharge shortfalls become genset output, then less
    /// injection, then unserved load.
    pub fn absorb_battery_shortfall(&mut self, p_actual: f64, pv_kw: f64, genset_max_kw: f64) {
        let diff = self.p_batt - p_actual;
        self.p_batt = p_actual;
        if diff > 0.0 {
            // less charging (or more discharge) than planned: surplus
            let mut surplus = diff;
            let curt = surplus.min((pv_kw - self.pv_curtailed).max(0.0));
            self.pv_curtailed += curt;
            surplus -= curt;
            let g = surplus.min(self.p_genset);
            self.p_genset -= g;
            surplus -= g;
            self.p_injected += surplus;
        } else if diff < 0.0 {
            let mut deficit = -diff;
            if self.genset_on {
                let add = deficit.min((genset_max_kw - self.p_genset).max(0.0));
                self.p_genset += add;
                deficit -= add;
            }
            let inj = deficit.min(self.p_injected);
            self.p_injected -= inj;
            deficit -= inj;
            self.unserved += deficit;
        }
    }
}

/// Closes the microgrid balance for a genset setpoint: the battery takes
/// the residual within its envelope, surplus is curtailed (then the genset
/// backs off), and deficits go to the genset headroom, then unserved.
pub(crate) fn settle_microgrid(
    load_kw: f64,
    pv_kw: f64,
    on: bool,
    genset_kw: f64,
    genset_max_kw: f64,
    env: &StorageEnvelope,
) -> DispatchDecision {
    let mut g = if on {
        genset_kw.clamp(0.0, genset_max_kw)
    } else {
        0.0
    };
    let b = pv_kw + g - load_kw;
    let mut d = DispatchDecision {
        genset_on: on,
        ..Default::default()
    };
    if b >= 0.0 {
        let charge = b.min(env.max_charge_kw.max(0.0));
        let mut surplus = b - charge;
        let curt = surplus.min(pv_kw);
        surplus -= curt;
        g -= surplus.min(g);
        d.p_batt = charge;
        d.pv_curtailed = curt;
    } else {
        let need = -b;
        let dis = need.min(env.max_discharge_kw.max(0.0));
        let mut short = need - dis;
        if on {
            let add = short.min((genset_max_kw - g).max(0.0));
            g += add;
            short -= add;
        }
        d.p_batt = -dis;
        d.unserved = short;
    }
    d.p_genset = g;
    d
}
