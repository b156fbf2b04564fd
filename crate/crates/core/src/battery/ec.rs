//! Equivalent-circuit model: per-cell OCV curve and a series resistance,
//! scaled to the pack. Losses are `i²R`, so efficiency is an output.
//!
//! The pack is `series_cells` cells in series per string, with
//! `parallel_strings` strings per module and modules in parallel. Cell
//! charge capacity follows from the module energy and the mean OCV, so at
//! zero resistance the pack stores exactly `rated_kwh` over the full SOC range.

use super::{BatterySpec, BatteryState, BatteryStep};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EcParams {
    ocv_curve: Vec<(f64, f64)>,
    pub internal_resistance_ohm: f64,
    pub series_cells: u32,
    pub parallel_strings: u32,
    pub v_min: f64,
    pub v_max: f64,
    mean_ocv: f64,
}

impl EcParams {
    pub fn new(
        ocv_curve: Vec<(f64, f64)>,
        internal_resistance_ohm: f64,
        series_cells: u32,
        parallel_strings: u32,
    ) -> Result<Self> {
        if ocv_curve.len() < 2 {
            return Err(Error::param(
                "battery.ec.ocv_curve",
                "need at least two points",
            ));
        }
        for w in ocv_curve.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::param(
                    "battery.ec.ocv_curve",
                    "SOC points must be increasing",
                ));
            }
        }
        if ocv_curve.iter().any(|p| !(p.1 > 0.0)) {
            return Err(Error::param(
                "battery.ec.ocv_curve",
                "voltages must be positive",
            ));
        }
        if !(internal_resistance_ohm >= 0.0 && internal_resistance_ohm.is_finite()) {
            return Err(Error::param(
                "battery.ec.internal_resistance_ohm",
                "must be >= 0",
            ));
        }
        if series_cells == 0 || parallel_strings == 0 {
            return Err(Error::param(
                "battery.ec.series_cells",
                "cell counts must be positive",
            ));
        }
        let v_min = ocv_curve.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let v_max = ocv_curve.iter().map(|p| p.1).fold(0.0, f64::max);
        let mut p = Self {
            ocv_curve,
            internal_resistance_ohm,
            series_cells,
            parallel_strings,
            v_min: v_min * 0.9,
            v_max: v_max * 1.05,
            mean_ocv: 0.0,
        };
        p.mean_ocv = p.mean_ocv_over(0.0, 1.0);
        Ok(p)
    }

    /// Sets terminal voltage limits per cell.
    pub fn with_voltage_limits(mut self, v_min: f64, v_max: f64) -> Result<Self> {
        if !(v_min < v_max && v_min > 0.0) {
            return Err(Error::param("battery.ec.v_min", "need 0 < v_min < v_max"));
        }
        self.v_min = v_min;
        self.v_max = v_max;
        Ok(self)
    }

    /// Typical NMC cell, 14s per module, with the given cell resistance.
    pub fn nmc_reference(internal_resistance_ohm: f64) -> Self {
        let curve = vec![
            (0.0, 3.00),
            (0.05, 3.30),
            (0.10, 3.45),
            (0.20, 3.55),
            (0.30, 3.62),
            (0.40, 3.67),
            (0.50, 3.72),
            (0.60, 3.79),
            (0.70, 3.88),
            (0.80, 3.96),
            (0.90, 4.05),
            (1.00, 4.15),
        ];
        Self::new(curve, internal_resistance_ohm, 14, 1).expect("reference curve is valid")
    }

    pub fn ocv_curve(&self) -> &[(f64, f64)] {
        &self.ocv_curve
    }

    /// Cell open-circuit voltage, clamped outside the curve.
    pub fn ocv(&self, soc: f64) -> f64 {
        let c = &self.ocv_curve;
        if soc <= c[0].0 {
            return c[0].1;
        }
        let last = c[c.len() - 1];
        if soc >= last.0 {
            return last.1;
        }
        let i = c
            .windows(2)
            .position(|w| soc <= w[1].0)
            .unwrap_or(c.len() - 2);
        let (x0, y0) = c[i];
        let (x1, y1) = c[i + 1];
        y0 + (y1 - y0) * (soc - x0) / (x1 - x0)
    }

    /// Average OCV over `[a, b]` (exact for the piecewise-linear curve).
    pub fn mean_ocv_over(&self, a: f64, b: f64) -> f64 {
        let mut knots: Vec<f64> = vec![a, b];
        knots.extend(
            self.ocv_curve
                .iter()
                .map(|p| p.0)
                .filter(|x| *x > a && *x < b),
        );
        knots.sort_by(f64::total_cmp);
        let area: f64 = knots
            .windows(2)
            .map(|w| 0.5 * (self.ocv(w[0]) + self.ocv(w[1])) * (w[1] - w[0]))
            .sum();
        area / (b - a)
    }
}

struct Pack {
    v_oc: f64,
    r: f64,
    cap_ah: f64,
    v_lo: f64,
    v_hi: f64,
}

fn pack(params: &EcParams, spec: &BatterySpec, state: &BatteryState) -> Pack {
    let s = f64::from(params.series_cells);
    let strings = f64::from(params.parallel_strings) * f64::from(spec.n_modules);
    Pack {
        v_oc: s * params.ocv(state.soc),
        r: s * params.internal_resistance_ohm / strings,
        cap_ah: state.capacity_kwh() * 1000.0 / (s * params.mean_ocv),
        v_lo: s * params.v_min,
        v_hi: s * params.v_max,
    }
}

fn params(spec: &BatterySpec) -> &EcParams {
    spec.ec_params
        .as_ref()
        .expect("EC model selected without EC parameters; validated at scenario build")
}

/// Terminal voltage for a pack current (A, positive when charging).
pub fn ec_terminal_voltage(state: &BatteryState, spec: &BatterySpec, current_a: f64) -> f64 {
    let pk = pack(params(spec), spec, state);
    pk.v_oc + current_a * pk.r
}

/// Resistance-limited maximum discharge power in kW.
pub fn ec_max_discharge_kw(state: &BatteryState, spec: &BatterySpec) -> f64 {
    let pk = pack(params(spec), spec, state);
    if pk.r == 0.0 {
        f64::INFINITY
    } else {
        pk.v_oc * pk.v_oc / (4.0 * pk.r) / 1000.0
    }
}

/// Largest charge / discharge currents allowed by SOC, voltage and C-rate.
fn current_limits(pk: &Pack, spec: &BatterySpec, state: &BatteryState, dt_h: f64) -> (f64, f64) {
    let c_lim = spec
        .max_c_rate
        .map(|c| c * pk.cap_ah)
        .unwrap_or(f64::INFINITY);
    let soc_chg = ((spec.soc_max - state.soc).max(0.0) * pk.cap_ah / dt_h).max(0.0);
    let soc_dis = ((state.soc - spec.soc_min).max(0.0) * pk.cap_ah / dt_h).max(0.0);
    let (v_chg, v_dis, p_dis) = if pk.r > 0.0 {
        (
            ((pk.v_hi - pk.v_oc) / pk.r).max(0.0),
            ((pk.v_oc - pk.v_lo) / pk.r).max(0.0),
            pk.v_oc / (2.0 * pk.r),
        )
    } else {
        (f64::INFINITY, f64::INFINITY, f64::INFINITY)
    };
    (
        c_lim.min(soc_chg).min(v_chg),
        c_lim.min(soc_dis).min(v_dis).min(p_dis),
    )
}

/// One equivalent-circuit step. OCV is held at its step-start value; the
/// pack current solving `p = v_oc·i ± i²R` is the smaller-magnitude root.
/// Requests beyond the resistance-limited maximum are served at that maximum.
pub fn ec_step(
    state: &BatteryState,
    spec: &BatterySpec,
    p_request_kw: f64,
    dt_h: f64,
) -> BatteryStep {
    if p_request_kw == 0.0 || dt_h <= 0.0 {
        return BatteryStep::idle(state);
    }
    let pk = pack(params(spec), spec, state);
    let (i_chg_max, i_dis_max) = current_limits(&pk, spec, state, dt_h);
    let w = p_request_kw.abs() * 1000.0;
    let mut next = *state;

    let (power_kw, delta_kwh, loss_kwh) = if p_request_kw > 0.0 {
        // w = v·i + r·i²  →  i = 2w / (v + sqrt(v² + 4rw))
        let i = (2.0 * w / (pk.v_oc + (pk.v_oc * pk.v_oc + 4.0 * pk.r * w).sqrt())).min(i_chg_max);
        next.soc = (state.soc + i * dt_h / pk.cap_ah).min(spec.soc_max.max(state.soc));
        let p = (pk.v_oc * i + pk.r * i * i) / 1000.0;
        (p, pk.v_oc * i * dt_h / 1000.0, pk.r * i * i * dt_h / 1000.0)
    } else {
        // w = v·i - r·i²  →  i = 2w / (v + sqrt(v² - 4rw)), clipped at v/2r
        let disc = pk.v_oc * pk.v_oc - 4.0 * pk.r * w;
        let i = if disc <= 0.0 {
            pk.v_oc / (2.0 * pk.r)
        } else {
            2.0 * w / (pk.v_oc + disc.sqrt())
        }
        .min(i_dis_max);
        next.soc = (state.soc - i * dt_h / pk.cap_ah).max(spec.soc_min.min(state.soc));
        let p = (pk.v_oc * i - pk.r * i * i) / 1000.0;
        (
            -p,
            -pk.v_oc * i * dt_h / 1000.0,
            pk.r * i * i * dt_h / 1000.0,
        )
    };

    next.throughput_kwh += delta_kwh.abs();
    let efficiency = if delta_kwh == 0.0 {
        1.0
    } else if power_kw > 0.0 {
        delta_kwh / (power_kw * dt_h)
    } else {
        (power_kw * dt_h) / delta_kwh
    };
    BatteryStep {
        state: next,
        power_kw,
        stored_delta_kwh: delta_kwh,
        loss_kwh,
        efficiency,
    }
}

pub(super) fn limits(state: &BatteryState, spec: &BatterySpec, dt_h: f64) -> (f64, f64) {
    let pk = pack(params(spec), spec, state);
    let (ic, id) = current_limits(&pk, spec, state, dt_h);
    let pc = if ic.is_finite() {
        (pk.v_oc * ic + pk.r * ic * ic) / 1000.0
    } else {
        f64::INFINITY
    };
    let pd = if id.is_finite() {
        (pk.v_oc * id - pk.r * id * id) / 1000.0
    } else {
        f64::INFINITY
    };
    (pc.max(0.0), pd.max(0.0))
}
