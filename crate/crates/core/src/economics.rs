//! Cash flows and the sizing indicators LCOE, NPV and IRR.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::engine::{Application, SimulationResult, SystemConfig};
use crate::error::{Error, Result};

/// Prices and financial assumptions. Defaults are placeholders to be
/// replaced by project data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EconParams {
    pub discount_rate: f64,
    pub lifetime_years: u32,
    pub battery_eur_per_kwh: f64,
    pub converter_eur_per_kva: f64,
    pub pv_eur_per_kwp: f64,
    pub genset_eur: f64,
    /// Yearly O&M as a fraction of each component's CAPEX.
    pub battery_opex_fraction: f64,
    pub converter_opex_fraction: f64,
    pub pv_opex_fraction: f64,
    pub genset_opex_fraction: f64,
    /// Genset O&M per running hour.
    pub genset_eur_per_hour: f64,
    pub battery_replacement_eur_per_kwh: f64,
    pub fuel_eur_per_liter: f64,
    pub genset_start_eur: f64,
    pub feed_in_tariff_eur_per_mwh: f64,
    pub peak_bonus_eur_per_mwh: f64,
    /// Price of out-of-band deviation energy; the feed-in tariff when unset.
    pub penalty_eur_per_mwh: Option<f64>,
}

impl Default for EconParams {
    fn default() -> Self {
        Self {
            discount_rate: 0.06,
            lifetime_years: 20,
            battery_eur_per_kwh: 300.0,
            converter_eur_per_kva: 150.0,
            pv_eur_per_kwp: 1200.0,
            genset_eur: 30_000.0,
            battery_opex_fraction: 0.01,
            converter_opex_fraction: 0.01,
            pv_opex_fraction: 0.015,
            genset_opex_fraction: 0.02,
            genset_eur_per_hour: 1.0,
            battery_replacement_eur_per_kwh: 300.0,
            fuel_eur_per_liter: 1.2,
            genset_start_eur: 2.0,
            feed_in_tariff_eur_per_mwh: 150.0,
            peak_bonus_eur_per_mwh: 200.0,
            penalty_eur_per_mwh: None,
        }
    }
}

impl EconParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.discount_rate > -1.0) {
            return Err(Error::param("economics.discount_rate", "must be above -1"));
        }
        if self.lifetime_years == 0 {
            return Err(Error::param(
                "economics.lifetime_years",
                "must be at least 1",
            ));
        }
        let prices = [
            ("economics.battery_eur_per_kwh", self.battery_eur_per_kwh),
            (
                "economics.converter_eur_per_kva",
                self.converter_eur_per_kva,
            ),
            ("economics.pv_eur_per_kwp", self.pv_eur_per_kwp),
            ("economics.genset_eur", self.genset_eur),
            (
                "economics.battery_opex_fraction",
                self.battery_opex_fraction,
            ),
            (
                "economics.converter_opex_fraction",
                self.converter_opex_fraction,
            ),
            ("economics.pv_opex_fraction", self.pv_opex_fraction),
            ("economics.genset_opex_fraction", self.genset_opex_fraction),
            ("economics.genset_eur_per_hour", self.genset_eur_per_hour),
            (
                "economics.battery_replacement_eur_per_kwh",
                self.battery_replacement_eur_per_kwh,
            ),
            ("economics.fuel_eur_per_liter", self.fuel_eur_per_liter),
            ("economics.genset_start_eur", self.genset_start_eur),
            (
                "economics.feed_in_tariff_eur_per_mwh",
                self.feed_in_tariff_eur_per_mwh,
            ),
            (
                "economics.peak_bonus_eur_per_mwh",
                self.peak_bonus_eur_per_mwh,
            ),
            ("economics.penalty_eur_per_mwh", self.penalty_rate()),
        ];
        for (k, v) in prices {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(k, "must be a non-negative number"));
            }
        }
        Ok(())
    }

    pub fn penalty_rate(&self) -> f64 {
        self.penalty_eur_per_mwh
            .unwrap_or(self.feed_in_tariff_eur_per_mwh)
    }
}

/// Yearly cash flows, index 0 being the investment year.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct CashflowSchedule {
    pub capex: Vec<f64>,
    pub opex: Vec<f64>,
    pub income: Vec<f64>,
    pub cf: Vec<f64>,
    pub energy_mwh: Vec<f64>,
}

impl CashflowSchedule {
    /// Schedule from raw series; `cf = income - capex - opex`.
    pub fn from_parts(
        capex: Vec<f64>,
        opex: Vec<f64>,
        income: Vec<f64>,
        energy_mwh: Vec<f64>,
    ) -> Result<Self> {
        let n = capex.len();
        if opex.len() != n || income.len() != n || energy_mwh.len() != n {
            return Err(Error::YearMismatch {
                expected: n,
                found: opex.len().min(income.len()).min(energy_mwh.len()),
            });
        }
        let cf = (0..n).map(|i| income[i] - capex[i] - opex[i]).collect();
        Ok(Self {
            capex,
            opex,
            income,
            cf,
            energy_mwh,
        })
    }

    /// Schedule holding only net cash flows (no energy, no cost split).
    pub fn from_cashflows(cf: Vec<f64>) -> Self {
        let n = cf.len();
        Self {
            capex: vec![0.0; n],
            opex: vec![0.0; n],
            income: vec![0.0; n],
            cf,
            energy_mwh: vec![0.0; n],
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv {
            path: path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        })?;
        let err = |e: csv::Error| Error::Csv {
            path: path.to_path_buf(),
            line: 0,
            msg: e.to_string(),
        };
        w.write_record(["year", "capex", "opex", "income", "cf"])
            .map_err(err)?;
        for i in 0..self.cf.len() {
            w.write_record([
                i.to_string(),
                self.capex[i].to_string(),
                self.opex[i].to_string(),
                self.income[i].to_string(),
                self.cf[i].to_string(),
            ])
            .map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Initial investment for a configuration.
pub fn initial_capex(cfg: &SystemConfig, econ: &EconParams) -> f64 {
    battery_capex(cfg, econ)
        + converter_capex(cfg, econ)
        + pv_capex(cfg, econ)
        + genset_capex(cfg, econ)
}

fn battery_capex(cfg: &SystemConfig, econ: &EconParams) -> f64 {
    econ.battery_eur_per_kwh * cfg.battery.rated_kwh()
}

fn converter_capex(cfg: &SystemConfig, econ: &EconParams) -> f64 {
    econ.converter_eur_per_kva * cfg.converter.rating_kva
}

fn pv_capex(cfg: &SystemConfig, econ: &EconParams) -> f64 {
    econ.pv_eur_per_kwp * cfg.pv.installed_kwp
}

fn genset_capex(cfg: &SystemConfig, econ: &EconParams) -> f64 {
    if cfg.genset.is_some() {
        econ.genset_eur
    } else {
        0.0
    }
}

/// Turns a lifetime simulation into yearly cash flows.
pub fn build_cashflows(
    sim: &SimulationResult,
    cfg: &SystemConfig,
    econ: &EconParams,
) -> Result<CashflowSchedule> {
    let n = econ.lifetime_years as usize;
    if sim.years.len() != n {
        return Err(Error::YearMismatch {
            expected: n,
            found: sim.years.len(),
        });
    }
    let mut capex = vec![0.0; n + 1];
    let mut opex = vec![0.0; n + 1];
    let mut income = vec![0.0; n + 1];
    let mut energy = vec![0.0; n + 1];
    capex[0] = initial_capex(cfg, econ);
    let fixed_opex = econ.battery_opex_fraction * battery_capex(cfg, econ)
        + econ.converter_opex_fraction * converter_capex(cfg, econ)
        + econ.pv_opex_fraction * pv_capex(cfg, econ)
        + econ.genset_opex_fraction * genset_capex(cfg, econ);
    let replacement = econ.battery_replacement_eur_per_kwh * cfg.battery.rated_kwh();
    for &y in &sim.replacement_years {
        if (1..=n as u32).contains(&y) {
            capex[y as usize] += replacement;
        }
    }
    for (i, a) in sim.years.iter().enumerate() {
        let y = i + 1;
        opex[y] = fixed_opex
            + econ.fuel_eur_per_liter * a.fuel_liters
            + econ.genset_start_eur * f64::from(a.genset_starts)
            + econ.genset_eur_per_hour * a.genset_hours;
        match cfg.application {
            Application::PvInjection => {
                income[y] = econ.feed_in_tariff_eur_per_mwh * a.energy_injected_mwh
                    + econ.peak_bonus_eur_per_mwh * a.peak_window_energy_mwh
                    - econ.penalty_rate() * a.penalized_deviation_mwh;
                energy[y] = a.energy_injected_mwh;
            }
            Application::Microgrid => {
                energy[y] = a.energy_delivered_mwh;
            }
        }
    }
    CashflowSchedule::from_parts(capex, opex, income, energy)
}

fn discount(r: f64, n: usize) -> f64 {
    (1.0 + r).powi(n as i32)
}

/// Discounted costs over discounted energy, in currency per MWh.
pub fn lcoe(sched: &CashflowSchedule, r: f64) -> Result<f64> {
    let (mut cost, mut energy) = (0.0, 0.0);
    for n in 0..sched.cf.len() {
        let d = discount(r, n);
        cost += (sched.capex[n] + sched.opex[n]) / d;
        energy += sched.energy_mwh[n] / d;
    }
    if !(energy > 0.0) {
        return Err(Error::ZeroEnergy);
    }
    Ok(cost / energy)
}

pub fn npv(sched: &CashflowSchedule, r: f64) -> f64 {
    npv_of(&sched.cf, r)
}

fn npv_of(cf: &[f64], r: f64) -> f64 {
    cf.iter().enumerate().map(|(n, c)| c / discount(r, n)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Irr {
    pub rate: f64,
    /// More than one root was found in the search interval; `rate` is the smallest.
    pub multiple_roots: bool,
}

const IRR_LO: f64 = -0.99;
const IRR_HI: f64 = 10.0;
const IRR_SCAN: usize = 4000;

/// Discount rate zeroing the NPV, searched in `(-0.99, 10]` by a sign scan
/// followed by bisection.
pub fn irr(sched: &CashflowSchedule) -> Result<Irr> {
    let cf = &sched.cf;
    let nz: Vec<f64> = cf.iter().copied().filter(|c| *c != 0.0).collect();
    if !nz.windows(2).any(|w| (w[0] < 0.0) != (w[1] < 0.0)) {
        return Err(Error::IrrUndefined);
    }
    let f = |x: f64| npv_of(cf, x);
    let grid = |k: usize| IRR_LO + (IRR_HI - IRR_LO) * k as f64 / IRR_SCAN as f64;
    let mut brackets = Vec::new();
    let mut prev = (grid(1), f(grid(1)));
    if prev.1 == 0.0 {
        brackets.push((prev.0, prev.0));
    }
    for k in 2..=IRR_SCAN {
        let x = grid(k);
        let v = f(x);
        if v == 0.0 {
            brackets.push((x, x));
        } else if prev.1 != 0.0 && (prev.1 < 0.0) != (v < 0.0) {
            brackets.push((prev.0, x));
        }
        prev = (x, v);
    }
    let Some(&(mut lo, mut hi)) = brackets.first() else {
        return Err(Error::IrrNotBracketed);
    };
    let mut flo = f(lo);
    for _ in 0..200 {
        if lo == hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let rate = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    Ok(Irr {
        rate,
        multiple_roots: brackets.len() > 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sched(capex: &[f64], opex: &[f64], energy: &[f64]) -> CashflowSchedule {
        let n = capex.len();
        CashflowSchedule::from_parts(capex.to_vec(), opex.to_vec(), vec![0.0; n], energy.to_vec())
            .unwrap()
    }

    #[test]
    fn lcoe_at_zero_rate_is_ratio() {
        let s = sched(&[1000.0, 0.0, 0.0], &[0.0; 3], &[0.0, 5.0, 5.0]);
        assert_abs_diff_eq!(lcoe(&s, 0.0).unwrap(), 100.0, epsilon = 1e-12);
    }

    #[test]
    fn lcoe_discounted() {
        let s = sched(&[1000.0, 0.0], &[0.0, 100.0], &[0.0, 10.0]);
        assert_abs_diff_eq!(lcoe(&s, 0.1).unwrap(), 120.0, epsilon = 1e-9);
    }

    #[test]
    fn lcoe_homogeneity() {
        let s = sched(&[1000.0, 50.0], &[0.0, 100.0], &[0.0, 10.0]);
        let base = lcoe(&s, 0.07).unwrap();
        let s2 = sched(&[2000.0, 100.0], &[0.0, 200.0], &[0.0, 10.0]);
        let s3 = sched(&[1000.0, 50.0], &[0.0, 100.0], &[0.0, 20.0]);
        assert_abs_diff_eq!(lcoe(&s2, 0.07).unwrap(), 2.0 * base, epsilon = 1e-9);
        assert_abs_diff_eq!(lcoe(&s3, 0.07).unwrap(), 0.5 * base, epsilon = 1e-9);
    }

    #[test]
    fn lcoe_without_energy_fails() {
        let s = sched(&[1000.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]);
        assert!(matches!(lcoe(&s, 0.05), Err(Error::ZeroEnergy)));
    }

    #[test]
    fn npv_examples() {
        let s = CashflowSchedule::from_cashflows(vec![-100.0, 60.0, 60.0]);
        assert_abs_diff_eq!(npv(&s, 0.0), 20.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            npv(&s, 0.1),
            -100.0 + 60.0 / 1.1 + 60.0 / 1.21,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(npv(&s, 0.1), 4.13, epsilon = 5e-3);
        let s = CashflowSchedule::from_cashflows(vec![-100.0, 110.0]);
        assert_abs_diff_eq!(npv(&s, 0.1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn irr_examples() {
        let s = CashflowSchedule::from_cashflows(vec![-100.0, 110.0]);
        assert_abs_diff_eq!(irr(&s).unwrap().rate, 0.10, epsilon = 1e-9);
        let s = CashflowSchedule::from_cashflows(vec![-100.0, 0.0, 121.0]);
        assert_abs_diff_eq!(irr(&s).unwrap().rate, 0.10, epsilon = 1e-9);
        let s = CashflowSchedule::from_cashflows(vec![-100.0, -50.0]);
        assert!(matches!(irr(&s), Err(Error::IrrUndefined)));
    }

    #[test]
    fn irr_flags_multiple_roots() {
        // roots at 0.1 and 0.2
        let s = CashflowSchedule::from_cashflows(vec![1.0, -2.3, 1.32]);
        let r = irr(&s).unwrap();
        assert!(r.multiple_roots);
        assert_abs_diff_eq!(r.rate, 0.1, epsilon = 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn npv_zero_at_irr(c0 in -1000.0f64..-10.0, rest in proptest::collection::vec(0.0f64..300.0, 1..25)) {
                prop_assume!(rest.iter().any(|v| *v > 1.0));
                let mut cf = vec![c0];
                cf.extend(rest);
                let s = CashflowSchedule::from_cashflows(cf);
                if let Ok(r) = irr(&s) {
                    prop_assert!(npv(&s, r.rate).abs() < 1e-6);
                }
            }

            #[test]
            fn npv_decreasing_in_rate(c0 in -1000.0f64..-1.0, rest in proptest::collection::vec(0.1f64..300.0, 1..25),
                                       r in -0.5f64..1.0, dr in 0.001f64..0.5) {
                let mut cf = vec![c0];
                cf.extend(rest);
                let s = CashflowSchedule::from_cashflows(cf);
                prop_assert!(npv(&s, r + dr) < npv(&s, r));
            }
        }
    }
}
