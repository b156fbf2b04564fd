//! Size sweeps, optimum search, one-factor sensitivity studies and the
//! fast approximation pipeline.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::battery::{BatteryModelKind, EcParams, EfficiencyMode, EfficiencyTable};
use crate::dispatch::Strategy;
use crate::economics::{build_cashflows, irr, lcoe, npv};
use crate::engine::{simulate_lifetime, AnnualAggregates, PreparedInputs, SystemConfig};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    #[default]
    Lcoe,
    Npv,
    Irr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Minimize,
    Maximize,
}

impl Indicator {
    pub fn sense(self) -> Sense {
        match self {
            Indicator::Lcoe => Sense::Minimize,
            Indicator::Npv | Indicator::Irr => Sense::Maximize,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Indicator::Lcoe => "lcoe",
            Indicator::Npv => "npv",
            Indicator::Irr => "irr",
        }
    }

    /// Axis label with unit.
    pub fn label(self) -> &'static str {
        match self {
            Indicator::Lcoe => "LCOE [EUR/MWh]",
            Indicator::Npv => "NPV [EUR]",
            Indicator::Irr => "IRR [-]",
        }
    }
}

impl FromStr for Indicator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lcoe" => Ok(Indicator::Lcoe),
            "npv" => Ok(Indicator::Npv),
            "irr" => Ok(Indicator::Irr),
            _ => Err(Error::param(
                "sizing.indicator",
                format!("`{s}` is not one of lcoe, npv, irr"),
            )),
        }
    }
}

/// Indicator value per battery size, with its optimum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndicatorCurve {
    pub indicator: Indicator,
    pub sense: Sense,
    pub points: Vec<(f64, f64)>,
    pub optimum: (f64, f64),
}

impl IndicatorCurve {
    pub fn new(indicator: Indicator, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::param(
                "sizing.sizes",
                "at least one size is required",
            ));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::param(
                "sizing.sizes",
                "sizes must be strictly increasing",
            ));
        }
        let sense = indicator.sense();
        let optimum = optimum_of(&points, sense);
        Ok(Self {
            indicator,
            sense,
            points,
            optimum,
        })
    }

    pub fn sizes(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

fn optimum_of(points: &[(f64, f64)], sense: Sense) -> (f64, f64) {
    let mut best = points[0];
    for &p in &points[1..] {
        let better = match sense {
            Sense::Minimize => p.1 < best.1,
            Sense::Maximize => p.1 > best.1,
        };
        if better {
            best = p;
        }
    }
    best
}

/// Best point of the curve; ties go to the smallest size.
pub fn find_optimum(curve: &IndicatorCurve) -> (f64, f64) {
    optimum_of(&curve.points, curve.sense)
}

/// Everything computed for one battery size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeEvaluation {
    pub size_kwh: f64,
    pub rated_kwh: f64,
    pub lcoe: Option<f64>,
    pub npv: f64,
    pub irr: Option<f64>,
    pub totals: AnnualAggregates,
    pub replacement_years: Vec<u32>,
    /// Fuel plus start cost over the simulated horizon.
    pub operating_cost: f64,
    pub mean_battery_efficiency: f64,
    pub max_balance_residual_kw: f64,
    pub step_count: u64,
    /// Wall-clock time for simulation plus economics.
    pub runtime_s: f64,
}

impl SizeEvaluation {
    pub fn indicator(&self, ind: Indicator) -> Result<f64> {
        match ind {
            Indicator::Lcoe => self.lcoe.ok_or(Error::ZeroEnergy),
            Indicator::Npv => Ok(self.npv),
            Indicator::Irr => self.irr.ok_or(Error::IrrUndefined),
        }
    }
}

/// Simulates one size and scores it.
pub fn evaluate_size(
    cfg: &SystemConfig,
    inputs: &PreparedInputs,
    size_kwh: f64,
) -> Result<SizeEvaluation> {
    let t0 = Instant::now();
    let c = cfg.with_size_kwh(size_kwh)?;
    let sim = simulate_lifetime(&c, inputs)?;
    let econ = &c.economics;
    let sched = build_cashflows(&sim, &c, econ)?;
    let totals = sim.totals();
    Ok(SizeEvaluation {
        size_kwh,
        rated_kwh: c.battery.rated_kwh(),
        lcoe: lcoe(&sched, econ.discount_rate).ok(),
        npv: npv(&sched, econ.discount_rate),
        irr: irr(&sched).ok().map(|r| r.rate),
        operating_cost: econ.fuel_eur_per_liter * totals.fuel_liters
            + econ.genset_start_eur * f64::from(totals.genset_starts),
        totals,
        replacement_years: sim.replacement_years,
        mean_battery_efficiency: sim.mean_battery_efficiency,
        max_balance_residual_kw: sim.max_balance_residual_kw,
        step_count: sim.step_count,
        runtime_s: t0.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub curve: IndicatorCurve,
    pub runs: Vec<SizeEvaluation>,
}

impl SweepOutcome {
    pub fn mean_runtime_s(&self) -> f64 {
        self.runs.iter().map(|r| r.runtime_s).sum::<f64>() / self.runs.len() as f64
    }
}

/// Runs `f` over `items` on `threads` workers (1 = in the calling thread),
/// keeping input order.
fn map_ordered<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync + Send,
) -> Result<Vec<R>> {
    if threads <= 1 {
        return Ok(items.iter().map(f).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::param("parallel", e.to_string()))?;
    Ok(pool.install(|| items.par_iter().map(f).collect()))
}

/// Simulates and scores each size. Results come back in size order
/// whatever the thread count.
pub fn sweep(
    cfg: &SystemConfig,
    sizes: &[f64],
    indicator: Indicator,
    threads: usize,
) -> Result<SweepOutcome> {
    cfg.validate()?;
    if sizes.is_empty() {
        return Err(Error::param(
            "sizing.sizes",
            "at least one size is required",
        ));
    }
    let inputs = PreparedInputs::new(cfg)?;
    let runs = map_ordered(sizes, threads, |&s| {
        evaluate_size(cfg, &inputs, s).map_err(|e| Error::Sweep {
            size_kwh: s,
            source: Box::new(e),
        })
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let points = runs
        .iter()
        .map(|r| {
            r.indicator(indicator)
                .map(|v| (r.size_kwh, v))
                .map_err(|e| Error::Sweep {
                    size_kwh: r.size_kwh,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepOutcome {
        curve: IndicatorCurve::new(indicator, points)?,
        runs,
    })
}

/// `count` sizes `lo, lo + step, ...` up to `hi` inclusive.
pub fn size_range(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo > 0.0 && step > 0.0 && hi >= lo) {
        return Err(Error::param(
            "sizing.range",
            "need 0 < lo <= hi and step > 0",
        ));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| lo + step * k as f64).collect())
}

/// Factors of the one-at-a-time sensitivity study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    ControlStrategy,
    ForecastQuality,
    EfficiencyPrecision,
    Ageing,
    ModelFidelity,
    TimeStep,
}

impl Factor {
    pub const ALL: [Factor; 6] = [
        Factor::ControlStrategy,
        Factor::ForecastQuality,
        Factor::EfficiencyPrecision,
        Factor::Ageing,
        Factor::ModelFidelity,
        Factor::TimeStep,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Factor::ControlStrategy => "control_strategy",
            Factor::ForecastQuality => "forecast_quality",
            Factor::EfficiencyPrecision => "efficiency_precision",
            Factor::Ageing => "ageing",
            Factor::ModelFidelity => "model_fidelity",
            Factor::TimeStep => "time_step",
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Factor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Factor::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::UnknownFactor {
                name: s.to_string(),
                valid: Factor::ALL
                    .iter()
                    .map(|f| f.name())
                    .collect::<Vec<_>>()
                    .join(", "),
            })
    }
}

/// A named configuration variant. The first scenario of a factor is its
/// baseline.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub cfg: SystemConfig,
}

fn variant(cfg: &SystemConfig, name: &str, f: impl FnOnce(&mut SystemConfig)) -> Scenario {
    let mut c = cfg.clone();
    f(&mut c);
    Scenario {
        name: name.to_string(),
        cfg: c,
    }
}

fn with_table(c: &mut SystemConfig) {
    c.battery_model = BatteryModelKind::Ep;
    c.battery.efficiency_mode = EfficiencyMode::Table;
    if c.battery.efficiency_table.is_none() {
        c.battery.efficiency_table = Some(EfficiencyTable::li_ion_reference());
    }
}

/// Scenario list for a factor. The efficiency factor's constant scenario
/// is completed by [`run_sensitivity`] once the table run is known.
pub fn scenarios(factor: Factor, cfg: &SystemConfig) -> Result<Vec<Scenario>> {
    let out = match factor {
        Factor::ControlStrategy => {
            if cfg.genset.is_none() {
                return Err(Error::param(
                    "dispatch.strategy",
                    "control_strategy compares genset strategies and needs a microgrid",
                ));
            }
            vec![
                variant(cfg, "basic", |c| c.dispatch.strategy = Strategy::Basic),
                variant(cfg, "optimized", |c| {
                    c.dispatch.strategy = Strategy::Optimized
                }),
            ]
        }
        Factor::ForecastQuality => vec![
            variant(cfg, "baseline_forecast", |c| c.forecast_blend = 0.0),
            variant(cfg, "perfect_forecast", |c| c.forecast_blend = 1.0),
            variant(cfg, "blend_0.5", |c| c.forecast_blend = 0.5),
        ],
        Factor::EfficiencyPrecision => vec![
            variant(cfg, "table_efficiency", with_table),
            variant(cfg, "constant_efficiency", |c| {
                with_table(c);
                c.battery.efficiency_mode = EfficiencyMode::Constant;
            }),
        ],
        Factor::Ageing => vec![
            variant(cfg, "ageing", |c| c.battery.ageing.enabled = true),
            variant(cfg, "no_ageing", |c| c.battery.ageing.enabled = false),
        ],
        Factor::ModelFidelity => {
            let ec = cfg
                .battery
                .ec_params
                .clone()
                .unwrap_or_else(|| EcParams::nmc_reference(0.002));
            vec![
                variant(cfg, "ec_model", |c| {
                    c.battery_model = BatteryModelKind::Ec;
                    c.battery.ec_params = Some(ec);
                }),
                variant(cfg, "ep_model", |c| c.battery_model = BatteryModelKind::Ep),
            ]
        }
        Factor::TimeStep => vec![
            variant(cfg, "step_1min", |c| c.step_minutes = 1),
            variant(cfg, "step_10min", |c| c.step_minutes = 10),
            variant(cfg, "step_60min", |c| c.step_minutes = 60),
        ],
    };
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimumShift {
    pub scenario: String,
    pub size_kwh: f64,
    pub size_delta_kwh: f64,
    pub value: f64,
    /// Relative change of the optimal value vs. the baseline, in percent.
    pub value_delta_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub factor: Factor,
    pub sizes: Vec<f64>,
    pub scenarios: Vec<(String, SweepOutcome)>,
    /// `deltas[k][i]`: percent change of scenario `k + 1` vs. the baseline at size `i`.
    pub deltas_pct: Vec<Vec<f64>>,
    pub optimum_shifts: Vec<OptimumShift>,
}

pub fn relative_delta_pct(base: f64, other: f64) -> f64 {
    (other - base) / base.abs() * 100.0
}

/// Sweeps every scenario of `factor` over the same sizes.
pub fn run_sensitivity(
    factor: Factor,
    cfg: &SystemConfig,
    sizes: &[f64],
    indicator: Indicator,
    threads: usize,
) -> Result<SensitivityReport> {
    let list = scenarios(factor, cfg)?;
    let mut outcomes: Vec<(String, SweepOutcome)> = Vec::new();
    for mut sc in list {
        if factor == Factor::EfficiencyPrecision && !outcomes.is_empty() {
            let eta = duty_weighted_efficiency(&outcomes[0].1);
            sc.cfg.battery.eta_charge = eta;
            sc.cfg.battery.eta_discharge = eta;
        }
        let out = sweep(&sc.cfg, sizes, indicator, threads)?;
        outcomes.push((sc.name, out));
    }
    let base = &outcomes[0].1.curve;
    let deltas_pct = outcomes[1..]
        .iter()
        .map(|(_, o)| {
            base.points
                .iter()
                .zip(&o.curve.points)
                .map(|(b, p)| relative_delta_pct(b.1, p.1))
                .collect()
        })
        .collect();
    let optimum_shifts = outcomes[1..]
        .iter()
        .map(|(name, o)| OptimumShift {
            scenario: name.clone(),
            size_kwh: o.curve.optimum.0,
            size_delta_kwh: o.curve.optimum.0 - base.optimum.0,
            value: o.curve.optimum.1,
            value_delta_pct: relative_delta_pct(base.optimum.1, o.curve.optimum.1),
        })
        .collect();
    Ok(SensitivityReport {
        factor,
        sizes: sizes.to_vec(),
        scenarios: outcomes,
        deltas_pct,
        optimum_shifts,
    })
}

/// Throughput-weighted one-way efficiency over a whole sweep.
pub fn duty_weighted_efficiency(out: &SweepOutcome) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for r in &out.runs {
        num += r.mean_battery_efficiency * r.totals.battery_throughput_mwh;
        den += r.totals.battery_throughput_mwh;
    }
    if den > 0.0 {
        num / den
    } else {
        1.0
    }
}

/// The approximated configuration: E/P model, 10-minute step, one simulated
/// year extrapolated over the lifetime.
pub fn approximate_config(cfg: &SystemConfig) -> SystemConfig {
    let mut c = cfg.clone();
    c.battery_model = BatteryModelKind::Ep;
    c.step_minutes = 10;
    c.extrapolate = true;
    c
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FastApproxReport {
    pub baseline: SweepOutcome,
    pub approx: SweepOutcome,
    /// |approx - baseline| / |baseline| per size, in percent.
    pub errors_pct: Vec<f64>,
    pub mean_error_pct: f64,
    pub baseline_runtime_s: f64,
    pub approx_runtime_s: f64,
    /// Ratio of mean wall-clock time per configuration.
    pub speedup: f64,
    pub same_optimum: bool,
}

/// Compares the approximation pipeline against the full configuration.
/// A baseline sweep already at hand can be passed in.
pub fn fast_approximation(
    cfg: &SystemConfig,
    sizes: &[f64],
    indicator: Indicator,
    threads: usize,
    baseline: Option<SweepOutcome>,
) -> Result<FastApproxReport> {
    let baseline = match baseline {
        Some(b) => b,
        None => sweep(cfg, sizes, indicator, threads)?,
    };
    let approx = sweep(&approximate_config(cfg), sizes, indicator, threads)?;
    let errors_pct: Vec<f64> = baseline
        .curve
        .points
        .iter()
        .zip(&approx.curve.points)
        .map(|(b, a)| relative_delta_pct(b.1, a.1).abs())
        .collect();
    let mean_error_pct = errors_pct.iter().sum::<f64>() / errors_pct.len() as f64;
    let (bt, at) = (baseline.mean_runtime_s(), approx.mean_runtime_s());
    Ok(FastApproxReport {
        same_optimum: baseline.curve.optimum.0 == approx.curve.optimum.0,
        errors_pct,
        mean_error_pct,
        baseline_runtime_s: bt,
        approx_runtime_s: at,
        speedup: if at > 0.0 { bt / at } else { f64::INFINITY },
        baseline,
        approx,
    })
}
