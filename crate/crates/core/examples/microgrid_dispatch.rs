//! One year of the bundled microgrid under the rule-based and the
//! cost-optimised genset strategies, plus a single day-ahead plan.
//!
//! cargo run --example microgrid_dispatch

use std::path::PathBuf;

use bess_sizer::config::load_scenario;
use bess_sizer::dispatch::{microgrid_optimized_day, OptimizedParams, PlanModel, Strategy};
use bess_sizer::engine::{simulate, PreparedInputs};
use bess_sizer::timeseries::resample;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/microgrid.toml");
    let cfg = load_scenario(&path)?.system;

    println!("strategy    fuel[L]  starts  hours  curtailed[MWh]  throughput[MWh]  residual[kW]");
    for strategy in [Strategy::Basic, Strategy::Optimized] {
        let mut c = cfg.clone();
        c.dispatch.strategy = strategy;
        let r = simulate(&c, 1)?;
        let y = r.years[0];
        println!(
            "{:<10} {:>8.0}  {:>6}  {:>5.0}  {:>14.1}  {:>15.1}  {:>12.1e}",
            strategy.name(),
            y.fuel_liters,
            y.genset_starts,
            y.genset_hours,
            y.pv_curtailed_mwh,
            y.battery_throughput_mwh,
            r.max_balance_residual_kw
        );
    }

    // plan for a mid-January day from the forecasts the controller sees
    let params = OptimizedParams::default();
    let inputs = PreparedInputs::new(&cfg)?;
    let load = resample(&inputs.load_forecast, params.plan_step_minutes)?;
    let pv = resample(&inputs.pv_forecast, params.plan_step_minutes)?;
    let per_day = (1440 / params.plan_step_minutes) as usize;
    let day = 14 * per_day..15 * per_day;
    let kwp = cfg.pv.installed_kwp;
    let pv_kw: Vec<f64> = pv.values()[day.clone()].iter().map(|v| v * kwp).collect();
    let model = PlanModel {
        capacity_kwh: cfg.battery.rated_kwh(),
        soc_floor: params.plan_soc_floor,
        soc_max: cfg.battery.soc_max,
        eta_charge: cfg.battery.eta_charge * cfg.converter.efficiency,
        eta_discharge: cfg.battery.eta_discharge * cfg.converter.efficiency,
        max_charge_kw: cfg.converter.rating_kva,
        max_discharge_kw: cfg.converter.rating_kva,
        genset: cfg.genset.clone().ok_or("microgrid without genset")?,
    };
    let plan = microgrid_optimized_day(
        &load.values()[day],
        &pv_kw,
        params.plan_step_minutes,
        0.5,
        false,
        &model,
        &params,
    )?;
    println!(
        "\nday plan: cost {:.2} EUR, terminal relaxed {}",
        plan.cost, plan.terminal_relaxed
    );
    println!("hour  genset  kW     soc");
    for (h, s) in plan.slots.iter().enumerate() {
        println!(
            "{h:>4}  {:<6}  {:>5.1}  {:.3}",
            if s.on { "on" } else { "off" },
            s.genset_kw,
            s.soc_end
        );
    }
    Ok(())
}
