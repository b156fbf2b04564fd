use std::path::PathBuf;
use std::sync::Arc;

use bess_sizer::config::load_scenario;
use bess_sizer::engine::{simulate, InputSeries, PreparedInputs, SystemConfig};
use bess_sizer::sizing::{run_sensitivity, scenarios, sweep, Factor, Indicator};
use bess_sizer::timeseries::{synth_start, TimeSeries};

fn microgrid() -> SystemConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/microgrid.toml");
    load_scenario(&p).unwrap().system
}

fn flat(cfg: &SystemConfig, load_kw: f64, pv_per_kwp: f64) -> SystemConfig {
    let n = 365 * 1440;
    let s = |v: f64| TimeSeries::constant(synth_start(), 1, n, v).unwrap();
    let mut c = cfg.clone();
    c.inputs =
        Arc::new(InputSeries::new(s(load_kw), s(pv_per_kwp), s(load_kw), s(pv_per_kwp)).unwrap());
    c
}

#[test]
fn single_size_sweep_is_one_point() {
    let mut cfg = microgrid();
    cfg.economics.lifetime_years = 2;
    cfg.step_minutes = 10;
    let out = sweep(&cfg, &[333.0], Indicator::Lcoe, 1).unwrap();
    assert_eq!(out.curve.points.len(), 1);
    assert_eq!(out.curve.optimum, out.curve.points[0]);
}

#[test]
fn parallel_sweep_matches_serial() {
    let mut cfg = microgrid();
    cfg.economics.lifetime_years = 2;
    cfg.step_minutes = 10;
    let sizes = [111.0, 222.0, 333.0];
    let a = sweep(&cfg, &sizes, Indicator::Npv, 1).unwrap();
    let b = sweep(&cfg, &sizes, Indicator::Npv, 3).unwrap();
    assert_eq!(a.curve, b.curve);
}

#[test]
fn no_ageing_scenario_pins_soh() {
    let mut cfg = microgrid();
    cfg.economics.lifetime_years = 3;
    cfg.step_minutes = 10;
    let list = scenarios(Factor::Ageing, &cfg).unwrap();
    assert_eq!(list[1].name, "no_ageing");
    let r = simulate(&list[1].cfg, 3).unwrap();
    assert_eq!(r.final_state.soh, 1.0);
    assert!(r.years.iter().all(|y| y.capacity_fade == 0.0));
    let aged = simulate(&list[0].cfg, 3).unwrap();
    assert!(aged.final_state.soh < 1.0);
}

#[test]
fn forecast_quality_midpoint_is_half_blend() {
    let mut cfg = microgrid();
    cfg.step_minutes = 60;
    let list = scenarios(Factor::ForecastQuality, &cfg).unwrap();
    let prep: Vec<PreparedInputs> = list
        .iter()
        .map(|s| PreparedInputs::new(&s.cfg).unwrap())
        .collect();
    let (base, perfect, mid) = (&prep[0], &prep[1], &prep[2]);
    assert_eq!(perfect.pv_forecast.values(), perfect.pv_producible.values());
    for i in (0..base.pv_forecast.len()).step_by(97) {
        let want = 0.5 * base.pv_forecast.values()[i] + 0.5 * perfect.pv_forecast.values()[i];
        assert!((mid.pv_forecast.values()[i] - want).abs() < 1e-12);
        let want = 0.5 * base.load_forecast.values()[i] + 0.5 * perfect.load_forecast.values()[i];
        assert!((mid.load_forecast.values()[i] - want).abs() < 1e-12);
    }
}

#[test]
fn time_step_is_neutral_on_constant_signals() {
    let mut cfg = flat(&microgrid(), 20.0, 0.5);
    cfg.economics.lifetime_years = 3;
    let r = run_sensitivity(Factor::TimeStep, &cfg, &[222.0, 444.0], Indicator::Lcoe, 1).unwrap();
    assert_eq!(r.scenarios.len(), 3);
    for d in r.deltas_pct.iter().flatten() {
        assert!(d.abs() < 1e-9, "{d}");
    }
}

#[test]
fn control_strategy_needs_a_genset() {
    let mut cfg = microgrid();
    cfg.genset = None;
    assert!(scenarios(Factor::ControlStrategy, &cfg).is_err());
}
