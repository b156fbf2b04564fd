//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use bess_sizer::battery::{min_rated_capacity, BatteryModelKind};
use bess_sizer::components::Genset;
use bess_sizer::config::{load_scenario, LoadedScenario};
use bess_sizer::dispatch::{microgrid_optimized_day, OptimizedParams, PlanModel, Strategy};
use bess_sizer::economics::{irr, lcoe, npv, CashflowSchedule};
use bess_sizer::engine::simulate;
use bess_sizer::sizing::{
    fast_approximation, find_optimum, sweep, Indicator, IndicatorCurve, SweepOutcome,
};

type Outcome = Result<String, String>;

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn microgrid() -> LoadedScenario {
    load_scenario(&manifest_dir().join("examples/microgrid.toml"))
        .expect("bundled microgrid scenario")
}

fn pv_injection() -> LoadedScenario {
    load_scenario(&manifest_dir().join("examples/pv_injection.toml"))
        .expect("bundled PV injection scenario")
}

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(t0: Instant, limit: Duration) -> Result<(), String> {
    let el = t0.elapsed();
    check(
        el < limit,
        format!(
            "took {:.1} s, limit {:.0} s",
            el.as_secs_f64(),
            limit.as_secs_f64()
        ),
    )
}

fn c1_finance() -> Outcome {
    let t0 = Instant::now();
    let s = CashflowSchedule::from_parts(
        vec![1000.0, 0.0],
        vec![0.0, 100.0],
        vec![0.0; 2],
        vec![0.0, 10.0],
    )
    .map_err(|e| e.to_string())?;
    let v = lcoe(&s, 0.1).map_err(|e| e.to_string())?;
    check((v - 120.0).abs() < 1e-6, format!("lcoe {v} != 120"))?;
    for cf in [vec![-100.0, 110.0], vec![-100.0, 0.0, 121.0]] {
        let r = irr(&CashflowSchedule::from_cashflows(cf.clone())).map_err(|e| e.to_string())?;
        check(
            (r.rate - 0.10).abs() < 1e-6,
            format!("irr {cf:?} = {}", r.rate),
        )?;
    }
    let n = npv(
        &CashflowSchedule::from_cashflows(vec![-100.0, 60.0, 60.0]),
        0.1,
    );
    check(
        (n - (-100.0 + 60.0 / 1.1 + 60.0 / 1.21)).abs() < 1e-9,
        format!("npv {n}"),
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut worst: f64 = 0.0;
    let mut multi = 0;
    for _ in 0..1000 {
        // investment years, then returns: one sign change
        let invest = rng.random_range(1..=3);
        let len = rng.random_range(invest + 1..=30);
        let mut cf: Vec<f64> = (0..len)
            .map(|n| {
                if n < invest {
                    -rng.random_range(100.0..1000.0)
                } else {
                    rng.random_range(0.0..300.0)
                }
            })
            .collect();
        let spent: f64 = -cf[..invest].iter().sum::<f64>();
        let earned: f64 = cf[invest..].iter().sum();
        if earned < 0.1 * spent {
            let last = cf.len() - 1;
            cf[last] += 0.1 * spent;
        }
        let s = CashflowSchedule::from_cashflows(cf.clone());
        let r = irr(&s).map_err(|e| format!("irr failed on {cf:?}: {e}"))?;
        multi += r.multiple_roots as u32;
        worst = worst.max(npv(&s, r.rate).abs());
    }
    check(worst < 1e-6, format!("max |npv(irr)| = {worst:e}"))?;
    within_time(t0, Duration::from_secs(1))?;
    Ok(format!(
        "analytic cases exact; max |npv(irr)| over 1000 random schedules = {worst:.1e} ({multi} with several roots)"
    ))
}

fn c2_fuel_curve() -> Outcome {
    let t0 = Instant::now();
    let g = Genset::reference_80kw(1.0, 0.0);
    for (lf, l) in [(0.50, 11.5), (0.75, 16.5), (1.00, 23.5), (1.10, 25.5)] {
        let v = g.fuel_rate(lf).map_err(|e| e.to_string())?;
        check(v == l, format!("fuel_rate({lf}) = {v}, table says {l}"))?;
    }
    let mut prev = f64::NEG_INFINITY;
    for k in 0..1000 {
        let lf = 1.10 * k as f64 / 999.0;
        let v = g.fuel_rate(lf).map_err(|e| e.to_string())?;
        check(v >= prev, format!("not monotone at {lf}"))?;
        prev = v;
    }
    within_time(t0, Duration::from_secs(1))?;
    Ok("four table points exact, monotone on 1000 points".into())
}

fn c3_min_capacity() -> Outcome {
    let v = min_rated_capacity(0.5, 0.9, 0.3).map_err(|e| e.to_string())?;
    check((v - 0.793651).abs() < 1e-6, format!("{v}"))?;
    Ok(format!("min_rated_capacity(0.5, 0.9, 0.3) = {v:.6} MWh"))
}

fn c4_fig10_optimum() -> Outcome {
    let sizes = [
        111.0, 222.0, 333.0, 444.0, 555.0, 666.0, 777.0, 888.0, 999.0, 1110.0,
    ];
    let basic = [
        528.0, 417.0, 370.0, 357.0, 371.0, 388.0, 408.0, 432.0, 454.0, 477.0,
    ];
    let advanced = [
        407.0, 381.0, 344.0, 350.0, 368.0, 390.0, 413.0, 436.0, 459.0, 485.0,
    ];
    let curve = |v: &[f64]| {
        IndicatorCurve::new(
            Indicator::Lcoe,
            sizes.iter().copied().zip(v.iter().copied()).collect(),
        )
    };
    let b = find_optimum(&curve(&basic).map_err(|e| e.to_string())?);
    let a = find_optimum(&curve(&advanced).map_err(|e| e.to_string())?);
    check(b == (444.0, 357.0), format!("basic optimum {b:?}"))?;
    check(a == (333.0, 344.0), format!("advanced optimum {a:?}"))?;
    let var = (a.1 - b.1) / b.1 * 100.0;
    check((var - -3.64).abs() < 0.01, format!("variation {var:.4} %"))?;
    Ok(format!("basic {b:?}, advanced {a:?}, variation {var:.2} %"))
}

fn c5_balance() -> Outcome {
    let mg = microgrid().system;
    let mut worst = Vec::new();
    for strategy in [Strategy::Basic, Strategy::Optimized] {
        let mut c = mg.clone();
        c.dispatch.strategy = strategy;
        let r = simulate(&c, 1).map_err(|e| e.to_string())?;
        worst.push((strategy.name(), r.max_balance_residual_kw, r.step_count));
    }
    let r = simulate(&pv_injection().system, 1).map_err(|e| e.to_string())?;
    worst.push((
        Strategy::PvInjection.name(),
        r.max_balance_residual_kw,
        r.step_count,
    ));
    for (name, res, steps) in &worst {
        check(*steps == 525_600, format!("{name}: {steps} steps"))?;
        check(*res < 1e-9, format!("{name}: residual {res:e} kW"))?;
    }
    Ok(worst
        .iter()
        .map(|(n, r, _)| format!("{n} {r:.1e} kW"))
        .collect::<Vec<_>>()
        .join(", "))
}

/// One slot under the planning model, written out from its rules: battery
/// power implied by the level change, half-level tolerance, PV curtailable,
/// genset covering the residual when on.
fn oracle_slot(
    m: &PlanModel,
    a: usize,
    b: usize,
    on: bool,
    load: f64,
    pv: f64,
    dt: f64,
) -> Option<f64> {
    let spacing = m.soc_max - m.soc_floor;
    let de = (b as f64 - a as f64) * spacing * m.capacity_kwh;
    let p_bat = if de >= 0.0 {
        -de / (m.eta_charge * dt)
    } else {
        -de * m.eta_discharge / dt
    };
    let tol = 0.5 * m.capacity_kwh * spacing / dt;
    if p_bat > m.max_discharge_kw + tol || -p_bat > m.max_charge_kw + tol {
        return None;
    }
    let demand = load - p_bat;
    if demand < -tol {
        return None;
    }
    if !on {
        return (demand <= pv + tol).then_some(0.0);
    }
    let g_max = m.genset.max_output_kw();
    let g = (demand - pv).max(0.0);
    if g > g_max + tol {
        return None;
    }
    Some(m.genset.fuel_price * m.genset.fuel_liters(g.min(g_max), dt))
}

/// Cheapest plan over every genset schedule and every level sequence.
fn oracle_day(
    m: &PlanModel,
    load: &[f64],
    pv: &[f64],
    dt: f64,
    i0: usize,
    on0: bool,
    i_term: usize,
) -> Option<f64> {
    let steps = load.len();
    let mut best: Option<f64> = None;
    for sched in 0..(1u32 << steps) {
        for levels in 0..(1u32 << steps) {
            let on = |t: usize| sched >> t & 1 == 1;
            let lvl = |t: usize| (levels >> t & 1) as usize;
            if lvl(steps - 1) < i_term {
                continue;
            }
            let mut costs = Vec::with_capacity(steps);
            let mut ok = true;
            for t in 0..steps {
                let from = if t == 0 { i0 } else { lvl(t - 1) };
                let prev_on = if t == 0 { on0 } else { on(t - 1) };
                match oracle_slot(m, from, lvl(t), on(t), load[t], pv[t], dt) {
                    Some(c) if on(t) => {
                        costs.push(c + if prev_on { 0.0 } else { m.genset.start_cost })
                    }
                    Some(c) => costs.push(c),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if !ok {
                continue;
            }
            // accumulate from the end of the day, as a backward recursion does
            let total = costs.iter().rev().fold(0.0, |acc, c| c + acc);
            if best.is_none_or(|b| total < b) {
                best = Some(total);
            }
        }
    }
    best
}

fn c6_dp_optimality() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let params = OptimizedParams {
        n_soc: 2,
        ..OptimizedParams::default()
    };
    let mut infeasible = 0;
    for day in 0..100 {
        let start = [0.0, 2.0, 5.0][rng.random_range(0..3)];
        let model = PlanModel {
            capacity_kwh: rng.random_range(20.0..200.0),
            soc_floor: params.plan_soc_floor,
            soc_max: 0.95,
            eta_charge: 0.95,
            eta_discharge: 0.95,
            max_charge_kw: rng.random_range(20.0..150.0),
            max_discharge_kw: rng.random_range(20.0..150.0),
            genset: Genset::reference_80kw(1.2, start),
        };
        let load: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..60.0)).collect();
        let pv: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..80.0)).collect();
        let soc = rng.random_range(0.1..0.95);
        let on0 = rng.random_bool(0.5);
        let dp = microgrid_optimized_day(&load, &pv, 60, soc, on0, &model, &params);

        let i0 = if (soc - 0.1) / 0.85 >= 0.5 { 1 } else { 0 };
        let level0 = [0.1, 0.95][i0];
        let target = (level0 - params.terminal_slack).min(params.terminal_reserve);
        let i_term = if target > 0.1 + 1e-9 { 1 } else { 0 };
        let oracle = oracle_day(&model, &load, &pv, 1.0, i0, on0, i_term)
            .or_else(|| oracle_day(&model, &load, &pv, 1.0, i0, on0, 0));
        match (dp, oracle) {
            (Ok(plan), Some(best)) => check(
                plan.cost == best,
                format!("day {day}: DP {} vs enumeration {best}", plan.cost),
            )?,
            (Err(_), None) => infeasible += 1,
            (Ok(plan), None) => {
                return Err(format!(
                    "day {day}: DP found {} but enumeration found nothing",
                    plan.cost
                ))
            }
            (Err(e), Some(best)) => {
                return Err(format!(
                    "day {day}: DP failed ({e}) but enumeration found {best}"
                ))
            }
        }
    }
    within_time(t0, Duration::from_secs(10))?;
    Ok(format!(
        "100 days match exactly ({infeasible} infeasible for both)"
    ))
}

fn c7_control_strategy() -> Outcome {
    let t0 = Instant::now();
    let sc = microgrid();
    let mut base = sc.system.clone();
    base.forecast_blend = 1.0;
    let mut opt = base.clone();
    opt.dispatch.strategy = Strategy::Optimized;
    let b = sweep(&base, &sc.sizes, Indicator::Lcoe, 1).map_err(|e| e.to_string())?;
    let o = sweep(&opt, &sc.sizes, Indicator::Lcoe, 1).map_err(|e| e.to_string())?;
    for (rb, ro) in b.runs.iter().zip(&o.runs) {
        check(
            ro.operating_cost <= rb.operating_cost,
            format!(
                "{} kWh: optimized {:.0} > basic {:.0}",
                rb.size_kwh, ro.operating_cost, rb.operating_cost
            ),
        )?;
    }
    for (rb, ro) in b.runs.iter().zip(&o.runs).take(3) {
        check(
            ro.totals.genset_starts < rb.totals.genset_starts,
            format!(
                "{} kWh: starts optimized {} vs basic {}",
                rb.size_kwh, ro.totals.genset_starts, rb.totals.genset_starts
            ),
        )?;
    }
    within_time(t0, Duration::from_secs(300))?;
    let first = (&b.runs[0], &o.runs[0]);
    Ok(format!(
        "optimized cheaper at all {} sizes; at {} kWh fuel+start {:.0} vs {:.0} EUR, starts {} vs {}",
        b.runs.len(),
        first.0.size_kwh,
        first.1.operating_cost,
        first.0.operating_cost,
        first.1.totals.genset_starts,
        first.0.totals.genset_starts
    ))
}

fn c8_curve_shape(mg_baseline: &SweepOutcome, t_mg: Duration) -> Outcome {
    let t0 = Instant::now();
    let pts = &mg_baseline.curve.points;
    let (size, value) = mg_baseline.curve.optimum;
    check(
        size != pts[0].0 && size != pts[pts.len() - 1].0,
        format!("microgrid optimum at grid edge {size} kWh"),
    )?;

    let sc = pv_injection();
    let approx = bess_sizer::sizing::approximate_config(&sc.system);
    let pv = sweep(&approx, &sc.sizes, sc.indicator, 1).map_err(|e| e.to_string())?;
    let useful = 0.5 * sc.system.pv.installed_kwp;
    let min_kwh = min_rated_capacity(useful, 0.9, 0.3).map_err(|e| e.to_string())?;
    let first = pv.curve.points[0].0;
    let module = sc.system.battery.module_kwh;
    check(
        first >= min_kwh - 1e-9 && first - module < min_kwh,
        format!("first grid size {first} kWh is not the smallest admissible ({min_kwh:.1} kWh)"),
    )?;
    check(
        pv.curve.optimum.0 == first,
        format!(
            "PV injection optimum at {} kWh, expected {first}",
            pv.curve.optimum.0
        ),
    )?;
    let total = t_mg + t0.elapsed();
    check(
        total < Duration::from_secs(600),
        format!("took {:.0} s", total.as_secs_f64()),
    )?;
    Ok(format!(
        "microgrid optimum interior at {size} kWh ({value:.1} EUR/MWh); PV injection optimum at smallest admissible {first} kWh"
    ))
}

fn c9_model_fidelity(mg_baseline: &SweepOutcome) -> Outcome {
    let sc = microgrid();
    let mut ep = sc.system.clone();
    ep.battery_model = BatteryModelKind::Ep;
    let e = sweep(&ep, &sc.sizes, Indicator::Lcoe, 1).map_err(|e| e.to_string())?;
    let devs: Vec<f64> = mg_baseline
        .curve
        .points
        .iter()
        .zip(&e.curve.points)
        .map(|(a, b)| ((b.1 - a.1) / a.1).abs() * 100.0)
        .collect();
    let mean = devs.iter().sum::<f64>() / devs.len() as f64;
    check(mean <= 2.0, format!("mean deviation {mean:.2} %"))?;
    Ok(format!(
        "EC vs E/P mean LCOE deviation {mean:.2} % (max {:.2} %)",
        devs.iter().cloned().fold(0.0, f64::max)
    ))
}

fn c10_fast_approx(mg_baseline: &SweepOutcome) -> Outcome {
    let sc = microgrid();
    let r = fast_approximation(
        &sc.system,
        &sc.sizes,
        Indicator::Lcoe,
        1,
        Some(mg_baseline.clone()),
    )
    .map_err(|e| e.to_string())?;
    check(
        r.same_optimum,
        format!(
            "optimum {:?} vs baseline {:?}",
            r.approx.curve.optimum, r.baseline.curve.optimum
        ),
    )?;
    check(
        r.mean_error_pct < 2.0,
        format!("mean error {:.2} %", r.mean_error_pct),
    )?;
    check(r.speedup >= 50.0, format!("speedup {:.0}x", r.speedup))?;
    Ok(format!(
        "same optimum {} kWh, mean error {:.2} %, speedup {:.0}x",
        r.baseline.curve.optimum.0, r.mean_error_pct, r.speedup
    ))
}

fn c11_forecast_quality() -> Outcome {
    let sc = pv_injection();
    let mut runs = Vec::new();
    for w in [0.0, 0.5, 1.0] {
        let mut c = sc.system.clone();
        c.forecast_blend = w;
        runs.push(sweep(&c, &sc.sizes, Indicator::Npv, 1).map_err(|e| e.to_string())?);
    }
    for i in 0..sc.sizes.len() {
        for k in 1..runs.len() {
            let (a, b) = (&runs[k - 1].runs[i], &runs[k].runs[i]);
            check(
                b.totals.penalized_deviation_mwh <= a.totals.penalized_deviation_mwh,
                format!(
                    "{} kWh: penalty energy rises with better forecasts",
                    a.size_kwh
                ),
            )?;
            check(
                b.npv >= a.npv,
                format!("{} kWh: NPV falls with better forecasts", a.size_kwh),
            )?;
        }
    }
    let at0 = |k: usize| &runs[k].runs[0];
    Ok(format!(
        "at {} kWh penalty {:.1} / {:.1} / {:.1} MWh, NPV {:.0} / {:.0} / {:.0} EUR",
        at0(0).size_kwh,
        at0(0).totals.penalized_deviation_mwh,
        at0(1).totals.penalized_deviation_mwh,
        at0(2).totals.penalized_deviation_mwh,
        at0(0).npv,
        at0(1).npv,
        at0(2).npv
    ))
}

fn run_cli_sweep(out: &Path, parallel: &str) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_bess-sizer"))
        .arg("sweep")
        .arg(manifest_dir().join("examples/microgrid.toml"))
        .args(["--parallel", parallel, "--out"])
        .arg(out)
        .env_remove("BESS_SIZER_THREADS")
        .output()
        .map_err(|e| e.to_string())?;
    check(
        status.status.success(),
        format!(
            "sweep exited with {:?}: {}",
            status.status.code(),
            String::from_utf8_lossy(&status.stderr)
        ),
    )?;
    std::fs::read(out.join("curve.csv")).map_err(|e| e.to_string())
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = run_cli_sweep(&dir.path().join("serial"), "1")?;
    let b = run_cli_sweep(&dir.path().join("parallel"), "8")?;
    check(a == b, "curve.csv differs between serial and parallel runs")?;
    Ok(format!("curve.csv identical ({} bytes)", a.len()))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, o: Outcome| match o {
        Ok(msg) => println!("[PASS] criterion {n}: {name}: {msg}"),
        Err(msg) => {
            failed += 1;
            println!("[FAIL] criterion {n}: {name}: {msg}");
        }
    };
    report(1, "finance analytics", c1_finance());
    report(2, "fuel curve", c2_fuel_curve());
    report(3, "minimal capacity", c3_min_capacity());
    report(4, "optimum on published curves", c4_fig10_optimum());
    report(5, "dispatch energy balance", c5_balance());
    report(6, "DP optimality", c6_dp_optimality());
    report(7, "control strategy direction", c7_control_strategy());

    let t0 = Instant::now();
    let sc = microgrid();
    let baseline = sweep(&sc.system, &sc.sizes, Indicator::Lcoe, 1);
    let t_mg = t0.elapsed();
    match baseline {
        Ok(b) => {
            report(8, "optimum curve shape", c8_curve_shape(&b, t_mg));
            report(9, "model fidelity", c9_model_fidelity(&b));
            report(10, "fast approximation", c10_fast_approx(&b));
        }
        Err(e) => {
            for (n, name) in [
                (8, "optimum curve shape"),
                (9, "model fidelity"),
                (10, "fast approximation"),
            ] {
                report(n, name, Err(format!("baseline sweep failed: {e}")));
            }
        }
    }
    report(11, "forecast quality direction", c11_forecast_quality());
    report(12, "determinism", c12_determinism());

    if failed == 0 {
        println!("acceptance: all 12 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 12 criteria failed");
        ExitCode::FAILURE
    }
}
