//! Command-line driver: `simulate`, `sweep`, `sensitivity`, `fastapprox`.
//!
//! Configuration and input errors exit with code 2, other failures with 1.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::{load_scenario, parse_range, parse_sizes, LoadedScenario};
use crate::economics::{build_cashflows, irr, lcoe, npv};
use crate::engine::{simulate_lifetime, PreparedInputs};
use crate::error::{Error, Result};
use crate::report::{
    curve_svg, line_chart_svg, write_annual_csv, write_curve_csv, write_deltas_csv, write_json,
    write_text, Series,
};
use crate::sizing::{fast_approximation, run_sensitivity, sweep, Factor, Indicator};

#[derive(Debug, Parser)]
#[command(
    name = "bess-sizer",
    version,
    about = "Battery sizing by time-series simulation and size sweeps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the configured battery size over the lifetime.
    Simulate(CommonArgs),
    /// Sweep battery sizes and locate the optimum.
    Sweep(SweepArgs),
    /// Sweep every scenario of one sensitivity factor.
    Sensitivity(SensitivityArgs),
    /// Compare the fast approximation with the full simulation.
    Fastapprox(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SizeArgs {
    /// Comma-separated sizes in kWh.
    #[arg(long, conflicts_with = "range")]
    pub sizes: Option<String>,
    /// `lo:hi:step` in kWh.
    #[arg(long)]
    pub range: Option<String>,
    /// Indicator to optimise (lcoe, npv, irr); defaults to the scenario's.
    #[arg(long)]
    pub indicator: Option<String>,
    /// Worker threads.
    #[arg(long, env = "BESS_SIZER_THREADS", default_value_t = 1)]
    pub parallel: usize,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub size: SizeArgs,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub size: SizeArgs,
    /// One of control_strategy, forecast_quality, efficiency_precision,
    /// ageing, model_fidelity, time_step.
    #[arg(long)]
    pub factor: String,
}

/// Whether an error comes from the user's configuration or inputs.
pub fn is_validation_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Io { .. }
            | Error::Csv { .. }
            | Error::InvalidSeries(_)
            | Error::NonUniformSpacing { .. }
            | Error::StepMismatch { .. }
            | Error::Resample(_)
            | Error::TooShort { .. }
            | Error::Misaligned(_)
            | Error::InvalidParam { .. }
            | Error::FuelTableRange { .. }
            | Error::UnknownFactor { .. }
            | Error::Config { .. }
    )
}

/// Parses the process arguments and runs the command.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut shown = e.to_string();
            eprintln!("error: {shown}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                let msg = s.to_string();
                if !shown.contains(&msg) {
                    eprintln!("  caused by: {msg}");
                }
                shown = msg;
                src = s.source();
            }
            ExitCode::from(if is_validation_error(&e) { 2 } else { 1 })
        }
    }
}

pub fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(&a.config, &a.out),
        Command::Sweep(a) => cmd_sweep(&a.common.config, &a.size, &a.common.out),
        Command::Sensitivity(a) => {
            cmd_sensitivity(&a.common.config, &a.factor, &a.size, &a.common.out)
        }
        Command::Fastapprox(a) => cmd_fastapprox(&a.common.config, &a.size, &a.common.out),
    }
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

fn resolve_sizes(sc: &LoadedScenario, args: &SizeArgs) -> Result<(Vec<f64>, Indicator)> {
    let sizes = match (&args.sizes, &args.range) {
        (Some(s), _) => parse_sizes(s)?,
        (None, Some(r)) => parse_range(r)?,
        (None, None) => sc.sizes.clone(),
    };
    let indicator = match &args.indicator {
        Some(s) => s.parse()?,
        None => sc.indicator,
    };
    Ok((sizes, indicator))
}

#[derive(Debug, Serialize)]
struct SimulationSummary<'a> {
    application: &'a str,
    strategy: &'a str,
    rated_kwh: f64,
    lifetime_years: u32,
    lcoe_eur_per_mwh: Option<f64>,
    npv_eur: f64,
    irr: Option<f64>,
    irr_multiple_roots: bool,
    replacement_years: &'a [u32],
    runtime_s: f64,
    step_count: u64,
    max_balance_residual_kw: f64,
    mean_battery_efficiency: f64,
    extrapolated: bool,
}

/// Writes `annual.csv`, `cashflows.csv` and `summary.json`.
pub fn cmd_simulate(config: &Path, out: &Path) -> Result<()> {
    let sc = load_scenario(config)?;
    let cfg = &sc.system;
    let inputs = PreparedInputs::new(cfg)?;
    let sim = simulate_lifetime(cfg, &inputs)?;
    let econ = &cfg.economics;
    let sched = build_cashflows(&sim, cfg, econ)?;
    let irr = irr(&sched).ok();
    prepare_out(out)?;
    write_annual_csv(&out.join("annual.csv"), &sim)?;
    sched.write_csv(&out.join("cashflows.csv"))?;
    let summary = SimulationSummary {
        application: cfg.application.name(),
        strategy: cfg.dispatch.strategy.name(),
        rated_kwh: cfg.battery.rated_kwh(),
        lifetime_years: cfg.lifetime_years(),
        lcoe_eur_per_mwh: lcoe(&sched, econ.discount_rate).ok(),
        npv_eur: npv(&sched, econ.discount_rate),
        irr: irr.map(|r| r.rate),
        irr_multiple_roots: irr.is_some_and(|r| r.multiple_roots),
        replacement_years: &sim.replacement_years,
        runtime_s: sim.runtime_s,
        step_count: sim.step_count,
        max_balance_residual_kw: sim.max_balance_residual_kw,
        mean_battery_efficiency: sim.mean_battery_efficiency,
        extrapolated: sim.extrapolated,
    };
    write_json(&out.join("summary.json"), &summary)?;
    println!(
        "{} / {}: {:.1} kWh, LCOE {}, NPV {:.0} EUR, replacements {:?} ({:.2} s)",
        summary.application,
        summary.strategy,
        summary.rated_kwh,
        summary
            .lcoe_eur_per_mwh
            .map(|v| format!("{v:.2} EUR/MWh"))
            .unwrap_or_else(|| "n/a".into()),
        summary.npv_eur,
        summary.replacement_years,
        summary.runtime_s
    );
    Ok(())
}

#[derive(Debug, Serialize)]
struct OptimumSummary {
    indicator: Indicator,
    size_kwh: f64,
    value: f64,
    /// Neither the smallest nor the largest size of the grid.
    interior: bool,
    sizes: usize,
}

/// Writes `curve.csv`, `optimum.json` and `curve.svg`.
pub fn cmd_sweep(config: &Path, args: &SizeArgs, out: &Path) -> Result<()> {
    let sc = load_scenario(config)?;
    let (sizes, indicator) = resolve_sizes(&sc, args)?;
    let result = sweep(&sc.system, &sizes, indicator, args.parallel)?;
    let curve = &result.curve;
    prepare_out(out)?;
    write_curve_csv(&out.join("curve.csv"), curve)?;
    let (size, value) = curve.optimum;
    let n = curve.points.len();
    write_json(
        &out.join("optimum.json"),
        &OptimumSummary {
            indicator,
            size_kwh: size,
            value,
            interior: n > 2 && size != curve.points[0].0 && size != curve.points[n - 1].0,
            sizes: n,
        },
    )?;
    let title = format!("{} vs. battery size", indicator.name().to_uppercase());
    write_text(&out.join("curve.svg"), &curve_svg(curve, &title))?;
    println!("optimum: {size} kWh, {} = {value}", indicator.name());
    Ok(())
}

/// Writes one `curve_<scenario>.csv` per scenario, `deltas.csv`,
/// `optimum_shift.json` and `sensitivity.svg`.
pub fn cmd_sensitivity(config: &Path, factor: &str, args: &SizeArgs, out: &Path) -> Result<()> {
    let factor: Factor = factor.parse()?;
    let sc = load_scenario(config)?;
    let (sizes, indicator) = resolve_sizes(&sc, args)?;
    let report = run_sensitivity(factor, &sc.system, &sizes, indicator, args.parallel)?;
    prepare_out(out)?;
    for (name, o) in &report.scenarios {
        write_curve_csv(&out.join(format!("curve_{name}.csv")), &o.curve)?;
    }
    write_deltas_csv(&out.join("deltas.csv"), &report)?;
    write_json(&out.join("optimum_shift.json"), &report.optimum_shifts)?;
    let series: Vec<Series> = report
        .scenarios
        .iter()
        .map(|(n, o)| Series {
            name: n,
            points: &o.curve.points,
        })
        .collect();
    let optima: Vec<(f64, f64)> = report
        .scenarios
        .iter()
        .map(|(_, o)| o.curve.optimum)
        .collect();
    let svg = line_chart_svg(
        &format!("Sensitivity to {factor}"),
        "battery size [kWh]",
        indicator.label(),
        &series,
        &optima,
    );
    write_text(&out.join("sensitivity.svg"), &svg)?;
    let (bname, base) = &report.scenarios[0];
    println!(
        "{bname}: optimum {} kWh, {}",
        base.curve.optimum.0, base.curve.optimum.1
    );
    for s in &report.optimum_shifts {
        println!(
            "{}: optimum {} kWh ({:+} kWh), {} ({:+.2} %)",
            s.scenario, s.size_kwh, s.size_delta_kwh, s.value, s.value_delta_pct
        );
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct FastApproxSummary<'a> {
    indicator: Indicator,
    baseline_optimum: (f64, f64),
    approx_optimum: (f64, f64),
    same_optimum: bool,
    errors_pct: &'a [f64],
    mean_error_pct: f64,
    baseline_runtime_s: f64,
    approx_runtime_s: f64,
    speedup: f64,
}

/// Writes `curve_baseline.csv`, `curve_approx.csv`, `fastapprox.json` and
/// `fastapprox.svg`.
pub fn cmd_fastapprox(config: &Path, args: &SizeArgs, out: &Path) -> Result<()> {
    let sc = load_scenario(config)?;
    let (sizes, indicator) = resolve_sizes(&sc, args)?;
    let r = fast_approximation(&sc.system, &sizes, indicator, args.parallel, None)?;
    prepare_out(out)?;
    write_curve_csv(&out.join("curve_baseline.csv"), &r.baseline.curve)?;
    write_curve_csv(&out.join("curve_approx.csv"), &r.approx.curve)?;
    write_json(
        &out.join("fastapprox.json"),
        &FastApproxSummary {
            indicator,
            baseline_optimum: r.baseline.curve.optimum,
            approx_optimum: r.approx.curve.optimum,
            same_optimum: r.same_optimum,
            errors_pct: &r.errors_pct,
            mean_error_pct: r.mean_error_pct,
            baseline_runtime_s: r.baseline_runtime_s,
            approx_runtime_s: r.approx_runtime_s,
            speedup: r.speedup,
        },
    )?;
    let svg = line_chart_svg(
        "Full simulation vs. fast approximation",
        "battery size [kWh]",
        indicator.label(),
        &[
            Series {
                name: "baseline",
                points: &r.baseline.curve.points,
            },
            Series {
                name: "approximation",
                points: &r.approx.curve.points,
            },
        ],
        &[r.baseline.curve.optimum, r.approx.curve.optimum],
    );
    write_text(&out.join("fastapprox.svg"), &svg)?;
    println!(
        "mean error {:.2} %, speedup {:.0}x, same optimum: {}",
        r.mean_error_pct, r.speedup, r.same_optimum
    );
    Ok(())
}
