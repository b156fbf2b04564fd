//! Effect of one modelling factor on the indicator curve.
//!
//! cargo run --example sensitivity [factor]
//!
//! Factors: control_strategy, forecast_quality, efficiency_precision,
//! ageing, model_fidelity, time_step.

use std::path::PathBuf;

use bess_sizer::config::load_scenario;
use bess_sizer::sizing::{run_sensitivity, Factor};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let factor: Factor = std::env::args()
        .nth(1)
        .as_deref()
        .unwrap_or("ageing")
        .parse()?;
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/microgrid.toml");
    let sc = load_scenario(&path)?;
    let mut cfg = sc.system;
    cfg.step_minutes = 10;
    cfg.extrapolate = factor != Factor::Ageing;
    let sizes = [111.0, 222.0, 333.0, 444.0, 555.0, 666.0];

    let r = run_sensitivity(factor, &cfg, &sizes, sc.indicator, 1)?;
    print!("size[kWh]");
    for (name, _) in &r.scenarios {
        print!("  {name:>14}");
    }
    println!();
    for (i, s) in sizes.iter().enumerate() {
        print!("{s:>9.0}");
        for (_, o) in &r.scenarios {
            print!("  {:>14.2}", o.curve.points[i].1);
        }
        println!();
    }
    let base = &r.scenarios[0];
    println!(
        "{}: optimum {:.0} kWh at {:.2}",
        base.0, base.1.curve.optimum.0, base.1.curve.optimum.1
    );
    for s in &r.optimum_shifts {
        println!(
            "{}: optimum {:.0} kWh ({:+.0}), value {:.2} ({:+.2} %)",
            s.scenario, s.size_kwh, s.size_delta_kwh, s.value, s.value_delta_pct
        );
    }
    Ok(())
}
