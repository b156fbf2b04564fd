//! Indicator curve over a range of battery sizes and its optimum.
//!
//! cargo run --example sizing_sweep [threads] [out_dir]
//!
//! Uses the fast configuration (E/P model, 10-minute step, one simulated
//! year extrapolated over the lifetime).

use std::path::PathBuf;

use bess_sizer::config::load_scenario;
use bess_sizer::report::{curve_svg, write_curve_csv, write_text};
use bess_sizer::sizing::{approximate_config, sweep};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let threads: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/microgrid.toml");
    let sc = load_scenario(&path)?;
    let cfg = approximate_config(&sc.system);

    let out = sweep(&cfg, &sc.sizes, sc.indicator, threads)?;
    println!("size[kWh]  {}  replacements", sc.indicator.label());
    for r in &out.runs {
        println!(
            "{:>9.0}  {:>14.2}  {:?}",
            r.size_kwh,
            r.indicator(sc.indicator)?,
            r.replacement_years
        );
    }
    let (size, value) = out.curve.optimum;
    println!(
        "optimum {size:.0} kWh at {value:.2}, {:.2} s per size",
        out.mean_runtime_s()
    );

    if let Some(dir) = args.next().map(PathBuf::from) {
        std::fs::create_dir_all(&dir)?;
        write_curve_csv(&dir.join("curve.csv"), &out.curve)?;
        write_text(&dir.join("curve.svg"), &curve_svg(&out.curve, "microgrid"))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
