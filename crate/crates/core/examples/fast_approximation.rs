//! Accuracy and speed of the fast configuration against the full one.
//!
//! cargo run --example fast_approximation [threads]
//!
//! The full configuration simulates every minute of the lifetime.

use std::path::PathBuf;

use bess_sizer::config::load_scenario;
use bess_sizer::sizing::fast_approximation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let threads: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1);
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/microgrid.toml");
    let sc = load_scenario(&path)?;
    let sizes = [222.0, 333.0, 444.0, 555.0];

    let r = fast_approximation(&sc.system, &sizes, sc.indicator, threads, None)?;
    println!("size[kWh]  full      fast      error[%]");
    for (i, s) in sizes.iter().enumerate() {
        println!(
            "{s:>9.0}  {:>8.2}  {:>8.2}  {:>8.2}",
            r.baseline.curve.points[i].1, r.approx.curve.points[i].1, r.errors_pct[i]
        );
    }
    println!(
        "optimum full {:.0} kWh, fast {:.0} kWh, same: {}",
        r.baseline.curve.optimum.0, r.approx.curve.optimum.0, r.same_optimum
    );
    println!(
        "mean error {:.2} %, {:.2} s vs {:.3} s per size, speedup {:.0}x",
        r.mean_error_pct, r.baseline_runtime_s, r.approx_runtime_s, r.speedup
    );
    Ok(())
}
