//! LCOE, NPV and IRR of a hand-written cash flow schedule.
//!
//! cargo run --example finance_indicators

use bess_sizer::economics::{irr, lcoe, npv, CashflowSchedule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // year 0 investment, then ten years of O&M, sales and delivered energy
    let years = 11;
    let mut capex = vec![0.0; years];
    capex[0] = 250_000.0;
    capex[6] = 40_000.0; // mid-life battery replacement
    let opex = (0..years)
        .map(|n| if n == 0 { 0.0 } else { 6_000.0 })
        .collect();
    let income = (0..years)
        .map(|n| if n == 0 { 0.0 } else { 48_000.0 })
        .collect();
    let energy = (0..years)
        .map(|n| if n == 0 { 0.0 } else { 180.0 })
        .collect();
    let sched = CashflowSchedule::from_parts(capex, opex, income, energy)?;

    println!("year  net cash flow [EUR]");
    for (n, c) in sched.cf.iter().enumerate() {
        println!("{n:>4}  {c:>12.0}");
    }
    for r in [0.0, 0.04, 0.08] {
        println!(
            "r = {:>4.2}: LCOE {:>7.2} EUR/MWh, NPV {:>10.0} EUR",
            r,
            lcoe(&sched, r)?,
            npv(&sched, r)
        );
    }
    let root = irr(&sched)?;
    println!(
        "IRR {:.4} (NPV at IRR {:.2e}, multiple roots: {})",
        root.rate,
        npv(&sched, root.rate),
        root.multiple_roots
    );
    Ok(())
}
