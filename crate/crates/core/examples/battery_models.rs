//! Energy/power versus equivalent-circuit battery models, the efficiency
//! table and capacity requirements.
//!
//! cargo run --example battery_models

use bess_sizer::battery::{
    battery_step, min_rated_capacity, BatteryModelKind, BatterySpec, BatteryState, EcParams,
    EfficiencyMode, EfficiencyTable,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ep = BatterySpec {
        efficiency_mode: EfficiencyMode::Table,
        efficiency_table: Some(EfficiencyTable::li_ion_reference()),
        ..BatterySpec::default()
    }
    .with_size_kwh(444.0)?;
    let ec = BatterySpec {
        ec_params: Some(EcParams::nmc_reference(0.002)),
        ..ep.clone()
    };
    println!("{} modules, {:.1} kWh", ep.n_modules, ep.rated_kwh());

    let state = BatteryState::new(ep.rated_kwh(), 0.5);
    let dt_h = 1.0 / 60.0;
    println!(" c-rate   power[kW]   EP eff   EC eff   EC loss[Wh]");
    for c in [0.05, 0.25, 0.5, 1.0] {
        for sign in [1.0, -1.0] {
            let p = sign * c * ep.rated_kwh();
            let a = battery_step(BatteryModelKind::Ep, &state, &ep, p, dt_h);
            let b = battery_step(BatteryModelKind::Ec, &state, &ec, p, dt_h);
            println!(
                "{:>7.2}  {:>10.1}  {:>7.4}  {:>7.4}  {:>12.1}",
                c,
                p,
                a.efficiency,
                b.efficiency,
                b.loss_kwh * 1e3
            );
        }
    }

    let table = EfficiencyTable::li_ion_reference();
    println!(
        "table at soc 0.5, 25 C: {:?}",
        [0.1, 0.3, 0.7].map(|c| table.lookup(0.5, c, 25.0))
    );
    println!(
        "rated capacity for 500 kWh useful at 90% DoD and 30% fade: {:.0} kWh",
        min_rated_capacity(500.0, 0.9, 0.3)?
    );
    Ok(())
}
