//! Day-ahead injection commitment for the bundled PV plant and one year of
//! operation against it.
//!
//! cargo run --example pv_injection_day

use std::path::PathBuf;

use bess_sizer::config::load_scenario;
use bess_sizer::dispatch::{pv_injection_announce, AnnounceModel};
use bess_sizer::engine::{simulate, PreparedInputs};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/pv_injection.toml");
    let cfg = load_scenario(&path)?.system;
    let inputs = PreparedInputs::new(&cfg)?;
    let kwp = cfg.pv.installed_kwp;

    let day = 172 * 1440;
    let forecast = inputs.pv_forecast.window(day, 1440)?.scaled(kwp);
    let model = AnnounceModel {
        capacity_kwh: cfg.battery.rated_kwh(),
        soc: cfg.initial_soc,
        soc_min: cfg.battery.soc_min,
        soc_max: cfg.battery.soc_max,
        eta_charge: cfg.battery.eta_charge * cfg.converter.efficiency,
        eta_discharge: cfg.battery.eta_discharge * cfg.converter.efficiency,
    };
    let mut params = cfg.dispatch.injection;
    params.installed_kwp = kwp;
    let a = pv_injection_announce(&forecast, &model, &params)?;
    println!(
        "announced {:.0} kWh, reserve {:.0} kWh for the peak window, warning {}",
        a.profile.energy_kwh(),
        a.reserve_kwh,
        a.warning
    );
    println!("hour  forecast[kW]  committed[kW]");
    for h in (0..24).step_by(2) {
        let i = h * 60 + 30;
        println!(
            "{h:>4}  {:>12.1}  {:>13.1}",
            forecast.values()[i],
            a.profile.values()[i]
        );
    }

    for blend in [0.0, 1.0] {
        let mut c = cfg.clone();
        c.forecast_blend = blend;
        let y = simulate(&c, 1)?.years[0];
        println!(
            "forecast blend {blend:.1}: injected {:.0} MWh, peak window {:.0} MWh, penalised {:.1} MWh",
            y.energy_injected_mwh, y.peak_window_energy_mwh, y.penalized_deviation_mwh
        );
    }
    Ok(())
}
