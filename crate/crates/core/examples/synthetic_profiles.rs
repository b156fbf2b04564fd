//! Synthetic load and PV profiles, forecasts and resampling.
//!
//! cargo run --example synthetic_profiles [out_dir]

use std::path::PathBuf;

use bess_sizer::timeseries::{
    blend_forecast, persistence_forecast, resample, synth_forecast, synth_profiles, ForecastPair,
    ProfileKind,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = 7;
    let load = synth_profiles(seed, 365, ProfileKind::IndustrialLoad)?;
    let pv = synth_profiles(seed + 1, 365, ProfileKind::PvProducible)?;
    println!(
        "load: {} steps, {:.1} MWh/yr, peak {:.1} kW",
        load.len(),
        load.energy_kwh() / 1e3,
        load.max()
    );
    println!(
        "pv:   {:.0} kWh/kWp/yr, peak {:.3} kW/kWp",
        pv.energy_kwh(),
        pv.max()
    );

    let pv_fc = synth_forecast(&pv, seed + 2, 0.25)?;
    let load_fc = persistence_forecast(&load, 7 * 1440)?;
    println!(
        "pv forecast MAE   {:.4} kW/kWp",
        ForecastPair::new(pv_fc.clone(), pv.clone())?.mae()
    );
    println!(
        "load forecast MAE {:.3} kW",
        ForecastPair::new(load_fc, load.clone())?.mae()
    );
    for w in [0.0, 0.5, 1.0] {
        let b = blend_forecast(&pv_fc, &pv, w)?;
        println!(
            "  blend {w:.1}: MAE {:.4}",
            ForecastPair::new(b, pv.clone())?.mae()
        );
    }

    for step in [10, 60] {
        let r = resample(&pv, step)?;
        println!(
            "pv at {step:>2} min: {} steps, {:.0} kWh/kWp",
            r.len(),
            r.energy_kwh()
        );
    }

    if let Some(dir) = std::env::args().nth(1).map(PathBuf::from) {
        std::fs::create_dir_all(&dir)?;
        load.write_csv(&dir.join("load.csv"))?;
        pv.write_csv(&dir.join("pv.csv"))?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
