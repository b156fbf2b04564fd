//! TOML scenario files.
//!
//! A scenario names the application, where the time series come from, the
//! components, battery, dispatch strategy, economics, simulation settings
//! and the size grid. Unknown keys are rejected; relative paths resolve
//! against the scenario file's directory.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use crate::battery::{
    AgeingParams, BatteryModelKind, BatterySpec, EcParams, EfficiencyMode, EfficiencyTable,
    DEFAULT_MODULE_KWH, DEFAULT_SOC_MAX, DEFAULT_SOC_MIN,
};
use crate::components::{Converter, Genset, PvPlant};
use crate::dispatch::{BasicParams, InjectionParams, OptimizedParams, Strategy};
use crate::economics::EconParams;
use crate::engine::{Application, DispatchConfig, InputSeries, SystemConfig, DAYS_PER_YEAR};
use crate::error::{Error, Result};
use crate::sizing::{size_range, Indicator};
use crate::timeseries::{
    load_csv_series, persistence_forecast, synth_forecast, synth_profiles, synth_start,
    ProfileKind, TimeSeries,
};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub application: Application,
    pub timeseries: TimeseriesSection,
    pub components: ComponentsSection,
    pub battery: BatterySection,
    pub dispatch: DispatchSection,
    #[serde(default)]
    pub forecast: ForecastSection,
    #[serde(default)]
    pub economics: EconParams,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub sizing: SizingSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeseriesSection {
    pub synthetic: Option<SyntheticSection>,
    pub csv: Option<CsvSection>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub seed: u64,
    #[serde(default = "default_days")]
    pub days: u32,
    /// Standard deviation of the daily PV forecast bias.
    #[serde(default = "default_forecast_error")]
    pub pv_forecast_error: f64,
}

fn default_days() -> u32 {
    DAYS_PER_YEAR as u32
}

fn default_forecast_error() -> f64 {
    0.25
}

/// CSV inputs. PV is per kWp installed. Missing forecasts fall back to a
/// 7-day persistence forecast.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvSection {
    pub step_minutes: u32,
    pub load: Option<PathBuf>,
    pub pv: PathBuf,
    pub load_forecast: Option<PathBuf>,
    pub pv_forecast: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentsSection {
    pub pv: PvSection,
    pub genset: Option<GensetSection>,
    pub converter: ConverterSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PvSection {
    pub installed_kwp: f64,
    #[serde(default = "default_pv_degradation")]
    pub annual_degradation: f64,
}

fn default_pv_degradation() -> f64 {
    0.005
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GensetSection {
    pub rated_kw: f64,
    pub fuel_points: Option<Vec<(f64, f64)>>,
    #[serde(default = "one")]
    pub min_on_steps: u32,
    #[serde(default = "one")]
    pub min_off_steps: u32,
}

fn one() -> u32 {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConverterSection {
    pub rating_kva: f64,
    #[serde(default = "default_converter_eff")]
    pub efficiency: f64,
}

fn default_converter_eff() -> f64 {
    0.98
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatterySection {
    pub size_kwh: f64,
    #[serde(default = "default_module")]
    pub module_kwh: f64,
    #[serde(default)]
    pub model: BatteryModelKind,
    #[serde(default = "default_eta")]
    pub eta_charge: f64,
    #[serde(default = "default_eta")]
    pub eta_discharge: f64,
    #[serde(default)]
    pub efficiency_mode: EfficiencyMode,
    /// `"reference"` for the built-in table, otherwise a CSV path.
    pub efficiency_table: Option<String>,
    #[serde(default = "default_soc_min")]
    pub soc_min: f64,
    #[serde(default = "default_soc_max")]
    pub soc_max: f64,
    #[serde(default = "default_initial_soc")]
    pub initial_soc: f64,
    pub max_c_rate: Option<f64>,
    #[serde(default = "default_temperature")]
    pub temperature_c: f64,
    #[serde(default)]
    pub ageing: AgeingParams,
    pub ec: Option<EcSection>,
}

fn default_module() -> f64 {
    DEFAULT_MODULE_KWH
}
fn default_eta() -> f64 {
    0.95
}
fn default_soc_min() -> f64 {
    DEFAULT_SOC_MIN
}
fn default_soc_max() -> f64 {
    DEFAULT_SOC_MAX
}
fn default_initial_soc() -> f64 {
    0.5
}
fn default_temperature() -> f64 {
    25.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EcSection {
    pub internal_resistance_ohm: f64,
    #[serde(default = "default_series")]
    pub series_cells: u32,
    #[serde(default = "one")]
    pub parallel_strings: u32,
    /// `[[soc, volts], ...]`; the NMC reference curve when absent.
    pub ocv_curve: Option<Vec<(f64, f64)>>,
    pub v_min: Option<f64>,
    pub v_max: Option<f64>,
}

fn default_series() -> u32 {
    14
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispatchSection {
    pub strategy: Strategy,
    #[serde(default)]
    pub basic: BasicParams,
    #[serde(default)]
    pub optimized: OptimizedParams,
    #[serde(default)]
    pub pv_injection: InjectionParams,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ForecastSection {
    #[serde(default)]
    pub blend: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "one")]
    pub step_minutes: u32,
    #[serde(default = "default_lifetime")]
    pub lifetime_years: u32,
    #[serde(default)]
    pub extrapolate: bool,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            step_minutes: 1,
            lifetime_years: default_lifetime(),
            extrapolate: false,
        }
    }
}

fn default_lifetime() -> u32 {
    20
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SizingSection {
    pub sizes: Option<Vec<f64>>,
    /// `"lo:hi:step"` in kWh.
    pub range: Option<String>,
    #[serde(default)]
    pub indicator: Indicator,
}

/// Parses `"lo:hi:step"`.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let nums = parts
        .iter()
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::param("sizing.range", format!("`{s}` is not lo:hi:step")))?;
    if nums.len() != 3 {
        return Err(Error::param(
            "sizing.range",
            format!("`{s}` is not lo:hi:step"),
        ));
    }
    size_range(nums[0], nums[1], nums[2])
}

/// Parses `"a,b,c"`.
pub fn parse_sizes(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::param("sizing.sizes", format!("`{p}` is not a number")))
        })
        .collect()
}

/// A loaded scenario ready to simulate.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub system: SystemConfig,
    pub sizes: Vec<f64>,
    pub indicator: Indicator,
}

impl ScenarioFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_str_at(&text, path)
    }

    /// Parses TOML text; `path` is used for messages only.
    pub fn from_str_at(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| {
            let msg = match e.span() {
                Some(span) => {
                    let line = text[..span.start].lines().count().max(1);
                    format!("line {line}: {}", e.message())
                }
                None => e.message().to_string(),
            };
            Error::Config {
                path: path.to_path_buf(),
                msg,
            }
        })
    }

    /// Builds the simulation config, loading or generating inputs.
    pub fn build(&self, base_dir: &Path) -> Result<LoadedScenario> {
        let resolve = |p: &Path| -> PathBuf {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base_dir.join(p)
            }
        };
        let econ = EconParams {
            lifetime_years: self.simulation.lifetime_years,
            ..self.economics
        };
        econ.validate()?;

        let pv = PvPlant::new(
            self.components.pv.installed_kwp,
            self.components.pv.annual_degradation,
        )?;
        let genset = match &self.components.genset {
            Some(g) => {
                let mut gs = match &g.fuel_points {
                    Some(pts) => Genset::new(
                        g.rated_kw,
                        pts.clone(),
                        econ.fuel_eur_per_liter,
                        econ.genset_start_eur,
                    )?,
                    None => {
                        let mut r =
                            Genset::reference_80kw(econ.fuel_eur_per_liter, econ.genset_start_eur);
                        r.rated_kw = g.rated_kw;
                        r
                    }
                };
                gs.min_on_steps = g.min_on_steps;
                gs.min_off_steps = g.min_off_steps;
                gs.validate()?;
                Some(gs)
            }
            None => None,
        };
        let converter = Converter::new(
            self.components.converter.rating_kva,
            self.components.converter.efficiency,
        )?;

        let b = &self.battery;
        let table = match b.efficiency_table.as_deref() {
            None => None,
            Some("reference") => Some(EfficiencyTable::li_ion_reference()),
            Some(p) => Some(EfficiencyTable::from_csv(&resolve(Path::new(p)))?),
        };
        let ec = match &b.ec {
            None => None,
            Some(e) => {
                let mut p = match &e.ocv_curve {
                    Some(curve) => EcParams::new(
                        curve.clone(),
                        e.internal_resistance_ohm,
                        e.series_cells,
                        e.parallel_strings,
                    )?,
                    None => {
                        let r = EcParams::nmc_reference(e.internal_resistance_ohm);
                        EcParams::new(
                            r.ocv_curve().to_vec(),
                            e.internal_resistance_ohm,
                            e.series_cells,
                            e.parallel_strings,
                        )?
                    }
                };
                if e.v_min.is_some() || e.v_max.is_some() {
                    let v_min = e.v_min.unwrap_or(p.v_min);
                    let v_max = e.v_max.unwrap_or(p.v_max);
                    p = p.with_voltage_limits(v_min, v_max)?;
                }
                Some(p)
            }
        };
        if !(b.size_kwh > 0.0) {
            return Err(Error::param(
                "battery.size_kwh",
                format!("{} must be positive", b.size_kwh),
            ));
        }
        let proto = BatterySpec {
            module_kwh: b.module_kwh,
            n_modules: 1,
            eta_charge: b.eta_charge,
            eta_discharge: b.eta_discharge,
            efficiency_mode: b.efficiency_mode,
            efficiency_table: table,
            ec_params: ec,
            ageing: b.ageing,
            soc_min: b.soc_min,
            soc_max: b.soc_max,
            max_c_rate: b.max_c_rate,
            temperature_c: b.temperature_c,
        };
        proto.validate()?;
        let battery = proto.with_size_kwh(b.size_kwh)?;

        let inputs = self.load_inputs(&resolve)?;
        let system = SystemConfig {
            application: self.application,
            inputs: Arc::new(inputs),
            forecast_blend: self.forecast.blend,
            step_minutes: self.simulation.step_minutes,
            pv,
            genset,
            converter,
            battery,
            battery_model: b.model,
            initial_soc: b.initial_soc,
            dispatch: DispatchConfig {
                strategy: self.dispatch.strategy,
                basic: self.dispatch.basic,
                optimized: self.dispatch.optimized,
                injection: self.dispatch.pv_injection,
            },
            economics: econ,
            extrapolate: self.simulation.extrapolate,
        };
        system.validate()?;

        let sizes = match (&self.sizing.sizes, &self.sizing.range) {
            (Some(_), Some(_)) => {
                return Err(Error::param(
                    "sizing",
                    "give either `sizes` or `range`, not both",
                ));
            }
            (Some(s), None) => s.clone(),
            (None, Some(r)) => parse_range(r)?,
            (None, None) => vec![b.size_kwh],
        };
        if let Some(bad) = sizes.iter().find(|s| !(**s > 0.0)) {
            return Err(Error::param(
                "sizing.sizes",
                format!("{bad} must be positive"),
            ));
        }
        Ok(LoadedScenario {
            system,
            sizes,
            indicator: self.sizing.indicator,
        })
    }

    fn load_inputs(&self, resolve: &dyn Fn(&Path) -> PathBuf) -> Result<InputSeries> {
        let ts = &self.timeseries;
        match (&ts.synthetic, &ts.csv) {
            (Some(s), None) => {
                let pv = synth_profiles(s.seed.wrapping_add(1), s.days, ProfileKind::PvProducible)?;
                let load = match self.application {
                    Application::Microgrid => {
                        synth_profiles(s.seed, s.days, ProfileKind::IndustrialLoad)?
                    }
                    Application::PvInjection => {
                        TimeSeries::constant(synth_start(), 1, pv.len(), 0.0)?
                    }
                };
                let pv_fc = synth_forecast(&pv, s.seed.wrapping_add(2), s.pv_forecast_error)?;
                let load_fc = persistence_forecast(&load, 7 * 1440)?;
                InputSeries::new(load, pv, load_fc, pv_fc)
            }
            (None, Some(c)) => {
                let pv = load_csv_series(&resolve(&c.pv), c.step_minutes)?;
                let load = match &c.load {
                    Some(p) => load_csv_series(&resolve(p), c.step_minutes)?,
                    None if self.application == Application::Microgrid => {
                        return Err(Error::param(
                            "timeseries.csv.load",
                            "a microgrid needs a load series",
                        ));
                    }
                    None => TimeSeries::constant(pv.start(), pv.step_minutes(), pv.len(), 0.0)?,
                };
                let fc = |p: &Option<PathBuf>, actual: &TimeSeries| -> Result<TimeSeries> {
                    match p {
                        Some(p) => load_csv_series(&resolve(p), c.step_minutes),
                        None => persistence_forecast(actual, 7 * 1440),
                    }
                };
                let load_fc = fc(&c.load_forecast, &load)?;
                let pv_fc = fc(&c.pv_forecast, &pv)?;
                InputSeries::new(load, pv, load_fc, pv_fc)
            }
            _ => Err(Error::param(
                "timeseries",
                "exactly one of `timeseries.synthetic` or `timeseries.csv` is required",
            )),
        }
    }
}

/// Reads and builds a scenario file.
pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let file = ScenarioFile::from_path(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    file.build(dir)
}
