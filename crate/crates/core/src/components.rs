//! Non-storage components: PV plant, diesel genset, power converter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PvPlant {
    pub installed_kwp: f64,
    /// Fraction of output lost per year, compounded.
    pub annual_degradation: f64,
}

impl PvPlant {
    pub fn new(installed_kwp: f64, annual_degradation: f64) -> Result<Self> {
        if !(installed_kwp > 0.0 && installed_kwp.is_finite()) {
            return Err(Error::param(
                "components.pv.installed_kwp",
                "must be positive",
            ));
        }
        if !(0.0..1.0).contains(&annual_degradation) {
            return Err(Error::param(
                "components.pv.annual_degradation",
                "must be in [0, 1)",
            ));
        }
        Ok(Self {
            installed_kwp,
            annual_degradation,
        })
    }

    /// Output multiplier for a zero-based project year.
    pub fn degradation_factor(&self, year_index: u32) -> f64 {
        (1.0 - self.annual_degradation).powi(year_index as i32)
    }
}

/// PV producible for a given project year.
pub fn pv_available(plant: &PvPlant, producible: &TimeSeries, year_index: u32) -> TimeSeries {
    producible.scaled(plant.degradation_factor(year_index))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genset {
    pub rated_kw: f64,
    /// `(load_fraction, liters_per_hour)`, strictly increasing in both.
    pub fuel_points: Vec<(f64, f64)>,
    pub min_on_steps: u32,
    pub min_off_steps: u32,
    pub fuel_price: f64,
    pub start_cost: f64,
}

impl Genset {
    pub fn new(
        rated_kw: f64,
        fuel_points: Vec<(f64, f64)>,
        fuel_price: f64,
        start_cost: f64,
    ) -> Result<Self> {
        let g = Self {
            rated_kw,
            fuel_points,
            min_on_steps: 1,
            min_off_steps: 1,
            fuel_price,
            start_cost,
        };
        g.validate()?;
        Ok(g)
    }

    /// 80 kWe genset with the four-point fuel table (50/75/100/110 % load).
    pub fn reference_80kw(fuel_price: f64, start_cost: f64) -> Self {
        Self::new(
            80.0,
            vec![(0.50, 11.5), (0.75, 16.5), (1.00, 23.5), (1.10, 25.5)],
            fuel_price,
            start_cost,
        )
        .expect("reference genset is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rated_kw > 0.0 && self.rated_kw.is_finite()) {
            return Err(Error::param(
                "components.genset.rated_kw",
                "must be positive",
            ));
        }
        if self.fuel_points.len() < 2 {
            return Err(Error::param(
                "components.genset.fuel_points",
                "need at least two points",
            ));
        }
        for w in self.fuel_points.windows(2) {
            if !(w[1].0 > w[0].0 && w[1].1 > w[0].1) {
                return Err(Error::param(
                    "components.genset.fuel_points",
                    "load fraction and consumption must be strictly increasing",
                ));
            }
        }
        if self.fuel_points[0].0 < 0.0 || self.fuel_points[0].1 < 0.0 {
            return Err(Error::param(
                "components.genset.fuel_points",
                "values must be non-negative",
            ));
        }
        if self.fuel_price < 0.0 || self.start_cost < 0.0 {
            return Err(Error::param(
                "components.genset.fuel_price",
                "prices must be non-negative",
            ));
        }
        if self.min_on_steps == 0 || self.min_off_steps == 0 {
            return Err(Error::param(
                "components.genset.min_on_steps",
                "dwell counts must be at least 1",
            ));
        }
        Ok(())
    }

    /// Highest admissible load fraction (the last table point).
    pub fn max_load_fraction(&self) -> f64 {
        self.fuel_points.last().map(|p| p.0).unwrap_or(1.0)
    }

    pub fn max_output_kw(&self) -> f64 {
        self.rated_kw * self.max_load_fraction()
    }

    /// Fuel consumption in L/h for a running genset.
    ///
    /// Linear between table points; below the first point the first segment
    /// is extended and floored at zero.
    pub fn fuel_rate(&self, load_fraction: f64) -> Result<f64> {
        let max = self.max_load_fraction();
        if load_fraction > max + 1e-12 {
            return Err(Error::FuelTableRange { load_fraction, max });
        }
        if load_fraction < 0.0 {
            return Err(Error::param("load_fraction", "must be non-negative"));
        }
        Ok(self.fuel_rate_unchecked(load_fraction))
    }

    /// Same as [`Genset::fuel_rate`] but returns 0 when the genset is off.
    pub fn fuel_rate_if(&self, running: bool, load_fraction: f64) -> Result<f64> {
        if running {
            self.fuel_rate(load_fraction)
        } else {
            Ok(0.0)
        }
    }

    pub(crate) fn fuel_rate_unchecked(&self, load_fraction: f64) -> f64 {
        let pts = &self.fuel_points;
        let seg = pts
            .windows(2)
            .position(|w| load_fraction <= w[1].0)
            .unwrap_or(pts.len() - 2);
        let (x0, y0) = pts[seg];
        let (x1, y1) = pts[seg + 1];
        if load_fraction == x1 {
            return y1;
        }
        if load_fraction == x0 {
            return y0;
        }
        (y0 + (y1 - y0) * (load_fraction - x0) / (x1 - x0)).max(0.0)
    }

    /// Liters burned producing `kw` for `dt_h` hours while running.
    pub fn fuel_liters(&self, kw: f64, dt_h: f64) -> f64 {
        let lf = (kw / self.rated_kw).clamp(0.0, self.max_load_fraction());
        self.fuel_rate_unchecked(lf) * dt_h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowDirection {
    /// Battery towards the AC bus.
    ToGrid,
    /// AC bus towards the battery.
    FromGrid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Converter {
    pub rating_kva: f64,
    pub efficiency: f64,
}

impl Converter {
    pub fn new(rating_kva: f64, efficiency: f64) -> Result<Self> {
        if !(rating_kva > 0.0 && rating_kva.is_finite()) {
            return Err(Error::param(
                "components.converter.rating_kva",
                "must be positive",
            ));
        }
        if !(efficiency > 0.0 && efficiency <= 1.0) {
            return Err(Error::param(
                "components.converter.efficiency",
                "must be in (0, 1]",
            ));
        }
        Ok(Self {
            rating_kva,
            efficiency,
        })
    }
}

/// Limits a flow to the converter rating (unity power factor, so kVA = kW)
/// and returns the power that comes out of the other side.
pub fn converter_clip(p_requested_kw: f64, c: &Converter, _direction: FlowDirection) -> f64 {
    let mag = p_requested_kw.abs().min(c.rating_kva);
    (mag * c.efficiency).copysign(p_requested_kw)
}
