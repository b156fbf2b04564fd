use std::path::Path;

use super::{BatterySpec, EfficiencyMode};
use crate::error::{Error, Result};

/// One-way efficiency on a (temperature, soc, c-rate) grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyTable {
    soc: Vec<f64>,
    c_rate: Vec<f64>,
    temp_c: Vec<f64>,
    /// Row-major `[temp][soc][c_rate]`.
    values: Vec<f64>,
}

fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(Error::param(name, "axis is empty"));
    }
    if axis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param(name, "axis must be strictly increasing"));
    }
    Ok(())
}

impl EfficiencyTable {
    pub fn new(
        soc: Vec<f64>,
        c_rate: Vec<f64>,
        temp_c: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self> {
        check_axis("battery.efficiency_table.soc", &soc)?;
        check_axis("battery.efficiency_table.c_rate", &c_rate)?;
        check_axis("battery.efficiency_table.temp_c", &temp_c)?;
        if values.len() != soc.len() * c_rate.len() * temp_c.len() {
            return Err(Error::param(
                "battery.efficiency_table.values",
                format!(
                    "expected {} values, found {}",
                    soc.len() * c_rate.len() * temp_c.len(),
                    values.len()
                ),
            ));
        }
        if values.iter().any(|v| !(*v > 0.0 && *v <= 1.0)) {
            return Err(Error::param(
                "battery.efficiency_table.values",
                "must be in (0, 1]",
            ));
        }
        Ok(Self {
            soc,
            c_rate,
            temp_c,
            values,
        })
    }

    /// Li-ion default, consistent with the NMC reference cell at 2 mOhm:
    /// lower at high current, cold, and SOC extremes.
    pub fn li_ion_reference() -> Self {
        let soc = vec![0.05, 0.5, 0.95];
        let c_rate = vec![0.05, 0.25, 0.5, 1.0];
        let temp_c = vec![0.0, 25.0, 45.0];
        let at25 = [0.996, 0.983, 0.966, 0.932];
        let mut values = Vec::new();
        for (ti, _) in temp_c.iter().enumerate() {
            let dt = [-0.010, 0.0, -0.003][ti];
            for (si, _) in soc.iter().enumerate() {
                let ds = if si == 1 { 0.0 } else { -0.004 };
                for v in at25 {
                    values.push(v + dt + ds);
                }
            }
        }
        Self::new(soc, c_rate, temp_c, values).expect("reference table is valid")
    }

    fn at(&self, t: usize, s: usize, c: usize) -> f64 {
        self.values[(t * self.soc.len() + s) * self.c_rate.len() + c]
    }

    /// Trilinear interpolation, clamped to the grid edges.
    pub fn lookup(&self, soc: f64, c_rate: f64, temp_c: f64) -> f64 {
        let (t0, t1, ft) = bracket(&self.temp_c, temp_c);
        let (s0, s1, fs) = bracket(&self.soc, soc);
        let (c0, c1, fc) = bracket(&self.c_rate, c_rate);
        let lerp = |a: f64, b: f64, f: f64| a + (b - a) * f;
        let plane = |t: usize| {
            let lo = lerp(self.at(t, s0, c0), self.at(t, s0, c1), fc);
            let hi = lerp(self.at(t, s1, c0), self.at(t, s1, c1), fc);
            lerp(lo, hi, fs)
        };
        lerp(plane(t0), plane(t1), ft)
    }

    /// Reads the CSV layout `temp_c,soc,<c_rate_1>,<c_rate_2>,...`, one row
    /// per (temperature, soc) pair.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Config {
                path: path.to_path_buf(),
                msg: e.to_string(),
            })?;
        let bad = |line: u64, msg: String| Error::Csv {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let headers = rdr.headers().map_err(|e| bad(1, e.to_string()))?.clone();
        if headers.len() < 3 || &headers[0] != "temp_c" || &headers[1] != "soc" {
            return Err(bad(1, "header must be `temp_c,soc,<c_rate>...`".into()));
        }
        let c_rate = headers
            .iter()
            .skip(2)
            .map(|h| {
                h.parse::<f64>()
                    .map_err(|_| bad(1, format!("bad c-rate `{h}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut rows: Vec<(f64, f64, Vec<f64>)> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i as u64 + 2;
            let rec = rec.map_err(|e| bad(line, e.to_string()))?;
            let nums = rec
                .iter()
                .map(|f| {
                    f.parse::<f64>()
                        .map_err(|_| bad(line, format!("bad number `{f}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            if nums.len() != c_rate.len() + 2 {
                return Err(bad(line, "wrong number of columns".into()));
            }
            rows.push((nums[0], nums[1], nums[2..].to_vec()));
        }
        let mut temp_c: Vec<f64> = rows.iter().map(|r| r.0).collect();
        temp_c.dedup();
        let mut soc: Vec<f64> = rows.iter().map(|r| r.1).collect();
        soc.sort_by(f64::total_cmp);
        soc.dedup();
        if rows.len() != temp_c.len() * soc.len() {
            return Err(bad(
                1,
                "rows must cover every (temp_c, soc) pair, grouped by temp_c".into(),
            ));
        }
        let values = rows.into_iter().flat_map(|r| r.2).collect();
        Self::new(soc, c_rate, temp_c, values)
    }
}

fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64) {
    let n = axis.len();
    if n == 1 || x <= axis[0] {
        return (0, 0, 0.0);
    }
    if x >= axis[n - 1] {
        return (n - 1, n - 1, 0.0);
    }
    let i = axis.windows(2).position(|w| x <= w[1]).unwrap_or(n - 2);
    (i, i + 1, (x - axis[i]) / (axis[i + 1] - axis[i]))
}

/// One-way efficiency for the current operating point. In constant mode
/// (or without a table) this is the mean of the fixed efficiencies.
pub fn efficiency_lookup(spec: &BatterySpec, soc: f64, c_rate: f64, temp_c: f64) -> f64 {
    match (spec.efficiency_mode, &spec.efficiency_table) {
        (EfficiencyMode::Table, Some(t)) => t.lookup(soc, c_rate, temp_c),
        _ => 0.5 * (spec.eta_charge + spec.eta_discharge),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn two_point() -> EfficiencyTable {
        EfficiencyTable::new(vec![0.0, 1.0], vec![0.5], vec![25.0], vec![0.94, 0.96]).unwrap()
    }

    #[test]
    fn constant_mode_ignores_inputs() {
        let spec = BatterySpec {
            eta_charge: 0.95,
            eta_discharge: 0.95,
            ..BatterySpec::default()
        };
        assert_eq!(efficiency_lookup(&spec, 0.1, 3.0, -10.0), 0.95);
        assert_eq!(efficiency_lookup(&spec, 0.9, 0.0, 40.0), 0.95);
    }

    #[test]
    fn grid_point_and_midpoint() {
        let t = EfficiencyTable::li_ion_reference();
        assert_eq!(t.lookup(0.5, 0.25, 25.0), 0.983);
        let t = two_point();
        assert_abs_diff_eq!(t.lookup(0.5, 0.5, 25.0), 0.95, epsilon = 1e-12);
    }

    #[test]
    fn reference_table_agrees_with_reference_cell() {
        use crate::battery::{battery_step, BatteryModelKind, BatteryState, EcParams};
        let table = EfficiencyTable::li_ion_reference();
        let spec = BatterySpec {
            n_modules: 10,
            ec_params: Some(EcParams::nmc_reference(0.002)),
            ..BatterySpec::default()
        };
        let state = BatteryState::new(spec.rated_kwh(), 0.5);
        for c in [0.05, 0.25, 0.5] {
            let p = c * spec.rated_kwh();
            let d = battery_step(BatteryModelKind::Ec, &state, &spec, -p, 1.0 / 60.0);
            assert!(
                (d.efficiency - table.lookup(0.5, c, 25.0)).abs() < 0.005,
                "c={c}: {}",
                d.efficiency
            );
        }
    }

    #[test]
    fn clamps_outside_grid() {
        let t = two_point();
        assert_eq!(t.lookup(-1.0, 9.0, 80.0), 0.94);
        assert_eq!(t.lookup(2.0, 0.0, -40.0), 0.96);
    }

    #[test]
    fn table_mode_uses_table() {
        let spec = BatterySpec {
            efficiency_mode: EfficiencyMode::Table,
            efficiency_table: Some(two_point()),
            ..BatterySpec::default()
        };
        assert_abs_diff_eq!(
            efficiency_lookup(&spec, 0.25, 1.0, 25.0),
            0.945,
            epsilon = 1e-12
        );
    }

    #[test]
    fn csv_layout() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "temp_c,soc,0.1,1.0\n0,0.0,0.90,0.80\n0,1.0,0.92,0.82\n25,0.0,0.95,0.85\n25,1.0,0.97,0.87").unwrap();
        let t = EfficiencyTable::from_csv(f.path()).unwrap();
        assert_eq!(t.lookup(1.0, 0.1, 25.0), 0.97);
        assert_abs_diff_eq!(t.lookup(0.5, 0.1, 12.5), 0.935, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(EfficiencyTable::new(vec![0.0, 1.0], vec![0.5], vec![25.0], vec![0.9]).is_err());
        assert!(
            EfficiencyTable::new(vec![1.0, 0.0], vec![0.5], vec![25.0], vec![0.9, 0.9]).is_err()
        );
    }
}
