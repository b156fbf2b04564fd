use serde::{Deserialize, Serialize};

use super::{settle_microgrid, DispatchDecision, GensetStatus, StorageEnvelope};
use crate::components::Genset;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasicParams {
    /// Start the genset at or below this SOC.
    pub soc_start: f64,
    /// Stop it at or above this SOC.
    pub soc_stop: f64,
}

impl Default for BasicParams {
    fn default() -> Self {
        Self {
            soc_start: 0.10,
            soc_stop: 0.30,
        }
    }
}

/// Hysteresis control of the genset on battery SOC.
///
/// While running, the genset covers the net load and charges the battery as
/// fast as the envelope allows, up to 100 % rated output (beyond that only
/// when the net load itself needs the overload range).
pub fn microgrid_basic_step(
    load_kw: f64,
    pv_kw: f64,
    env: &StorageEnvelope,
    status: GensetStatus,
    genset: &Genset,
    params: &BasicParams,
) -> DispatchDecision {
    let mut on = status.on;
    let mut started = false;
    if !on && env.soc <= params.soc_start && status.steps_in_state >= genset.min_off_steps {
        on = true;
        started = true;
    } else if on && env.soc >= params.soc_stop && status.steps_in_state >= genset.min_on_steps {
        on = false;
    }
    let net = load_kw - pv_kw;
    // battery alone cannot hold the bus
    if !on && net > env.max_discharge_kw {
        on = true;
        started = true;
    }
    let g_max = genset.max_output_kw();
    let g = if on {
        if net > genset.rated_kw {
            net.min(g_max)
        } else {
            (net + env.max_charge_kw).clamp(0.0, genset.rated_kw)
        }
    } else {
        0.0
    };
    let mut d = settle_microgrid(load_kw, pv_kw, on, g, g_max, env);
    d.genset_started = started;
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(soc: f64) -> StorageEnvelope {
        StorageEnvelope {
            soc,
            max_charge_kw: 100.0,
            max_discharge_kw: 100.0,
        }
    }

    fn status(on: bool) -> GensetStatus {
        GensetStatus {
            on,
            steps_in_state: 10,
        }
    }

    #[test]
    fn starts_below_ten_percent() {
        let g = Genset::reference_80kw(1.0, 0.0);
        let d = microgrid_basic_step(
            30.0,
            0.0,
            &env(0.09),
            status(false),
            &g,
            &BasicParams::default(),
        );
        assert!(d.genset_started && d.genset_on);
        // serves load and charges at up to rated output
        assert_eq!(d.p_genset, 80.0);
        assert_eq!(d.p_batt, 50.0);
    }

    #[test]
    fn stops_above_thirty_percent() {
        let g = Genset::reference_80kw(1.0, 0.0);
        let d = microgrid_basic_step(
            30.0,
            0.0,
            &env(0.31),
            status(true),
            &g,
            &BasicParams::default(),
        );
        assert!(!d.genset_on);
        assert_eq!(d.p_genset, 0.0);
        assert_eq!(d.p_batt, -30.0);
    }

    #[test]
    fn holds_inside_band_and_charges_surplus() {
        let g = Genset::reference_80kw(1.0, 0.0);
        let d = microgrid_basic_step(
            30.0,
            50.0,
            &env(0.20),
            status(false),
            &g,
            &BasicParams::default(),
        );
        assert!(!d.genset_on && !d.genset_started);
        assert_eq!(d.p_batt, 20.0);
        assert_eq!(d.pv_curtailed, 0.0);
    }

    #[test]
    fn curtails_when_full() {
        let g = Genset::reference_80kw(1.0, 0.0);
        let full = StorageEnvelope {
            soc: 0.95,
            max_charge_kw: 0.0,
            max_discharge_kw: 100.0,
        };
        let d = microgrid_basic_step(
            30.0,
            50.0,
            &full,
            status(false),
            &g,
            &BasicParams::default(),
        );
        assert_eq!(d.pv_curtailed, 20.0);
        assert_eq!(d.balance_residual(30.0, 50.0), 0.0);
    }

    #[test]
    fn unservable_load_is_recorded() {
        let g = Genset::reference_80kw(1.0, 0.0);
        let empty = StorageEnvelope {
            soc: 0.05,
            max_charge_kw: 100.0,
            max_discharge_kw: 0.0,
        };
        let d = microgrid_basic_step(
            100.0,
            0.0,
            &empty,
            status(true),
            &g,
            &BasicParams::default(),
        );
        assert_eq!(d.p_genset, 88.0);
        assert!((d.unserved - 12.0).abs() < 1e-12);
        assert!(d.balance_residual(100.0, 0.0).abs() < 1e-12);
    }

    #[test]
    fn dwell_time_delays_stop() {
        let mut g = Genset::reference_80kw(1.0, 0.0);
        g.min_on_steps = 5;
        let st = GensetStatus {
            on: true,
            steps_in_state: 2,
        };
        let d = microgrid_basic_step(30.0, 0.0, &env(0.5), st, &g, &BasicParams::default());
        assert!(d.genset_on);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            // State changes only on threshold crossings.
            #[test]
            fn strict_hysteresis(soc in 0.0f64..1.0, on: bool, load in 0.0f64..60.0, pv in 0.0f64..150.0) {
                let g = Genset::reference_80kw(1.0, 0.0);
                let p = BasicParams::default();
                let d = microgrid_basic_step(load, pv, &env(soc), status(on), &g, &p);
                prop_assert!(d.balance_residual(load, pv).abs() < 1e-9);
                if d.genset_on != on {
                    if on { prop_assert!(soc >= p.soc_stop); } else { prop_assert!(soc <= p.soc_start); }
                }
                if soc > p.soc_start && soc < p.soc_stop {
                    prop_assert_eq!(d.genset_on, on);
                }
            }
        }
    }
}
