use super::{efficiency_lookup, BatterySpec, BatteryState, BatteryStep, EfficiencyMode};

fn eta(spec: &BatterySpec, state: &BatteryState, power_kw: f64, charging: bool) -> f64 {
    match spec.efficiency_mode {
        EfficiencyMode::Constant => {
            if charging {
                spec.eta_charge
            } else {
                spec.eta_discharge
            }
        }
        EfficiencyMode::Table => {
            let c_rate = power_kw.abs() / state.capacity_kwh();
            efficiency_lookup(spec, state.soc, c_rate, spec.temperature_c)
        }
    }
}

/// Energy/power model step. The request is clipped so the SOC window is
/// never left; it never fails.
pub fn ep_step(
    state: &BatteryState,
    spec: &BatterySpec,
    p_request_kw: f64,
    dt_h: f64,
) -> BatteryStep {
    if p_request_kw == 0.0 || dt_h <= 0.0 {
        return BatteryStep::idle(state);
    }
    let cap = state.capacity_kwh();
    let stored = state.soc * cap;
    let p_lim = spec.c_rate_limit_kw(state);
    let mut next = *state;

    let (power, delta, eff) = if p_request_kw > 0.0 {
        let mut p = p_request_kw.min(p_lim);
        let e = eta(spec, state, p, true);
        let room = (spec.soc_max * cap - stored).max(0.0);
        let mut de = p * dt_h * e;
        if de > room {
            de = room;
            p = de / (dt_h * e);
        }
        (p, de, e)
    } else {
        let mut d = (-p_request_kw).min(p_lim);
        let e = eta(spec, state, d, false);
        let avail = (stored - spec.soc_min * cap).max(0.0);
        let mut de = d * dt_h / e;
        if de > avail {
            de = avail;
            d = de * e / dt_h;
        }
        (-d, -de, e)
    };

    next.soc =
        ((stored + delta) / cap).clamp(spec.soc_min.min(state.soc), spec.soc_max.max(state.soc));
    next.throughput_kwh += delta.abs();
    BatteryStep {
        state: next,
        power_kw: power,
        stored_delta_kwh: delta,
        loss_kwh: (power * dt_h - delta).abs(),
        efficiency: eff,
    }
}

pub(super) fn limits(state: &BatteryState, spec: &BatterySpec, dt_h: f64) -> (f64, f64) {
    let cap = state.capacity_kwh();
    let stored = state.soc * cap;
    let p_lim = spec.c_rate_limit_kw(state);
    let room = (spec.soc_max * cap - stored).max(0.0);
    let avail = (stored - spec.soc_min * cap).max(0.0);
    let ec = eta(spec, state, p_lim.min(room / dt_h), true);
    let ed = eta(spec, state, p_lim.min(avail / dt_h), false);
    let charge = p_lim.min(room / (ec * dt_h));
    let discharge = p_lim.min(avail * ed / dt_h);
    (charge, discharge)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn spec(eta: f64) -> BatterySpec {
        BatterySpec {
            module_kwh: 100.0,
            n_modules: 1,
            eta_charge: eta,
            eta_discharge: eta,
            ..BatterySpec::default()
        }
    }

    #[test]
    fn charge_example() {
        let s = spec(0.95);
        let st = BatteryState::new(100.0, 0.5);
        let out = ep_step(&st, &s, 100.0, 0.1);
        assert_abs_diff_eq!(out.state.soc, 0.595, epsilon = 1e-12);
        assert_eq!(out.power_kw, 100.0);
        assert_abs_diff_eq!(out.loss_kwh, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_request_is_identity() {
        let st = BatteryState::new(100.0, 0.42);
        let out = ep_step(&st, &spec(0.9), 0.0, 0.5);
        assert_eq!(out.state, st);
        assert_eq!(out.power_kw, 0.0);
    }

    #[test]
    fn empty_battery_cannot_discharge() {
        let s = spec(0.9);
        let st = BatteryState::new(100.0, s.soc_min);
        let out = ep_step(&st, &s, -50.0, 0.25);
        assert_eq!(out.power_kw, 0.0);
        assert_eq!(out.state.soc, s.soc_min);
    }

    #[test]
    fn clips_at_full() {
        let s = spec(1.0);
        let st = BatteryState::new(100.0, 0.9);
        let out = ep_step(&st, &s, 100.0, 1.0);
        assert_abs_diff_eq!(out.power_kw, 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(out.state.soc, 0.95, epsilon = 1e-12);
        let (c, d) = limits(&st, &s, 1.0);
        assert_abs_diff_eq!(c, 5.0, epsilon = 1e-9);
        assert_abs_diff_eq!(d, 85.0, epsilon = 1e-9);
    }

    #[test]
    fn c_rate_limit() {
        let s = BatterySpec {
            max_c_rate: Some(0.5),
            ..spec(1.0)
        };
        let st = BatteryState::new(100.0, 0.5);
        assert_eq!(ep_step(&st, &s, 80.0, 0.1).power_kw, 50.0);
        assert_eq!(ep_step(&st, &s, -80.0, 0.1).power_kw, -50.0);
    }

    #[test]
    fn lossless_round_trip() {
        let s = spec(1.0);
        let st = BatteryState::new(100.0, 0.3);
        let a = ep_step(&st, &s, 40.0, 0.5);
        let b = ep_step(&a.state, &s, -40.0, 0.5);
        assert_eq!(b.state.soc, st.soc);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn window_and_ledger(soc in 0.05f64..=0.95, p in -500.0f64..500.0, eta in 0.5f64..=1.0,
                                 dt in 0.01f64..2.0, soh in 0.71f64..=1.0) {
                let s = spec(eta);
                let mut st = BatteryState::new(100.0, soc);
                st.soh = soh;
                let out = ep_step(&st, &s, p, dt);
                prop_assert!(out.state.soc >= s.soc_min - 1e-12 && out.state.soc <= s.soc_max + 1e-12);
                prop_assert!(out.power_kw.abs() <= p.abs() + 1e-12);
                prop_assert!(out.power_kw * p >= 0.0);
                // terminal energy in - stored delta = losses >= 0
                let losses = out.power_kw * dt - out.stored_delta_kwh;
                prop_assert!(losses >= -1e-9);
                prop_assert!((losses - out.loss_kwh).abs() <= 1e-9);
                let stored_change = (out.state.soc - st.soc) * st.capacity_kwh();
                prop_assert!((stored_change - out.stored_delta_kwh).abs() <= 1e-9);
            }
        }
    }
}
