use std::fmt::Write as _;

use super::engine::format_sig6;
use crate::battery::{discharge_step, energy_density, BatteryState};
use crate::error::{ModelError, Result};
use crate::units::SECONDS_PER_HOUR;
use crate::BatterySpec;

/// Outcome of a constant-current discharge over the usable window.
#[derive(Debug, Clone, PartialEq)]
pub struct BatteryReplay {
    pub current_a: f64,
    pub delivered_ah: f64,
    pub delivered_wh: f64,
    pub duration_h: f64,
    pub energy_density_wh_per_kg: Option<f64>,
    /// `(time_s, soc, delivered_ah)` once a minute and at the end.
    pub samples: Vec<(f64, f64, f64)>,
}

impl BatteryReplay {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("time_s,current_a,soc,delivered_ah\n");
        for &(t, soc, ah) in &self.samples {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                format_sig6(t),
                format_sig6(self.current_a),
                format_sig6(soc),
                format_sig6(ah)
            );
        }
        out
    }
}

/// Discharges a full battery at `current` until it reaches `min_soc`, in
/// one-second steps with an exact partial last step.
pub fn replay_battery_experiment(spec: &BatterySpec, current: f64) -> Result<BatteryReplay> {
    spec.validate()?;
    if !(current > 0.0 && current.is_finite()) {
        return Err(ModelError::domain("current", format!("{current} A must be > 0")));
    }
    let c_full = spec.full_range_ah(current)?;
    let drop_per_second = current / SECONDS_PER_HOUR / c_full;
    let mut state = BatteryState::full(spec);
    let mut t = 0.0;
    let mut samples = vec![(0.0, state.soc, 0.0)];
    let mut k: u64 = 0;
    while state.soc - drop_per_second >= spec.min_soc {
        state = discharge_step(&state, spec, current, 1.0);
        k += 1;
        t = k as f64;
        if k.is_multiple_of(60) {
            samples.push((t, state.soc, state.delivered_ah));
        }
    }
    let rest = (state.soc - spec.min_soc) / drop_per_second;
    if rest > 0.0 {
        state = discharge_step(&state, spec, current, rest);
        t += rest;
    }
    if samples.last().map(|s| s.0) != Some(t) {
        samples.push((t, state.soc, state.delivered_ah));
    }
    let density = match spec.mass {
        Some(m) => Some(energy_density(state.delivered_wh, m)?),
        None => None,
    };
    Ok(BatteryReplay {
        current_a: current,
        delivered_ah: state.delivered_ah,
        delivered_wh: state.delivered_wh,
        duration_h: t / SECONDS_PER_HOUR,
        energy_density_wh_per_kg: density,
        samples,
    })
}
