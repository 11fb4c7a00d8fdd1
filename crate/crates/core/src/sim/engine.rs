use std::io::{self, Write};

use chrono::TimeDelta;

use super::{Scenario, SimError, Sun, Throttle};
use crate::battery::{charge_headroom, charge_step, deliverable_current, discharge_step, BatteryState};
use crate::powertrain::{clutch_resolve, motor_step, motor_step_limited, pot_to_duty, wheel_force, ControllerInput};
use crate::pv::{array_power, charge_controller_split};
use crate::solar::clear_sky_at;
use crate::units::SECONDS_PER_HOUR;
use crate::vehicle::{aux_power_draw, longitudinal_step, supervisor_gate};
use crate::{Direction, MotorOutput, VehicleState};

pub const TRACE_HEADER: &str = "time_s,speed_mps,direction,motor_enabled,duty,motor_current_a,motor_torque_nm,clutch_engaged,pedal_power_w,pv_power_w,pv_to_load_w,pv_to_battery_w,battery_power_w,soc,aux_power_w,position_m";

/// State at the end of one step and the powers that flowed during it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub time_s: f64,
    pub speed_mps: f64,
    pub direction: Direction,
    /// Supervisor allowed the motor and the throttle asked for it.
    pub motor_enabled: bool,
    /// Duty actually applied by the controller.
    pub duty: f64,
    pub motor_current_a: f64,
    pub motor_torque_nm: f64,
    pub clutch_engaged: bool,
    pub pedal_power_w: f64,
    pub pv_power_w: f64,
    pub pv_to_load_w: f64,
    pub pv_to_battery_w: f64,
    /// Positive while discharging, negative while charging.
    pub battery_power_w: f64,
    pub soc: f64,
    pub aux_power_w: f64,
    pub position_m: f64,

    // Not part of the CSV schema.
    pub supervisor_gate: bool,
    pub motor_shaft_speed: f64,
    pub motor_electrical_w: f64,
    pub curtailed_w: f64,
    /// Battery could not cover the demand; loads were cut back to what PV and
    /// the last of the charge could supply.
    pub exhausted: bool,
}

impl TraceRow {
    pub fn motor_mechanical_w(&self) -> f64 {
        self.motor_torque_nm * self.motor_shaft_speed
    }

    fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        let b = |x: bool| if x { "1" } else { "0" };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            format_sig6(self.time_s),
            format_sig6(self.speed_mps),
            self.direction.name(),
            b(self.motor_enabled),
            format_sig6(self.duty),
            format_sig6(self.motor_current_a),
            format_sig6(self.motor_torque_nm),
            b(self.clutch_engaged),
            format_sig6(self.pedal_power_w),
            format_sig6(self.pv_power_w),
            format_sig6(self.pv_to_load_w),
            format_sig6(self.pv_to_battery_w),
            format_sig6(self.battery_power_w),
            format_sig6(self.soc),
            format_sig6(self.aux_power_w),
            format_sig6(self.position_m),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{TRACE_HEADER}")?;
        for row in &self.rows {
            row.write_csv(&mut w)?;
        }
        w.flush()
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    /// Time of the first row where the battery ran out.
    pub fn first_exhaustion(&self) -> Option<f64> {
        self.rows.iter().find(|r| r.exhausted).map(|r| r.time_s)
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }
}

/// Energy totals over a run, Wh.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EnergyAudit {
    pub battery_discharge_wh: f64,
    pub pv_wh: f64,
    pub pedal_wh: f64,
    pub motor_wh: f64,
    pub aux_wh: f64,
    pub curtailed_wh: f64,
    pub battery_charge_wh: f64,
    pub pedal_to_drivetrain_wh: f64,
    pub energy_in_wh: f64,
    pub energy_out_wh: f64,
    pub residual_wh: f64,
}

impl EnergyAudit {
    pub const RELATIVE_TOLERANCE: f64 = 1e-6;

    pub fn tolerance_wh(&self) -> f64 {
        Self::RELATIVE_TOLERANCE * self.energy_in_wh.max(1.0)
    }

    pub fn balanced(&self) -> bool {
        self.residual_wh.abs() <= self.tolerance_wh()
    }
}

/// Running sums in joules.
#[derive(Default)]
struct Ledger {
    discharge: f64,
    pv: f64,
    pedal: f64,
    motor: f64,
    aux: f64,
    curtailed: f64,
    charge: f64,
    drivetrain: f64,
}

impl Ledger {
    fn finish(&self) -> EnergyAudit {
        let wh = |j: f64| j / SECONDS_PER_HOUR;
        let energy_in = self.discharge + self.pv + self.pedal;
        let energy_out = self.motor + self.aux + self.curtailed + self.charge + self.drivetrain;
        EnergyAudit {
            battery_discharge_wh: wh(self.discharge),
            pv_wh: wh(self.pv),
            pedal_wh: wh(self.pedal),
            motor_wh: wh(self.motor),
            aux_wh: wh(self.aux),
            curtailed_wh: wh(self.curtailed),
            battery_charge_wh: wh(self.charge),
            pedal_to_drivetrain_wh: wh(self.drivetrain),
            energy_in_wh: wh(energy_in),
            energy_out_wh: wh(energy_out),
            residual_wh: wh(energy_in - energy_out),
        }
    }
}

fn steps_in(duration: f64, dt: f64) -> u64 {
    ((duration / dt).round() as u64).max(1)
}

/// Runs a scenario to completion.
///
/// Each step evaluates, in order: irradiance, PV output, supervisor gate,
/// motor, battery feasibility, pedal clutch, vehicle dynamics, PV split and
/// battery update. Rows are stamped at the end of their step.
pub fn run(scenario: &Scenario) -> Result<(Trace, EnergyAudit), SimError> {
    scenario.validate()?;
    let s = scenario;
    let dt = s.timestep;
    let bank = s.bank.equivalent_battery();
    let bus = bank.v_nominal;
    let aux_demand = aux_power_draw(&s.aux)?;
    let site_start = s.site.start();

    let mut vehicle =
        VehicleState { speed: s.initial_speed, direction: s.initial_direction, position: 0.0, grade_angle: 0.0 };
    let mut battery = BatteryState::at_soc(&bank, s.initial_soc);
    let mut ledger = Ledger::default();
    let total: u64 = s.segments.iter().map(|g| steps_in(g.duration_s, dt)).sum();
    let mut rows = Vec::with_capacity(total as usize);
    let mut k: u64 = 0;

    for seg in &s.segments {
        for _ in 0..steps_in(seg.duration_s, dt) {
            let t0 = k as f64 * dt;
            vehicle.grade_angle = seg.grade_angle;

            // Direction only changes at rest; traction is withheld until then.
            if seg.direction != vehicle.direction && vehicle.speed == 0.0 {
                vehicle.direction = seg.direction;
            }
            let changing = seg.direction != vehicle.direction;

            let ghi = match seg.sun {
                Sun::None => 0.0,
                Sun::ClearSky => {
                    let ts = site_start + TimeDelta::nanoseconds((t0 * 1e9).round() as i64);
                    clear_sky_at(&s.site.location, ts, &s.site.atmosphere)?.global_horizontal
                }
            };
            let pv = array_power(ghi, &s.array, s.derate);

            let gate = supervisor_gate(&vehicle, &s.supervisor);
            let commanded = if changing {
                0.0
            } else {
                match seg.throttle {
                    Throttle::Potentiometer(r) => pot_to_duty(ControllerInput { potentiometer: r })?,
                    Throttle::SpeedTarget(v) => (s.speed_target_gain * (v - vehicle.speed)).clamp(0.0, 1.0),
                }
            };
            let motor_enabled = gate && commanded > 0.0;
            let axle = s.sprockets.axle_speed(vehicle.speed);
            let shaft = axle * s.sprockets.motor_ratio;

            let wanted = if motor_enabled { motor_step(commanded, shaft, &s.motor) } else { MotorOutput::default() };
            let battery_limit = deliverable_current(&battery, &bank, dt) * bus;
            let need = (wanted.electrical_power + aux_demand - pv).max(0.0);
            let (motor, aux, exhausted) = if need > battery_limit {
                let supply = pv + battery_limit;
                let aux = aux_demand.min(supply);
                let motor = if motor_enabled {
                    motor_step_limited(commanded, shaft, &s.motor, supply - aux)
                } else {
                    MotorOutput::default()
                };
                (motor, aux, true)
            } else {
                (wanted, aux_demand, false)
            };

            // The rider pedals forward only, at the cadence the axle sets.
            let pedal_cmd = if changing || vehicle.direction == Direction::Reverse { 0.0 } else { seg.pedal_power_w };
            let (cadence, rider_torque) = if pedal_cmd > 0.0 {
                let cadence = s.sprockets.pedal_ratio * axle;
                let torque = if cadence > 0.0 {
                    (pedal_cmd / cadence).min(s.rider_max_crank_torque)
                } else {
                    s.rider_max_crank_torque
                };
                (cadence, torque)
            } else {
                (0.0, 0.0)
            };
            let clutch = clutch_resolve(cadence, rider_torque, axle, &s.sprockets);
            let pedal_power = if clutch.engaged { rider_torque * cadence } else { 0.0 };
            let pedal_to_drivetrain = clutch.transmitted_torque * axle;

            let traction =
                wheel_force(motor.torque * s.sprockets.motor_ratio + clutch.transmitted_torque, &s.sprockets);
            vehicle = longitudinal_step(&vehicle, traction, seg.brake_force_n, &s.vehicle, dt);

            let load = motor.electrical_power + aux;
            let split = charge_controller_split(pv, load, &s.charge_controller, battery.soc < 1.0);
            let discharge = load - split.to_load;
            let to_battery = split.to_battery.min(charge_headroom(&battery, &bank, dt));
            let curtailed = split.curtailed + (split.to_battery - to_battery);
            if discharge > 0.0 {
                battery = discharge_step(&battery, &bank, discharge / bus, dt);
            } else if to_battery > 0.0 {
                battery = charge_step(&battery, &bank, to_battery, dt);
            }

            ledger.discharge += discharge * dt;
            ledger.pv += pv * dt;
            ledger.pedal += pedal_power * dt;
            ledger.motor += motor.electrical_power * dt;
            ledger.aux += aux * dt;
            ledger.curtailed += curtailed * dt;
            ledger.charge += to_battery * dt;
            ledger.drivetrain += pedal_to_drivetrain * dt;

            k += 1;
            rows.push(TraceRow {
                time_s: k as f64 * dt,
                speed_mps: vehicle.speed,
                direction: vehicle.direction,
                motor_enabled,
                duty: motor.applied_duty,
                motor_current_a: motor.current,
                motor_torque_nm: motor.torque,
                clutch_engaged: clutch.engaged,
                pedal_power_w: pedal_power,
                pv_power_w: pv,
                pv_to_load_w: split.to_load,
                pv_to_battery_w: to_battery,
                battery_power_w: discharge - to_battery,
                soc: battery.soc,
                aux_power_w: aux,
                position_m: vehicle.position,
                supervisor_gate: gate,
                motor_shaft_speed: shaft,
                motor_electrical_w: motor.electrical_power,
                curtailed_w: curtailed,
                exhausted,
            });
        }
    }

    Ok((Trace { rows }, ledger.finish()))
}

/// Fixed-decimal rendering with six significant digits.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0.00000".to_string();
    }
    // Round to six significant digits first, then pick the decimals.
    let sci = format!("{x:.5e}");
    let rounded: f64 = sci.parse().expect("float round trip");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).expect("exponent");
    let decimals = (5 - exp).max(0) as usize;
    let out = format!("{rounded:.decimals$}");
    if out.starts_with('-') && out[1..].bytes().all(|b| b == b'0' || b == b'.') {
        out[1..].to_string()
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_examples() {
        assert_eq!(format_sig6(0.0), "0.00000");
        assert_eq!(format_sig6(-0.0), "0.00000");
        assert_eq!(format_sig6(2.2352), "2.23520");
        assert_eq!(format_sig6(0.1), "0.100000");
        assert_eq!(format_sig6(12345.678), "12345.7");
        assert_eq!(format_sig6(999999.6), "1000000");
        assert_eq!(format_sig6(9.999996), "10.0000");
        assert_eq!(format_sig6(-0.000123456789), "-0.000123457");
        assert_eq!(format_sig6(1234567.0), "1234570");
        assert_eq!(format_sig6(-1e-20), "-0.0000000000000000000100000");
    }

    #[test]
    fn header_has_sixteen_columns() {
        assert_eq!(TRACE_HEADER.split(',').count(), 16);
    }
}
