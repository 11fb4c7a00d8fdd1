//! Fixed-step scenario engine coupling every model, with energy bookkeeping,
//! plus replays of the battery and solar-day experiments.

mod engine;
mod replay;
mod report;
mod suite;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use std::fmt;
use thiserror::Error;

use crate::battery::bank_aggregate;
use crate::error::ModelError;
use crate::powertrain::POT_FULL_SCALE;
use crate::pv::SpeDerate;
use crate::vehicle::aux_power_draw;
use crate::{
    ArraySpec, AtmosphereParams, AuxLoads, BankConfig, ChargeControllerSpec, Direction, GeoLocation, MotorSpec,
    SprocketSet, SupervisorConfig, VehicleParams,
};

pub use engine::{format_sig6, run, EnergyAudit, Trace, TraceRow, TRACE_HEADER};
pub use replay::{replay_battery_experiment, BatteryReplay};
pub use report::{
    percent_difference, replay_solar_experiment, Cell, ComparisonReport, MeasurementSeries, MeasurementStats,
    PredictionSummary, ReportRow,
};
pub use suite::standard_suite;

/// Nominal voltage of the vehicle's DC bus.
pub const BUS_VOLTAGE: f64 = 48.0;

/// How the motor throttle is commanded during a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Throttle {
    /// Throttle potentiometer position, ohms.
    Potentiometer(f64),
    /// Proportional controller chasing a road speed, m/s.
    SpeedTarget(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sun {
    #[default]
    None,
    /// Clear-sky irradiance at the site for the simulated clock time.
    ClearSky,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub duration_s: f64,
    pub grade_angle: f64,
    pub direction: Direction,
    pub throttle: Throttle,
    pub pedal_power_w: f64,
    pub brake_force_n: f64,
    pub sun: Sun,
}

impl Default for Segment {
    fn default() -> Self {
        Segment {
            duration_s: 60.0,
            grade_angle: 0.0,
            direction: Direction::Forward,
            throttle: Throttle::Potentiometer(0.0),
            pedal_power_w: 0.0,
            brake_force_n: 0.0,
            sun: Sun::None,
        }
    }
}

/// Where and when the scenario clock starts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Site {
    pub location: GeoLocation,
    pub date: NaiveDate,
    pub start_time: NaiveTime,
    pub atmosphere: AtmosphereParams,
}

impl Default for Site {
    fn default() -> Self {
        Site {
            location: GeoLocation::san_jose(),
            date: NaiveDate::from_ymd_opt(2008, 3, 15).expect("valid date"),
            start_time: NaiveTime::from_hms_opt(12, 0, 0).expect("valid time"),
            atmosphere: AtmosphereParams::default(),
        }
    }
}

impl Site {
    pub fn start(&self) -> NaiveDateTime {
        self.date.and_time(self.start_time)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub segments: Vec<Segment>,
    pub vehicle: VehicleParams,
    /// Largest crank torque the rider can apply, N·m.
    pub rider_max_crank_torque: f64,
    pub bank: BankConfig,
    pub array: ArraySpec,
    pub derate: SpeDerate<f64>,
    pub charge_controller: ChargeControllerSpec,
    pub motor: MotorSpec,
    pub sprockets: SprocketSet,
    pub supervisor: SupervisorConfig,
    pub aux: AuxLoads,
    pub site: Site,
    pub timestep: f64,
    pub initial_soc: f64,
    pub initial_speed: f64,
    pub initial_direction: Direction,
    /// Duty per m/s of speed error for [`Throttle::SpeedTarget`].
    pub speed_target_gain: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            name: "scenario".to_string(),
            segments: Vec::new(),
            vehicle: VehicleParams::default(),
            rider_max_crank_torque: 50.0,
            bank: BankConfig::vehicle_bank(),
            array: ArraySpec::vehicle_array(),
            derate: SpeDerate::none(),
            charge_controller: ChargeControllerSpec::default(),
            motor: MotorSpec::default(),
            sprockets: SprocketSet::default(),
            supervisor: SupervisorConfig::default(),
            aux: AuxLoads::default(),
            site: Site::default(),
            timestep: 0.1,
            initial_soc: 1.0,
            initial_speed: 0.0,
            initial_direction: Direction::Forward,
            speed_target_gain: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub field: String,
    pub message: String,
}

/// Every problem found in a scenario, not just the first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} invalid field(s): ", self.violations.len())?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{}: {}", v.field, v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{0}")]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

struct Collector(Vec<Violation>);

impl Collector {
    fn push(&mut self, field: impl Into<String>, message: impl Into<String>) {
        self.0.push(Violation { field: field.into(), message: message.into() });
    }

    fn model(&mut self, field: &str, r: crate::Result<()>) {
        if let Err(e) = r {
            self.push(field, e.to_string());
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

impl Scenario {
    pub fn with_segments(name: &str, segments: Vec<Segment>) -> Self {
        Scenario { name: name.to_string(), segments, ..Scenario::default() }
    }

    /// Checks every field and reports all violations together.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut c = Collector(Vec::new());

        if self.segments.is_empty() {
            c.push("segment", "scenario needs at least one segment");
        }
        for (i, s) in self.segments.iter().enumerate() {
            let at = |f: &str| format!("segment[{i}].{f}");
            if !(s.duration_s > 0.0 && s.duration_s.is_finite()) {
                c.push(at("duration_s"), format!("{} must be > 0", s.duration_s));
            }
            if !(s.grade_angle.abs() < std::f64::consts::FRAC_PI_4) {
                c.push(at("grade_rad"), format!("{} outside (-pi/4, pi/4)", s.grade_angle));
            }
            if !(s.pedal_power_w >= 0.0 && s.pedal_power_w.is_finite()) {
                c.push(at("pedal_power_w"), format!("{} must be >= 0", s.pedal_power_w));
            }
            if !(s.brake_force_n >= 0.0 && s.brake_force_n.is_finite()) {
                c.push(at("brake_force_n"), format!("{} must be >= 0", s.brake_force_n));
            }
            match s.throttle {
                Throttle::Potentiometer(r) if !(0.0..=POT_FULL_SCALE).contains(&r) => {
                    c.push(at("potentiometer_ohm"), format!("{r} not in [0, {POT_FULL_SCALE}]"))
                }
                Throttle::SpeedTarget(v) if !(v >= 0.0 && v.is_finite()) => {
                    c.push(at("target_speed_mps"), format!("{v} must be >= 0"))
                }
                _ => {}
            }
        }

        if !(self.timestep > 0.0 && self.timestep <= 1.0) {
            c.push("simulation.timestep_s", format!("{} not in (0, 1]", self.timestep));
        }
        if !(0.0..=1.0).contains(&self.initial_soc) {
            c.push("simulation.initial_soc", format!("{} not in [0, 1]", self.initial_soc));
        }
        if !(self.initial_speed >= 0.0 && self.initial_speed.is_finite()) {
            c.push("simulation.initial_speed_mps", format!("{} must be >= 0", self.initial_speed));
        }
        if !(self.speed_target_gain > 0.0 && self.speed_target_gain.is_finite()) {
            c.push("simulation.speed_target_gain_per_mps", format!("{} must be > 0", self.speed_target_gain));
        }
        if !(self.rider_max_crank_torque > 0.0 && self.rider_max_crank_torque.is_finite()) {
            c.push("vehicle.rider_max_crank_torque_nm", format!("{} must be > 0", self.rider_max_crank_torque));
        }

        c.model("vehicle", self.vehicle.validate());
        c.model("motor", self.motor.validate());
        c.model("sprockets", self.sprockets.validate());
        c.model("site", self.site.location.validate());
        c.model("atmosphere", self.site.atmosphere.validate());
        c.model("battery", self.bank.battery.validate());
        c.model("aux", aux_power_draw(&self.aux).map(|_| ()));
        c.model(
            "charge_controller",
            ChargeControllerSpec::new(self.charge_controller.max_charge_current, self.charge_controller.bus_voltage)
                .map(|_| ()),
        );
        if !(self.supervisor.motor_enable_threshold >= 0.0) {
            c.push("supervisor.threshold_mph", format!("{} must be >= 0", self.supervisor.motor_enable_threshold));
        }

        match bank_aggregate(&self.bank, None) {
            Err(e) => c.push("battery.series_count", e.to_string()),
            Ok(r) => {
                if !close(r.voltage, BUS_VOLTAGE) {
                    c.push(
                        "battery.series_count",
                        format!(
                            "bus voltage constraint: {} x {} V = {} V bank, the bus is {BUS_VOLTAGE} V",
                            self.bank.series_count, self.bank.battery.v_nominal, r.voltage
                        ),
                    );
                }
                if !close(self.motor.supply_voltage, r.voltage) {
                    c.push(
                        "motor.supply_voltage_v",
                        format!(
                            "bus voltage constraint: {} V motor on a {} V bank",
                            self.motor.supply_voltage, r.voltage
                        ),
                    );
                }
                if !close(self.charge_controller.bus_voltage, r.voltage) {
                    c.push(
                        "charge_controller.bus_voltage_v",
                        format!(
                            "bus voltage constraint: {} V controller on a {} V bank",
                            self.charge_controller.bus_voltage, r.voltage
                        ),
                    );
                }
            }
        }

        if c.0.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { violations: c.0 })
        }
    }
}
