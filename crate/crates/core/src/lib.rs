//! Energy-system and powertrain models for a hybrid human/solar/electric
//! vehicle: clear-sky irradiance, PV array and charge controller, Peukert
//! battery bank, series DC motor with PWM control, pedal clutch and
//! longitudinal dynamics, plus a time-stepped simulator that couples them.
//!
//! The component models are generic over the scalar type ([`num::Real`]);
//! the aliases at the crate root fix them to `f64`, which is what the
//! simulator uses.

// `!(x > 0)` style checks are there to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod error;
pub mod num;
pub mod powertrain;
pub mod pv;
pub mod sim;
pub mod solar;
pub mod units;
pub mod vehicle;

pub use error::{ModelError, Result};

pub type GeoLocation = solar::GeoLocation<f64>;
pub type AtmosphereParams = solar::AtmosphereParams<f64>;
pub type SolarInstant = solar::SolarInstant<f64>;
pub type IrradianceSample = solar::IrradianceSample<f64>;
pub type DayStats = solar::DayStats<f64>;

pub type PanelSpec = pv::PanelSpec<f64>;
pub type ArraySpec = pv::ArraySpec<f64>;
pub type SpeDerate = pv::SpeDerate<f64>;
pub type ChargeControllerSpec = pv::ChargeControllerSpec<f64>;
pub type PvPowerSplit = pv::PvPowerSplit<f64>;

pub type BatterySpec = battery::BatterySpec<f64>;
pub type BatteryState = battery::BatteryState<f64>;
pub type BankConfig = battery::BankConfig<f64>;
pub type BankRatings = battery::BankRatings<f64>;
pub use battery::Chemistry;

pub type MotorSpec = powertrain::MotorSpec<f64>;
pub type MotorOutput = powertrain::MotorOutput<f64>;
pub type SprocketSet = powertrain::SprocketSet<f64>;
pub type ClutchState = powertrain::ClutchState<f64>;

pub type VehicleParams = vehicle::VehicleParams<f64>;
pub type VehicleState = vehicle::VehicleState<f64>;
pub type SupervisorConfig = vehicle::SupervisorConfig<f64>;
pub type AuxLoads = vehicle::AuxLoads<f64>;
pub use vehicle::Direction;
