//! Longitudinal vehicle dynamics, the motor-enable supervisor and the
//! auxiliary DC/DC load.

use crate::error::{ModelError, Result};
use crate::num::{lit, Real};
use crate::units::MPS_PER_MPH;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleParams<T> {
    /// Total mass including riders and batteries, kg.
    pub mass: T,
    pub rolling_resistance_coeff: T,
    /// Drag coefficient times frontal area, m².
    pub drag_area: T,
    pub air_density: T,
    pub gravity: T,
}

impl<T: Real> Default for VehicleParams<T> {
    /// Two riders plus battery and panel hardware; tuned so a 120 W rider
    /// cruises at 5.26 mph on the flat.
    fn default() -> Self {
        VehicleParams {
            mass: lit(400.0),
            rolling_resistance_coeff: lit(0.012),
            drag_area: lit(1.2),
            air_density: lit(1.2),
            gravity: lit(9.81),
        }
    }
}

impl<T: Real> VehicleParams<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mass", self.mass),
            ("drag_area", self.drag_area),
            ("air_density", self.air_density),
            ("gravity", self.gravity),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(ModelError::Configuration(format!("vehicle {name} {v} must be positive")));
            }
        }
        let crr = self.rolling_resistance_coeff;
        if !(crr > T::zero() && crr <= lit(0.05)) {
            return Err(ModelError::Configuration(format!("rolling resistance coefficient {crr} not in (0, 0.05]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Forward,
    Reverse,
}

impl Direction {
    pub fn name(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }

    fn sign<T: Real>(self) -> T {
        match self {
            Direction::Forward => T::one(),
            Direction::Reverse => -T::one(),
        }
    }
}

impl std::str::FromStr for Direction {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forward" => Ok(Direction::Forward),
            "reverse" => Ok(Direction::Reverse),
            other => Err(ModelError::domain("direction", format!("'{other}' is not forward | reverse"))),
        }
    }
}

/// Speed is a magnitude; `direction` carries the sign.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VehicleState<T> {
    pub speed: T,
    pub direction: Direction,
    /// Signed distance along the road, forward positive.
    pub position: T,
    /// Road grade in the forward direction, radians (uphill positive).
    pub grade_angle: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisorConfig<T> {
    /// Forward speed the motor is held off at or below, m/s.
    pub motor_enable_threshold: T,
    /// Driver has switched the low-speed rule off.
    pub override_enabled: bool,
}

impl<T: Real> Default for SupervisorConfig<T> {
    fn default() -> Self {
        SupervisorConfig { motor_enable_threshold: lit(5.0 * MPS_PER_MPH), override_enabled: false }
    }
}

/// Motor allowed when forward speed exceeds the threshold, in reverse, or
/// when the driver has overridden the rule.
pub fn supervisor_gate<T: Real>(state: &VehicleState<T>, config: &SupervisorConfig<T>) -> bool {
    config.override_enabled || state.direction == Direction::Reverse || state.speed > config.motor_enable_threshold
}

/// Rolling, aerodynamic and grade resistance opposing the direction of travel.
///
/// The grade term is negative (assisting) when travelling downhill.
pub fn resistive_forces<T: Real>(state: &VehicleState<T>, params: &VehicleParams<T>) -> T {
    let weight = params.mass * params.gravity;
    let grade = state.grade_angle * state.direction.sign();
    let rolling = params.rolling_resistance_coeff * weight * grade.cos();
    let aero = lit::<T>(0.5) * params.air_density * params.drag_area * state.speed * state.speed;
    rolling + aero + weight * grade.sin()
}

/// Explicit step of speed with a trapezoidal position update.
///
/// Forces act along the direction of travel. Speed stops at zero instead of
/// reversing.
pub fn longitudinal_step<T: Real>(
    state: &VehicleState<T>,
    traction: T,
    brake: T,
    params: &VehicleParams<T>,
    dt: T,
) -> VehicleState<T> {
    let net = traction - brake.max(T::zero()) - resistive_forces(state, params);
    let speed = (state.speed + net / params.mass * dt).max(T::zero());
    let travelled = (state.speed + speed) / lit(2.0) * dt;
    VehicleState { speed, position: state.position + state.direction.sign::<T>() * travelled, ..*state }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxLoads<T> {
    /// DC/DC converter output rating, W.
    pub dcdc_rating: T,
    /// Constant draw of controller, data acquisition, dashboard, lights, relays, W.
    pub aux_draw: T,
    pub dcdc_efficiency: T,
}

impl<T: Real> Default for AuxLoads<T> {
    fn default() -> Self {
        AuxLoads { dcdc_rating: lit(450.0), aux_draw: lit(90.0), dcdc_efficiency: lit(0.9) }
    }
}

/// Power drawn from the 48 V bus to feed the auxiliary loads.
pub fn aux_power_draw<T: Real>(loads: &AuxLoads<T>) -> Result<T> {
    if !(loads.dcdc_efficiency > T::zero() && loads.dcdc_efficiency <= T::one()) {
        return Err(ModelError::Configuration(format!("dc/dc efficiency {} not in (0, 1]", loads.dcdc_efficiency)));
    }
    if !(loads.aux_draw >= T::zero()) || loads.aux_draw > loads.dcdc_rating {
        return Err(ModelError::Configuration(format!(
            "auxiliary draw {} W outside the dc/dc rating [0, {}] W",
            loads.aux_draw, loads.dcdc_rating
        )));
    }
    Ok(loads.aux_draw / loads.dcdc_efficiency)
}
