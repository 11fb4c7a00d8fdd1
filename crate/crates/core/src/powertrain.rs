//! PWM motor controller, series DC motor, dual-input axle with a one-way
//! pedal clutch, and the sprocket/wheel reduction.

use crate::error::{ModelError, Result};
use crate::num::{lit, Real};
use crate::units::WATTS_PER_HP;

/// Full-scale resistance of the throttle potentiometer, ohms.
pub const POT_FULL_SCALE: f64 = 5000.0;

/// Averaged-PWM series DC motor and its controller limits.
///
/// Torque is `series_field_constant * I²`; back-EMF is
/// `speed_constant * I * ω`. With the two constants equal, electrical input
/// splits exactly into `I²R` loss and mechanical output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotorSpec<T> {
    pub supply_voltage: T,
    pub max_power: T,
    pub current_limit: T,
    pub armature_resistance: T,
    pub series_field_constant: T,
    pub speed_constant: T,
}

impl<T: Real> Default for MotorSpec<T> {
    /// 10 hp, 48 V motor behind a 500 A controller.
    ///
    /// Constants from the duty-1 sweep: stall current 960 A is clamped to
    /// 500 A (50 N·m); the 7457 W cap is reached at 149 rad/s shaft speed and
    /// held until about 980 rad/s.
    fn default() -> Self {
        MotorSpec {
            supply_voltage: lit(48.0),
            max_power: lit(10.0 * WATTS_PER_HP),
            current_limit: lit(500.0),
            armature_resistance: lit(0.05),
            series_field_constant: lit(2.0e-4),
            speed_constant: lit(2.0e-4),
        }
    }
}

impl<T: Real> MotorSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("supply_voltage", self.supply_voltage),
            ("max_power", self.max_power),
            ("current_limit", self.current_limit),
            ("armature_resistance", self.armature_resistance),
            ("series_field_constant", self.series_field_constant),
            ("speed_constant", self.speed_constant),
        ];
        for (name, v) in fields {
            if !(v > T::zero() && v.is_finite()) {
                return Err(ModelError::Configuration(format!("motor {name} {v} must be positive")));
            }
        }
        if self.series_field_constant > self.speed_constant {
            return Err(ModelError::Configuration(format!(
                "motor torque constant {} exceeds back-EMF constant {}: would output more power than it draws",
                self.series_field_constant, self.speed_constant
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerInput<T> {
    /// Ohms, [0, 5000].
    pub potentiometer: T,
}

/// Linear throttle map: duty = R / 5 kΩ.
pub fn pot_to_duty<T: Real>(input: ControllerInput<T>) -> Result<T> {
    let r = input.potentiometer;
    if !(r >= T::zero() && r <= lit(POT_FULL_SCALE)) {
        return Err(ModelError::domain("potentiometer", format!("{r} ohm not in [0, {POT_FULL_SCALE}]")));
    }
    Ok(r / lit(POT_FULL_SCALE))
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MotorOutput<T> {
    pub torque: T,
    pub current: T,
    pub electrical_power: T,
    /// Duty actually applied after the controller's current and power limits.
    pub applied_duty: T,
}

impl<T: Real> MotorOutput<T> {
    pub fn mechanical_power(&self, shaft_speed: T) -> T {
        self.torque * shaft_speed
    }
}

/// Steady averaged-PWM operating point at a shaft speed.
///
/// The controller backs the applied voltage off whenever the commanded duty
/// would exceed the current limit or the rated mechanical power.
pub fn motor_step<T: Real>(duty: T, shaft_speed: T, spec: &MotorSpec<T>) -> MotorOutput<T> {
    motor_step_limited(duty, shaft_speed, spec, T::infinity())
}

/// As [`motor_step`], additionally holding electrical input at or below
/// `max_electrical` watts.
pub fn motor_step_limited<T: Real>(duty: T, shaft_speed: T, spec: &MotorSpec<T>, max_electrical: T) -> MotorOutput<T> {
    let duty = duty.max(T::zero()).min(T::one());
    let omega = shaft_speed.max(T::zero());
    if duty == T::zero() || !(max_electrical > T::zero()) {
        return MotorOutput::default();
    }
    // Total loop impedance seen by the averaged armature voltage.
    let impedance = spec.armature_resistance + spec.speed_constant * omega;
    let mut current = duty * spec.supply_voltage / impedance;
    current = current.min(spec.current_limit);
    if omega > T::zero() {
        let at_cap = (spec.max_power / (spec.series_field_constant * omega)).sqrt();
        current = current.min(at_cap);
    }
    if max_electrical.is_finite() {
        current = current.min((max_electrical / impedance).sqrt());
    }
    let voltage = current * impedance;
    MotorOutput {
        torque: spec.series_field_constant * current * current,
        current,
        electrical_power: voltage * current,
        applied_duty: voltage / spec.supply_voltage,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprocketSet<T> {
    /// Pedal-crank revolutions per axle revolution.
    pub pedal_ratio: T,
    /// Motor revolutions per axle revolution.
    pub motor_ratio: T,
    /// Metres.
    pub wheel_radius: T,
}

impl<T: Real> Default for SprocketSet<T> {
    fn default() -> Self {
        SprocketSet { pedal_ratio: lit(2.5), motor_ratio: lit(4.0), wheel_radius: lit(0.25) }
    }
}

impl<T: Real> SprocketSet<T> {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in
            [("pedal_ratio", self.pedal_ratio), ("motor_ratio", self.motor_ratio), ("wheel_radius", self.wheel_radius)]
        {
            if !(v > T::zero() && v.is_finite()) {
                return Err(ModelError::Configuration(format!("sprocket {name} {v} must be positive")));
            }
        }
        Ok(())
    }

    /// Axle angular speed for a road speed, rad/s.
    pub fn axle_speed(&self, road_speed: T) -> T {
        road_speed / self.wheel_radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutchState<T> {
    pub engaged: bool,
    /// Torque delivered to the axle, N·m; never negative.
    pub transmitted_torque: T,
}

/// One-way pedal clutch: drives only while the pedal side keeps up with the axle.
pub fn clutch_resolve<T: Real>(
    pedal_cadence: T,
    rider_torque: T,
    axle_speed: T,
    sprockets: &SprocketSet<T>,
) -> ClutchState<T> {
    // Compared on the crank side so a cadence of exactly `pedal_ratio * axle`
    // counts as keeping up.
    if pedal_cadence.max(T::zero()) >= sprockets.pedal_ratio * axle_speed.max(T::zero()) {
        ClutchState { engaged: true, transmitted_torque: rider_torque.max(T::zero()) * sprockets.pedal_ratio }
    } else {
        ClutchState { engaged: false, transmitted_torque: T::zero() }
    }
}

/// Tractive force at the tyre contact patch.
pub fn wheel_force<T: Real>(axle_torque_total: T, sprockets: &SprocketSet<T>) -> T {
    axle_torque_total / sprockets.wheel_radius
}
