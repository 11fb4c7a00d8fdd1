//! Unit conversion constants. Internal computation is SI throughout.

/// Metres per second in one mile per hour (exact).
pub const MPS_PER_MPH: f64 = 0.44704;

/// Watts in one mechanical horsepower, rounded as the motor rating uses it.
pub const WATTS_PER_HP: f64 = 745.7;

pub const SECONDS_PER_HOUR: f64 = 3600.0;

pub fn mph_to_mps(mph: f64) -> f64 {
    mph * MPS_PER_MPH
}

pub fn mps_to_mph(mps: f64) -> f64 {
    mps / MPS_PER_MPH
}
