//! PV panels, series/parallel arrays, surface-polarization derating and the
//! solar charge controller's load-sharing rule.

use crate::error::{ModelError, Result};
use crate::num::{count, lit, Real};

/// Irradiance at standard test conditions, W/m².
pub const STC_IRRADIANCE: f64 = 1000.0;

/// Panel area implied by an STC power rating and conversion efficiency.
pub fn panel_area_from_stc<T: Real>(p_max: T, efficiency: T) -> Result<T> {
    if !(efficiency > T::zero() && efficiency <= T::one()) {
        return Err(ModelError::domain("efficiency", format!("{efficiency} not in (0, 1]")));
    }
    if !(p_max >= T::zero()) {
        return Err(ModelError::domain("p_max", format!("{p_max} must be >= 0")));
    }
    Ok(p_max / (efficiency * lit(STC_IRRADIANCE)))
}

/// Electrical ratings of one panel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PanelSpec<T> {
    pub v_mp: T,
    pub i_mp: T,
    pub p_max: T,
    pub efficiency: T,
    pub area: T,
}

impl<T: Real> PanelSpec<T> {
    /// Builds a panel, deriving its area from the STC rating.
    pub fn new(v_mp: T, i_mp: T, p_max: T, efficiency: T) -> Result<Self> {
        if !(v_mp > T::zero() && i_mp > T::zero() && p_max > T::zero()) {
            return Err(ModelError::Configuration(format!(
                "panel ratings must be positive (v_mp {v_mp}, i_mp {i_mp}, p_max {p_max})"
            )));
        }
        if !(efficiency > T::zero() && efficiency <= lit(0.30)) {
            return Err(ModelError::Configuration(format!("panel efficiency {efficiency} not in (0, 0.30]")));
        }
        let vi = v_mp * i_mp;
        if ((p_max - vi) / p_max).abs() > lit(0.02) {
            return Err(ModelError::Configuration(format!(
                "panel p_max {p_max} W differs from v_mp*i_mp = {vi} W by more than 2%"
            )));
        }
        Ok(PanelSpec { v_mp, i_mp, p_max, efficiency, area: panel_area_from_stc(p_max, efficiency)? })
    }

    /// 40 V / 5.1 A / 205 W, 16.5 % panels used on the vehicle.
    pub fn vehicle_panel() -> Self {
        Self::new(lit(40.0), lit(5.1), lit(205.0), lit(0.165)).expect("valid preset")
    }
}

/// Series/parallel composition of identical panels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArraySpec<T> {
    pub panel: PanelSpec<T>,
    pub series_count: u32,
    pub parallel_count: u32,
    pub v_nominal: T,
    pub i_nominal: T,
    pub p_stc: T,
    pub total_area: T,
}

/// Wires `series` panels per string and `parallel` strings.
pub fn wire_array<T: Real>(panel: PanelSpec<T>, series: u32, parallel: u32) -> Result<ArraySpec<T>> {
    if series == 0 || parallel == 0 {
        return Err(ModelError::domain(
            "array counts",
            format!("series {series} and parallel {parallel} must both be >= 1"),
        ));
    }
    let s = count::<T>(series);
    let p = count::<T>(parallel);
    Ok(ArraySpec {
        panel,
        series_count: series,
        parallel_count: parallel,
        v_nominal: s * panel.v_mp,
        i_nominal: p * panel.i_mp,
        p_stc: s * p * panel.p_max,
        total_area: s * p * panel.area,
    })
}

impl<T: Real> ArraySpec<T> {
    /// The vehicle's four panels: two parallel strings of two in series.
    pub fn vehicle_array() -> Self {
        wire_array(PanelSpec::vehicle_panel(), 2, 2).expect("valid preset")
    }
}

/// Constant fractional output loss from surface polarization.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpeDerate<T>(T);

impl<T: Real> SpeDerate<T> {
    pub fn new(fraction: T) -> Result<Self> {
        if !(fraction >= T::zero() && fraction < T::one()) {
            return Err(ModelError::domain("spe derate", format!("{fraction} not in [0, 1)")));
        }
        Ok(SpeDerate(fraction))
    }

    pub fn none() -> Self {
        SpeDerate(T::zero())
    }

    pub fn fraction(self) -> T {
        self.0
    }

    /// Multiplier applied to undegraded output.
    pub fn factor(self) -> T {
        T::one() - self.0
    }
}

/// DC array output for a plane-of-array irradiance.
///
/// The undegraded output `ghi * area * efficiency` is clamped at the STC
/// rating before the derate applies.
pub fn array_power<T: Real>(ghi: T, array: &ArraySpec<T>, derate: SpeDerate<T>) -> T {
    let raw = ghi.max(T::zero()) * array.total_area * array.panel.efficiency;
    raw.min(array.p_stc) * derate.factor()
}

/// Charge controller ratings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeControllerSpec<T> {
    pub max_charge_current: T,
    pub bus_voltage: T,
}

impl<T: Real> Default for ChargeControllerSpec<T> {
    fn default() -> Self {
        ChargeControllerSpec { max_charge_current: lit(45.0), bus_voltage: lit(48.0) }
    }
}

impl<T: Real> ChargeControllerSpec<T> {
    pub fn new(max_charge_current: T, bus_voltage: T) -> Result<Self> {
        if !(max_charge_current > T::zero() && bus_voltage > T::zero()) {
            return Err(ModelError::Configuration(format!(
                "charge controller ratings must be positive ({max_charge_current} A, {bus_voltage} V)"
            )));
        }
        Ok(ChargeControllerSpec { max_charge_current, bus_voltage })
    }

    /// Largest power the controller will push into the battery.
    pub fn charge_power_limit(&self) -> T {
        self.max_charge_current * self.bus_voltage
    }
}

/// Where the PV power went during one instant.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PvPowerSplit<T> {
    pub to_load: T,
    pub to_battery: T,
    pub curtailed: T,
}

/// PV serves the load first; any surplus charges the battery up to the
/// controller's current rating, and the rest is curtailed.
pub fn charge_controller_split<T: Real>(
    pv_power: T,
    load_power: T,
    controller: &ChargeControllerSpec<T>,
    battery_accepting: bool,
) -> PvPowerSplit<T> {
    let pv = pv_power.max(T::zero());
    let load = load_power.max(T::zero());
    let to_load = pv.min(load);
    let surplus = pv - to_load;
    let to_battery = if battery_accepting { surplus.min(controller.charge_power_limit()) } else { T::zero() };
    PvPowerSplit { to_load, to_battery, curtailed: surplus - to_battery }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn panel_area_examples() {
        assert_relative_eq!(panel_area_from_stc(205.0, 0.165).unwrap(), 1.242_424_242, epsilon = 1e-6);
        assert_eq!(panel_area_from_stc(1000.0, 1.0).unwrap(), 1.0);
        assert_eq!(panel_area_from_stc(0.0, 0.165).unwrap(), 0.0);
        assert!(panel_area_from_stc(205.0, 0.0).is_err());
        assert!(panel_area_from_stc(205.0, -0.1).is_err());
    }

    #[test]
    fn vehicle_array_ratings() {
        let a = ArraySpec::<f64>::vehicle_array();
        assert_relative_eq!(a.v_nominal, 80.0);
        assert_relative_eq!(a.i_nominal, 10.2, epsilon = 1e-12);
        // Four 205 W panels; the 410 W figure quoted for the array matches one string.
        assert_relative_eq!(a.p_stc, 820.0);
        assert!(((a.p_stc - a.v_nominal * a.i_nominal) / a.p_stc).abs() < 0.02);
    }

    #[test]
    fn single_panel_array_is_the_panel() {
        let p = PanelSpec::<f64>::vehicle_panel();
        let a = wire_array(p, 1, 1).unwrap();
        assert_eq!((a.v_nominal, a.i_nominal, a.p_stc, a.total_area), (p.v_mp, p.i_mp, p.p_max, p.area));
        assert!(wire_array(p, 0, 1).is_err());
        assert!(wire_array(p, 2, 0).is_err());
    }

    #[test]
    fn panel_validation() {
        assert!(PanelSpec::new(40.0, 5.1, 250.0, 0.165).is_err());
        assert!(PanelSpec::new(40.0, 5.1, 205.0, 0.35).is_err());
        assert!(PanelSpec::new(40.0, 5.1, 205.0, 0.0).is_err());
        assert!(PanelSpec::new(-40.0, 5.1, 205.0, 0.165).is_err());
    }

    #[test]
    fn predicted_outputs() {
        let a = ArraySpec::<f64>::vehicle_array();
        let none = SpeDerate::none();
        assert!((array_power(439.0, &a, none) - 360.0).abs() <= 1.0);
        assert!((array_power(582.0, &a, none) - 478.0).abs() <= 1.0);
        assert!((array_power(439.0, &a, SpeDerate::new(0.05).unwrap()) - 342.0).abs() <= 1.0);
        assert!((array_power(439.0, &a, SpeDerate::new(0.30).unwrap()) - 252.0).abs() <= 1.0);
        assert_eq!(array_power(0.0, &a, SpeDerate::new(0.3).unwrap()), 0.0);
    }

    #[test]
    fn output_clamps_at_stc_rating() {
        let a = ArraySpec::vehicle_array();
        assert_relative_eq!(array_power(1400.0, &a, SpeDerate::none()), 820.0);
        assert!(SpeDerate::new(1.0).is_err());
        assert!(SpeDerate::new(-0.01).is_err());
    }

    #[test]
    fn split_examples() {
        let c = ChargeControllerSpec::default();
        assert_eq!(
            charge_controller_split(350.0, 200.0, &c, true),
            PvPowerSplit { to_load: 200.0, to_battery: 150.0, curtailed: 0.0 }
        );
        let s = charge_controller_split(300.0, 0.0, &c, true);
        assert_eq!(s.to_battery, 300.0);
        assert!(s.to_battery / 48.0 <= 45.0);
        assert_eq!(
            charge_controller_split(3000.0, 0.0, &c, true),
            PvPowerSplit { to_load: 0.0, to_battery: 2160.0, curtailed: 840.0 }
        );
        assert_eq!(
            charge_controller_split(100.0, 500.0, &c, true),
            PvPowerSplit { to_load: 100.0, to_battery: 0.0, curtailed: 0.0 }
        );
        assert_eq!(
            charge_controller_split(300.0, 0.0, &c, false),
            PvPowerSplit { to_load: 0.0, to_battery: 0.0, curtailed: 300.0 }
        );
    }

    proptest! {
        #[test]
        fn split_balances(pv in 0.0..20_000.0f64, load in 0.0..20_000.0f64, accepting: bool) {
            let c = ChargeControllerSpec::default();
            let s = charge_controller_split(pv, load, &c, accepting);
            prop_assert!(s.to_load >= 0.0 && s.to_battery >= 0.0 && s.curtailed >= 0.0);
            prop_assert!((s.to_load + s.to_battery + s.curtailed - pv).abs() <= 1e-12 * pv.max(1.0));
            prop_assert!(s.to_battery / c.bus_voltage <= c.max_charge_current + 1e-12);
        }

        #[test]
        fn array_power_is_linear(ghi in 0.0..1000.0f64, k in 0.0..1.0f64, f in 0.0..0.99f64) {
            let a = ArraySpec::vehicle_array();
            let d = SpeDerate::new(f).unwrap();
            let base = array_power(ghi, &a, SpeDerate::none());
            prop_assert!((array_power(ghi * k, &a, SpeDerate::none()) - k * base).abs() <= 1e-9 * base.max(1.0));
            prop_assert!((array_power(ghi, &a, d) - (1.0 - f) * base).abs() <= 1e-9 * base.max(1.0));
        }

        #[test]
        fn array_algebra(series in 1u32..20, parallel in 1u32..20) {
            let p = PanelSpec::<f64>::vehicle_panel();
            let a = wire_array(p, series, parallel).unwrap();
            let b = wire_array(p, series, parallel + 1).unwrap();
            let c = wire_array(p, series + 1, parallel).unwrap();
            prop_assert_eq!(a.v_nominal, b.v_nominal);
            prop_assert_eq!(a.i_nominal, c.i_nominal);
            prop_assert!(((a.p_stc - a.v_nominal * a.i_nominal) / a.p_stc).abs() < 0.02);
        }
    }

    #[test]
    fn spe_factors_exact() {
        let a = ArraySpec::vehicle_array();
        for ghi in [100.0, 439.0, 582.0, 950.0] {
            let base = array_power(ghi, &a, SpeDerate::none());
            assert_eq!(array_power(ghi, &a, SpeDerate::new(0.05).unwrap()), 0.95 * base);
            assert_eq!(array_power(ghi, &a, SpeDerate::new(0.30).unwrap()), 0.70 * base);
        }
    }
}
