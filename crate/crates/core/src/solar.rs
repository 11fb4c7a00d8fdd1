//! Sun position and clear-sky irradiance.
//!
//! Sun geometry follows the NOAA solar-calculator series (geometric mean
//! longitude/anomaly, equation of centre, obliquity, equation of time). The
//! irradiance chain is the Bird & Hulstrom clear-sky model: broadband
//! Rayleigh, ozone, uniformly-mixed-gas, water-vapour and aerosol
//! transmittances, a direct beam, an aerosol-scattered diffuse term, and a
//! sky/ground multiple-reflection multiplier on the global value.

use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, TimeDelta, Timelike};

use crate::error::{ModelError, Result};
use crate::num::{lit, Real};

/// Solar constant used by the Bird spreadsheet, W/m².
pub const SOLAR_CONSTANT: f64 = 1367.0;

/// Observer position and civil clock offset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoLocation<T> {
    /// Degrees north.
    pub latitude: T,
    /// Degrees east.
    pub longitude: T,
    /// Local clock minus UTC, hours (daylight saving included).
    pub utc_offset: T,
}

impl<T: Real> GeoLocation<T> {
    pub fn new(latitude: T, longitude: T, utc_offset: T) -> Result<Self> {
        let loc = GeoLocation { latitude, longitude, utc_offset };
        loc.validate()?;
        Ok(loc)
    }

    /// The rooftop test site: 37.34°N, 121.88°W on Pacific Daylight Time.
    pub fn san_jose() -> Self {
        GeoLocation { latitude: lit(37.34), longitude: lit(-121.88), utc_offset: lit(-7.0) }
    }

    pub fn validate(&self) -> Result<()> {
        let in_range = |v: T, lo: f64, hi: f64| v.is_finite() && v >= lit(lo) && v <= lit(hi);
        if !in_range(self.latitude, -90.0, 90.0) {
            return Err(ModelError::domain("latitude", format!("{} not in [-90, 90]", self.latitude)));
        }
        if !in_range(self.longitude, -180.0, 180.0) {
            return Err(ModelError::domain("longitude", format!("{} not in [-180, 180]", self.longitude)));
        }
        if !in_range(self.utc_offset, -12.0, 14.0) {
            return Err(ModelError::domain("utc_offset", format!("{} not in [-12, 14]", self.utc_offset)));
        }
        Ok(())
    }
}

/// Atmospheric inputs to the clear-sky chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtmosphereParams<T> {
    /// Millibars.
    pub surface_pressure: T,
    /// Ozone column, atm-cm.
    pub ozone: T,
    /// Precipitable water, cm.
    pub precipitable_water: T,
    pub aerosol_optical_depth_500nm: T,
    pub aerosol_optical_depth_380nm: T,
    /// Fraction of aerosol scatter going forward (Bird's `Ba`).
    pub forward_scatter_fraction: T,
    pub ground_albedo: T,
}

impl<T: Real> Default for AtmosphereParams<T> {
    fn default() -> Self {
        AtmosphereParams {
            surface_pressure: lit(1013.0),
            ozone: lit(0.3),
            precipitable_water: lit(1.5),
            aerosol_optical_depth_500nm: lit(0.10),
            aerosol_optical_depth_380nm: lit(0.15),
            forward_scatter_fraction: lit(0.84),
            ground_albedo: lit(0.2),
        }
    }
}

impl<T: Real> AtmosphereParams<T> {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("surface_pressure", self.surface_pressure),
            ("ozone", self.ozone),
            ("precipitable_water", self.precipitable_water),
            ("aerosol_optical_depth_500nm", self.aerosol_optical_depth_500nm),
            ("aerosol_optical_depth_380nm", self.aerosol_optical_depth_380nm),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= T::zero()) {
                return Err(ModelError::domain(name, format!("{v} must be >= 0")));
            }
        }
        for (name, v) in
            [("forward_scatter_fraction", self.forward_scatter_fraction), ("ground_albedo", self.ground_albedo)]
        {
            if !(v >= T::zero() && v <= T::one()) {
                return Err(ModelError::domain(name, format!("{v} not in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// Sun geometry at one civil instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolarInstant<T> {
    pub timestamp: NaiveDateTime,
    /// Degrees from the local vertical, [0, 180].
    pub zenith_angle: T,
    /// Inverse-square Earth–Sun distance factor, (r0/r)².
    pub earth_sun_distance_factor: T,
    /// Apparent (true) solar time, hours in [0, 24).
    pub local_solar_time: T,
}

/// Clear-sky irradiance components, W/m².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrradianceSample<T> {
    pub timestamp: NaiveDateTime,
    pub direct_normal: T,
    pub diffuse_horizontal: T,
    pub global_horizontal: T,
}

/// Summary of global horizontal irradiance over a clock window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DayStats<T> {
    pub window_start: NaiveTime,
    pub window_end: NaiveTime,
    pub average_ghi: T,
    pub max_ghi: T,
    pub time_of_max: NaiveTime,
}

fn sind<T: Real>(deg: T) -> T {
    deg.to_radians().sin()
}

fn cosd<T: Real>(deg: T) -> T {
    deg.to_radians().cos()
}

fn rem_euclid<T: Real>(x: T, m: T) -> T {
    let r = x % m;
    if r < T::zero() {
        r + m
    } else {
        r
    }
}

/// Computes the sun's zenith angle, distance factor and solar time.
pub fn solar_position<T: Real>(location: &GeoLocation<T>, timestamp: NaiveDateTime) -> Result<SolarInstant<T>> {
    location.validate()?;
    let year = timestamp.year();
    if !(1950..=2100).contains(&year) {
        return Err(ModelError::domain("timestamp", format!("year {year} outside 1950-2100")));
    }

    // Local clock → UTC, then days since J2000.0 (2000-01-01 12:00 UTC),
    // split into whole days and seconds so that f32 keeps usable precision.
    let offset_s = (location.utc_offset * lit(3600.0)).round().to_i64().expect("offset fits in i64");
    let utc = timestamp - TimeDelta::seconds(offset_s);
    let j2000 = NaiveDate::from_ymd_opt(2000, 1, 1).and_then(|d| d.and_hms_opt(12, 0, 0)).expect("valid epoch");
    let elapsed = utc - j2000;
    let whole_days = elapsed.num_days();
    let rem_ms = (elapsed - TimeDelta::days(whole_days)).num_milliseconds();
    let days = T::from_i64(whole_days).expect("days fit") + T::from_i64(rem_ms).expect("ms fit") / lit(86_400_000.0);
    let jc = days / lit(36525.0);

    let mean_long = rem_euclid(lit::<T>(280.46646) + jc * (lit::<T>(36000.76983) + jc * lit(0.0003032)), lit(360.0));
    let mean_anom = lit::<T>(357.52911) + jc * (lit::<T>(35999.05029) - lit::<T>(0.0001537) * jc);
    let ecc = lit::<T>(0.016708634) - jc * (lit::<T>(0.000042037) + lit::<T>(0.0000001267) * jc);
    let center = sind(mean_anom) * (lit::<T>(1.914602) - jc * (lit::<T>(0.004817) + lit::<T>(0.000014) * jc))
        + sind(mean_anom * lit(2.0)) * (lit::<T>(0.019993) - lit::<T>(0.000101) * jc)
        + sind(mean_anom * lit(3.0)) * lit(0.000289);
    let true_long = mean_long + center;
    let true_anom = mean_anom + center;
    let radius_au = (lit::<T>(1.000001018) * (T::one() - ecc * ecc)) / (T::one() + ecc * cosd(true_anom));
    let omega = lit::<T>(125.04) - lit::<T>(1934.136) * jc;
    let apparent_long = true_long - lit(0.00569) - lit::<T>(0.00478) * sind(omega);
    let mean_obliq = lit::<T>(23.0)
        + (lit::<T>(26.0)
            + (lit::<T>(21.448) - jc * (lit::<T>(46.815) + jc * (lit::<T>(0.00059) - jc * lit(0.001813)))) / lit(60.0))
            / lit(60.0);
    let obliq = mean_obliq + lit::<T>(0.00256) * cosd(omega);
    let declination = (sind(obliq) * sind(apparent_long)).asin();

    let y = (obliq.to_radians() / lit(2.0)).tan().powi(2);
    let l0 = mean_long.to_radians();
    let m = mean_anom.to_radians();
    let two: T = lit(2.0);
    let eot_minutes = lit::<T>(4.0)
        * (y * (two * l0).sin() - two * ecc * m.sin() + lit::<T>(4.0) * ecc * y * m.sin() * (two * l0).cos()
            - lit::<T>(0.5) * y * y * (lit::<T>(4.0) * l0).sin()
            - lit::<T>(1.25) * ecc * ecc * (two * m).sin())
        .to_degrees();

    let clock_minutes = T::from_u32(timestamp.time().num_seconds_from_midnight()).expect("fits") / lit(60.0);
    let true_solar_minutes = rem_euclid(
        clock_minutes + eot_minutes + lit::<T>(4.0) * location.longitude - lit::<T>(60.0) * location.utc_offset,
        lit(1440.0),
    );
    let hour_angle = true_solar_minutes / lit(4.0) - lit(180.0);

    let lat = location.latitude.to_radians();
    let cos_zenith = lat.sin() * declination.sin() + lat.cos() * declination.cos() * cosd(hour_angle);
    let zenith = cos_zenith.max(-T::one()).min(T::one()).acos().to_degrees();

    Ok(SolarInstant {
        timestamp,
        zenith_angle: zenith,
        earth_sun_distance_factor: T::one() / (radius_au * radius_au),
        local_solar_time: true_solar_minutes / lit(60.0),
    })
}

/// Bird & Hulstrom broadband clear-sky irradiance for one sun position.
pub fn bird_clear_sky<T: Real>(
    instant: &SolarInstant<T>,
    atmosphere: &AtmosphereParams<T>,
) -> Result<IrradianceSample<T>> {
    atmosphere.validate()?;
    let z = instant.zenith_angle;
    if !(z >= T::zero() && z <= lit(180.0)) {
        return Err(ModelError::domain("zenith_angle", format!("{z} not in [0, 180]")));
    }
    let dark = IrradianceSample {
        timestamp: instant.timestamp,
        direct_normal: T::zero(),
        diffuse_horizontal: T::zero(),
        global_horizontal: T::zero(),
    };
    if z >= lit(90.0) {
        return Ok(dark);
    }

    let one = T::one();
    let etr = lit::<T>(SOLAR_CONSTANT) * instant.earth_sun_distance_factor;
    let cos_z = cosd(z);
    // Kasten relative air mass and its pressure-corrected form.
    let air_mass = one / (cos_z + lit::<T>(0.15) * (lit::<T>(93.885) - z).powf(lit(-1.25)));
    let pressure_mass = air_mass * atmosphere.surface_pressure / lit(1013.0);

    let t_rayleigh =
        (lit::<T>(-0.0903) * pressure_mass.powf(lit(0.84)) * (one + pressure_mass - pressure_mass.powf(lit(1.01))))
            .exp();

    let ozone_path = atmosphere.ozone * air_mass;
    let t_ozone = one
        - lit::<T>(0.1611) * ozone_path * (one + lit::<T>(139.48) * ozone_path).powf(lit(-0.3034))
        - lit::<T>(0.002715) * ozone_path
            / (one + lit::<T>(0.044) * ozone_path + lit::<T>(0.0003) * ozone_path * ozone_path);

    let t_mixed = (lit::<T>(-0.0127) * pressure_mass.powf(lit(0.26))).exp();

    let water_path = atmosphere.precipitable_water * air_mass;
    let t_water = one
        - lit::<T>(2.4959) * water_path
            / ((one + lit::<T>(79.034) * water_path).powf(lit(0.6828)) + lit::<T>(6.385) * water_path);

    // Broadband aerosol optical depth from the 380 nm and 500 nm values.
    let tau = lit::<T>(0.2758) * atmosphere.aerosol_optical_depth_380nm
        + lit::<T>(0.35) * atmosphere.aerosol_optical_depth_500nm;
    let t_aerosol = if tau > T::zero() {
        (-(tau.powf(lit(0.873))) * (one + tau - tau.powf(lit(0.7088))) * air_mass.powf(lit(0.9108))).exp()
    } else {
        one
    };
    let t_aerosol_abs = one - lit::<T>(0.1) * (one - air_mass + air_mass.powf(lit(1.06))) * (one - t_aerosol);
    let scatter_ratio = t_aerosol / t_aerosol_abs;
    let sky_albedo = lit::<T>(0.0685) + (one - atmosphere.forward_scatter_fraction) * (one - scatter_ratio);

    let direct_normal = lit::<T>(0.9662) * etr * t_rayleigh * t_ozone * t_mixed * t_water * t_aerosol;
    let direct_horizontal = direct_normal * cos_z;
    let scattered = etr
        * cos_z
        * lit(0.79)
        * t_ozone
        * t_water
        * t_mixed
        * t_aerosol_abs
        * (lit::<T>(0.5) * (one - t_rayleigh) + atmosphere.forward_scatter_fraction * (one - scatter_ratio))
        / (one - air_mass + air_mass.powf(lit(1.02)));
    let global = (direct_horizontal + scattered) / (one - atmosphere.ground_albedo * sky_albedo);

    Ok(IrradianceSample {
        timestamp: instant.timestamp,
        direct_normal: direct_normal.max(T::zero()),
        diffuse_horizontal: (global - direct_horizontal).max(T::zero()),
        global_horizontal: global.max(T::zero()),
    })
}

/// Clear-sky irradiance at a civil time, composing position and the Bird chain.
pub fn clear_sky_at<T: Real>(
    location: &GeoLocation<T>,
    timestamp: NaiveDateTime,
    atmosphere: &AtmosphereParams<T>,
) -> Result<IrradianceSample<T>> {
    let instant = solar_position(location, timestamp)?;
    bird_clear_sky(&instant, atmosphere)
}

/// Samples clear-sky irradiance across `[start, end]` at a fixed step and
/// summarises global horizontal irradiance over exactly those samples.
pub fn day_profile<T: Real>(
    location: &GeoLocation<T>,
    date: NaiveDate,
    atmosphere: &AtmosphereParams<T>,
    window: (NaiveTime, NaiveTime),
    step_seconds: u32,
) -> Result<(Vec<IrradianceSample<T>>, DayStats<T>)> {
    if !(1..=3600).contains(&step_seconds) {
        return Err(ModelError::domain("step", format!("{step_seconds} s not in [1, 3600]")));
    }
    let (start, end) = window;
    if end < start {
        return Err(ModelError::domain("window", format!("empty window {start}..{end}")));
    }

    let first = date.and_time(start);
    let last = date.and_time(end);
    let step = TimeDelta::seconds(i64::from(step_seconds));
    let mut samples = Vec::new();
    let mut t = first;
    while t <= last {
        samples.push(clear_sky_at(location, t, atmosphere)?);
        t += step;
    }

    let mut sum = T::zero();
    let mut best = &samples[0];
    for s in &samples {
        sum = sum + s.global_horizontal;
        if s.global_horizontal > best.global_horizontal {
            best = s;
        }
    }
    let stats = DayStats {
        window_start: start,
        window_end: end,
        average_ghi: sum / T::from_usize(samples.len()).expect("sample count fits"),
        max_ghi: best.global_horizontal,
        time_of_max: best.timestamp.time(),
    };
    Ok((samples, stats))
}
