//! TOML run configuration. Every physical key carries its unit in the name.

use chrono::{NaiveDate, NaiveTime};
use serde::{Deserialize, Serialize};

use zem_core::battery::calibrate_peukert;
use zem_core::pv::{wire_array, PanelSpec as GenericPanel, SpeDerate};
use zem_core::sim::{PredictionSummary, Scenario, Segment, Site, Sun, Throttle};
use zem_core::units::mph_to_mps;
use zem_core::{
    AtmosphereParams, AuxLoads, BankConfig, BatterySpec, ChargeControllerSpec, Chemistry, Direction, GeoLocation,
    MotorSpec, SprocketSet, SupervisorConfig, VehicleParams,
};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub name: String,
    pub timestep_s: f64,
    pub initial_soc: f64,
    pub initial_speed_mps: f64,
    pub initial_direction: String,
    pub speed_target_gain_per_mps: f64,
}

impl Default for SimulationSection {
    fn default() -> Self {
        let s = Scenario::default();
        SimulationSection {
            name: s.name,
            timestep_s: s.timestep,
            initial_soc: s.initial_soc,
            initial_speed_mps: s.initial_speed,
            initial_direction: s.initial_direction.name().to_string(),
            speed_target_gain_per_mps: s.speed_target_gain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiteSection {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub utc_offset_h: f64,
    pub date: String,
    /// Clock time the simulation starts at.
    pub start_time: String,
    /// Prediction window for `solar-day` and `compare`.
    pub window_start: String,
    pub window_end: String,
}

impl Default for SiteSection {
    fn default() -> Self {
        let site = Site::default();
        SiteSection {
            latitude_deg: site.location.latitude,
            longitude_deg: site.location.longitude,
            utc_offset_h: site.location.utc_offset,
            date: site.date.to_string(),
            start_time: site.start_time.format("%H:%M:%S").to_string(),
            window_start: "08:44:00".to_string(),
            window_end: "16:24:00".to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AtmosphereSection {
    pub surface_pressure_mbar: f64,
    pub ozone_atm_cm: f64,
    pub precipitable_water_cm: f64,
    pub aerosol_optical_depth_500nm: f64,
    pub aerosol_optical_depth_380nm: f64,
    pub forward_scatter_fraction: f64,
    pub ground_albedo: f64,
}

impl Default for AtmosphereSection {
    fn default() -> Self {
        let a = AtmosphereParams::default();
        AtmosphereSection {
            surface_pressure_mbar: a.surface_pressure,
            ozone_atm_cm: a.ozone,
            precipitable_water_cm: a.precipitable_water,
            aerosol_optical_depth_500nm: a.aerosol_optical_depth_500nm,
            aerosol_optical_depth_380nm: a.aerosol_optical_depth_380nm,
            forward_scatter_fraction: a.forward_scatter_fraction,
            ground_albedo: a.ground_albedo,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VehicleSection {
    pub mass_kg: f64,
    pub rolling_resistance_coeff: f64,
    pub drag_area_m2: f64,
    pub air_density_kg_m3: f64,
    pub gravity_m_s2: f64,
    pub rider_max_crank_torque_nm: f64,
}

impl Default for VehicleSection {
    fn default() -> Self {
        let v = VehicleParams::default();
        VehicleSection {
            mass_kg: v.mass,
            rolling_resistance_coeff: v.rolling_resistance_coeff,
            drag_area_m2: v.drag_area,
            air_density_kg_m3: v.air_density,
            gravity_m_s2: v.gravity,
            rider_max_crank_torque_nm: Scenario::default().rider_max_crank_torque,
        }
    }
}

/// Unset fields come from the chemistry's preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatterySection {
    pub chemistry: String,
    pub voltage_v: Option<f64>,
    pub rated_ah: Option<f64>,
    pub rated_current_a: Option<f64>,
    /// Either give the exponent directly or a measured point to calibrate it from.
    pub peukert_k: Option<f64>,
    pub measured_ah: Option<f64>,
    pub measured_current_a: Option<f64>,
    pub mass_kg: Option<f64>,
    pub min_soc: Option<f64>,
    pub charge_efficiency: Option<f64>,
    pub series_count: u32,
    pub parallel_count: u32,
    pub battery_count: Option<u32>,
}

impl Default for BatterySection {
    fn default() -> Self {
        let bank = BankConfig::vehicle_bank();
        BatterySection {
            chemistry: bank.battery.chemistry.name().to_string(),
            voltage_v: None,
            rated_ah: None,
            rated_current_a: None,
            peukert_k: None,
            measured_ah: None,
            measured_current_a: None,
            mass_kg: None,
            min_soc: None,
            charge_efficiency: None,
            series_count: bank.series_count,
            parallel_count: bank.parallel_count,
            battery_count: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    pub panel_vmp_v: f64,
    pub panel_imp_a: f64,
    pub panel_pmax_w: f64,
    pub panel_efficiency: f64,
    pub series_count: u32,
    pub parallel_count: u32,
    pub spe_derate: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        let p = GenericPanel::<f64>::vehicle_panel();
        ArraySection {
            panel_vmp_v: p.v_mp,
            panel_imp_a: p.i_mp,
            panel_pmax_w: p.p_max,
            panel_efficiency: p.efficiency,
            series_count: 2,
            parallel_count: 2,
            spe_derate: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChargeControllerSection {
    pub max_charge_current_a: f64,
    pub bus_voltage_v: f64,
}

impl Default for ChargeControllerSection {
    fn default() -> Self {
        let c = ChargeControllerSpec::default();
        ChargeControllerSection { max_charge_current_a: c.max_charge_current, bus_voltage_v: c.bus_voltage }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotorSection {
    pub supply_voltage_v: f64,
    pub max_power_w: f64,
    pub current_limit_a: f64,
    pub armature_resistance_ohm: f64,
    /// Torque per ampere squared, N·m/A².
    pub field_constant_nm_per_a2: f64,
    /// Back-EMF per ampere per rad/s, V·s/(A·rad).
    pub back_emf_constant_vs_per_a_rad: f64,
}

impl Default for MotorSection {
    fn default() -> Self {
        let m = MotorSpec::default();
        MotorSection {
            supply_voltage_v: m.supply_voltage,
            max_power_w: m.max_power,
            current_limit_a: m.current_limit,
            armature_resistance_ohm: m.armature_resistance,
            field_constant_nm_per_a2: m.series_field_constant,
            back_emf_constant_vs_per_a_rad: m.speed_constant,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SprocketSection {
    pub pedal_ratio: f64,
    pub motor_ratio: f64,
    pub wheel_radius_m: f64,
}

impl Default for SprocketSection {
    fn default() -> Self {
        let s = SprocketSet::default();
        SprocketSection { pedal_ratio: s.pedal_ratio, motor_ratio: s.motor_ratio, wheel_radius_m: s.wheel_radius }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SupervisorSection {
    pub threshold_mph: f64,
    pub override_enabled: bool,
}

impl Default for SupervisorSection {
    fn default() -> Self {
        let s = SupervisorConfig::default();
        SupervisorSection { threshold_mph: 5.0, override_enabled: s.override_enabled }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuxSection {
    pub dcdc_rating_w: f64,
    pub aux_draw_w: f64,
    pub dcdc_efficiency: f64,
}

impl Default for AuxSection {
    fn default() -> Self {
        let a = AuxLoads::default();
        AuxSection { dcdc_rating_w: a.dcdc_rating, aux_draw_w: a.aux_draw, dcdc_efficiency: a.dcdc_efficiency }
    }
}

/// Values that replace the clear-sky model's output in `solar-day` and
/// `compare`. Outputs not given are computed from the irradiance values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictionSection {
    pub average_ghi_wm2: Option<f64>,
    pub max_ghi_wm2: Option<f64>,
    pub time_of_max: Option<String>,
    pub continuous_output_w: Option<f64>,
    pub max_output_w: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentSection {
    pub duration_s: f64,
    pub grade_rad: f64,
    pub direction: String,
    /// Exclusive with `target_speed_mps`; zero throttle when neither is set.
    pub potentiometer_ohm: Option<f64>,
    pub target_speed_mps: Option<f64>,
    pub pedal_power_w: f64,
    pub brake_force_n: f64,
    /// `none` or `clear_sky`.
    pub sun: String,
}

impl Default for SegmentSection {
    fn default() -> Self {
        SegmentSection {
            duration_s: 0.0,
            grade_rad: 0.0,
            direction: "forward".to_string(),
            potentiometer_ohm: None,
            target_speed_mps: None,
            pedal_power_w: 0.0,
            brake_force_n: 0.0,
            sun: "none".to_string(),
        }
    }
}

/// The whole configuration file, with every default filled in.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub simulation: SimulationSection,
    pub site: SiteSection,
    pub atmosphere: AtmosphereSection,
    pub vehicle: VehicleSection,
    pub battery: BatterySection,
    pub array: ArraySection,
    pub charge_controller: ChargeControllerSection,
    pub motor: MotorSection,
    pub sprockets: SprocketSection,
    pub supervisor: SupervisorSection,
    pub aux: AuxSection,
    pub prediction: PredictionSection,
    #[serde(rename = "segment")]
    pub segments: Vec<SegmentSection>,
}

fn parse_date(field: &str, s: &str) -> Result<NaiveDate, CliError> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| CliError::Config(format!("{field}: '{s}' is not a YYYY-MM-DD date")))
}

pub fn parse_clock(field: &str, s: &str) -> Result<NaiveTime, CliError> {
    NaiveTime::parse_from_str(s, "%H:%M:%S")
        .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
        .map_err(|_| CliError::Config(format!("{field}: '{s}' is not an HH:MM[:SS] time")))
}

fn clock_string(t: NaiveTime) -> String {
    t.format("%H:%M:%S").to_string()
}

fn direction(field: &str, s: &str) -> Result<Direction, CliError> {
    s.parse().map_err(|_| CliError::Config(format!("{field}: '{s}' is not forward | reverse")))
}

fn model(field: &str) -> impl Fn(zem_core::ModelError) -> CliError + '_ {
    move |e| CliError::Config(format!("{field}: {e}"))
}

impl RunConfig {
    /// Parses a file's text and fills in every default.
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let mut cfg: RunConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            let msg = e.message().replace('\n', " ");
            match line {
                Some(l) => CliError::Config(format!("line {l}: {msg}")),
                None => CliError::Config(msg),
            }
        })?;
        cfg.normalize()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Resolves preset-backed and optional fields into their effective
    /// values, and rewrites times in canonical form.
    pub fn normalize(&mut self) -> Result<(), CliError> {
        let b = &mut self.battery;
        let chem: Chemistry = b.chemistry.parse().map_err(|_| {
            CliError::Config(format!("battery.chemistry: '{}' is not lead-acid | silicone", b.chemistry))
        })?;
        b.chemistry = chem.name().to_string();
        let preset = BatterySpec::preset(chem);
        b.voltage_v.get_or_insert(preset.v_nominal);
        b.rated_ah.get_or_insert(preset.rated_ah);
        b.rated_current_a.get_or_insert(preset.rated_current);
        b.min_soc.get_or_insert(preset.min_soc);
        b.charge_efficiency.get_or_insert(preset.charge_efficiency);
        if b.mass_kg.is_none() {
            b.mass_kg = preset.mass;
        }
        match (b.measured_ah, b.measured_current_a, b.peukert_k) {
            (Some(_), Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "battery: give peukert_k or measured_ah/measured_current_a, not both".into(),
                ))
            }
            (Some(_), None, _) | (None, Some(_), _) => {
                return Err(CliError::Config("battery: measured_ah and measured_current_a go together".into()))
            }
            (Some(_), Some(_), None) => {}
            (None, None, k) => {
                b.peukert_k = Some(k.unwrap_or(preset.peukert_k));
            }
        }

        self.site.date = parse_date("site.date", &self.site.date)?.to_string();
        for (field, v) in [
            ("site.start_time", &mut self.site.start_time),
            ("site.window_start", &mut self.site.window_start),
            ("site.window_end", &mut self.site.window_end),
        ] {
            *v = clock_string(parse_clock(field, v)?);
        }
        if let Some(t) = &mut self.prediction.time_of_max {
            *t = clock_string(parse_clock("prediction.time_of_max", t)?);
        }
        self.simulation.initial_direction =
            direction("simulation.initial_direction", &self.simulation.initial_direction)?.name().to_string();
        for (i, s) in self.segments.iter_mut().enumerate() {
            s.direction = direction(&format!("segment[{i}].direction"), &s.direction)?.name().to_string();
            if s.potentiometer_ohm.is_some() && s.target_speed_mps.is_some() {
                return Err(CliError::Config(format!(
                    "segment[{i}]: potentiometer_ohm and target_speed_mps are exclusive"
                )));
            }
            if s.potentiometer_ohm.is_none() && s.target_speed_mps.is_none() {
                s.potentiometer_ohm = Some(0.0);
            }
            match s.sun.as_str() {
                "none" | "clear_sky" => {}
                other => return Err(CliError::Config(format!("segment[{i}].sun: '{other}' is not none | clear_sky"))),
            }
        }
        Ok(())
    }

    pub fn battery_spec(&self) -> Result<BatterySpec, CliError> {
        let b = &self.battery;
        let chemistry: Chemistry = b.chemistry.parse().map_err(model("battery.chemistry"))?;
        let get = |v: Option<f64>| v.expect("normalized");
        let rated_ah = get(b.rated_ah);
        let rated_current = get(b.rated_current_a);
        let peukert_k = match (b.measured_ah, b.measured_current_a) {
            (Some(ah), Some(i)) => calibrate_peukert(rated_ah, rated_current, ah, i).map_err(model("battery"))?,
            _ => get(b.peukert_k),
        };
        let spec = BatterySpec {
            chemistry,
            v_nominal: get(b.voltage_v),
            rated_ah,
            rated_current,
            peukert_k,
            mass: b.mass_kg,
            min_soc: get(b.min_soc),
            charge_efficiency: get(b.charge_efficiency),
        };
        spec.validate().map_err(model("battery"))?;
        Ok(spec)
    }

    pub fn bank(&self) -> Result<BankConfig, CliError> {
        let bank = BankConfig {
            battery: self.battery_spec()?,
            series_count: self.battery.series_count,
            parallel_count: self.battery.parallel_count,
        };
        zem_core::battery::bank_aggregate(&bank, self.battery.battery_count).map_err(model("battery"))?;
        Ok(bank)
    }

    pub fn location(&self) -> Result<GeoLocation, CliError> {
        GeoLocation::new(self.site.latitude_deg, self.site.longitude_deg, self.site.utc_offset_h).map_err(model("site"))
    }

    pub fn atmosphere(&self) -> Result<AtmosphereParams, CliError> {
        let a = &self.atmosphere;
        let atm = AtmosphereParams {
            surface_pressure: a.surface_pressure_mbar,
            ozone: a.ozone_atm_cm,
            precipitable_water: a.precipitable_water_cm,
            aerosol_optical_depth_500nm: a.aerosol_optical_depth_500nm,
            aerosol_optical_depth_380nm: a.aerosol_optical_depth_380nm,
            forward_scatter_fraction: a.forward_scatter_fraction,
            ground_albedo: a.ground_albedo,
        };
        atm.validate().map_err(model("atmosphere"))?;
        Ok(atm)
    }

    pub fn date(&self) -> Result<NaiveDate, CliError> {
        parse_date("site.date", &self.site.date)
    }

    pub fn window(&self) -> Result<(NaiveTime, NaiveTime), CliError> {
        Ok((
            parse_clock("site.window_start", &self.site.window_start)?,
            parse_clock("site.window_end", &self.site.window_end)?,
        ))
    }

    pub fn array(&self) -> Result<zem_core::ArraySpec, CliError> {
        let a = &self.array;
        let panel = GenericPanel::new(a.panel_vmp_v, a.panel_imp_a, a.panel_pmax_w, a.panel_efficiency)
            .map_err(model("array"))?;
        wire_array(panel, a.series_count, a.parallel_count).map_err(model("array"))
    }

    pub fn derate(&self) -> Result<SpeDerate<f64>, CliError> {
        SpeDerate::new(self.array.spe_derate).map_err(model("array.spe_derate"))
    }

    /// Model prediction over the site window with any `[prediction]` overrides applied.
    pub fn prediction(&self) -> Result<PredictionSummary, CliError> {
        let array = self.array()?;
        let window = self.window()?;
        if window.1 < window.0 {
            return Err(CliError::Config("site.window_end is before site.window_start".into()));
        }
        let mut p = PredictionSummary::from_model(&self.location()?, self.date()?, &self.atmosphere()?, &array, window)
            .map_err(model("site"))?;
        let o = &self.prediction;
        let none = SpeDerate::none();
        if let Some(g) = o.average_ghi_wm2 {
            p.average_ghi = g;
            p.continuous_output_w = zem_core::pv::array_power(g, &array, none);
        }
        if let Some(g) = o.max_ghi_wm2 {
            p.max_ghi = g;
            p.max_output_w = zem_core::pv::array_power(g, &array, none);
        }
        if let Some(t) = &o.time_of_max {
            p.time_of_max = parse_clock("prediction.time_of_max", t)?;
        }
        if let Some(w) = o.continuous_output_w {
            p.continuous_output_w = w;
        }
        if let Some(w) = o.max_output_w {
            p.max_output_w = w;
        }
        Ok(p)
    }

    /// Builds the scenario. Field validation happens in [`Scenario::validate`],
    /// which reports every violation at once.
    pub fn scenario(&self) -> Result<Scenario, CliError> {
        let sim = &self.simulation;
        let segments = self
            .segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                Ok(Segment {
                    duration_s: s.duration_s,
                    grade_angle: s.grade_rad,
                    direction: direction(&format!("segment[{i}].direction"), &s.direction)?,
                    throttle: match (s.potentiometer_ohm, s.target_speed_mps) {
                        (_, Some(v)) => Throttle::SpeedTarget(v),
                        (r, None) => Throttle::Potentiometer(r.unwrap_or(0.0)),
                    },
                    pedal_power_w: s.pedal_power_w,
                    brake_force_n: s.brake_force_n,
                    sun: if s.sun == "clear_sky" { Sun::ClearSky } else { Sun::None },
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let m = &self.motor;
        Ok(Scenario {
            name: sim.name.clone(),
            segments,
            vehicle: VehicleParams {
                mass: self.vehicle.mass_kg,
                rolling_resistance_coeff: self.vehicle.rolling_resistance_coeff,
                drag_area: self.vehicle.drag_area_m2,
                air_density: self.vehicle.air_density_kg_m3,
                gravity: self.vehicle.gravity_m_s2,
            },
            rider_max_crank_torque: self.vehicle.rider_max_crank_torque_nm,
            bank: self.bank()?,
            array: self.array()?,
            derate: self.derate()?,
            charge_controller: ChargeControllerSpec {
                max_charge_current: self.charge_controller.max_charge_current_a,
                bus_voltage: self.charge_controller.bus_voltage_v,
            },
            motor: MotorSpec {
                supply_voltage: m.supply_voltage_v,
                max_power: m.max_power_w,
                current_limit: m.current_limit_a,
                armature_resistance: m.armature_resistance_ohm,
                series_field_constant: m.field_constant_nm_per_a2,
                speed_constant: m.back_emf_constant_vs_per_a_rad,
            },
            sprockets: SprocketSet {
                pedal_ratio: self.sprockets.pedal_ratio,
                motor_ratio: self.sprockets.motor_ratio,
                wheel_radius: self.sprockets.wheel_radius_m,
            },
            supervisor: SupervisorConfig {
                motor_enable_threshold: mph_to_mps(self.supervisor.threshold_mph),
                override_enabled: self.supervisor.override_enabled,
            },
            aux: AuxLoads {
                dcdc_rating: self.aux.dcdc_rating_w,
                aux_draw: self.aux.aux_draw_w,
                dcdc_efficiency: self.aux.dcdc_efficiency,
            },
            site: Site {
                location: self.location()?,
                date: self.date()?,
                start_time: parse_clock("site.start_time", &self.site.start_time)?,
                atmosphere: self.atmosphere()?,
            },
            timestep: sim.timestep_s,
            initial_soc: sim.initial_soc,
            initial_speed: sim.initial_speed_mps,
            initial_direction: direction("simulation.initial_direction", &sim.initial_direction)?,
            speed_target_gain: sim.speed_target_gain_per_mps,
        })
    }
}
