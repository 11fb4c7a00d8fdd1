use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use zem_core::pv::SpeDerate;
use zem_core::sim::{replay_battery_experiment, run, BatteryReplay, ComparisonReport, MeasurementSeries};
use zem_core::{BatterySpec, Chemistry};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "zem", version, about = "Hybrid human/solar/electric vehicle energy simulator")]
struct Cli {
    /// Print the configuration with every default filled in, then exit.
    #[arg(long, global = true)]
    dump_effective_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the configured scenario and write its trace CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Trace CSV destination.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Clear-sky day statistics, compared with measurements when given.
    SolarDay {
        #[arg(long)]
        config: Option<PathBuf>,
        /// `time_local,power_w` CSV of measured array output.
        #[arg(long)]
        measured: Option<PathBuf>,
        /// SPE derate fraction; repeatable. Defaults to 0.05 and 0.30.
        #[arg(long)]
        derate: Vec<f64>,
        /// Write the report as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Constant-current discharge over the 100 % to min-soc window.
    Battery {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Use this chemistry's preset instead of the configured battery.
        #[arg(long)]
        chemistry: Option<String>,
        /// Discharge current, A.
        #[arg(long, default_value_t = 12.0)]
        current: f64,
        /// Side-by-side lead-acid and silicone comparison.
        #[arg(long)]
        compare: bool,
        /// Write the discharge curve CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prediction versus measurement report.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        measured: PathBuf,
        #[arg(long)]
        derate: Vec<f64>,
        /// Write the report as JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    fn config_path(&self) -> Option<&Path> {
        match self {
            Command::Simulate { config, .. } => Some(config),
            Command::SolarDay { config, .. } | Command::Battery { config, .. } | Command::Compare { config, .. } => {
                config.as_deref()
            }
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn write_out(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(format!("stdout: {e}")))
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| io_err(p, e))?;
            RunConfig::from_toml(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", p.display())),
                other => other,
            })
        }
        None => {
            let mut cfg = RunConfig::default();
            cfg.normalize()?;
            Ok(cfg)
        }
    }
}

fn load_measurements(path: &Path) -> Result<MeasurementSeries, CliError> {
    let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
    MeasurementSeries::from_csv(file).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn derates(values: &[f64]) -> Result<Vec<SpeDerate<f64>>, CliError> {
    let values = if values.is_empty() { &[0.05, 0.30][..] } else { values };
    values.iter().map(|&d| SpeDerate::new(d).map_err(|e| CliError::Input(format!("--derate: {e}")))).collect()
}

/// Parses `args` (program name first) and runs the command, writing normal
/// output to `out`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            return write_out(out, &e.to_string());
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            return Err(CliError::Usage(first));
        }
    };

    let config = load_config(cli.command.config_path())?;
    if cli.dump_effective_config {
        return write_out(out, &config.to_toml());
    }

    match cli.command {
        Command::Simulate { out: path, .. } => cmd_simulate(&config, path.as_deref(), out),
        Command::SolarDay { measured, derate, out: path, .. } => {
            cmd_solar_day(&config, measured.as_deref(), &derate, path.as_deref(), out)
        }
        Command::Battery { chemistry, current, compare, out: path, .. } => {
            cmd_battery(&config, chemistry.as_deref(), current, compare, path.as_deref(), out)
        }
        Command::Compare { measured, derate, out: path, .. } => {
            cmd_compare(&config, &measured, &derate, path.as_deref(), out)
        }
    }
}

pub fn cmd_simulate(config: &RunConfig, trace_path: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let path = trace_path.ok_or_else(|| CliError::Usage("simulate needs --out <trace.csv>".into()))?;
    let scenario = config.scenario()?;
    let (trace, audit) = run(&scenario)?;
    let file = fs::File::create(path).map_err(|e| io_err(path, e))?;
    trace.write_csv(std::io::BufWriter::new(file)).map_err(|e| io_err(path, e))?;

    let last = trace.last().expect("validated scenarios have steps");
    let mut s = format!(
        "scenario {}: {} rows, final time {} s, speed {:.3} m/s, position {:.2} m, soc {:.6}\n",
        scenario.name,
        trace.rows.len(),
        last.time_s,
        last.speed_mps,
        last.position_m,
        last.soc
    );
    s += &format!(
        "energy in {:.4} Wh: battery {:.4}, pv {:.4}, pedal {:.4}\n",
        audit.energy_in_wh, audit.battery_discharge_wh, audit.pv_wh, audit.pedal_wh
    );
    s += &format!(
        "energy out {:.4} Wh: motor {:.4}, aux {:.4}, curtailed {:.4}, battery charge {:.4}, pedal to drivetrain {:.4}\n",
        audit.energy_out_wh,
        audit.motor_wh,
        audit.aux_wh,
        audit.curtailed_wh,
        audit.battery_charge_wh,
        audit.pedal_to_drivetrain_wh
    );
    s += &format!(
        "residual {:.3e} Wh (tolerance {:.3e} Wh): {}\n",
        audit.residual_wh,
        audit.tolerance_wh(),
        if audit.balanced() { "balanced" } else { "UNBALANCED" }
    );
    if let Some(t) = trace.first_exhaustion() {
        s += &format!("battery exhausted at {t} s; loads limited to available PV\n");
    }
    write_out(out, &s)
}

fn report(
    config: &RunConfig,
    measured: Option<&Path>,
    derate_values: &[f64],
) -> Result<(zem_core::sim::PredictionSummary, ComparisonReport), CliError> {
    let levels = derates(derate_values)?;
    let prediction = config.prediction()?;
    let stats = match measured {
        Some(p) => Some(load_measurements(p)?.stats().map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let report = ComparisonReport::build(&prediction, stats.as_ref(), &levels)?;
    Ok((prediction, report))
}

fn write_json(report: &ComparisonReport, path: &Path) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    fs::write(path, json + "\n").map_err(|e| io_err(path, e))
}

pub fn cmd_solar_day(
    config: &RunConfig,
    measured: Option<&Path>,
    derate_values: &[f64],
    json_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (p, report) = report(config, measured, derate_values)?;
    let mut s = format!(
        "site {}, {} on {}, window {} to {}\n",
        config.site.latitude_deg, config.site.longitude_deg, config.site.date, p.window.0, p.window.1
    );
    s += &format!("average GHI {:.1} W/m2\n", p.average_ghi);
    s += &format!("max GHI {:.1} W/m2 at {}\n", p.max_ghi, p.time_of_max.format("%H:%M"));
    s += &format!("array output: continuous {:.1} W, max {:.1} W\n\n", p.continuous_output_w, p.max_output_w);
    s += &report.to_text();
    write_out(out, &s)?;
    if let Some(path) = json_path {
        write_json(&report, path)?;
    }
    Ok(())
}

pub fn cmd_compare(
    config: &RunConfig,
    measured: &Path,
    derate_values: &[f64],
    json_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let (_, report) = report(config, Some(measured), derate_values)?;
    match json_path {
        Some(path) => {
            write_json(&report, path)?;
            write_out(out, &report.to_text())
        }
        None => write_out(out, &(serde_json::to_string_pretty(&report).expect("report serializes") + "\n")),
    }
}

fn battery_summary(spec: &BatterySpec, r: &BatteryReplay) -> String {
    let mut s = format!(
        "{} battery: {} V, {} Ah rated at {} A, Peukert k {:.4}\n",
        spec.chemistry, spec.v_nominal, spec.rated_ah, spec.rated_current, spec.peukert_k
    );
    s += &format!(
        "discharge at {} A from 100% to {}% soc: {:.1} Ah in {:.3} h, {:.1} Wh",
        r.current_a,
        spec.min_soc * 100.0,
        r.delivered_ah,
        r.duration_h,
        r.delivered_wh
    );
    match r.energy_density_wh_per_kg {
        Some(d) => s += &format!(", {d:.1} Wh/kg\n"),
        None => s += "\n",
    }
    s
}

fn comparison_table(current: f64) -> Result<String, CliError> {
    let specs = [BatterySpec::lead_acid(), BatterySpec::silicone()];
    let runs = specs.iter().map(|s| replay_battery_experiment(s, current)).collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<(String, [String; 2])> = vec![
        ("Battery".into(), [specs[0].chemistry.to_string(), specs[1].chemistry.to_string()]),
        ("Rated amp-hours".into(), [0, 1].map(|i| format!("{} @ {} A", specs[i].rated_ah, specs[i].rated_current))),
        ("Peukert exponent".into(), [0, 1].map(|i| format!("{:.4}", specs[i].peukert_k))),
        (
            format!("Effective amp-hours ({current} A, 100 to 20% soc)"),
            [0, 1].map(|i| format!("{:.1}", runs[i].delivered_ah)),
        ),
        ("Discharge time (h)".into(), [0, 1].map(|i| format!("{:.2}", runs[i].duration_h))),
        ("Energy delivered (Wh)".into(), [0, 1].map(|i| format!("{:.1}", runs[i].delivered_wh))),
        (
            "Energy density (Wh/kg)".into(),
            [0, 1].map(|i| runs[i].energy_density_wh_per_kg.map_or("-".into(), |d| format!("{d:.1}"))),
        ),
    ];
    let lw = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let cw = rows.iter().flat_map(|r| r.1.iter().map(String::len)).max().unwrap_or(0);
    let mut s = String::new();
    for (label, cells) in rows {
        s += &format!("{label:<lw$}  {:>cw$}  {:>cw$}\n", cells[0], cells[1]);
    }
    Ok(s)
}

pub fn cmd_battery(
    config: &RunConfig,
    chemistry: Option<&str>,
    current: f64,
    compare: bool,
    csv_path: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if !(current > 0.0 && current.is_finite()) {
        return Err(CliError::Input(format!("--current: {current} A must be > 0")));
    }
    if compare {
        return write_out(out, &comparison_table(current)?);
    }
    let spec = match chemistry {
        Some(c) => {
            BatterySpec::preset(c.parse::<Chemistry>().map_err(|e| CliError::Input(format!("--chemistry: {e}")))?)
        }
        None => config.battery_spec()?,
    };
    let replay = replay_battery_experiment(&spec, current)?;
    write_out(out, &battery_summary(&spec, &replay))?;
    if let Some(path) = csv_path {
        fs::write(path, replay.to_csv_string()).map_err(|e| io_err(path, e))?;
    }
    Ok(())
}
