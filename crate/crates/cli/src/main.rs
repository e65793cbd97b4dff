use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use nvforge::config::{OutputFormat, RunConfig};
use nvforge::conversion::ChargeStateCurve;
use nvforge::dataset;
use nvforge::growth::{fit_growth_law, read_calibration_csv};
use nvforge::irradiation::{fit_conversion_curve, read_series_csv};
use nvforge::model::calibrate_irradiation;
use nvforge::optimizer::{design_process, optimal_fluence, DesignTarget, OptimizationMode, SearchSpace};
use nvforge::spectra::{
    absorbance_to_mu, decompose_pl, detect_bands_with, default_bands, fit_hahn_echo, nv_from_absorption_with,
    parse_spectrum, read_echo_csv, svg, SpectrumKind, DEFAULT_PRESENCE_SIGMAS,
};
use nvforge::report::{self, to_value};
use nvforge::{Error, IrradiationPlan};

const EXIT_USAGE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_MODEL: u8 = 3;
const EXIT_REGRESSION: u8 = 4;

#[derive(Parser)]
#[command(name = "nvforge", version, about = "NV-center process design and spectral analysis for CVD diamond")]
struct Cli {
    /// Configuration file of `key = value` overrides.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Single override in config syntax, applied after --config.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output format; defaults to the config's `output.format`.
    #[arg(long, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Forward model from growth and irradiation parameters.
    Predict(PredictArgs),
    /// Largest admissible fluence for a plate.
    Optimize(OptimizeArgs),
    /// Grid search for the best growth and irradiation recipe.
    Design(DesignArgs),
    /// Charge-state decomposition of a PL spectrum.
    FitPl(FitPlArgs),
    /// Hahn-echo T2 fit of a `time_us,signal` CSV.
    FitEcho(FitEchoArgs),
    /// NV concentration from the 532 nm absorption.
    Absorption(AbsorptionArgs),
    /// Fit model parameters and write them as a config file.
    Calibrate(CalibrateArgs),
    /// Run the acceptance checks against the embedded data.
    Regress,
    /// Embedded reference tables.
    Dataset {
        #[command(subcommand)]
        action: DatasetAction,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("plate").required(true).args(["nc", "p1"])))]
struct PredictArgs {
    /// N/C ratio of the growth plasma, ppm.
    #[arg(long)]
    nc: Option<f64>,
    /// As-grown P1, ppm.
    #[arg(long)]
    p1: Option<f64>,
    /// Electron energy, MeV.
    #[arg(long)]
    energy: f64,
    /// Electron fluence, e/cm².
    #[arg(long)]
    fluence: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    ChargeStability,
    ChargeStabilityRre,
    MaxNv,
}

impl Mode {
    fn build(self, threshold_pct: Option<f64>) -> Result<OptimizationMode, Error> {
        let m = match self {
            Mode::ChargeStability => OptimizationMode::charge_stability(),
            Mode::ChargeStabilityRre => OptimizationMode::charge_stability_rre(),
            Mode::MaxNv => OptimizationMode::max_nv(),
        };
        threshold_pct.map_or(Ok(m), |t| m.with_threshold(t))
    }
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long)]
    p1: f64,
    #[arg(long)]
    energy: f64,
    #[arg(long, value_enum)]
    mode: Mode,
    /// Override of the mode's limit, percent.
    #[arg(long)]
    threshold_pct: Option<f64>,
}

#[derive(Args)]
struct DesignArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    threshold_pct: Option<f64>,
    #[arg(long)]
    min_t2_us: Option<f64>,
    #[arg(long)]
    min_nv_minus_ppb: Option<f64>,
    #[arg(long, default_value_t = SearchSpace::DEFAULT_NC_POINTS)]
    nc_points: usize,
    #[arg(long, default_value_t = SearchSpace::DEFAULT_NC_RANGE.0)]
    nc_min: f64,
    #[arg(long, default_value_t = SearchSpace::DEFAULT_NC_RANGE.1)]
    nc_max: f64,
}

#[derive(Args)]
struct FitPlArgs {
    #[arg(long)]
    spectrum: PathBuf,
    #[arg(long)]
    ref_minus: PathBuf,
    #[arg(long)]
    ref_zero: PathBuf,
}

#[derive(Args)]
struct FitEchoArgs {
    #[arg(long)]
    data: PathBuf,
}

#[derive(Args)]
struct AbsorptionArgs {
    #[arg(long)]
    spectrum: PathBuf,
    /// Plate thickness, cm; required with --absorbance.
    #[arg(long)]
    thickness_cm: Option<f64>,
    /// Values are decadic absorbance rather than absorption coefficient.
    #[arg(long, requires = "thickness_cm")]
    absorbance: bool,
    /// Add band detection and the over-irradiation warning.
    #[arg(long)]
    band_report: bool,
    /// Presence threshold in standard errors.
    #[arg(long, default_value_t = DEFAULT_PRESENCE_SIGMAS)]
    threshold_sigmas: f64,
    /// Write an SVG plot of the spectrum and band windows.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
#[command(group(ArgGroup::new("source").required(true).args(["table", "csv"])))]
struct CalibrateArgs {
    #[arg(long, value_parser = ["table1", "table2"])]
    table: Option<String>,
    /// `nc_ppm,p1_ppm`, `fluence_e_per_cm2,nv_total_ppm` or
    /// `r_re_percent,nv_minus_frac_percent` CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Energy of a fluence series, MeV.
    #[arg(long)]
    energy: Option<f64>,
    /// As-grown P1 of a fluence series, ppm.
    #[arg(long)]
    p1: Option<f64>,
    /// Config file to write.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum DatasetAction {
    Dump {
        #[arg(long, default_value = "table1")]
        table: String,
    },
}

fn open(path: &Path) -> Result<BufReader<File>, Error> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load_config(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        cfg = cfg.apply(&text)?;
    }
    if !cli.set.is_empty() {
        cfg = cfg.apply(&cli.set.join("\n"))?;
    }
    match cli.format {
        Some(Format::Json) => cfg.format = OutputFormat::Json,
        Some(Format::Csv) => cfg.format = OutputFormat::Csv,
        None => {}
    }
    nvforge::units::set_carbon_density(cfg.carbon_density_per_cm3)?;
    Ok(cfg)
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn render(value: &Value, format: OutputFormat) -> Result<String, Error> {
    match format {
        OutputFormat::Json => report::to_json(value),
        OutputFormat::Csv => {
            let mut rows = Vec::new();
            flatten("", &report::to_value(value)?, &mut rows);
            let mut s = String::from("key,value\n");
            for (k, v) in rows {
                s.push_str(&format!("{k},{v}\n"));
            }
            Ok(s)
        }
    }
}

fn run(cli: &Cli) -> Result<(String, u8), Error> {
    let cfg = load_config(cli)?;
    let model = &cfg.model;
    let value = match &cli.command {
        Command::Predict(a) => {
            let (p1, nc) = match (a.p1, a.nc) {
                (Some(p1), _) => (p1, None),
                (None, Some(nc)) => (model.p1_from_nc(nc)?, Some(nc)),
                (None, None) => unreachable!("clap enforces the group"),
            };
            let p = model.predict(p1, &IrradiationPlan::new(a.energy, a.fluence)?)?;
            let mut v = to_value(&p)?;
            v["nc_ratio_ppm"] = json!(nc);
            v
        }
        Command::Optimize(a) => {
            let mode = a.mode.build(a.threshold_pct)?;
            let fluence = optimal_fluence(a.p1, a.energy, mode, model)?;
            let p = model.predict(a.p1, &IrradiationPlan::new(a.energy, fluence)?)?;
            json!({
                "mode": to_value(&mode)?,
                "p1_grown_ppm": a.p1,
                "energy_mev": a.energy,
                "fluence_e_per_cm2": fluence,
                "predicted": to_value(&p)?,
            })
        }
        Command::Design(a) => {
            let target = DesignTarget {
                mode: a.mode.build(a.threshold_pct)?,
                min_t2_s: a.min_t2_us.map(|t| t * 1e-6),
                min_nv_minus_ppb: a.min_nv_minus_ppb,
            };
            if !(a.nc_min > 0.0 && a.nc_max >= a.nc_min) {
                return Err(Error::InvalidParameter {
                    name: "nc range",
                    reason: format!("need 0 < nc-min <= nc-max, got {} and {}", a.nc_min, a.nc_max),
                });
            }
            let space = SearchSpace {
                nc_grid_ppm: nvforge::numeric::log_space(a.nc_min, a.nc_max, a.nc_points),
                energies_mev: model.energies(),
            };
            to_value(&design_process(&target, &space, model)?)?
        }
        Command::FitPl(a) => {
            let kind = SpectrumKind::PhotoluminescenceCounts;
            let s = parse_spectrum(open(&a.spectrum)?, kind)?;
            let m = parse_spectrum(open(&a.ref_minus)?, kind)?;
            let z = parse_spectrum(open(&a.ref_zero)?, kind)?;
            let mut v = to_value(&decompose_pl(&s.spectrum, &m.spectrum, &z.spectrum)?)?;
            let warnings: Vec<String> = [s.warnings, m.warnings, z.warnings].concat();
            v["warnings"] = json!(warnings);
            v
        }
        Command::FitEcho(a) => {
            let (t, s) = read_echo_csv(open(&a.data)?)?;
            to_value(&fit_hahn_echo(&t, &s)?)?
        }
        Command::Absorption(a) => absorption(a, &cfg)?,
        Command::Calibrate(a) => return calibrate(a, cfg),
        Command::Regress => {
            let results = nvforge::regression::run();
            let mut out = String::new();
            for r in &results {
                out.push_str(&format!(
                    "criterion {:>2} {} {}: {}\n",
                    r.id,
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                ));
            }
            let code = if results.iter().all(|r| r.passed) { 0 } else { EXIT_REGRESSION };
            return Ok((out, code));
        }
        Command::Dataset {
            action: DatasetAction::Dump { table },
        } => {
            let rows = dataset::load_table(table)?;
            return Ok(match cfg.format {
                OutputFormat::Csv => (dataset::to_csv(&rows), 0),
                OutputFormat::Json => (report::to_json(&rows)?, 0),
            });
        }
    };
    Ok((render(&value, cfg.format)?, 0))
}

fn absorption(a: &AbsorptionArgs, cfg: &RunConfig) -> Result<Value, Error> {
    let kind = if a.absorbance {
        SpectrumKind::Absorbance
    } else {
        SpectrumKind::AbsorptionCoefficient
    };
    let parsed = parse_spectrum(open(&a.spectrum)?, kind)?;
    let spectrum = match (a.absorbance, a.thickness_cm) {
        (true, Some(d)) => {
            absorbance_to_mu(0.0, d)?;
            parsed
                .spectrum
                .map_values(|v| v * std::f64::consts::LN_10 / d)
                .with_kind(SpectrumKind::AbsorptionCoefficient)
        }
        (_, Some(d)) if !(d > 0.0) => return Err(Error::NonPositiveThickness(d)),
        _ => parsed.spectrum,
    };
    let mu = spectrum.value_at(532.0).ok_or_else(|| Error::InvalidParameter {
        name: "spectrum",
        reason: "does not cover 532 nm".into(),
    })?;
    let nv = nv_from_absorption_with(mu.max(0.0), cfg.sigma_532, cfg.carbon_density_per_cm3)?;
    let mut v = json!({ "nv": to_value(&nv)?, "warnings": parsed.warnings });
    let bands = a
        .band_report
        .then(|| detect_bands_with(&spectrum, &default_bands(), a.threshold_sigmas));
    if let Some(report) = &bands {
        v["bands"] = to_value(report)?;
    }
    if let Some(path) = &a.svg {
        std::fs::write(path, svg::render(&spectrum, bands.as_ref()))
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(v)
}

fn calibrate(a: &CalibrateArgs, mut cfg: RunConfig) -> Result<(String, u8), Error> {
    let summary = match (&a.table, &a.csv) {
        (Some(t), _) if t == "table1" => {
            let cal = calibrate_irradiation(&dataset::table1(), dataset::IRRADIATION_SERIES_P1_PPM)?;
            cfg.model.curves = cal.curves.clone();
            cfg.model.charge = cal.charge.clone();
            to_value(&cal)?
        }
        (Some(_), _) => {
            let pts: Vec<(f64, f64)> = dataset::nitrogen_series_1()
                .iter()
                .filter_map(|r| Some((r.nc_ppm?, r.p1_grown_ppm?)))
                .collect();
            cfg.model.growth = fit_growth_law(&pts)?;
            json!({ "growth": to_value(&cfg.model.growth)?, "points": pts.len() })
        }
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let header = nvforge::header_of(&text).map(|(a, b)| format!("{a},{b}"));
            match header.as_deref() {
                Some("nc_ppm,p1_ppm") => {
                    cfg.model.growth = fit_growth_law(&read_calibration_csv(text.as_bytes())?)?;
                    json!({ "growth": to_value(&cfg.model.growth)? })
                }
                Some("fluence_e_per_cm2,nv_total_ppm") => {
                    let (Some(energy), Some(p1)) = (a.energy, a.p1) else {
                        return Err(Error::InvalidParameter {
                            name: "calibrate",
                            reason: "a fluence series needs --energy and --p1".into(),
                        });
                    };
                    let curve = fit_conversion_curve(&read_series_csv(text.as_bytes())?, p1, energy)?;
                    cfg.model.set_curve(curve);
                    json!({ "curve": to_value(&curve)? })
                }
                Some("r_re_percent,nv_minus_frac_percent") => {
                    cfg.model.charge = ChargeStateCurve::read_csv(text.as_bytes())?;
                    json!({ "charge": to_value(&cfg.model.charge)? })
                }
                other => {
                    return Err(Error::Parse {
                        line: 1,
                        message: format!("unrecognised calibration header {other:?}"),
                    })
                }
            }
        }
        (None, None) => unreachable!("clap enforces the group"),
    };
    match &a.out {
        Some(path) => {
            std::fs::write(path, cfg.to_text()).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            Ok((render(&summary, cfg.format)?, 0))
        }
        None => Ok((cfg.to_text(), 0)),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(&cli) {
        Ok((out, code)) => {
            let _ = std::io::stdout().write_all(out.as_bytes());
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(if e.is_input_error() { EXIT_INPUT } else { EXIT_MODEL })
        }
    }
}
