//! `wsa` command line.

use std::ffi::OsString;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tvws_core::rfplan::{coverage_csv, CoverageMetric, OrientationTarget};
use tvws_core::scanner::import_csv;
use tvws_core::spectrum::ChannelPlan;
use tvws_core::{GeoCoordinate, ModelKind, TerrainGrid};

use crate::api::{serve, ServiceOptions};
use crate::error::AppError;
use crate::pipeline::{parse_scan_config, parse_terrain, parse_towers, run_scan, ScanOverrides};
use crate::plan::{run_coverage, run_optimize, run_plan, OptimizeRequest, PlanConfig};
use crate::search::{search_location, Dataset};

#[derive(Parser, Debug)]
#[command(name = "wsa", version, about = "TV white space availability and RF planning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute channel availability over a region and write the result CSV.
    Scan(ScanArgs),
    /// Channel status at one location from a result CSV.
    Search(SearchArgs),
    /// Link budgets for a base station and its UEs.
    Rfplan(RfplanArgs),
    /// Grid search for the antenna orientation with the highest RSS.
    Optimize(OptimizeArgs),
    /// Check a tower file and list row diagnostics.
    ValidateTowers(ValidateArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Scan configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Tower dataset (CSV).
    #[arg(long)]
    pub towers: PathBuf,
    /// Elevation raster (ESRI ASCII grid).
    #[arg(long)]
    pub terrain: Option<PathBuf>,
    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Region boundary as a GeoJSON polygon, replacing the configured one.
    #[arg(long)]
    pub boundary: Option<PathBuf>,
    /// Propagation model, replacing the configured one.
    #[arg(long, value_parser = parse_model)]
    pub model: Option<ModelKind>,
    /// Worker threads (all cores by default).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Result CSV written by `scan`.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub lat: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub lon: f64,
    /// Usability threshold, dBm.
    #[arg(long, allow_hyphen_values = true, default_value_t = -85.0)]
    pub max_noise: f64,
    /// Pixel size of the scan, km. Taken from --config when omitted.
    #[arg(long, required_unless_present = "config")]
    pub pixel_size: Option<f64>,
    /// Scan configuration used for the results.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RfplanArgs {
    /// Planning scenario (JSON).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub terrain: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a coverage raster (`lat,lon,value`) for the configured region.
    #[arg(long)]
    pub coverage_out: Option<PathBuf>,
    #[arg(long, value_parser = parse_metric, default_value = "rss")]
    pub metric: CoverageMetric,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    /// Planning scenario (JSON); an optional `scan` object sets ranges and steps.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, value_parser = parse_target)]
    pub target: OrientationTarget,
    #[arg(long)]
    pub terrain: Option<PathBuf>,
    /// UE to aim at.
    #[arg(long, default_value_t = 0)]
    pub ue: usize,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Tower dataset (CSV).
    pub file: PathBuf,
    /// Scan configuration whose channel plan the towers are checked against.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Exit 1 when any diagnostic is reported.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Where job results are stored.
    #[arg(long, env = "WSA_DATA_DIR", default_value = "wsa-data")]
    pub data_dir: PathBuf,
    /// Tower dataset loaded at startup.
    #[arg(long)]
    pub towers: Option<PathBuf>,
    /// Elevation raster used by all requests.
    #[arg(long)]
    pub terrain: Option<PathBuf>,
    /// Reject scans while one is pending instead of queueing them.
    #[arg(long)]
    pub no_queue: bool,
}

fn parse_model(s: &str) -> Result<ModelKind, String> {
    s.parse().map_err(|e: tvws_core::propagation::PropagationError| e.to_string())
}

fn parse_metric(s: &str) -> Result<CoverageMetric, String> {
    s.parse()
}

fn parse_target(s: &str) -> Result<OrientationTarget, String> {
    s.parse()
}

/// Parses `args` and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn read(path: &Path) -> Result<String, AppError> {
    std::fs::read_to_string(path).map_err(|e| AppError::Runtime(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), AppError> {
    std::fs::write(path, text).map_err(|e| AppError::Runtime(format!("{}: {e}", path.display())))
}

fn terrain(path: Option<&PathBuf>) -> Result<Option<TerrainGrid>, AppError> {
    path.map(|p| parse_terrain(&read(p)?)).transpose()
}

fn emit(out: Option<&PathBuf>, value: &impl serde::Serialize) -> Result<(), AppError> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match out {
        Some(p) => write(p, &text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| AppError::Runtime(e.to_string())),
    }
}

fn dispatch(cmd: Command) -> Result<ExitCode, AppError> {
    match cmd {
        Command::Scan(a) => {
            let mut cfg = parse_scan_config(&read(&a.config)?)?;
            let overrides = ScanOverrides {
                boundary_geojson: a.boundary.as_deref().map(read).transpose()?,
                model: a.model,
            };
            overrides.apply(&mut cfg)?;
            cfg.validate()?;
            let towers = parse_towers(&read(&a.towers)?, Some(&cfg.plan))?;
            let grid = terrain(a.terrain.as_ref())?;
            if a.threads == Some(0) {
                return Err(AppError::invalid("threads", "must be >= 1"));
            }
            let (results, csv) = run_scan(&cfg, &towers, grid.as_ref(), a.threads, &tvws_core::scanner::no_progress)?;
            write(&a.out, &csv)?;
            eprintln!(
                "{} pixels x {} channels written to {} ({} towers, {} rejected rows)",
                results.pixels.len(),
                results.channels.len(),
                a.out.display(),
                towers.towers.len(),
                towers.rejected()
            );
        }
        Command::Search(a) => {
            let results = import_csv(read(&a.results)?.as_bytes())?;
            let (pixel_size, plan_channels) = match (&a.pixel_size, &a.config) {
                (Some(ps), _) => (*ps, None),
                (None, Some(c)) => {
                    let cfg = parse_scan_config(&read(c)?)?;
                    (cfg.pixel_size, Some(cfg.plan.channels()))
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            if !(pixel_size.is_finite() && pixel_size > 0.0) {
                return Err(AppError::invalid("pixel_size", "must be > 0 km"));
            }
            let mut data = Dataset::new(results, pixel_size, a.max_noise);
            if let Some(chs) = plan_channels {
                data.plan_channels = chs;
            }
            let point = GeoCoordinate::new(a.lat, a.lon).map_err(|e| AppError::invalid("lat", e.to_string()))?;
            emit(None, &search_location(&data, point, Some(a.max_noise)))?;
        }
        Command::Rfplan(a) => {
            let cfg: PlanConfig = serde_json::from_str(&read(&a.config)?)?;
            let grid = terrain(a.terrain.as_ref())?;
            emit(a.out.as_ref(), &run_plan(&cfg, grid.as_ref())?)?;
            if let Some(path) = &a.coverage_out {
                let (pixels, values) = run_coverage(&cfg, a.metric, grid.as_ref())?;
                write(path, &coverage_csv(&pixels, &values))?;
            }
        }
        Command::Optimize(a) => {
            let text = read(&a.config)?;
            let mut doc: serde_json::Value = serde_json::from_str(&text)?;
            // The `scan` object is optional on the command line; --target wins.
            let scan = doc.get("scan").cloned().unwrap_or_else(|| serde_json::json!({}));
            let mut scan = match scan {
                serde_json::Value::Object(m) => m,
                _ => return Err(AppError::invalid("scan", "must be an object")),
            };
            scan.insert("target".into(), serde_json::to_value(a.target)?);
            doc["scan"] = serde_json::Value::Object(scan);
            doc["ue_index"] = serde_json::json!(a.ue);
            let req: OptimizeRequest = serde_json::from_value(doc)?;
            let grid = terrain(a.terrain.as_ref())?;
            emit(None, &run_optimize(&req, grid.as_ref())?)?;
        }
        Command::ValidateTowers(a) => {
            let plan: Option<ChannelPlan> = a
                .config
                .as_ref()
                .map(|c| parse_scan_config(&read(c)?).map(|cfg| cfg.plan))
                .transpose()?;
            let load = tvws_core::spectrum::load_towers(read(&a.file)?.as_bytes(), plan.as_ref())?;
            for d in &load.diagnostics {
                println!("{d}");
            }
            println!("{} towers, {} diagnostics", load.towers.len(), load.diagnostics.len());
            if a.strict && !load.diagnostics.is_empty() {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Serve(a) => {
            let opts = ServiceOptions {
                data_dir: a.data_dir,
                towers: a.towers.as_ref().map(|p| parse_towers(&read(p)?, None)).transpose()?,
                terrain: terrain(a.terrain.as_ref())?,
                no_queue: a.no_queue,
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| AppError::Runtime(e.to_string()))?;
            runtime.block_on(serve(SocketAddr::new(a.host, a.port), opts))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}
