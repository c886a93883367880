//! `mova` command line: compute, plot, fetch, serve.
//!
//! Exit codes: 0 success, 1 runtime or data error, 2 usage error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::net::IpAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use crate::config::AppConfig;
use crate::indicators::compute_indicator;
use crate::ingest;
use crate::model::{parse_symbol, IndicatorSpec, PlotConfig, PlotType, TimeSeriesFrame};
use crate::plot::render_svg;
use crate::remote::{QuoteCache, QuoteClient};
use crate::service::{self, AppState};

#[derive(Debug, Parser)]
#[command(name = "mova", version, about = "Moving averages over OHLCV time series")]
pub struct Cli {
    /// Config file (TOML). Defaults to $MOVA_CONFIG or the platform config dir.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute indicators and write them as CSV.
    Compute {
        #[command(flatten)]
        source: SourceArgs,
        /// Comma-separated `kind[:period[:column]]`, e.g. `sma:3,wma:3,ema:3`.
        #[arg(long)]
        spec: Option<String>,
        /// Output file; `-` or omitted writes to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Render a static SVG chart.
    Plot {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        spec: Option<String>,
        /// line, candle or ohlc.
        #[arg(long = "type", default_value = "line", value_parser = parse_plot_type)]
        plot_type: PlotType,
        #[arg(long)]
        output: PathBuf,
    },
    /// Download a symbol's daily history as CSV.
    Fetch {
        /// `TICKER.COUNTRY`, e.g. `EBAY.US`.
        symbol: String,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        bind: Option<IpAddr>,
        /// Directory holding the built web UI.
        #[arg(long)]
        ui_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// CSV file with a leading date column.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Remote symbol, `TICKER.COUNTRY`.
    #[arg(long)]
    pub symbol: Option<String>,
}

fn parse_plot_type(s: &str) -> Result<PlotType, String> {
    s.parse().map_err(|e: crate::model::ModelError| e.to_string())
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }

    fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let config = AppConfig::load(cli.config.as_deref()).map_err(CliError::usage)?;
    match cli.command {
        Command::Compute { source, spec, output } => {
            let specs = parse_specs(spec.as_deref(), &config)?;
            let frame = load_source(&source, &config)?;
            compute(&frame, &specs, output.as_deref())
        }
        Command::Plot {
            source,
            spec,
            plot_type,
            output,
        } => {
            let specs = parse_specs(spec.as_deref(), &config)?;
            let frame = load_source(&source, &config)?;
            plot(&frame, specs, plot_type, &output)
        }
        Command::Fetch { symbol, output } => {
            let symbol = parse_symbol(&symbol).map_err(CliError::usage)?;
            let frame = runtime()?
                .block_on(QuoteClient::new(config.endpoint.clone()).fetch(&symbol))
                .map_err(CliError::runtime)?;
            with_output(output.as_deref(), |w| {
                ingest::write_csv(&frame, w).map_err(CliError::runtime)
            })
        }
        Command::Serve { port, bind, ui_dir } => {
            let mut service_config = config.service.clone();
            if let Some(p) = port {
                service_config.port = p;
            }
            if let Some(b) = bind {
                service_config.bind = b;
            }
            service_config.ui_dir = ui_dir;
            serve(&config, service_config)
        }
    }
}

fn runtime() -> Result<tokio::runtime::Runtime, CliError> {
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(CliError::runtime)
}

fn parse_specs(text: Option<&str>, config: &AppConfig) -> Result<Vec<IndicatorSpec>, CliError> {
    let default_period = config.service.default_period;
    let mut specs = match text {
        Some(t) => IndicatorSpec::parse_list(t, Some(default_period)).map_err(CliError::usage)?,
        None => IndicatorSpec::default_set(default_period),
    };
    let mut seen = std::collections::HashSet::new();
    specs.retain(|s| seen.insert(s.clone()));
    if specs.is_empty() {
        return Err(CliError::usage("--spec lists no indicators"));
    }
    Ok(specs)
}

fn load_source(source: &SourceArgs, config: &AppConfig) -> Result<TimeSeriesFrame, CliError> {
    if let Some(path) = &source.input {
        let file = File::open(path).map_err(|e| CliError::runtime(format!("{}: {e}", path.display())))?;
        return ingest::load_csv(io::BufReader::new(file), &path.display().to_string())
            .map_err(|e| CliError::runtime(format!("{}: {e}", path.display())));
    }
    let text = source.symbol.as_deref().unwrap_or_default();
    let symbol = parse_symbol(text).map_err(CliError::usage)?;
    runtime()?
        .block_on(QuoteClient::new(config.endpoint.clone()).fetch(&symbol))
        .map_err(CliError::runtime)
}

fn with_output<F>(path: Option<&Path>, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), CliError>,
{
    match path.filter(|p| p.as_os_str() != "-") {
        Some(p) => {
            let file = File::create(p).map_err(|e| CliError::runtime(format!("{}: {e}", p.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush().map_err(CliError::runtime)
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            write(&mut w)?;
            w.flush().map_err(CliError::runtime)
        }
    }
}

fn compute(frame: &TimeSeriesFrame, specs: &[IndicatorSpec], output: Option<&Path>) -> Result<(), CliError> {
    let series = specs
        .iter()
        .map(|s| compute_indicator(frame, s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::runtime)?;
    let mut sources: Vec<&str> = Vec::new();
    for s in specs {
        if !sources.contains(&s.source_column.as_str()) {
            sources.push(&s.source_column);
        }
    }
    let labels: Vec<String> = series.iter().map(|s| s.label()).collect();
    let mut columns: Vec<(&str, &[Option<f64>])> = Vec::new();
    for name in &sources {
        columns.push((name, frame.column(name).map_err(CliError::runtime)?));
    }
    for (label, s) in labels.iter().zip(&series) {
        columns.push((label, &s.values));
    }
    with_output(output, |w| {
        ingest::write_table(frame.dates(), &columns, w).map_err(CliError::runtime)
    })
}

fn plot(
    frame: &TimeSeriesFrame,
    specs: Vec<IndicatorSpec>,
    plot_type: PlotType,
    output: &Path,
) -> Result<(), CliError> {
    let series = specs
        .iter()
        .map(|s| compute_indicator(frame, s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::runtime)?;
    let svg = render_svg(frame, &series, &PlotConfig::new(plot_type, specs)).map_err(CliError::runtime)?;
    std::fs::write(output, svg).map_err(|e| CliError::runtime(format!("{}: {e}", output.display())))
}

fn serve(config: &AppConfig, service_config: service::ServiceConfig) -> Result<(), CliError> {
    let rt = runtime()?;
    rt.block_on(async {
        let listener = service::bind(&service_config).await.map_err(|e| {
            CliError::runtime(format!(
                "cannot listen on {}:{}: {e}",
                service_config.bind, service_config.port
            ))
        })?;
        let addr = listener.local_addr().map_err(CliError::runtime)?;
        let cache = QuoteCache::new(QuoteClient::new(config.endpoint.clone()), config.ttl);
        let state = Arc::new(AppState::new(cache, service_config.default_period));
        let app = service::router(state, &service_config);
        println!("mova listening on http://{addr}");
        let _ = io::stdout().flush();
        service::serve(listener, app, async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(CliError::runtime)
    })
}
