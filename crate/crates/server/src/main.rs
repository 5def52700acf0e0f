use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use chrono::NaiveDate;
use clap::{Parser, Subcommand};

use snowglyph_core::config::Config;
use snowglyph_core::svg::SvgOptions;
use snowglyph_core::synth::SynthConfig;
use snowglyph_core::views::ViewKind;
use snowglyph_server::commands;

#[derive(Parser)]
#[command(name = "snowglyph", version, about = "Avalanche observation glyph views")]
struct Cli {
    /// Config file with bins, vocabularies, theme and darkness cap.
    #[arg(long, global = true, env = "SNOWGLYPH_CONFIG")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check report, tenure and weather files and print diagnostics.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Merge files into a stored dataset.
    Ingest {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long)]
        dataset: String,
        #[arg(long, env = "SNOWGLYPH_DATA", default_value = "data")]
        data: PathBuf,
    },
    /// Generate a synthetic dataset under `<out>/datasets/`.
    Synth {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Dataset id; defaults to `synth-<seed>`.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, default_value_t = 3)]
        days: usize,
        #[arg(long, default_value_t = 6)]
        operations: usize,
        #[arg(long, default_value_t = 5)]
        stations: usize,
        #[arg(long, default_value_t = 0.3)]
        ordinal_fraction: f64,
        /// First report day, YYYY-MM-DD.
        #[arg(long)]
        start: Option<NaiveDate>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "SNOWGLYPH_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "SNOWGLYPH_HOST", default_value = "127.0.0.1")]
        host: IpAddr,
        #[arg(long, env = "SNOWGLYPH_DATA", default_value = "data")]
        data: PathBuf,
    },
    /// Render one view of a stored dataset to SVG.
    RenderSvg {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        view: ViewKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "SNOWGLYPH_DATA", default_value = "data")]
        data: PathBuf,
        #[arg(long, requires = "to")]
        from: Option<NaiveDate>,
        #[arg(long, requires = "from")]
        to: Option<NaiveDate>,
        /// Highlight the selection of this stored session.
        #[arg(long)]
        session: Option<String>,
        #[arg(long, default_value_t = 960.0)]
        width: f64,
        #[arg(long, default_value_t = 480.0)]
        height: f64,
    },
}

fn load_config(path: Option<&PathBuf>) -> anyhow::Result<Config> {
    match path {
        Some(p) => Config::from_path(p).with_context(|| format!("config {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    let config = load_config(cli.config.as_ref())?;
    match cli.command {
        Command::Validate { files } => Ok(commands::validate(&files, &config)),
        Command::Ingest { files, dataset, data } => commands::ingest(&files, &dataset, &data, &config),
        Command::Synth {
            seed,
            out,
            dataset,
            days,
            operations,
            stations,
            ordinal_fraction,
            start,
        } => {
            let defaults = SynthConfig::default();
            let synth = SynthConfig {
                seed,
                n_days: days,
                n_operations: operations,
                n_stations: stations,
                ordinal_fraction,
                start_date: start.unwrap_or(defaults.start_date),
                ..defaults
            };
            let dir = commands::synth(&synth, dataset.as_deref(), &out, &config)?;
            println!("{}", dir.display());
            Ok(false)
        }
        Command::Serve { port, host, data } => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(commands::serve(SocketAddr::new(host, port), &data, config))?;
            Ok(false)
        }
        Command::RenderSvg {
            dataset,
            view,
            out,
            data,
            from,
            to,
            session,
            width,
            height,
        } => {
            let args = commands::RenderArgs {
                data_dir: &data,
                dataset_id: &dataset,
                view,
                out: &out,
                range: from.zip(to),
                session_id: session.as_deref(),
                options: SvgOptions { width, height },
            };
            commands::render(&args, &config)
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
