//! Pipeline driver: loads a price panel, runs the requested stages and
//! writes every artifact as CSV and JSON next to a run manifest.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde_json::json;

use crate::artifacts::ArtifactWriter;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Stats,
    Corr,
    Coint,
    Granger,
    Ols,
    Var,
    Egarch,
    Dcc,
    Forecast,
    Simulate,
    All,
}

impl Command {
    fn label(self) -> &'static str {
        match self {
            Command::Stats => "stats",
            Command::Corr => "corr",
            Command::Coint => "coint",
            Command::Granger => "granger",
            Command::Ols => "ols",
            Command::Var => "var",
            Command::Egarch => "egarch",
            Command::Dcc => "dcc",
            Command::Forecast => "forecast",
            Command::Simulate => "simulate",
            Command::All => "all",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "linkage", version, about = "Commodity futures linkage pipeline")]
pub struct Cli {
    pub command: Command,
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Seed for training and simulation; overrides `output.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `section.key=value` overrides applied after the file is read.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
}

pub const MANIFEST: &str = "manifest.json";

/// Runs one subcommand; returns the artifact file names written.
pub fn run(cli: &Cli) -> Result<Vec<String>, CliError> {
    let mut config = config::load(&cli.config, &cli.overrides)?;
    if let Some(seed) = cli.seed {
        config.output.seed = seed;
    }
    if let Some(dir) = &cli.out {
        config.output.dir = Some(dir.clone());
    }
    let dir = config
        .output
        .dir
        .clone()
        .ok_or_else(|| CliError::config("no output directory"))?;
    let seed = config.output.seed;
    let mut out = ArtifactWriter::create(&dir)?;
    let mut extra = serde_json::Map::new();

    let cmd = cli.command;
    if cmd == Command::Simulate {
        pipeline::run_simulate(&config, seed, &mut out)?;
    } else {
        let data = pipeline::load_data(&config)?;
        let runs = |c: Command| cmd == c || cmd == Command::All;
        if matches!(cmd, Command::Ols | Command::Forecast | Command::All) {
            pipeline::target(&config)?;
        }
        if runs(Command::Stats) {
            pipeline::stats(&config, &data, &mut out)?;
        }
        if runs(Command::Corr) {
            pipeline::corr(&data, &mut out)?;
        }
        if runs(Command::Coint) {
            pipeline::coint(&config, &data, &mut out)?;
        }
        if runs(Command::Granger) {
            pipeline::granger(&config, &data, &mut out)?;
        }
        if runs(Command::Ols) {
            pipeline::ols(&config, &data, &mut out)?;
        }
        if runs(Command::Var) {
            pipeline::var(&config, &data, &mut out)?;
        }
        if runs(Command::Egarch) || runs(Command::Dcc) {
            let fits = pipeline::fit_margins(&config, &data)?;
            if runs(Command::Egarch) {
                pipeline::egarch(&data, &fits, &mut out)?;
            }
            if runs(Command::Dcc) {
                pipeline::dcc(&data, &fits, &mut out)?;
            }
        }
        if runs(Command::Forecast) {
            extra.insert("forecast".into(), pipeline::forecast(&config, seed, &data, &mut out)?);
        }
        if cmd == Command::All && config.simulate.is_some() {
            pipeline::run_simulate(&config, seed, &mut out)?;
        }
        extra.insert(
            "input".into(),
            json!({
                "sha256": data.sha256,
                "rows": data.prices.rows(),
                "series": data.prices.names(),
            }),
        );
    }
    write_manifest(&mut out, cmd, &config, extra)?;
    Ok(out.written())
}

/// Config echo, versions, seed and the artifact list. The output directory
/// is left out so that reruns into different directories compare equal.
fn write_manifest(
    out: &mut ArtifactWriter,
    cmd: Command,
    config: &RunConfig,
    extra: serde_json::Map<String, serde_json::Value>,
) -> Result<(), CliError> {
    let mut echo = config.clone();
    echo.output.dir = None;
    let config_toml = toml::to_string(&echo).map_err(|e| CliError::Runtime {
        kind: "manifest".into(),
        message: e.to_string(),
    })?;
    let mut artifacts = out.written();
    artifacts.push(MANIFEST.into());
    artifacts.sort();
    let mut manifest = json!({
        "tool": "linkage",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": cmd.label(),
        "seed": config.output.seed,
        "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        "config": echo,
        "config_toml": config_toml,
        "artifacts": artifacts,
        "versions": {
            "linkage": env!("CARGO_PKG_VERSION"),
            "mackinnon_table": linkage::mackinnon::TABLE_VERSION,
            "rng": linkage::simulate::GENERATOR,
        },
    });
    manifest.as_object_mut().expect("object").extend(extra);
    out.json(MANIFEST, &manifest)
}
