use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use pvforecast::pipeline::{
    cmd_eval, cmd_features, cmd_forecast, cmd_ingest, cmd_report, cmd_synth, cmd_train, ForecastMode,
    PipelineConfig, PipelineError, Workspace,
};

#[derive(Debug, Parser)]
#[command(name = "pvforecast", version, about = "Two-stage PV power forecasting and forecast-error analysis")]
struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true, default_value = "pvforecast.toml")]
    config: PathBuf,
    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Perfect,
    Nwp,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write synthetic power, observed and forecast weather CSVs.
    Synth,
    /// Clean, resample and align the inputs onto an hourly grid.
    Ingest,
    /// Feature/power correlations and power autocorrelation.
    Features,
    /// Train the plant-model ensemble (optionally with grid search).
    Train,
    /// Produce forecast runs for the test period.
    Forecast {
        #[arg(long, value_enum, default_value = "both")]
        mode: Mode,
    },
    /// Error decomposition, per-lead fits and autocorrelation.
    Eval,
    /// Render report.txt from the evaluation summary.
    Report,
}

fn run(cli: Cli) -> Result<String, PipelineError> {
    let mut config = PipelineConfig::load(&cli.config)?;
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| PipelineError::Config(format!("--threads: {e}")))?;
    }
    let ws = Workspace::new(config, cli.out);
    ws.run_locked(|ws| match cli.command {
        Command::Synth => cmd_synth(ws),
        Command::Ingest => cmd_ingest(ws),
        Command::Features => cmd_features(ws),
        Command::Train => cmd_train(ws),
        Command::Forecast { mode } => {
            let modes: &[ForecastMode] = match mode {
                Mode::Perfect => &[ForecastMode::Perfect],
                Mode::Nwp => &[ForecastMode::Nwp],
                Mode::Both => &[ForecastMode::Perfect, ForecastMode::Nwp],
            };
            modes.iter().map(|&m| cmd_forecast(ws, m)).collect::<Result<String, _>>()
        }
        Command::Eval => cmd_eval(ws),
        Command::Report => cmd_report(ws),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
