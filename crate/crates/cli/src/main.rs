use std::path::PathBuf;
use std::process::ExitCode;

use agtv_cli::commands::{cmd_compare, cmd_phantom, cmd_project, cmd_reconstruct, cmd_sweep, BatchSummary};
use agtv_cli::config::KvConfig;
use agtv_cli::{CliError, Result};
use clap::{Args, Parser, Subcommand};
use log::{error, info};

#[derive(Parser)]
#[command(name = "agtv", version, about = "Adaptive graph total variation tomography experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rasterize an ellipse phantom.
    Phantom(Common),
    /// Project a phantom or image and add noise.
    Project(Common),
    /// Reconstruct one data set with one method.
    Reconstruct(Common),
    /// Run the cartesian product of `sweep.<key>` lists.
    Sweep(Common),
    /// Compare methods on shared noisy sinograms.
    Compare(Common),
    /// Re-run the command recorded in a manifest.
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
}

#[derive(Args)]
struct Common {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Solver seed; also the noise seed unless `noise_seed` is set.
    #[arg(long)]
    seed: Option<u64>,
    /// Use the Shepp-Logan phantom (the default).
    #[arg(long, conflicts_with = "spec")]
    shepp_logan: bool,
    /// Ellipse table file for a custom phantom.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// fbp, art, sirt, cs, cstv, gtv or agtv.
    #[arg(long)]
    method: Option<String>,
    /// Image side length.
    #[arg(long)]
    n: Option<usize>,
    /// Number of equally spaced views.
    #[arg(long)]
    angles: Option<usize>,
    /// Wavelet sparsity weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Graph TV weight.
    #[arg(long)]
    gamma: Option<f64>,
    /// Any config key, `KEY=VALUE`; repeatable. Wins over the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Only log errors.
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn resolve(&self) -> Result<KvConfig> {
        let mut kv = match &self.config {
            Some(path) => KvConfig::load(path)?,
            None => KvConfig::default(),
        };
        let typed = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("method", self.method.clone()),
            ("n", self.n.map(|v| v.to_string())),
            ("angles", self.angles.map(|v| v.to_string())),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("gamma", self.gamma.map(|v| v.to_string())),
            ("phantom", self.shepp_logan.then(|| "shepp_logan".to_string())),
            ("phantom", self.spec.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in typed {
            if let Some(v) = value {
                kv.set(key, v);
            }
        }
        for pair in &self.set {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got '{pair}'")))?;
            kv.set(k.trim(), v.trim());
        }
        Ok(kv)
    }
}

fn batch(summary: BatchSummary, what: &str) -> Result<()> {
    info!(
        "{what}: {} runs, {} reused, {} failed",
        summary.runs, summary.skipped, summary.failed
    );
    if summary.failed > 0 {
        return Err(CliError::Numerical(format!("{} of {} runs failed", summary.failed, summary.runs)));
    }
    Ok(())
}

fn dispatch(name: &str, kv: &KvConfig, out: &std::path::Path) -> Result<()> {
    if let Some(recorded) = kv.get("command") {
        if recorded != name {
            return Err(CliError::Config(format!("config is for '{recorded}', not '{name}'")));
        }
    }
    match name {
        "phantom" => cmd_phantom(kv, out),
        "project" => cmd_project(kv, out),
        "reconstruct" => cmd_reconstruct(kv, out).map(|_| ()),
        "sweep" => batch(cmd_sweep(kv, out)?, "sweep"),
        "compare" => batch(cmd_compare(kv, out)?, "compare"),
        other => Err(CliError::Config(format!("unknown command '{other}'"))),
    }
}

fn run(cli: Cli) -> Result<()> {
    let (name, common) = match &cli.command {
        Command::Phantom(c) => ("phantom", c),
        Command::Project(c) => ("project", c),
        Command::Reconstruct(c) => ("reconstruct", c),
        Command::Sweep(c) => ("sweep", c),
        Command::Compare(c) => ("compare", c),
        Command::Replay { manifest, out, .. } => {
            let kv = KvConfig::load(manifest)?;
            let name = kv
                .get("command")
                .ok_or_else(|| CliError::Config(format!("{} has no 'command' key", manifest.display())))?
                .to_string();
            return dispatch(&name, &kv, out);
        }
    };
    dispatch(name, &common.resolve()?, &common.out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let quiet = match &cli.command {
        Command::Phantom(c)
        | Command::Project(c)
        | Command::Reconstruct(c)
        | Command::Sweep(c)
        | Command::Compare(c) => c.quiet,
        Command::Replay { quiet, .. } => *quiet,
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if quiet { "error" } else { "info" }))
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
