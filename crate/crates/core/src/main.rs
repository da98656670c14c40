use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vortexlab::cli::{error_json, exit_code, run_command, Command};
use vortexlab::config::parse_config;

#[derive(Parser)]
#[command(name = "vortexlab", version, about = "Kinematic vortices in current-carrying thin films")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Leading eigenvalues, or tracked branches over the sweep axis.
    Spectrum,
    /// Critical current by bisection on the reality of lambda_1.
    IcFind,
    /// lambda_1, n4, gamma and the Hopf orbit at eps.
    NormalForm,
    /// Center-line phase profile and scenario tag.
    Beta,
    /// Predicted vortex tracks and events over `periods` periods.
    Predict,
    /// TDGL run just above threshold with vortex tracking.
    Simulate,
    /// lambda_1, n4 and scenario at each sweep value, in parallel.
    Sweep,
    /// TDGL against the reduced model; exit status 4 on mismatch.
    Validate,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Spectrum => Command::Spectrum,
            Cmd::IcFind => Command::IcFind,
            Cmd::NormalForm => Command::NormalForm,
            Cmd::Beta => Command::Beta,
            Cmd::Predict => Command::Predict,
            Cmd::Simulate => Command::Simulate,
            Cmd::Sweep => Command::Sweep,
            Cmd::Validate => Command::Validate,
        }
    }
}

/// Every flag overrides the config key of the same name.
#[derive(Args)]
struct Flags {
    /// TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "L", global = true)]
    half_width: Option<f64>,
    #[arg(long = "K", global = true)]
    half_height: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    h: Option<f64>,
    #[arg(long = "I", global = true)]
    current: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long, global = true)]
    nx: Option<i64>,
    #[arg(long, global = true)]
    ny: Option<i64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    eigs: Option<i64>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long, global = true)]
    settle: Option<f64>,
    #[arg(long, global = true)]
    periods: Option<f64>,
    #[arg(long, global = true)]
    prominence: Option<f64>,
    #[arg(long, global = true)]
    ic_lo: Option<f64>,
    #[arg(long, global = true)]
    ic_hi: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<i64>,
    #[arg(long, global = true)]
    workers: Option<i64>,
    /// Output directory (also `$VORTEXLAB_OUT`).
    #[arg(long, global = true)]
    output: Option<String>,
    /// Recompute even if a cached result exists.
    #[arg(long, global = true)]
    no_cache: bool,
    /// Sweep axis: `I` or `h`.
    #[arg(long, global = true)]
    sweep_param: Option<String>,
    #[arg(long, global = true)]
    sweep_from: Option<f64>,
    #[arg(long, global = true)]
    sweep_to: Option<f64>,
    #[arg(long, global = true)]
    sweep_count: Option<i64>,
}

impl Flags {
    fn overrides(&self) -> toml::Table {
        use toml::Value::{Boolean, Float, Integer, String as Str};
        let mut t = toml::Table::new();
        let mut put = |k: &str, v: Option<toml::Value>| {
            if let Some(v) = v {
                t.insert(k.to_string(), v);
            }
        };
        put("L", self.half_width.map(Float));
        put("K", self.half_height.map(Float));
        put("delta", self.delta.map(Float));
        put("h", self.h.map(Float));
        put("I", self.current.map(Float));
        put("gamma", self.gamma.map(Float));
        put("nx", self.nx.map(Integer));
        put("ny", self.ny.map(Integer));
        put("tol", self.tol.map(Float));
        put("eigs", self.eigs.map(Integer));
        put("eps", self.eps.map(Float));
        put("dt", self.dt.map(Float));
        put("settle", self.settle.map(Float));
        put("periods", self.periods.map(Float));
        put("prominence", self.prominence.map(Float));
        put("ic_lo", self.ic_lo.map(Float));
        put("ic_hi", self.ic_hi.map(Float));
        put("seed", self.seed.map(Integer));
        put("workers", self.workers.map(Integer));
        put("output", self.output.clone().map(Str));
        put("cache", self.no_cache.then_some(Boolean(false)));
        let mut sweep = toml::Table::new();
        let mut sput = |k: &str, v: Option<toml::Value>| {
            if let Some(v) = v {
                sweep.insert(k.to_string(), v);
            }
        };
        sput("param", self.sweep_param.clone().map(Str));
        sput("from", self.sweep_from.map(Float));
        sput("to", self.sweep_to.map(Float));
        sput("count", self.sweep_count.map(Integer));
        if !sweep.is_empty() {
            t.insert("sweep".into(), toml::Value::Table(sweep));
        }
        t
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cmd: Command = cli.command.into();
    let result = parse_config(cli.flags.config.as_deref(), cli.flags.overrides())
        .and_then(|cfg| run_command(cmd, &cfg));
    match result {
        Ok(out) => {
            println!("{}", serde_json::to_string(&serde_json::json!({
                "dir": out.dir,
                "cached": out.cached,
                "record": out.record,
            })).expect("record serializes"));
            if out.record.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(4)
            }
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
