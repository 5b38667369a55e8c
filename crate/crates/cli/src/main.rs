//! `hflow`: runs flow, slope, harmonic-map, Laplacian and property-suite
//! scenarios and writes their outputs under `<out>/<name>/`.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand};
use hflow::scenario::{Override, ScenarioConfig};
use hflow::Error;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(name = "hflow", version, about = "Gradient flows on CAT(0) spaces")]
struct Cli {
    /// Scenario file (JSON); repeat for several scenarios.
    #[arg(long, global = true, value_name = "PATH")]
    config: Vec<PathBuf>,
    #[arg(long, global = true, value_name = "U64")]
    seed: Option<u64>,
    /// Worker threads across scenarios.
    #[arg(long, global = true, value_name = "K", default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// `key.path=value`, applied after the config file; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Space shorthand (`euclidean2`, `spider3`, `hyperbolic2`, `sphere2`)
    /// or a JSON descriptor.
    #[arg(long, global = true, value_name = "SPACE")]
    space: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Discrete flow: trajectory.csv and verifier report.json.
    Flow,
    /// Slope and minimal-selection norm at the configured points.
    Slope,
    /// Harmonic map with boundary data: map.csv, log.csv, report.json.
    Harmonic,
    /// Laplacian section of the configured map with a slope-vs-norm report.
    Laplacian,
    /// Property suites (`all` for every suite).
    Verify {
        #[arg(required = true)]
        suites: Vec<String>,
    },
    /// Wall-clock timings of property suites (all when none are named).
    Bench { suites: Vec<String> },
}

/// Per-scenario outcome, ordered by exit-code priority.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Ok,
    PropertyFailure,
    NoConvergence,
    ConfigError,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::PropertyFailure => 1,
            Status::ConfigError => 2,
            Status::NoConvergence => 3,
        }
    }

    fn of_error(e: &Error) -> Self {
        match e {
            Error::NoConvergence(_) | Error::ProxFailure(_) => Status::NoConvergence,
            _ => Status::ConfigError,
        }
    }
}

fn init_logging() -> Result<(), String> {
    let level = std::env::var("HFLOW_LOG").unwrap_or_else(|_| "error".into());
    if !matches!(level.as_str(), "error" | "info" | "debug") {
        return Err(format!(
            "HFLOW_LOG must be one of error, info, debug (got `{level}`)"
        ));
    }
    env_logger::Builder::new()
        .parse_filters(&level)
        .format_timestamp(None)
        .init();
    Ok(())
}

fn space_value(s: &str) -> Result<Value, Error> {
    if s.trim_start().starts_with('{') {
        return serde_json::from_str(s).map_err(|e| Error::InvalidConfig {
            path: "space".into(),
            message: e.to_string(),
        });
    }
    let number = |prefix: &str| s.strip_prefix(prefix).and_then(|n| n.parse::<usize>().ok());
    let v = if s == "hyperbolic2" || s == "hyperbolic" {
        json!({"kind": "hyperbolic2"})
    } else if s == "sphere2" || s == "sphere" {
        json!({"kind": "sphere2", "kappa": 1.0})
    } else if let Some(dim) = number("euclidean").or_else(|| number("euclid")) {
        json!({"kind": "euclidean", "dim": dim})
    } else if let Some(rays) = number("spider") {
        json!({"kind": "spider", "rays": rays})
    } else {
        return Err(Error::InvalidConfig {
            path: "space".into(),
            message: format!("unknown space shorthand `{s}`"),
        });
    };
    Ok(v)
}

fn overrides(cli: &Cli) -> Result<Vec<Override>, Error> {
    let mut out = Vec::new();
    if let Some(s) = &cli.space {
        out.push(Override::new("space", space_value(s)?));
    }
    if let Some(seed) = cli.seed {
        out.push(Override::new("seed", json!(seed)));
    }
    if let Some(dir) = &cli.out {
        out.push(Override::new("out", json!(dir)));
    }
    for s in &cli.sets {
        out.push(Override::parse(s)?);
    }
    Ok(out)
}

fn load(cli: &Cli) -> Result<Vec<ScenarioConfig>, String> {
    let sets = overrides(cli).map_err(|e| e.to_string())?;
    let raw = if cli.config.is_empty() {
        vec![ScenarioConfig::from_overrides(&sets).map_err(|e| e.to_string())?]
    } else {
        cli.config
            .iter()
            .map(|p| {
                let text =
                    std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
                ScenarioConfig::parse(&text, &sets).map_err(|e| format!("{}: {e}", p.display()))
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let cfgs = raw
        .into_iter()
        .map(|c| c.resolve().map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let mut dirs: Vec<PathBuf> = cfgs.iter().map(|c| c.out.join(&c.name)).collect();
    dirs.sort();
    if let Some(w) = dirs.windows(2).find(|w| w[0] == w[1]) {
        return Err(format!(
            "two scenarios write to {}; give them distinct names",
            w[0].display()
        ));
    }
    Ok(cfgs)
}

/// Runs every scenario on `jobs` workers; results come back in input order.
fn run_all(command: &Command, cfgs: &[ScenarioConfig], jobs: usize) -> Vec<commands::Outcome> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<commands::Outcome>>> = Mutex::new(vec![None; cfgs.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(cfgs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cfg) = cfgs.get(i) else { break };
                log::info!("scenario `{}` started", cfg.name);
                let outcome = commands::run(command, cfg);
                results.lock().expect("no worker panicked")[i] = Some(outcome);
            });
        }
    });
    results
        .into_inner()
        .expect("no worker panicked")
        .into_iter()
        .map(|o| o.expect("every scenario ran"))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(msg) = init_logging() {
        eprintln!("error: {msg}");
        return ExitCode::from(Status::ConfigError.code());
    }
    if cli.jobs == 0 {
        eprintln!("error: --jobs must be at least 1");
        return ExitCode::from(Status::ConfigError.code());
    }
    let cfgs = match load(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(Status::ConfigError.code());
        }
    };
    let mut worst = Status::Ok;
    for (cfg, outcome) in cfgs.iter().zip(run_all(&cli.command, &cfgs, cli.jobs)) {
        for line in &outcome.lines {
            println!("[{}] {line}", cfg.name);
        }
        let status = match &outcome.result {
            Ok(true) => Status::Ok,
            Ok(false) => Status::PropertyFailure,
            Err(e) => {
                eprintln!("[{}] error: {e}", cfg.name);
                Status::of_error(e)
            }
        };
        worst = worst.max(status);
    }
    ExitCode::from(worst.code())
}
