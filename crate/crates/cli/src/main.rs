//! `homdyn`: runs classification and random-walk experiments and writes
//! reproducible artifacts.

mod config;
mod run;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use homdyn::catalog;

use config::{ExperimentConfig, Kind, Manifest, MuConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] homdyn::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

const EXIT_CONFIG: u8 = 1;
const EXIT_TOLERANCE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "homdyn", version, about = "Random walks on homogeneous bundles over the projective line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide the case of a configuration.
    Classify(Common),
    /// Run the bundle walk and record the fibre observable.
    Walk(Common),
    /// Estimate the top Lyapunov exponent.
    Lyapunov(Common),
    /// Tabulate large-deviation tails of the Iwasawa cocycle.
    Ldp(Common),
    /// Renewal sum against its limit.
    Renewal(Common),
    /// Finite cross-ratios against their limits.
    Drift(Common),
    /// Walk against the diagonal flow on the fibre.
    Equidist(Common),
    /// Twisted walk against the walk through the morphism.
    Decompose(Common),
    /// Run whatever experiment a config or manifest describes.
    Run(Common),
    /// Print the catalog of named configurations.
    ListExamples {
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Debug, Default)]
struct Common {
    /// JSON experiment config, or a manifest written by an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named configuration from `list-examples`.
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for report.json, series.csv and manifest.json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Named step measure.
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    theta0: Option<f64>,
}

impl Common {
    fn config(&self, kind: Option<Kind>) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match (&self.config, kind) {
            (Some(path), _) => {
                let c = config::load(path)?;
                if let Some(k) = kind.filter(|k| *k != c.kind) {
                    return Err(CliError::Config(format!(
                        "{} is a {} config, not {}",
                        path.display(),
                        c.kind.name(),
                        k.name()
                    )));
                }
                c
            }
            (None, Some(k)) => ExperimentConfig::new(k),
            (None, None) => return Err(CliError::Config("`run` needs --config".into())),
        };
        if let Some(e) = &self.example {
            cfg.geometry = None;
            cfg.example = Some(e.clone());
        }
        if let Some(m) = &self.measure {
            cfg.mu = Some(MuConfig::Named(m.clone()));
        }
        cfg.seed = self.seed.or(cfg.seed);
        let p = &mut cfg.params;
        p.steps = self.steps.or(p.steps);
        p.trials = self.trials.or(p.trials);
        p.eps1 = self.eps1.or(p.eps1);
        p.t = self.t.or(p.t);
        p.k_max = self.k_max.or(p.k_max);
        p.dt = self.dt.or(p.dt);
        p.tol = self.tol.or(p.tol);
        p.theta0 = self.theta0.or(p.theta0);
        cfg.resolve()
    }
}

fn init_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("HOMDYN_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::Config(format!("HOMDYN_THREADS={v:?} is not a count")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn write_series(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{}", header.join(","))?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

fn execute(common: &Common, kind: Option<Kind>) -> Result<bool, CliError> {
    let cfg = common.config(kind)?;
    let start = Instant::now();
    let outcome = run::run(&cfg)?;
    let wall_clock = start.elapsed().as_secs_f64();
    let report = serde_json::json!({
        "kind": cfg.kind,
        "seed": cfg.seed(),
        "pass": outcome.pass,
        "result": outcome.report,
    });
    let text = serde_json::to_string_pretty(&report)?;
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join("report.json"), &text)?;
            write_series(&dir.join("series.csv"), &outcome.series_header, &outcome.series)?;
            let manifest =
                Manifest { seed: cfg.seed(), config: cfg, version: env!("CARGO_PKG_VERSION").to_string(), wall_clock };
            std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        }
        None => println!("{text}"),
    }
    eprintln!("{}: {}", if outcome.pass { "PASS" } else { "FAIL" }, outcome.summary);
    Ok(outcome.pass)
}

fn list_examples(json: bool) -> Result<(), CliError> {
    let ex = catalog::examples();
    if json {
        println!("{}", serde_json::to_string_pretty(&ex)?);
        return Ok(());
    }
    println!("{:<20} {:<9} {:<14} {:>8} {:>7}  description", "name", "case", "measure", "steps", "trials");
    for e in &ex {
        println!(
            "{:<20} {:<9} {:<14} {:>8} {:>7}  {}",
            e.name,
            e.expected.to_string(),
            e.measure,
            e.steps,
            e.trials,
            e.summary
        );
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::ListExamples { json } => list_examples(*json).map(|()| true),
        Command::Classify(c) => execute(c, Some(Kind::Classify)),
        Command::Walk(c) => execute(c, Some(Kind::Walk)),
        Command::Lyapunov(c) => execute(c, Some(Kind::Lyapunov)),
        Command::Ldp(c) => execute(c, Some(Kind::Ldp)),
        Command::Renewal(c) => execute(c, Some(Kind::Renewal)),
        Command::Drift(c) => execute(c, Some(Kind::Drift)),
        Command::Equidist(c) => execute(c, Some(Kind::Equidist)),
        Command::Decompose(c) => execute(c, Some(Kind::Decompose)),
        Command::Run(c) => execute(c, None),
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_TOLERANCE),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
