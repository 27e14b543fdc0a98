mod config;
mod figures;
mod output;
mod sweep;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand};

use config::{ExperimentConfig, Mode, Sweep};
use sweep::Context;

/// Replica lattice sweeps for noisy random brickwork encoders.
#[derive(Parser, Debug)]
#[command(name = "brickwork", version)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output file for `run` and `rm`, output directory for `reproduce`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the contraction direction: time, space or auto.
    #[arg(long, global = true)]
    direction: Option<String>,
    /// Overrides the logical-qudit placement: contiguous or spread.
    #[arg(long, global = true)]
    placement: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one experiment config and write its CSV. A CSV written earlier is
    /// also accepted; its embedded config is replayed.
    Run { config: PathBuf },
    /// Regenerate registered figures (`all` for every one).
    Reproduce {
        #[arg(required = true)]
        figures: Vec<String>,
    },
    /// Random-matrix predictions over a γ grid.
    Rm {
        #[arg(long)]
        channel: String,
        /// Comma-separated rates.
        #[arg(long, value_delimiter = ',', required = true)]
        r: Vec<f64>,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long = "gamma-grid")]
        gamma_grid: String,
        #[arg(long, value_delimiter = ',', default_value = "64")]
        n: Vec<usize>,
        #[arg(long, default_value = "I")]
        setup: String,
        /// Setup II `f₂` values, same grammar as the γ grid.
        #[arg(long = "f2-grid")]
        f2_grid: Option<String>,
    },
}

/// Exit codes: 0 success, 1 bad input, 2 some points failed, 3 some point hit
/// the memory ceiling.
const EXIT_CONFIG: u8 = 1;
const EXIT_POINTS: u8 = 2;
const EXIT_TOO_LARGE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot start {n} worker threads: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Run { config } => {
            let text = std::fs::read_to_string(config)
                .with_context(|| format!("cannot read config {}", config.display()))?;
            let cfg = if text.lines().any(|l| l == config::CONFIG_BEGIN) {
                ExperimentConfig::from_csv_header(&text)
            } else {
                ExperimentConfig::parse(&text)
            }
            .with_context(|| format!("in {}", config.display()))?;
            let cfg = apply_overrides(cli, cfg)?;
            let out = cli.out.clone().or_else(|| cfg.output.as_ref().map(PathBuf::from));
            execute(cfg, out.as_deref())
        }
        Command::Reproduce { figures: wanted } => {
            let names: Vec<&str> = if wanted.iter().any(|w| w == "all") {
                figures::names()
            } else {
                wanted.iter().map(String::as_str).collect()
            };
            let mut configs = Vec::new();
            for name in &names {
                let text = figures::lookup(name).with_context(|| {
                    format!("unknown figure `{name}`; known: {}", figures::names().join(", "))
                })?;
                let cfg = ExperimentConfig::parse(text).with_context(|| format!("recipe {name}"))?;
                configs.push((name, apply_overrides(cli, cfg)?));
            }
            let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
            let mut worst = 0;
            for (name, cfg) in configs {
                eprintln!("reproducing {name}");
                worst = worst.max(execute(cfg, Some(&dir.join(format!("{name}.csv"))))?);
            }
            Ok(worst)
        }
        Command::Rm { channel, r, gamma_grid, n, setup, f2_grid } => {
            let cfg = ExperimentConfig {
                mode: Mode::Rm,
                setup: Some(setup.clone()),
                channel: Some(channel.clone()),
                direction: None,
                placement: None,
                output: None,
                seed: None,
                samples: None,
                oracle_method: None,
                trajectories: None,
                frame_method: None,
                holevo: false,
                max_entries_log2: None,
                sweep: Sweep {
                    n: Some(n.clone()),
                    r: Some(r.clone()),
                    gamma: Some(parse_grid(gamma_grid).context("--gamma-grid")?),
                    f2: f2_grid.as_deref().map(parse_grid).transpose().context("--f2-grid")?,
                    ..Default::default()
                },
                fits: Vec::new(),
            };
            let cfg = apply_overrides(cli, cfg)?;
            execute(cfg, cli.out.as_deref())
        }
    }
}

fn apply_overrides(cli: &Cli, mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
    if cli.seed.is_some() {
        cfg.seed = cli.seed;
    }
    if cli.direction.is_some() {
        cfg.direction = cli.direction.clone();
    }
    if cli.placement.is_some() {
        cfg.placement = cli.placement.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs a validated config. The written config is the effective one, so the
/// header alone reproduces the file.
fn execute(cfg: ExperimentConfig, out: Option<&Path>) -> Result<u8> {
    let ctx = Context::new(cfg.clone())?;
    let result = ctx.run();
    let text = output::render(&cfg, &result.rows, &result.trailer);
    match out {
        Some(path) => std::fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?,
        None => print!("{text}"),
    }
    if out.is_some() {
        for line in result.trailer.iter().filter(|l| l.starts_with("fit ")) {
            println!("{line}");
        }
    }
    for f in &result.failures {
        eprintln!("warning: {}", f.message);
    }
    Ok(if result.failures.iter().any(|f| f.resource) {
        EXIT_TOO_LARGE
    } else if !result.failures.is_empty() {
        EXIT_POINTS
    } else {
        0
    })
}

/// `start:stop:step` (inclusive of `stop` up to rounding) or `a,b,c`.
fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, step] => {
            let (a, b, step): (f64, f64, f64) = (a.trim().parse()?, b.trim().parse()?, step.trim().parse()?);
            if !(step > 0.0) || b < a {
                bail!("grid `{s}` needs start ≤ stop and a positive step");
            }
            let count = ((b - a) / step + 1e-9).floor() as usize;
            // Rounded so that 0.1-steps print as 0.3, not 0.30000000000000004.
            Ok((0..=count).map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12).collect())
        }
        [list] => list.split(',').map(|x| x.trim().parse::<f64>().map_err(Into::into)).collect(),
        _ => bail!("grid `{s}` is neither start:stop:step nor a comma list"),
    }
}
