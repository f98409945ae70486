use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use opsplit_cli::run::{resolve_solve, SolveFlags};
use opsplit_cli::*;
use opsplit_core::figures::DEFAULT_RESOLUTION;
use opsplit_core::sampling::{DEFAULT_PAIRS, DEFAULT_SEED};
use opsplit_core::splitting::{DrOrder, IterOptions};

#[derive(Parser)]
#[command(name = "opsplit", version, about = "Certified class calculus and splitting runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify the class of a composition of two (or more) classes.
    Compose {
        #[arg(value_name = "CLASS")]
        classes: Vec<String>,
        #[arg(long)]
        class1: Option<String>,
        #[arg(long)]
        class2: Option<String>,
        /// File with one class spec per line, applied first to last.
        #[arg(long)]
        chain: Option<PathBuf>,
        /// Index of the factor allowed to be non-averaged in a chain.
        #[arg(long)]
        r: Option<usize>,
    },
    /// List the named classes of one class spec.
    Classify { class: String },
    /// Douglas-Rachford on an instance file.
    SolveDr(SolveArgs),
    /// Forward-backward on an instance file.
    SolveFb(SolveArgs),
    /// Run the named or random verification suite.
    Verify {
        #[arg(long, default_value = "named")]
        suite: Suite,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = DEFAULT_PAIRS)]
        pairs: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Render a figure preset to SVG.
    Figure {
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Re-run the configuration echoed in a JSON summary or an SVG.
    Replay {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        log: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    beta_bar: Option<f64>,
    /// FB case: I, Ib, II, IIb, III, IIIb.
    #[arg(long)]
    case: Option<String>,
    #[arg(long, value_parser = parse_order)]
    order: Option<DrOrder>,
    /// Comma-separated starting point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    #[arg(long, default_value_t = IterOptions::default().max_iter)]
    max_iter: usize,
    #[arg(long, default_value_t = IterOptions::default().tol)]
    tol: f64,
    /// Iteration log destination (CSV).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Run even when the plan is rejected.
    #[arg(long)]
    force: bool,
}

fn parse_order(s: &str) -> Result<DrOrder, String> {
    match s {
        "a-strong" | "a_strong" => Ok(DrOrder::AStrong),
        "b-strong" | "b_strong" => Ok(DrOrder::BStrong),
        _ => Err(format!("unknown order `{s}` (a-strong, b-strong)")),
    }
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Turns parsed arguments into a resolved config plus output paths.
fn resolve(cmd: Command) -> CliResult<(RunConfig, Option<PathBuf>, Option<PathBuf>)> {
    Ok(match cmd {
        Command::Compose { classes, class1, class2, chain, r } => {
            let chain = match chain {
                Some(p) => Some(
                    read(&p)?
                        .lines()
                        .map(str::trim)
                        .filter(|l| !l.is_empty() && !l.starts_with('#'))
                        .map(String::from)
                        .collect::<Vec<_>>(),
                ),
                None => None,
            };
            let mut pos = classes.into_iter();
            let (c1, c2) = (class1.or_else(|| pos.next()), class2.or_else(|| pos.next()));
            if pos.next().is_some() {
                return Err(CliError::Parse("too many classes; use --chain for longer compositions".into()));
            }
            let (class1, class2) = match (c1, c2, &chain) {
                (Some(a), Some(b), _) => (a, b),
                (None, None, Some(_)) => (String::new(), String::new()),
                _ => return Err(CliError::Parse("compose needs two classes or --chain".into())),
            };
            (RunConfig::Compose(ComposeConfig { class1, class2, chain, r }), None, None)
        }
        Command::Classify { class } => (RunConfig::Classify(ClassifyConfig { class }), None, None),
        Command::SolveDr(a) => solve_config(a, false)?,
        Command::SolveFb(a) => solve_config(a, true)?,
        Command::Verify { suite, seed, count, pairs, tol } => {
            let seed = resolve_seed(seed)?;
            (RunConfig::Verify(VerifyConfig { suite, seed, count, pairs, tol }), None, None)
        }
        Command::Figure { preset, out, resolution } => (RunConfig::Figure(FigureConfig { preset, resolution }), out, None),
        Command::Replay { file, out, log } => (extract_config(&read(&file)?)?, out, log),
    })
}

fn solve_config(a: SolveArgs, fb: bool) -> CliResult<(RunConfig, Option<PathBuf>, Option<PathBuf>)> {
    let inst: InstanceFile =
        serde_json::from_str(&read(&a.instance)?).map_err(|e| CliError::Parse(format!("{}: {e}", a.instance.display())))?;
    let flags = SolveFlags {
        gamma: a.gamma,
        lambda: a.lambda,
        mu: a.mu,
        omega: a.omega,
        beta: a.beta,
        beta_bar: a.beta_bar,
        case: a.case,
        order: a.order,
        x0: a.x0,
        max_iter: a.max_iter,
        tol: a.tol,
        force: a.force,
    };
    let cfg = resolve_solve(inst, &flags, fb)?;
    let cfg = if fb { RunConfig::SolveFb(cfg) } else { RunConfig::SolveDr(cfg) };
    Ok((cfg, None, a.log))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (config, out, log) = match resolve(cli.command) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let outcome = run(&config);
    let o = &outcome.outputs;
    let written = (|| -> CliResult<()> {
        if let (Some(p), Some(csv)) = (&log, &o.csv) {
            write(p, csv)?;
        }
        match (&out, &o.svg) {
            (Some(p), Some(svg)) => write(p, svg)?,
            // Without --out the SVG itself is the output.
            (None, Some(svg)) => {
                print!("{svg}");
                return Ok(());
            }
            _ => {}
        }
        print!("{}", o.summary);
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error: {e}");
        return ExitCode::from(e.exit_code() as u8);
    }
    if outcome.exit_code != EXIT_OK {
        if let Ok(v) = serde_json::from_str::<serde_json::Value>(&o.summary) {
            if let Some(msg) = v["error"]["message"].as_str() {
                eprintln!("error: {msg}");
            }
        }
    }
    ExitCode::from(outcome.exit_code as u8)
}
