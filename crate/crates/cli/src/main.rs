//! `morn`: run single episodes, the benchmark suite and threshold sweeps.
//!
//! Exit codes: 0 success, 1 internal error, 2 configuration or usage error.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use morn_core::bench::{
    self, bench_csv, generate, render_ascii, run, run_suite, summarize, sweep, sweep_csv, BenchError,
    EpisodeSpec, EpisodeTrace, StepTrace, SuiteOptions, SweepParameter,
};
use morn_core::config::{ConfigError, RunConfig};
use morn_core::executive::MethodVariant;
use morn_core::simworld::fixtures;

#[derive(Parser)]
#[command(name = "morn", version, about = "Budgeted multi-goal navigation benchmark")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Dotted-key config file.
    #[arg(long, global = true, env = "MORN_CONFIG")]
    config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Master seed (suite) or episode seed (fixture).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "morn-out")]
    out: PathBuf,
    /// Worker threads; defaults to available parallelism.
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one episode and print its step log.
    Run {
        /// Fixture map name (trivial, open, two_room, sealed_room, maze).
        #[arg(long, conflicts_with = "episode")]
        fixture: Option<String>,
        /// Index into the generated suite.
        #[arg(long)]
        episode: Option<u32>,
        #[arg(long, default_value = "MORN_FULL")]
        variant: String,
        /// Render the map and agent path after the log.
        #[arg(long)]
        trace_ascii: bool,
        /// Only print the outcome summary.
        #[arg(long)]
        quiet: bool,
    },
    /// Run the variants over the generated suite and write a CSV.
    Bench {
        /// Comma-separated variants; defaults to all five.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
        /// Scale the suite down to this many episodes, keeping the K mix.
        #[arg(long)]
        episodes: Option<usize>,
        /// Also write one JSONL trace per episode and variant.
        #[arg(long)]
        traces: bool,
    },
    /// Sweep one threshold for one variant.
    Sweep {
        /// abort, switch, commit, commit_distance or grace.
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<String>,
        #[arg(long, default_value = "MORN_FULL")]
        variant: String,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Summarize a JSONL trace file written by `run` or `bench --traces`.
    Report {
        trace: PathBuf,
        /// Print every step, not only interventions.
        #[arg(long)]
        all: bool,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Internal(String),
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::UnknownParameter(_) | BenchError::EmptySweep => CliError::Config(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Internal(e.to_string())
    }
}

fn load_config(common: &Common) -> Result<RunConfig, CliError> {
    let mut text = match &common.config {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?,
        None => String::new(),
    };
    for o in &common.overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override `{o}` is not KEY=VALUE")))?;
        let _ = writeln!(text, "{} = {}", k.trim(), v.trim());
    }
    let mut cfg = RunConfig::from_str(&text)?;
    if let Some(seed) = common.seed {
        cfg.bench.master_seed = seed;
    }
    Ok(cfg)
}

fn parse_variant(s: &str) -> Result<MethodVariant, CliError> {
    s.parse().map_err(CliError::Config)
}

fn scale(cfg: &mut RunConfig, episodes: Option<usize>) {
    if let Some(n) = episodes {
        let total = cfg.bench.count_k2 + cfg.bench.count_k3;
        let k2 = (n * cfg.bench.count_k2 + total / 2).checked_div(total).unwrap_or(n);
        cfg.bench.count_k2 = k2.min(n);
        cfg.bench.count_k3 = n - cfg.bench.count_k2;
    }
}

fn suite(cfg: &RunConfig) -> Result<Vec<EpisodeSpec>, CliError> {
    Ok(generate(cfg.bench.count_k2, cfg.bench.count_k3, cfg.bench.master_seed, cfg)?)
}

fn fmt_distance(d: Option<f64>) -> String {
    d.map_or_else(|| "   inf".to_string(), |d| format!("{d:6.2}"))
}

fn step_line(s: &StepTrace, budget_max: u32) -> String {
    let mut line = format!(
        "t={:4} goal={} d={} s={:.3} pi={:.3} gamma={:.3} sigma={:.3} {}({})",
        s.t,
        s.goal,
        fmt_distance(s.distance),
        s.evidence,
        s.potentiality,
        s.persistence,
        s.sufficiency,
        s.action,
        s.reason,
    );
    if let Some(n) = s.next_goal {
        let _ = write!(line, " -> {n}");
    }
    let _ = write!(
        line,
        " budget={}/{} spent={}/{}",
        s.elapsed, budget_max, s.active_spent, s.allocation
    );
    line
}

fn outcome_lines(trace: &EpisodeTrace) -> Vec<String> {
    let mut lines = vec![format!(
        "episode {} {} seed {}: {}/{} goals, {} steps of {}",
        trace.episode_id,
        trace.variant,
        trace.seed,
        trace.completed(),
        trace.goal_count,
        trace.total_steps,
        trace.budget_max
    )];
    for o in &trace.outcomes {
        let exit = o
            .last_exit
            .map_or("never active".to_string(), |(a, r)| format!("{a}({r})"));
        let failure = o.failure.map_or(String::new(), |f| format!(" failure={f:?}"));
        lines.push(format!(
            "  {} {:?} {:?} charged={} switches={} last={exit}{failure}",
            o.goal_id, o.kind, o.final_state, o.charged_steps, o.switch_count
        ));
    }
    lines
}

fn cmd_run(
    common: &Common,
    fixture: Option<&str>,
    episode: Option<u32>,
    variant: &str,
    trace_ascii: bool,
    quiet: bool,
) -> Result<(), CliError> {
    let cfg = load_config(common)?;
    let variant = parse_variant(variant)?;
    let (spec, label) = match (fixture, episode) {
        (Some(name), _) => {
            let text = fixtures::text(name).ok_or_else(|| {
                CliError::Config(format!(
                    "unknown fixture `{name}` (expected one of {})",
                    fixtures::NAMES.join(", ")
                ))
            })?;
            let goals = text.chars().filter(|c| c.is_ascii_digit()).count();
            let budget = if goals <= 2 { cfg.bench.budget_k2 } else { cfg.bench.budget_k3 };
            let spec = EpisodeSpec::from_fixture(name, 0, cfg.bench.master_seed, budget, &[], cfg.bench.detectability)
                .map_err(|e| CliError::Config(e.to_string()))?;
            (spec, name.to_string())
        }
        (None, id) => {
            let id = id.unwrap_or(0);
            let specs = suite(&cfg)?;
            let spec = specs.into_iter().nth(id as usize).ok_or_else(|| {
                CliError::Config(format!("episode {id} is outside the generated suite"))
            })?;
            (spec, format!("ep{id:04}"))
        }
    };
    let trace = run(&spec, variant, &cfg)?;

    fs::create_dir_all(&common.out)?;
    let path = common
        .out
        .join(format!("{}_{label}.jsonl", variant.name().to_ascii_lowercase()));
    trace.write_jsonl(io::BufWriter::new(fs::File::create(&path)?))?;

    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    if !quiet {
        for s in &trace.steps {
            writeln!(out, "{}", step_line(s, trace.budget_max))?;
        }
    }
    for line in outcome_lines(&trace) {
        writeln!(out, "{line}")?;
    }
    if trace_ascii {
        let frame = render_ascii(&spec, &trace)?;
        writeln!(out, "{}", frame.trim_end())?;
    }
    writeln!(out, "trace: {}", path.display())?;
    out.flush()?;
    Ok(())
}

fn cmd_bench(common: &Common, variants: &[String], episodes: Option<usize>, traces: bool) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    scale(&mut cfg, episodes);
    let variants: Vec<MethodVariant> = if variants.is_empty() {
        MethodVariant::ALL.to_vec()
    } else {
        variants.iter().map(|v| parse_variant(v)).collect::<Result<_, _>>()?
    };
    let specs = suite(&cfg)?;
    fs::create_dir_all(&common.out)?;
    let trace_dir = common.out.join("traces");
    let opts = SuiteOptions {
        workers: common.workers,
        trace_dir: traces.then_some(trace_dir.as_path()),
    };
    let results = run_suite(&specs, &variants, &cfg, &opts)?;
    let csv = bench_csv(&results, &cfg)?;
    fs::write(common.out.join("bench.csv"), &csv)?;
    let summary = summarize(&results, &cfg)?;
    let json = serde_json::to_string_pretty(&summary).map_err(BenchError::from)?;
    fs::write(common.out.join("summary.json"), json + "\n")?;
    print!("{csv}");
    Ok(())
}

fn cmd_sweep(
    common: &Common,
    param: &str,
    values: &[String],
    variant: &str,
    episodes: Option<usize>,
) -> Result<(), CliError> {
    let mut cfg = load_config(common)?;
    scale(&mut cfg, episodes);
    let parameter: SweepParameter = param.parse().map_err(|e: BenchError| CliError::Config(e.to_string()))?;
    let variant = parse_variant(variant)?;
    let values: Vec<f64> = values
        .iter()
        .filter(|v| !v.trim().is_empty())
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("sweep value `{v}` is not a number")))
        })
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err(BenchError::EmptySweep.into());
    }
    let specs = suite(&cfg)?;
    let opts = SuiteOptions {
        workers: common.workers,
        trace_dir: None,
    };
    let rows = sweep(&specs, variant, parameter, &values, &cfg, &opts)?;
    let csv = sweep_csv(parameter, &rows);
    fs::create_dir_all(&common.out)?;
    fs::write(common.out.join(format!("sweep_{}.csv", parameter.name())), &csv)?;
    print!("{csv}");
    Ok(())
}

fn cmd_report(path: &Path, all: bool) -> Result<(), CliError> {
    let file = fs::File::open(path)
        .map_err(|e| CliError::Config(format!("cannot read trace {}: {e}", path.display())))?;
    let stdout = io::stdout();
    let mut out = io::BufWriter::new(stdout.lock());
    let mut budget_max = 0;
    let mut steps = 0usize;
    let mut interventions = 0usize;
    for (n, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let bad = |e: serde_json::Error| CliError::Config(format!("{}:{}: {e}", path.display(), n + 1));
        let value: serde_json::Value = serde_json::from_str(&line).map_err(bad)?;
        match value["record"].as_str() {
            Some("header") => {
                budget_max = value["budget_max"].as_u64().unwrap_or(0) as u32;
                writeln!(
                    out,
                    "episode {} {} seed {} K={} budget {budget_max}",
                    value["episode_id"], value["variant"].as_str().unwrap_or("?"), value["seed"], value["goal_count"]
                )?;
            }
            Some("step") => {
                let step: StepTrace = serde_json::from_value(value).map_err(bad)?;
                steps += 1;
                let persist = step.action == morn_core::executive::MetaAction::Persist;
                if !persist {
                    interventions += 1;
                }
                if all || !persist {
                    writeln!(out, "{}", step_line(&step, budget_max))?;
                }
            }
            Some("goal") => {
                let o: bench::GoalOutcome = serde_json::from_value(value).map_err(bad)?;
                writeln!(
                    out,
                    "  {} {:?} {:?} charged={} success={} failure={:?}",
                    o.goal_id, o.kind, o.final_state, o.charged_steps, o.success, o.failure
                )?;
            }
            Some("footer") => {
                writeln!(out, "{steps} steps, {interventions} interventions, footer {value}")?;
            }
            _ => return Err(CliError::Config(format!("{}:{}: unknown record", path.display(), n + 1))),
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run {
            fixture,
            episode,
            variant,
            trace_ascii,
            quiet,
        } => cmd_run(&cli.common, fixture.as_deref(), *episode, variant, *trace_ascii, *quiet),
        Command::Bench {
            variants,
            episodes,
            traces,
        } => cmd_bench(&cli.common, variants, *episodes, *traces),
        Command::Sweep {
            param,
            values,
            variant,
            episodes,
        } => cmd_sweep(&cli.common, param, values, variant, *episodes),
        Command::Report { trace, all } => cmd_report(trace, *all),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("morn: configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("morn: {msg}");
            ExitCode::from(1)
        }
    }
}
