use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use fogverse::config::load_or_default;
use fogverse::emit::{self, curve, plotted_kind, RecordWriter, RunInfo};
use fogverse::runner::{run_sweep, Execution};
use fogverse_core::metrics::latency_reduction;
use fogverse_core::scenario::{run_scenario_with, ScenarioLabel};
use fogverse_core::{PolicyKind, SweepParam, SweepSpec};

#[derive(Parser)]
#[command(name = "fogverse", version, about = "Fog/edge vs cloud metaverse latency simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its records, ledger and summary.
    Run {
        /// TOML config; built-in defaults when omitted
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_policy)]
        policy: PolicyKind,
        /// Defaults to experiment.base_seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Skip records.csv
        #[arg(long)]
        no_records: bool,
    },
    /// Run both policies over a parameter sweep.
    Sweep {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_parser = parse_param)]
        param: SweepParam,
        /// Comma-separated, strictly increasing; defaults per parameter
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        /// Defaults to experiment.replications
        #[arg(long)]
        reps: Option<u32>,
        /// Defaults to experiment.base_seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Run scenarios one at a time
        #[arg(long)]
        serial: bool,
    },
    /// Print the latency-reduction table of a finished sweep.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn parse_policy(s: &str) -> Result<PolicyKind, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn parse_param(s: &str) -> Result<SweepParam, String> {
    s.parse().map_err(|e| format!("{e}"))
}

fn run(
    config: Option<&Path>,
    policy: PolicyKind,
    seed: Option<u64>,
    out: &Path,
    no_records: bool,
) -> anyhow::Result<()> {
    let cfg = load_or_default(config)?;
    let seed = seed.unwrap_or(cfg.experiment.base_seed);
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let started = Instant::now();
    let mut writer = if no_records { None } else { Some(RecordWriter::create(&out.join("records.csv"))?) };
    let mut failure = None;
    let mut sink = |r: &fogverse_core::LatencyRecord| {
        if let (Some(w), None) = (writer.as_mut(), failure.as_ref()) {
            if let Err(e) = w.write(r) {
                failure = Some(e);
            }
        }
    };
    let output = run_scenario_with(&cfg, policy, seed, ScenarioLabel::single(policy, seed), &mut sink)?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    emit::write_chain(&out.join("chain.txt"), &output.chain)?;
    let mut info = RunInfo::new("run", &cfg);
    info.policy = Some(policy.name().to_string());
    info.seed = Some(seed);
    let result = output.result;
    emit::emit(out, std::slice::from_ref(&result), &cfg, &info, None)?;

    let c = result.counts;
    println!("{} in {:.1?}", result.scenario, started.elapsed());
    println!("generated {} completed {} in flight {} blocks {}", c.generated, c.completed, c.in_flight, c.blocks);
    match result.overall.stats {
        Some(s) => println!("mean {:.3} ms  p50 {}  p95 {}  p99 {}", s.mean_ms, s.p50, s.p95, s.p99),
        None => println!("no records after warm-up"),
    }
    Ok(())
}

fn sweep(
    config: Option<&Path>,
    param: SweepParam,
    values: Vec<f64>,
    reps: Option<u32>,
    seed: Option<u64>,
    out: &Path,
    serial: bool,
) -> anyhow::Result<()> {
    let cfg = load_or_default(config)?;
    let spec = SweepSpec {
        param,
        values: if values.is_empty() { param.default_values() } else { values },
        replications: reps.unwrap_or(cfg.experiment.replications),
        base_seed: seed.unwrap_or(cfg.experiment.base_seed),
    };
    let started = Instant::now();
    let exec = if serial { Execution::Serial } else { Execution::Parallel };
    let results = run_sweep(&cfg, &spec, exec)?;
    let mut info = RunInfo::new("sweep", &cfg);
    info.param = Some(param.name().to_string());
    info.values = spec.values.clone();
    info.replications = Some(spec.replications);
    info.base_seed = Some(spec.base_seed);
    emit::emit(out, &results, &cfg, &info, Some(param))?;
    println!("{} scenarios in {:.1?}", results.len(), started.elapsed());
    print_table(param.name(), &results, plotted_kind(param));
    Ok(())
}

fn print_table(param: &str, results: &[fogverse_core::ScenarioResult], kind: Option<fogverse_core::TaskKind>) {
    let points = curve(results, kind);
    println!("{:>12} {:>14} {:>14} {:>10}", param, "cloud ms", "fogedge ms", "reduction");
    let mut values: Vec<f64> = points.iter().map(|p| p.value).collect();
    values.dedup();
    for v in values {
        let mean = |policy| points.iter().find(|p| p.value == v && p.policy == policy).map(|p| p.mean_ms);
        let cell = |m: Option<f64>| m.map_or_else(|| "-".to_string(), |m| format!("{m:.3}"));
        let (c, f) = (mean(PolicyKind::CloudOnly), mean(PolicyKind::FogEdge));
        let red = match (c, f) {
            (Some(c), Some(f)) => {
                latency_reduction(c, f).map_or_else(|_| "-".to_string(), |r| format!("{:.1}%", r * 100.0))
            }
            _ => "-".to_string(),
        };
        println!("{:>12} {:>14} {:>14} {:>10}", v, cell(c), cell(f), red);
    }
}

fn report(input: &Path) -> anyhow::Result<()> {
    let results = emit::read_results(input)?;
    let Some(first) = results.first() else { bail!("{} holds no results", input.display()) };
    let param = first.param.clone();
    let kind = param.parse::<SweepParam>().ok().and_then(plotted_kind);
    if let Some(k) = kind {
        println!("latency of {k} tasks");
    }
    print_table(&param, &results, kind);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Command::Run { config, policy, seed, out, no_records } => {
            run(config.as_deref(), policy, seed, &out, no_records)
        }
        Command::Sweep { config, param, values, reps, seed, out, serial } => {
            sweep(config.as_deref(), param, values, reps, seed, &out, serial)
        }
        Command::Report { input } => report(&input),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
