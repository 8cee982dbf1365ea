use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use osa_core::bandit::LearningMode;
use osa_core::harness::{
    load_scenario, run_batch, write_csv, write_csv_to, write_per_user_csv, Profile, PRESETS,
};
use osa_core::metrics::RegretKind;
use osa_core::policy::{Coordination, PolicyKind, SelectionRule};
use osa_core::Result;

/// Simulate secondary users learning and sharing primary channels.
#[derive(Debug, Parser)]
#[command(name = "osa-sim", version)]
struct Args {
    /// Preset name or path to a TOML scenario file.
    #[arg(long, default_value = "scenario1")]
    scenario: String,

    /// cc-ucb1, random, individual-ucb or cooperative-ucb.
    #[arg(long)]
    policy: Option<PolicyKind>,

    /// hungarian or round-robin.
    #[arg(long)]
    coordination: Option<Coordination>,

    /// shared (period K) or individual (period 1) learning for cc-ucb1.
    #[arg(long, value_parser = parse_learning)]
    learning: Option<LearningMode>,

    /// Selection rule of the uncoordinated UCB baselines.
    #[arg(long)]
    selection: Option<SelectionRule>,

    #[arg(long)]
    alpha: Option<f64>,

    /// Number of secondary users (availability-based scenarios only).
    #[arg(long)]
    users: Option<usize>,

    #[arg(long)]
    horizon: Option<u64>,

    #[arg(long)]
    runs: Option<usize>,

    /// Base seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,

    /// Emit every stride-th slot.
    #[arg(long)]
    stride: Option<u64>,

    /// pseudo (expected rewards) or realized.
    #[arg(long)]
    regret: Option<RegretKind>,

    /// Paper scale: 10^6 slots (1000 runs for the throughput presets).
    #[arg(long)]
    full: bool,

    /// CSV destination; stdout when neither this nor the scenario names one.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Also write mean cumulative regret per user.
    #[arg(long)]
    per_user_out: Option<PathBuf>,

    /// Print the preset names and exit.
    #[arg(long)]
    list_presets: bool,
}

fn parse_learning(s: &str) -> std::result::Result<LearningMode, String> {
    match s {
        "shared" => Ok(LearningMode::Shared),
        "individual" => Ok(LearningMode::Individual),
        _ => Err(format!(
            "unknown learning mode `{s}` (expected shared or individual)"
        )),
    }
}

fn run(args: Args) -> Result<()> {
    if args.list_presets {
        for p in PRESETS {
            println!("{p}");
        }
        return Ok(());
    }
    let mut cfg = load_scenario(&args.scenario)?;
    if args.full {
        cfg.apply_profile(Profile::Full);
    }
    if let Some(k) = args.users {
        cfg = cfg.with_users(k)?;
    }
    if let Some(kind) = args.policy {
        cfg.policy.kind = kind;
    }
    if let Some(c) = args.coordination {
        cfg.policy.coordination = c;
    }
    if args.policy.is_some() || args.coordination.is_some() {
        cfg.policy.r_period = cfg.default_period();
    }
    match args.learning {
        Some(LearningMode::Shared) => cfg.policy.r_period = cfg.users,
        Some(LearningMode::Individual) => cfg.policy.r_period = 1,
        None => {}
    }
    if let Some(s) = args.selection {
        cfg.policy.selection = s;
    }
    if let Some(a) = args.alpha {
        cfg.policy.alpha = a;
    }
    if let Some(h) = args.horizon {
        cfg.horizon = h;
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(s) = args.stride {
        cfg.stride = s;
    }
    if let Some(r) = args.regret {
        cfg.regret = r;
    }
    if args.out.is_some() {
        cfg.out = args.out;
    }
    cfg.validate()?;

    let batch = run_batch(&cfg)?;
    match &cfg.out {
        Some(path) => write_csv(&batch, path)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv_to(&batch, &mut lock)?;
            lock.flush()?;
        }
    }
    if let Some(path) = &args.per_user_out {
        write_per_user_csv(&batch, path)?;
    }
    eprintln!("{}", batch.summary);
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
