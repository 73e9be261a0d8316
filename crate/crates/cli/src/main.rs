//! Experiment harness for the RIS secure-downlink simulator.
//!
//! Each subcommand reproduces one experiment family and writes a single CSV
//! into `--out`. Scenarios come from a JSON file (`--config`), start from the
//! desk-scale defaults otherwise, and individual fields of both the scenario
//! and the experiment parameters can be overridden with repeated
//! `--set key=value` flags. Results depend only on the configuration and the
//! seed; rerunning a subcommand with the same inputs reproduces every output
//! byte for byte. The `seconds` columns stay at zero unless `--wall-clock`
//! is given, because real timings are the one thing a rerun cannot
//! reproduce. `RIS_LAB_THREADS` caps the worker pool.

use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use ris_lab_core::config::{spaced_user_distances, SystemConfig};
use ris_lab_core::experiments::{
    convergence_rows, desk_config, oracle_rows, power_instances, power_rows, run_sweep,
    timing_rows, write_convergence_csv, write_oracle_csv, write_power_csv, write_sweep_csv,
    write_timing_csv, ExperimentParams,
};
use ris_lab_core::rates::PrecoderPolicy;

#[derive(Parser)]
#[command(name = "ris-lab", version, about = "RIS secure-downlink experiment harness")]
struct Cli {
    /// Scenario JSON file; desk-scale defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Root seed; overrides the scenario's `rng_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory the CSV files are written into.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,
    /// Override one scenario or experiment field; repeatable. Lists are
    /// comma-separated, e.g. `--set L_list=4,8`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Record real wall-clock seconds; only the `seconds` columns stop
    /// being byte-reproducible.
    #[arg(long, global = true)]
    wall_clock: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy, PartialEq)]
enum Command {
    /// Per-episode training reward of DQN and HDRL on pinned channels.
    Convergence,
    /// Secure sum rate against element count for all five algorithms.
    #[command(name = "sweep-L")]
    SweepL,
    /// Achieved rate with wall-time and deterministic cost counters.
    Timing,
    /// RSMA against NOMA across the transmit-power grid.
    #[command(name = "power-sweep")]
    PowerSweep,
    /// Small-instance optimality ratios against exhaustive search.
    Oracle,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    init_thread_pool()?;

    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading scenario file {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing scenario file {}", path.display()))?
        }
        None => desk_config(0),
    };
    let mut params = ExperimentParams::default();
    apply_overrides(&mut cfg, &mut params, &cli.set)?;
    if let Some(seed) = cli.seed {
        cfg.rng_seed = seed;
    }
    params.wall_clock = cli.wall_clock;
    params.train.wall_clock = cli.wall_clock;

    cfg.to_linear().context("invalid scenario")?;
    params.validate().context("invalid experiment parameters")?;
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;

    match cli.command {
        Command::Convergence => {
            let rows = convergence_rows(&cfg, &params)?;
            written(&cli.out.join("convergence.csv"), rows.len(), |p| {
                write_convergence_csv(p, &rows)
            })
        }
        Command::SweepL => {
            let (_, rows) = run_sweep(&cfg, &params)?;
            written(&cli.out.join("sweep_L.csv"), rows.len(), |p| {
                write_sweep_csv(p, &rows)
            })
        }
        Command::Timing => {
            let rows = timing_rows(&cfg, &params)?;
            written(&cli.out.join("timing.csv"), rows.len(), |p| {
                write_timing_csv(p, &rows)
            })
        }
        Command::PowerSweep => {
            let rows = power_rows(&power_instances(&cfg, &params)?);
            written(&cli.out.join("power_sweep.csv"), rows.len(), |p| {
                write_power_csv(p, &rows)
            })
        }
        Command::Oracle => {
            let rows = oracle_rows(&cfg, &params)?;
            written(&cli.out.join("oracle.csv"), rows.len(), |p| {
                write_oracle_csv(p, &rows)
            })
        }
    }
}

fn written(
    path: &Path,
    rows: usize,
    write: impl FnOnce(&Path) -> std::io::Result<()>,
) -> Result<()> {
    write(path).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {} ({rows} rows)", path.display());
    Ok(())
}

fn init_thread_pool() -> Result<()> {
    let Ok(raw) = std::env::var("RIS_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .with_context(|| format!("RIS_LAB_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("configuring the worker pool")?;
    Ok(())
}

/// Every key `--set` understands, in help order.
const VALID_KEYS: &[&str] = &[
    "K",
    "M",
    "L",
    "mu",
    "e_count",
    "B_w",
    "sigma2_dBm",
    "P_t_dBm",
    "alpha_split",
    "G_S_dBi",
    "G_B_dBi",
    "f_c",
    "c",
    "g_s",
    "d_SR",
    "d_Rk",
    "d_Re",
    "alpha_SR",
    "alpha_RB",
    "kappa_dB",
    "mu_kappa_dB",
    "rng_seed",
    "L_list",
    "channels",
    "instances",
    "random_trials",
    "greedy_sweeps",
    "reduced_runs",
    "n_l",
    "exhaustive_cap",
    "power_grid_dBm",
    "oracle_instances",
    "oracle_L",
    "precoder_policy",
    "hidden",
    "learning_rate",
    "discount",
    "batch",
    "replay_capacity",
    "episodes",
    "horizon",
    "epsilon_start",
    "epsilon_decay",
    "epsilon_floor",
    "target_sync",
    "beta1",
    "beta2",
    "adam_epsilon",
];

fn apply_overrides(
    cfg: &mut SystemConfig,
    params: &mut ExperimentParams,
    sets: &[String],
) -> Result<()> {
    let mut users_changed = false;
    let mut distances_set = false;
    for entry in sets {
        let Some((key, value)) = entry.split_once('=') else {
            bail!("--set expects KEY=VALUE, got {entry:?}");
        };
        match key {
            "K" => {
                cfg.k = parse(key, value)?;
                users_changed = true;
            }
            "d_Rk" => {
                cfg.d_rk = parse_list(key, value)?;
                distances_set = true;
            }
            _ => apply_one(cfg, params, key, value)?,
        }
    }
    if users_changed && !distances_set {
        cfg.d_rk = spaced_user_distances(cfg.k);
    }
    Ok(())
}

fn apply_one(
    cfg: &mut SystemConfig,
    params: &mut ExperimentParams,
    key: &str,
    value: &str,
) -> Result<()> {
    match key {
        "M" => cfg.m = parse(key, value)?,
        "L" => cfg.l = parse(key, value)?,
        "mu" => cfg.mu = parse(key, value)?,
        "e_count" => cfg.e_count = parse(key, value)?,
        "B_w" => cfg.b_w = parse(key, value)?,
        "sigma2_dBm" => cfg.sigma2_dbm = parse(key, value)?,
        "P_t_dBm" => cfg.p_t_dbm = parse(key, value)?,
        "alpha_split" => cfg.alpha_split = parse(key, value)?,
        "G_S_dBi" => cfg.g_s_dbi = parse(key, value)?,
        "G_B_dBi" => cfg.g_b_dbi = parse(key, value)?,
        "f_c" => cfg.f_c = parse(key, value)?,
        "c" => cfg.c = parse(key, value)?,
        "g_s" => cfg.g_s = parse(key, value)?,
        "d_SR" => cfg.d_sr = parse(key, value)?,
        "d_Re" => cfg.d_re = parse(key, value)?,
        "alpha_SR" => cfg.alpha_sr = parse(key, value)?,
        "alpha_RB" => cfg.alpha_rb = parse(key, value)?,
        "kappa_dB" => cfg.kappa_db = parse(key, value)?,
        "mu_kappa_dB" => cfg.mu_kappa_db = parse(key, value)?,
        "rng_seed" => cfg.rng_seed = parse(key, value)?,
        "L_list" => params.l_list = parse_list(key, value)?,
        "channels" => params.channels = parse(key, value)?,
        "instances" => params.instances = parse(key, value)?,
        "random_trials" => params.random_trials = parse(key, value)?,
        "greedy_sweeps" => params.greedy_sweeps = parse(key, value)?,
        "reduced_runs" => params.reduced_runs = parse(key, value)?,
        "n_l" => params.n_l = parse(key, value)?,
        "exhaustive_cap" => params.exhaustive_cap = parse(key, value)?,
        "power_grid_dBm" => params.power_grid_dbm = parse_list(key, value)?,
        "oracle_instances" => params.oracle_instances = parse(key, value)?,
        "oracle_L" => params.oracle_l = parse(key, value)?,
        "precoder_policy" => {
            params.policy = PrecoderPolicy::from_str(value).map_err(anyhow::Error::msg)?
        }
        "hidden" => params.train.hidden = parse_list(key, value)?,
        "learning_rate" => params.train.learning_rate = parse(key, value)?,
        "discount" => params.train.discount = parse(key, value)?,
        "batch" => params.train.batch = parse(key, value)?,
        "replay_capacity" => params.train.replay_capacity = parse(key, value)?,
        "episodes" => params.train.episodes = parse(key, value)?,
        "horizon" => {
            params.train.horizon = if value == "none" {
                None
            } else {
                Some(parse(key, value)?)
            }
        }
        "epsilon_start" => params.train.epsilon_start = parse(key, value)?,
        "epsilon_decay" => params.train.epsilon_decay = parse(key, value)?,
        "epsilon_floor" => params.train.epsilon_floor = parse(key, value)?,
        "target_sync" => params.train.target_sync = parse(key, value)?,
        "beta1" => params.train.beta1 = parse(key, value)?,
        "beta2" => params.train.beta2 = parse(key, value)?,
        "adam_epsilon" => params.train.adam_epsilon = parse(key, value)?,
        other => bail!(
            "unknown --set key {other:?}; valid keys: {}",
            VALID_KEYS.join(", ")
        ),
    }
    Ok(())
}

fn parse<T>(key: &str, value: &str) -> Result<T>
where
    T: FromStr,
    T::Err: Display,
{
    value
        .parse()
        .map_err(|e| anyhow::anyhow!("invalid value {value:?} for {key}: {e}"))
}

fn parse_list<T>(key: &str, value: &str) -> Result<Vec<T>>
where
    T: FromStr,
    T::Err: Display,
{
    value.split(',').map(|item| parse(key, item.trim())).collect()
}
