//! Experiment harness: convergence curves, element-count sweeps, timing,
//! power sweeps, and small-instance optimality checks.
//!
//! Every experiment treats each channel realization as one optimization
//! instance and runs the full per-instance pipeline on it: the random and
//! greedy baselines evaluate the instance directly, the plain DQN trains a
//! fresh network over the full one-element action space, and the heuristic
//! variant (HDRL) first builds a reduced action space from greedy restarts
//! on the instance and then trains inside it. Learned policies are scored
//! by a greedy rollout; an instance's figure of merit is the best secure
//! sum rate the rollout visits.
//!
//! Determinism: instances draw from per-cell RNG streams keyed by
//! (experiment slot, instance index), and instances are processed by an
//! order-preserving parallel map, so results are independent of thread
//! count and identical across runs. All `seconds` columns are 0.0 unless
//! wall-clock capture is explicitly enabled, keeping default CSV output
//! byte-identical across runs.

use std::io::{self, Write as _};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::{
    build_reduced_for_channel, exhaustive, random_phase, BaselineError, ReducedBuild,
};
use crate::channel::{generate, ChannelError, ChannelRealization};
use crate::config::{dbm_to_watts, spaced_user_distances, ConfigError, LinearConfig, SystemConfig};
use crate::dqn::{evaluate, train, DqnError, TrainOutcome, TrainSpec};
use crate::env::{ActionSpace, ChannelMode, Env, EnvError, EnvOptions};
use crate::rates::{PrecoderPolicy, RatesError, Scheme, SecureSumEvaluator};
use crate::ris::{full_enumeration_fits, PhaseConfig, RisError};
use crate::stream::{cell_index, Domain, Streams};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Rates(#[from] RatesError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Dqn(#[from] DqnError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Ris(#[from] RisError),
    #[error("invalid experiment parameters: {0}")]
    Params(String),
}

/// Knobs shared by all experiments.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ExperimentParams {
    /// Element counts swept by sweep, timing, and power experiments.
    pub l_list: Vec<usize>,
    /// Channel realizations per sweep or power cell.
    pub channels: usize,
    /// Instances per convergence or timing cell.
    pub instances: usize,
    /// Draws for the random baseline.
    pub random_trials: usize,
    /// Greedy sweeps per run.
    pub greedy_sweeps: usize,
    /// Greedy runs feeding the reduced space (run 0 starts from zero).
    pub reduced_runs: usize,
    /// Candidates kept per element.
    pub n_l: usize,
    /// Full enumeration is skipped once `2^(mu L)` exceeds this.
    pub exhaustive_cap: u64,
    /// Transmit power grid for the power sweep, dBm.
    pub power_grid_dbm: Vec<f64>,
    /// Instances for the small-instance optimality check.
    pub oracle_instances: usize,
    /// Element count for that check.
    pub oracle_l: usize,
    pub train: TrainSpec,
    pub policy: PrecoderPolicy,
    /// Record real wall-clock seconds (sacrifices byte-identical output
    /// for the `seconds` columns only).
    pub wall_clock: bool,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        Self {
            l_list: vec![4, 8, 12],
            channels: 50,
            instances: 5,
            random_trials: 1,
            greedy_sweeps: 2,
            reduced_runs: 20,
            n_l: 2,
            exhaustive_cap: 1 << 16,
            power_grid_dbm: vec![30.0, 40.0, 50.0, 60.0, 70.0],
            oracle_instances: 20,
            oracle_l: 4,
            train: TrainSpec::default(),
            policy: PrecoderPolicy::Matched,
            wall_clock: false,
        }
    }
}

impl ExperimentParams {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Params(msg));
        if self.l_list.is_empty() {
            return bad("L_list must not be empty".into());
        }
        if self.l_list.iter().any(|&l| l == 0) {
            return bad("every L in L_list must be positive".into());
        }
        if self.channels == 0 || self.instances == 0 || self.oracle_instances == 0 {
            return bad("channels, instances, and oracle instance counts must be positive".into());
        }
        if self.random_trials == 0 {
            return bad("random_trials must be at least 1".into());
        }
        if self.reduced_runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.n_l == 0 {
            return bad("n_l must be at least 1".into());
        }
        if self.power_grid_dbm.is_empty() {
            return bad("power_grid_dBm must not be empty".into());
        }
        if self.oracle_l == 0 {
            return bad("oracle_L must be positive".into());
        }
        self.train.validate()?;
        Ok(())
    }
}

/// Desk-scale default scenario: three users, two transmit antennas, 2-bit
/// phases. Element count is set per experiment cell.
pub fn desk_config(seed: u64) -> SystemConfig {
    SystemConfig {
        k: 3,
        m: 2,
        l: 8,
        d_rk: spaced_user_distances(3),
        rng_seed: seed,
        ..SystemConfig::default()
    }
}

fn linear_for(base: &SystemConfig, l: usize) -> Result<LinearConfig, ExperimentError> {
    let mut cfg = base.clone();
    cfg.l = l;
    Ok(cfg.to_linear()?)
}

/// Sample mean and standard error (`ddof = 1`); the error is 0 for fewer
/// than two samples.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn timed<T>(enabled: bool, f: impl FnOnce() -> T) -> (T, f64) {
    if enabled {
        let started = Instant::now();
        let out = f();
        (out, started.elapsed().as_secs_f64())
    } else {
        (f(), 0.0)
    }
}

/// Algorithm ids baked into RNG stream tags; stable across versions.
const ALGO_RANDOM: u32 = 0;
const ALGO_DQN: u32 = 1;
const ALGO_HDRL: u32 = 2;
/// Slot for the optimality-check experiment, outside any `l_list` index.
const ORACLE_SLOT: u32 = 0xFF;

/// Packs (sweep slot, algorithm, instance) into a 48-bit stream tag:
/// 8 bits of algorithm, 8 of slot, 32 of instance.
fn train_tag(l_slot: u32, algo: u32, instance: u32) -> u64 {
    debug_assert!(l_slot <= 0xFF && algo <= 0xFF);
    cell_index((algo << 8) | l_slot, instance)
}

fn instance_channel(
    cfg: &LinearConfig,
    streams: &Streams,
    domain: Domain,
    slot: u32,
    idx: u32,
) -> Result<ChannelRealization, ExperimentError> {
    let mut rng = streams.rng(domain, cell_index(slot, idx));
    Ok(generate(cfg, &mut rng)?)
}

fn instance_evaluator(
    cfg: &LinearConfig,
    ch: &ChannelRealization,
    policy: PrecoderPolicy,
    scheme: Scheme,
    streams: &Streams,
    tag: u64,
) -> Result<SecureSumEvaluator, ExperimentError> {
    let zeros = PhaseConfig::zeros(cfg.l, cfg.mu)?;
    let mut rng = streams.rng(Domain::Eval, tag);
    let pre = crate::rates::make_precoders(ch, &zeros, policy, &mut rng);
    Ok(SecureSumEvaluator::new(cfg, ch, &pre, scheme)?)
}

/// Learned-optimizer result on one pinned channel.
pub struct LearnedOutcome {
    pub train: TrainOutcome,
    /// Best secure sum rate the run evaluated, over both the training
    /// episodes and the final greedy rollout.
    pub best: f64,
    pub best_phases: PhaseConfig,
    /// Mean per-step reward of each training episode.
    pub episode_means: Vec<f64>,
    pub episode_seconds: Vec<f64>,
}

fn learn_on_channel(
    cfg: &LinearConfig,
    ch: &ChannelRealization,
    space: ActionSpace,
    spec: &TrainSpec,
    policy: PrecoderPolicy,
    streams: &Streams,
    tag: u64,
) -> Result<LearnedOutcome, ExperimentError> {
    let opts = EnvOptions {
        mode: ChannelMode::Fixed,
        horizon: None,
        policy,
        channel: Some(ch.clone()),
    };
    let out = train(cfg, opts.clone(), space.clone(), spec, streams, tag)?;
    let mut env = Env::new(cfg.clone(), space, opts, streams.rng(Domain::EnvChannel, tag))?;
    let eval = evaluate(&out.net, &mut env)?;
    let horizon = env.horizon() as f64;
    let episode_means: Vec<f64> = out.episode_rewards.iter().map(|r| r / horizon).collect();
    let episode_seconds = out.episode_seconds.clone();
    let (best, best_phases) = if out.best_reward > eval.best_reward {
        (out.best_reward, out.best_phases.clone())
    } else {
        (eval.best_reward, eval.best_phases)
    };
    Ok(LearnedOutcome {
        train: out,
        best,
        best_phases,
        episode_means,
        episode_seconds,
    })
}

/// The full HDRL pipeline on one channel: greedy restarts, reduction,
/// training in the reduced space, greedy rollout.
pub struct HdrlOutcome {
    pub build: ReducedBuild,
    pub learned: LearnedOutcome,
    /// Candidate-set product `prod n_l`.
    pub cardinality: u128,
    /// Whether every training action stayed inside the reduced space.
    pub actions_within: bool,
    /// Objective evaluations spent building the reduced space.
    pub build_evals: u64,
}

fn hdrl_on_channel(
    cfg: &LinearConfig,
    ch: &ChannelRealization,
    params: &ExperimentParams,
    streams: &Streams,
    l_slot: u32,
    idx: u32,
) -> Result<HdrlOutcome, ExperimentError> {
    let tag = train_tag(l_slot, ALGO_HDRL, idx);
    let mut brng = streams.rng(Domain::Baseline, tag);
    let build = build_reduced_for_channel(
        cfg,
        ch,
        params.policy,
        params.reduced_runs,
        params.n_l,
        params.greedy_sweeps,
        &mut brng,
    )?;
    let build_evals = build.runs.iter().map(|r| r.evals).sum();
    let cardinality = build.space.cardinality();
    let space = ActionSpace::Reduced(build.space.clone());
    let mut learned =
        learn_on_channel(cfg, ch, space.clone(), &params.train, params.policy, streams, tag)?;
    for run in &build.runs {
        if run.value > learned.best {
            learned.best = run.value;
            learned.best_phases = run.phases.clone();
        }
    }
    let actions_within = learned.train.actions_taken.iter().all(|a| {
        space
            .phase_index(*a)
            .map(|idx| build.space.candidates[a.element].contains(&idx))
            .unwrap_or(false)
    });
    Ok(HdrlOutcome {
        build,
        learned,
        cardinality,
        actions_within,
        build_evals,
    })
}

fn dqn_on_channel(
    cfg: &LinearConfig,
    ch: &ChannelRealization,
    params: &ExperimentParams,
    streams: &Streams,
    l_slot: u32,
    idx: u32,
) -> Result<LearnedOutcome, ExperimentError> {
    let tag = train_tag(l_slot, ALGO_DQN, idx);
    let space = ActionSpace::Full {
        l: cfg.l,
        mu: cfg.mu,
    };
    learn_on_channel(cfg, ch, space, &params.train, params.policy, streams, tag)
}

fn spec_for(params: &ExperimentParams) -> TrainSpec {
    TrainSpec {
        wall_clock: params.wall_clock,
        ..params.train.clone()
    }
}

/// Everything measured on one sweep instance (one channel at one element
/// count).
#[derive(Debug, Clone)]
pub struct SweepInstance {
    pub l: usize,
    pub channel: usize,
    pub random: f64,
    pub greedy: f64,
    pub dqn: f64,
    pub hdrl: f64,
    /// Present when full enumeration fits under the cap.
    pub exhaustive: Option<f64>,
    pub random_seconds: f64,
    pub greedy_seconds: f64,
    pub dqn_seconds: f64,
    pub hdrl_seconds: f64,
    pub exhaustive_seconds: f64,
    pub random_evals: u64,
    pub greedy_evals: u64,
    pub build_evals: u64,
    pub exhaustive_evals: u64,
    pub dqn_q_evals: u64,
    pub hdrl_q_evals: u64,
    /// `prod n_l` for the instance's reduced space.
    pub hdrl_cardinality: u128,
    /// `2^(mu L)`, the unreduced configuration count.
    pub full_cardinality: u128,
    /// Whether every HDRL training action stayed inside the reduced space.
    pub hdrl_actions_within: bool,
}

/// Runs the per-instance pipeline over `count` channels at one element
/// count. `l_slot` keys the RNG streams and should be the position of `l`
/// in the sweep.
pub fn sweep_instances(
    base: &SystemConfig,
    params: &ExperimentParams,
    l: usize,
    l_slot: u32,
    count: usize,
) -> Result<Vec<SweepInstance>, ExperimentError> {
    let cfg = linear_for(base, l)?;
    let spec = spec_for(params);
    let params = ExperimentParams {
        train: spec,
        ..params.clone()
    };
    (0..count)
        .into_par_iter()
        .map(|i| sweep_one(base, &params, &cfg, l, l_slot, i))
        .collect()
}

fn sweep_one(
    base: &SystemConfig,
    params: &ExperimentParams,
    cfg: &LinearConfig,
    l: usize,
    l_slot: u32,
    i: usize,
) -> Result<SweepInstance, ExperimentError> {
    let streams = Streams::new(base.rng_seed);
    let idx = i as u32;
    let ch = instance_channel(cfg, &streams, Domain::Channel, l_slot, idx)?;
    let ev = instance_evaluator(
        cfg,
        &ch,
        params.policy,
        Scheme::Rsma,
        &streams,
        train_tag(l_slot, ALGO_RANDOM, idx),
    )?;
    let objective = |idx: &[u16]| ev.secure_sum_indices(idx);

    let mut rrng = streams.rng(Domain::Baseline, train_tag(l_slot, ALGO_RANDOM, idx));
    let (random_out, random_seconds) = timed(params.wall_clock, || {
        random_phase(&objective, cfg.l, cfg.mu, params.random_trials, &mut rrng)
    });
    let random_out = random_out?;

    let (hdrl_out, hdrl_seconds) = timed(params.wall_clock, || {
        hdrl_on_channel(cfg, &ch, params, &streams, l_slot, idx)
    });
    let hdrl_out = hdrl_out?;
    // Greedy is run 0 of the reduction, so its wall cost is folded into the
    // HDRL time; attribute it a share proportional to its evaluations.
    let greedy_run = &hdrl_out.build.runs[0];
    let greedy_seconds = if params.wall_clock && hdrl_out.build_evals > 0 {
        hdrl_seconds * greedy_run.evals as f64 / hdrl_out.build_evals as f64
    } else {
        0.0
    };

    let (dqn_out, dqn_seconds) = timed(params.wall_clock, || {
        dqn_on_channel(cfg, &ch, params, &streams, l_slot, idx)
    });
    let dqn_out = dqn_out?;

    let fits = full_enumeration_fits(cfg.l, cfg.mu, params.exhaustive_cap);
    let (exhaustive_out, exhaustive_seconds) = if fits {
        let (out, secs) = timed(params.wall_clock, || {
            exhaustive(&objective, cfg.l, cfg.mu, params.exhaustive_cap)
        });
        (Some(out?), secs)
    } else {
        (None, 0.0)
    };

    Ok(SweepInstance {
        l,
        channel: i,
        random: random_out.value,
        greedy: greedy_run.value,
        dqn: dqn_out.best,
        hdrl: hdrl_out.learned.best,
        exhaustive: exhaustive_out.as_ref().map(|o| o.value),
        random_seconds,
        greedy_seconds,
        dqn_seconds,
        hdrl_seconds,
        exhaustive_seconds,
        random_evals: random_out.evals,
        greedy_evals: greedy_run.evals,
        build_evals: hdrl_out.build_evals,
        exhaustive_evals: exhaustive_out.as_ref().map_or(0, |o| o.evals),
        dqn_q_evals: dqn_out.train.q_evals,
        hdrl_q_evals: hdrl_out.learned.train.q_evals,
        hdrl_cardinality: hdrl_out.cardinality,
        full_cardinality: 1u128 << (cfg.mu as u32 * cfg.l as u32),
        hdrl_actions_within: hdrl_out.actions_within,
    })
}

/// One aggregated line of `sweep_L.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub l: usize,
    pub algo: String,
    pub mean_rate: f64,
    pub stderr: f64,
    pub seconds: f64,
}

/// Aggregates sweep instances into per-algorithm rows, in a fixed
/// algorithm order. The exhaustive row appears only where enumeration ran.
pub fn sweep_rows(instances: &[SweepInstance]) -> Vec<SweepRow> {
    let mut rows = Vec::new();
    let mut ls: Vec<usize> = instances.iter().map(|i| i.l).collect();
    ls.dedup();
    for l in ls {
        let cell: Vec<&SweepInstance> = instances.iter().filter(|i| i.l == l).collect();
        let columns: [(&str, Box<dyn Fn(&SweepInstance) -> Option<f64>>, Box<dyn Fn(&SweepInstance) -> f64>); 5] = [
            ("random", Box::new(|i| Some(i.random)), Box::new(|i| i.random_seconds)),
            ("greedy", Box::new(|i| Some(i.greedy)), Box::new(|i| i.greedy_seconds)),
            ("dqn", Box::new(|i| Some(i.dqn)), Box::new(|i| i.dqn_seconds)),
            ("hdrl", Box::new(|i| Some(i.hdrl)), Box::new(|i| i.hdrl_seconds)),
            ("exhaustive", Box::new(|i| i.exhaustive), Box::new(|i| i.exhaustive_seconds)),
        ];
        for (name, value, seconds) in &columns {
            let values: Vec<f64> = cell.iter().filter_map(|i| value(i)).collect();
            if values.len() != cell.len() {
                continue;
            }
            let (mean, se) = mean_stderr(&values);
            let secs: f64 =
                cell.iter().map(|i| seconds(i)).sum::<f64>() / cell.len() as f64;
            rows.push(SweepRow {
                l,
                algo: (*name).to_string(),
                mean_rate: mean,
                stderr: se,
                seconds: secs,
            });
        }
    }
    rows
}

/// Runs the element-count sweep over `params.l_list`.
pub fn run_sweep(
    base: &SystemConfig,
    params: &ExperimentParams,
) -> Result<(Vec<SweepInstance>, Vec<SweepRow>), ExperimentError> {
    params.validate()?;
    let mut instances = Vec::new();
    for (slot, &l) in params.l_list.iter().enumerate() {
        instances.extend(sweep_instances(base, params, l, slot as u32, params.channels)?);
    }
    let rows = sweep_rows(&instances);
    Ok((instances, rows))
}

/// One line of `convergence.csv`: the pooled mean per-step reward of one
/// training episode.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub l: usize,
    pub algo: String,
    pub episode: usize,
    pub reward: f64,
    pub seconds: f64,
}

/// Trains both learners on `params.instances` pinned channels per element
/// count and pools their per-episode reward curves.
pub fn convergence_rows(
    base: &SystemConfig,
    params: &ExperimentParams,
) -> Result<Vec<ConvergenceRow>, ExperimentError> {
    params.validate()?;
    let spec = spec_for(params);
    let params = ExperimentParams {
        train: spec,
        ..params.clone()
    };
    let mut rows = Vec::new();
    for (slot, &l) in params.l_list.iter().enumerate() {
        let cfg = linear_for(base, l)?;
        let l_slot = slot as u32;
        let outcomes: Vec<(LearnedOutcome, HdrlOutcome)> = (0..params.instances)
            .into_par_iter()
            .map(|i| -> Result<_, ExperimentError> {
                let streams = Streams::new(base.rng_seed);
                let idx = i as u32;
                let ch = instance_channel(&cfg, &streams, Domain::Channel, l_slot, idx)?;
                let dqn = dqn_on_channel(&cfg, &ch, &params, &streams, l_slot, idx)?;
                let hdrl = hdrl_on_channel(&cfg, &ch, &params, &streams, l_slot, idx)?;
                Ok((dqn, hdrl))
            })
            .collect::<Result<_, _>>()?;
        let episodes = params.train.episodes;
        for (algo, curves, seconds) in [
            (
                "dqn",
                outcomes.iter().map(|(d, _)| &d.episode_means).collect::<Vec<_>>(),
                outcomes.iter().map(|(d, _)| &d.episode_seconds).collect::<Vec<_>>(),
            ),
            (
                "hdrl",
                outcomes.iter().map(|(_, h)| &h.learned.episode_means).collect(),
                outcomes.iter().map(|(_, h)| &h.learned.episode_seconds).collect(),
            ),
        ] {
            for e in 0..episodes {
                let vals: Vec<f64> = curves.iter().map(|c| c[e]).collect();
                let secs: Vec<f64> = seconds.iter().map(|s| s[e]).collect();
                rows.push(ConvergenceRow {
                    l,
                    algo: algo.to_string(),
                    episode: e,
                    reward: vals.iter().sum::<f64>() / vals.len() as f64,
                    seconds: secs.iter().sum::<f64>() / secs.len() as f64,
                });
            }
        }
    }
    Ok(rows)
}

/// One line of `timing.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingRow {
    pub l: usize,
    pub algo: String,
    pub mean_rate: f64,
    pub seconds: f64,
    /// Mean secure-sum-rate evaluations per instance (search work).
    pub evals: f64,
    /// Mean scalar Q-value evaluations per instance (network work).
    pub q_evals: f64,
}

/// Cost comparison over `params.instances` channels per element count.
pub fn timing_rows(
    base: &SystemConfig,
    params: &ExperimentParams,
) -> Result<Vec<TimingRow>, ExperimentError> {
    params.validate()?;
    let mut rows = Vec::new();
    let horizon = |l: usize| params.train.horizon.unwrap_or(2 * l) as f64;
    for (slot, &l) in params.l_list.iter().enumerate() {
        let instances = sweep_instances(base, params, l, slot as u32, params.instances)?;
        let n = instances.len() as f64;
        let mean =
            |f: &dyn Fn(&SweepInstance) -> f64| instances.iter().map(|i| f(i)).sum::<f64>() / n;
        let episodes = params.train.episodes as f64;
        let env_evals = episodes * horizon(l) + horizon(l);
        let cells: [(&str, f64, f64, f64, f64); 5] = [
            (
                "random",
                mean(&|i| i.random),
                mean(&|i| i.random_seconds),
                mean(&|i| i.random_evals as f64),
                0.0,
            ),
            (
                "greedy",
                mean(&|i| i.greedy),
                mean(&|i| i.greedy_seconds),
                mean(&|i| i.greedy_evals as f64),
                0.0,
            ),
            (
                "dqn",
                mean(&|i| i.dqn),
                mean(&|i| i.dqn_seconds),
                env_evals,
                mean(&|i| i.dqn_q_evals as f64),
            ),
            (
                "hdrl",
                mean(&|i| i.hdrl),
                mean(&|i| i.hdrl_seconds),
                mean(&|i| i.build_evals as f64) + env_evals,
                mean(&|i| i.hdrl_q_evals as f64),
            ),
            (
                "exhaustive",
                instances
                    .iter()
                    .filter_map(|i| i.exhaustive)
                    .sum::<f64>()
                    / instances.iter().filter(|i| i.exhaustive.is_some()).count().max(1) as f64,
                mean(&|i| i.exhaustive_seconds),
                mean(&|i| i.exhaustive_evals as f64),
                0.0,
            ),
        ];
        let ran_exhaustive = instances.iter().all(|i| i.exhaustive.is_some());
        for (algo, rate, secs, evals, q) in cells {
            if algo == "exhaustive" && !ran_exhaustive {
                continue;
            }
            rows.push(TimingRow {
                l,
                algo: algo.to_string(),
                mean_rate: rate,
                seconds: secs,
                evals,
                q_evals: q,
            });
        }
    }
    Ok(rows)
}

/// Secure sum rates of both schemes on one channel at one transmit power,
/// each under its own greedy-optimized phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerInstance {
    pub l: usize,
    pub p_dbm: f64,
    pub channel: usize,
    pub rsma: f64,
    pub noma: f64,
    pub seconds: f64,
}

/// Greedy-optimizes phases per scheme on every (power, channel) cell.
pub fn power_instances(
    base: &SystemConfig,
    params: &ExperimentParams,
) -> Result<Vec<PowerInstance>, ExperimentError> {
    params.validate()?;
    let mut out = Vec::new();
    for (slot, &l) in params.l_list.iter().enumerate() {
        let cfg = linear_for(base, l)?;
        let l_slot = slot as u32;
        for &p_dbm in &params.power_grid_dbm {
            let mut cfg_p = cfg.clone();
            cfg_p.p_t_w = dbm_to_watts(p_dbm);
            let cell: Vec<PowerInstance> = (0..params.channels)
                .into_par_iter()
                .map(|i| -> Result<PowerInstance, ExperimentError> {
                    let streams = Streams::new(base.rng_seed);
                    let idx = i as u32;
                    let ch = instance_channel(&cfg_p, &streams, Domain::Channel, l_slot, idx)?;
                    let start = PhaseConfig::zeros(cfg_p.l, cfg_p.mu)?;
                    let (pair, seconds) = timed(params.wall_clock, || {
                        let mut values = [0.0; 2];
                        for (j, scheme) in [Scheme::Rsma, Scheme::Noma].iter().enumerate() {
                            let ev = instance_evaluator(
                                &cfg_p,
                                &ch,
                                params.policy,
                                *scheme,
                                &streams,
                                train_tag(l_slot, ALGO_RANDOM, idx),
                            )?;
                            let run = crate::baselines::greedy(
                                |x| ev.secure_sum_indices(x),
                                &start,
                                params.greedy_sweeps,
                            );
                            values[j] = run.value;
                        }
                        Ok::<[f64; 2], ExperimentError>(values)
                    });
                    let [rsma, noma] = pair?;
                    Ok(PowerInstance {
                        l,
                        p_dbm,
                        channel: i,
                        rsma,
                        noma,
                        seconds,
                    })
                })
                .collect::<Result<_, _>>()?;
            out.extend(cell);
        }
    }
    Ok(out)
}

/// One line of `power_sweep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerRow {
    pub l: usize,
    pub p_dbm: f64,
    pub scheme: Scheme,
    pub mean_rate: f64,
    pub stderr: f64,
    pub seconds: f64,
}

/// Aggregates power instances per (L, power, scheme).
pub fn power_rows(instances: &[PowerInstance]) -> Vec<PowerRow> {
    let mut rows = Vec::new();
    let mut cells: Vec<(usize, f64)> = instances.iter().map(|i| (i.l, i.p_dbm)).collect();
    cells.dedup();
    for (l, p_dbm) in cells {
        let cell: Vec<&PowerInstance> = instances
            .iter()
            .filter(|i| i.l == l && i.p_dbm == p_dbm)
            .collect();
        let secs = cell.iter().map(|i| i.seconds).sum::<f64>() / cell.len() as f64;
        for (scheme, values) in [
            (Scheme::Rsma, cell.iter().map(|i| i.rsma).collect::<Vec<_>>()),
            (Scheme::Noma, cell.iter().map(|i| i.noma).collect()),
        ] {
            let (mean, se) = mean_stderr(&values);
            rows.push(PowerRow {
                l,
                p_dbm,
                scheme,
                mean_rate: mean,
                stderr: se,
                seconds: secs,
            });
        }
    }
    rows
}

/// One line of `oracle.csv`: a small instance where full enumeration is
/// exact, with each method's fraction of the optimum.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub instance: usize,
    pub exhaustive: f64,
    pub greedy: f64,
    pub greedy_ratio: f64,
    pub hdrl: f64,
    pub hdrl_ratio: f64,
}

/// Small-instance optimality check at `params.oracle_l` elements:
/// enumerates the true optimum and reports greedy's and HDRL's fraction of
/// it per instance.
pub fn oracle_rows(
    base: &SystemConfig,
    params: &ExperimentParams,
) -> Result<Vec<OracleRow>, ExperimentError> {
    params.validate()?;
    let cfg = linear_for(base, params.oracle_l)?;
    if !full_enumeration_fits(cfg.l, cfg.mu, params.exhaustive_cap) {
        return Err(ExperimentError::Params(format!(
            "oracle_L = {} needs 2^{} enumerations, above the cap {}",
            cfg.l,
            cfg.mu as usize * cfg.l,
            params.exhaustive_cap
        )));
    }
    let spec = spec_for(params);
    let params = ExperimentParams {
        train: spec,
        ..params.clone()
    };
    (0..params.oracle_instances)
        .into_par_iter()
        .map(|i| -> Result<OracleRow, ExperimentError> {
            let streams = Streams::new(base.rng_seed);
            let idx = i as u32;
            let ch = instance_channel(&cfg, &streams, Domain::Oracle, ORACLE_SLOT, idx)?;
            let ev = instance_evaluator(
                &cfg,
                &ch,
                params.policy,
                Scheme::Rsma,
                &streams,
                train_tag(ORACLE_SLOT, ALGO_RANDOM, idx),
            )?;
            let best = exhaustive(
                |x| ev.secure_sum_indices(x),
                cfg.l,
                cfg.mu,
                params.exhaustive_cap,
            )?;
            let hdrl = hdrl_on_channel(&cfg, &ch, &params, &streams, ORACLE_SLOT, idx)?;
            let greedy_value = hdrl.build.runs[0].value;
            let denom = best.value.max(f64::MIN_POSITIVE);
            Ok(OracleRow {
                instance: i,
                exhaustive: best.value,
                greedy: greedy_value,
                greedy_ratio: greedy_value / denom,
                hdrl: hdrl.learned.best,
                hdrl_ratio: hdrl.learned.best / denom,
            })
        })
        .collect()
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_lines(path: &Path, header: &str, lines: Vec<String>) -> io::Result<()> {
    let mut out = String::with_capacity(lines.len() * 64 + header.len() + 1);
    out.push_str(header);
    out.push('\n');
    for line in lines {
        out.push_str(&line);
        out.push('\n');
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())
}

pub fn write_convergence_csv(path: &Path, rows: &[ConvergenceRow]) -> io::Result<()> {
    write_lines(
        path,
        "L,algo,episode,reward,seconds",
        rows.iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{}",
                    r.l,
                    r.algo,
                    r.episode,
                    fmt(r.reward),
                    fmt(r.seconds)
                )
            })
            .collect(),
    )
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> io::Result<()> {
    write_lines(
        path,
        "L,algo,mean_rate,stderr,seconds",
        rows.iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{}",
                    r.l,
                    r.algo,
                    fmt(r.mean_rate),
                    fmt(r.stderr),
                    fmt(r.seconds)
                )
            })
            .collect(),
    )
}

pub fn write_timing_csv(path: &Path, rows: &[TimingRow]) -> io::Result<()> {
    write_lines(
        path,
        "L,algo,mean_rate,seconds,evals,q_evals",
        rows.iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    r.l,
                    r.algo,
                    fmt(r.mean_rate),
                    fmt(r.seconds),
                    fmt(r.evals),
                    fmt(r.q_evals)
                )
            })
            .collect(),
    )
}

pub fn write_power_csv(path: &Path, rows: &[PowerRow]) -> io::Result<()> {
    write_lines(
        path,
        "L,P_t_dBm,scheme,mean_rate,stderr,seconds",
        rows.iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    r.l,
                    fmt(r.p_dbm),
                    r.scheme,
                    fmt(r.mean_rate),
                    fmt(r.stderr),
                    fmt(r.seconds)
                )
            })
            .collect(),
    )
}

pub fn write_oracle_csv(path: &Path, rows: &[OracleRow]) -> io::Result<()> {
    write_lines(
        path,
        "instance,exhaustive,greedy,greedy_ratio,hdrl,hdrl_ratio",
        rows.iter()
            .map(|r| {
                format!(
                    "{},{},{},{},{},{}",
                    r.instance,
                    fmt(r.exhaustive),
                    fmt(r.greedy),
                    fmt(r.greedy_ratio),
                    fmt(r.hdrl),
                    fmt(r.hdrl_ratio)
                )
            })
            .collect(),
    )
}
