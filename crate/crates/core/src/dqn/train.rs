//! Temporal-difference training: squared TD loss, Adam, the epsilon-greedy
//! loop, and greedy-rollout evaluation.
//!
//! The loop follows the classic recipe: act epsilon-greedily, store
//! transitions in replay, and after every environment step (once the buffer
//! holds a batch) sample uniformly with replacement and take one Adam step
//! on the squared TD error against a periodically synchronized target
//! network. Epsilon decays multiplicatively per episode down to a floor;
//! terminal transitions drop the bootstrap term.
//!
//! Determinism: network initialization, the behaviour policy, and the
//! environment's channel draws each use their own derived stream, so two
//! runs with the same seed and tag produce bit-identical networks and
//! reward curves regardless of what else the process computed.

use std::time::Instant;

use rand::Rng;
use thiserror::Error;

use crate::config::LinearConfig;
use crate::env::{Action, ActionSpace, Env, EnvError, EnvOptions};
use crate::ris::PhaseConfig;
use crate::stream::{Domain, Streams};

use super::mlp::{Gradients, MlpError, QNet};
use super::replay::{ReplayMemory, Transition};

#[derive(Debug, Error)]
pub enum DqnError {
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("invalid training spec: {0}")]
    Spec(String),
    #[error("non-finite value encountered during optimization")]
    NonFinite,
}

/// Training hyperparameters. The defaults are the reference setting used by
/// the experiment harness.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainSpec {
    /// Hidden layer widths.
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    /// Discount factor gamma.
    pub discount: f64,
    /// Mini-batch size; updates start once replay holds this many.
    pub batch: usize,
    pub replay_capacity: usize,
    pub episodes: usize,
    /// Steps per episode; `None` means twice the element count.
    pub horizon: Option<usize>,
    pub epsilon_start: f64,
    /// Multiplicative per-episode decay.
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    /// Target network refresh period, in episodes.
    pub target_sync: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_epsilon: f64,
    /// Record real per-episode seconds instead of zeros.
    pub wall_clock: bool,
}

impl Default for TrainSpec {
    fn default() -> Self {
        Self {
            hidden: vec![30, 50, 80],
            learning_rate: 0.008,
            discount: 0.9,
            batch: 10,
            replay_capacity: 1000,
            episodes: 100,
            horizon: None,
            epsilon_start: 1.0,
            epsilon_decay: 0.95,
            epsilon_floor: 0.05,
            target_sync: 10,
            beta1: 0.9,
            beta2: 0.999,
            adam_epsilon: 1e-8,
            wall_clock: false,
        }
    }
}

impl TrainSpec {
    pub fn validate(&self) -> Result<(), DqnError> {
        let bad = |msg: String| Err(DqnError::Spec(msg));
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if !(0.0..=1.0).contains(&self.discount) {
            return bad(format!("discount must lie in [0, 1], got {}", self.discount));
        }
        if self.batch == 0 {
            return bad("batch must be at least 1".into());
        }
        if self.replay_capacity < self.batch {
            return bad(format!(
                "replay_capacity {} cannot hold a batch of {}",
                self.replay_capacity, self.batch
            ));
        }
        if self.episodes == 0 {
            return bad("episodes must be at least 1".into());
        }
        if self.horizon == Some(0) {
            return bad("horizon must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.epsilon_start)
            || !(0.0..=1.0).contains(&self.epsilon_floor)
            || self.epsilon_floor > self.epsilon_start
        {
            return bad(format!(
                "epsilon must satisfy 0 <= floor <= start <= 1, got start {} floor {}",
                self.epsilon_start, self.epsilon_floor
            ));
        }
        if !(self.epsilon_decay > 0.0 && self.epsilon_decay <= 1.0) {
            return bad(format!("epsilon_decay must lie in (0, 1], got {}", self.epsilon_decay));
        }
        if self.target_sync == 0 {
            return bad("target_sync must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad(format!(
                "Adam betas must lie in [0, 1), got {} and {}",
                self.beta1, self.beta2
            ));
        }
        if !(self.adam_epsilon > 0.0) {
            return bad(format!("adam_epsilon must be positive, got {}", self.adam_epsilon));
        }
        Ok(())
    }
}

/// Squared TD error over a batch, averaged, with its parameter gradient.
///
/// For each transition the regression target is
/// `y = r + gamma * max_a' Q_target(s', a')`, or plain `r` when the
/// transition is terminal; the target network is treated as a constant.
/// The loss is `mean((Q(s, a) - y)^2)`.
pub fn td_loss(
    net: &QNet,
    target: &QNet,
    batch: &[&Transition],
    discount: f64,
) -> Result<(f64, Gradients), DqnError> {
    if batch.is_empty() {
        return Err(DqnError::Spec("td_loss needs a non-empty batch".into()));
    }
    let n = batch.len() as f64;
    let mut loss = 0.0;
    let mut grads = Gradients::zeros_like(net);
    for t in batch {
        let trace = net.forward_cached(&t.state)?;
        let q = trace.output()[t.action];
        let y = if t.terminal {
            t.reward
        } else {
            let next = target.forward(&t.next_state)?;
            t.reward + discount * max_q(&next)
        };
        let err = q - y;
        loss += err * err / n;
        let mut dout = vec![0.0; net.output_dim()];
        dout[t.action] = 2.0 * err / n;
        net.backward(&trace, &dout, &mut grads);
    }
    Ok((loss, grads))
}

fn max_q(q: &[f64]) -> f64 {
    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Lowest index among the maxima.
fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    best
}

/// First and second moment estimates for Adam.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(net: &QNet) -> Self {
        let n = net.parameter_count();
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update in place. Fails closed on non-finite
/// gradients or parameters instead of poisoning the network.
pub fn adam_step(
    net: &mut QNet,
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) -> Result<(), DqnError> {
    let g = grads.flatten();
    if g.len() != state.m.len() {
        return Err(DqnError::Spec(format!(
            "gradient has {} entries but the optimizer state has {}",
            g.len(),
            state.m.len()
        )));
    }
    state.t += 1;
    let c1 = 1.0 - beta1.powi(state.t as i32);
    let c2 = 1.0 - beta2.powi(state.t as i32);
    let mut params = net.flat_parameters();
    for i in 0..g.len() {
        if !g[i].is_finite() {
            return Err(DqnError::NonFinite);
        }
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g[i] * g[i];
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        params[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        if !params[i].is_finite() {
            return Err(DqnError::NonFinite);
        }
    }
    net.set_flat_parameters(&params)?;
    Ok(())
}

/// Everything a training run produces.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: QNet,
    /// Sum of step rewards per episode.
    pub episode_rewards: Vec<f64>,
    /// Wall seconds per episode; zeros unless `TrainSpec::wall_clock` is
    /// set.
    pub episode_seconds: Vec<f64>,
    /// Scalar Q-value evaluations spent (forward passes times output
    /// width), the deterministic cost counter.
    pub q_evals: u64,
    /// Every action taken, across all episodes in order.
    pub actions_taken: Vec<Action>,
    /// Width of the action space trained over.
    pub action_count: usize,
    /// Highest step reward observed during training and the configuration
    /// that produced it. Under a fixed channel this is the best
    /// configuration the run ever evaluated.
    pub best_reward: f64,
    pub best_phases: PhaseConfig,
}

/// Runs epsilon-greedy deep Q-learning over the given action space.
///
/// `tag` selects the stream index within each RNG domain, so distinct
/// instances of an experiment get independent randomness while staying
/// reproducible. A `spec.horizon` overrides the one in `opts`.
pub fn train(
    cfg: &LinearConfig,
    opts: EnvOptions,
    space: ActionSpace,
    spec: &TrainSpec,
    streams: &Streams,
    tag: u64,
) -> Result<TrainOutcome, DqnError> {
    spec.validate()?;
    let mut opts = opts;
    if spec.horizon.is_some() {
        opts.horizon = spec.horizon;
    }
    let mut env = Env::new(cfg.clone(), space, opts, streams.rng(Domain::EnvChannel, tag))?;
    let action_count = env.space().len();
    if action_count == 0 {
        return Err(DqnError::Spec("action space is empty".into()));
    }
    let mut sizes = vec![env.feature_len()];
    sizes.extend_from_slice(&spec.hidden);
    sizes.push(action_count);
    let mut init_rng = streams.rng(Domain::NetInit, tag);
    let mut net = QNet::new(&sizes, &mut init_rng)?;
    net.zero_output_layer();
    let mut target = net.clone();
    let mut adam = AdamState::new(&net);
    let mut replay = ReplayMemory::new(spec.replay_capacity);
    let mut policy_rng = streams.rng(Domain::Policy, tag);

    let horizon = env.horizon();
    let mut epsilon = spec.epsilon_start;
    let mut episode_rewards = Vec::with_capacity(spec.episodes);
    let mut episode_seconds = Vec::with_capacity(spec.episodes);
    let mut actions_taken = Vec::with_capacity(spec.episodes * horizon);
    let mut q_evals = 0u64;
    let mut best_reward = f64::NEG_INFINITY;
    let mut best_phases: Option<PhaseConfig> = None;

    for episode in 0..spec.episodes {
        let started = Instant::now();
        let mut obs = env.reset()?;
        let mut total = 0.0;
        for _ in 0..horizon {
            let u: f64 = policy_rng.gen();
            let action_id = if u < epsilon {
                policy_rng.gen_range(0..action_count)
            } else {
                q_evals += action_count as u64;
                argmax(&net.forward(&obs)?)
            };
            let out = env.step_id(action_id)?;
            actions_taken.push(env.space().decode(action_id).expect("id in range"));
            if out.reward > best_reward {
                best_reward = out.reward;
                best_phases = Some(env.state().expect("stepped environment").phases.clone());
            }
            replay.push(Transition {
                state: obs,
                action: action_id,
                reward: out.reward,
                next_state: out.features.clone(),
                terminal: out.terminal,
            });
            total += out.reward;
            obs = out.features;
            if replay.len() >= spec.batch {
                let batch = replay.sample(spec.batch, &mut policy_rng);
                let (_, grads) = td_loss(&net, &target, &batch, spec.discount)?;
                adam_step(
                    &mut net,
                    &grads,
                    &mut adam,
                    spec.learning_rate,
                    spec.beta1,
                    spec.beta2,
                    spec.adam_epsilon,
                )?;
                q_evals += 2 * spec.batch as u64 * action_count as u64;
            }
        }
        episode_rewards.push(total);
        episode_seconds.push(if spec.wall_clock {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        });
        epsilon = (epsilon * spec.epsilon_decay).max(spec.epsilon_floor);
        if (episode + 1) % spec.target_sync == 0 {
            target = net.clone();
        }
    }

    Ok(TrainOutcome {
        net,
        episode_rewards,
        episode_seconds,
        q_evals,
        actions_taken,
        action_count,
        best_reward,
        best_phases: best_phases.expect("episodes and horizon are at least 1"),
    })
}

/// Result of one greedy rollout.
#[derive(Debug, Clone)]
pub struct EvalOutcome {
    /// Reward after every step.
    pub rewards: Vec<f64>,
    /// Best reward seen along the rollout (the per-channel figure of
    /// merit) and the configuration that achieved it.
    pub best_reward: f64,
    pub best_phases: PhaseConfig,
    pub final_reward: f64,
}

/// Rolls the policy out greedily (epsilon = 0, lowest-id tie-break) for one
/// episode and reports the best configuration it visited.
pub fn evaluate(net: &QNet, env: &mut Env) -> Result<EvalOutcome, DqnError> {
    let mut obs = env.reset()?;
    let horizon = env.horizon();
    let mut rewards = Vec::with_capacity(horizon);
    let mut best_reward = f64::NEG_INFINITY;
    let mut best_phases = env
        .state()
        .expect("environment was just reset")
        .phases
        .clone();
    for _ in 0..horizon {
        let action_id = argmax(&net.forward(&obs)?);
        let out = env.step_id(action_id)?;
        rewards.push(out.reward);
        if out.reward > best_reward {
            best_reward = out.reward;
            best_phases = env.state().expect("stepped environment").phases.clone();
        }
        obs = out.features;
    }
    let final_reward = *rewards.last().expect("horizon is at least 1");
    Ok(EvalOutcome {
        rewards,
        best_reward,
        best_phases,
        final_reward,
    })
}
