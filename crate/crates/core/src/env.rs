//! Episodic environment for learning discrete RIS phase configurations.
//!
//! An episode starts from the all-zero phase configuration and runs for a
//! fixed horizon (default `2L` steps). Each action writes one codebook index
//! into one element; the reward is the RSMA secure sum rate of the resulting
//! configuration. The observation concatenates the normalized phase indices
//! with the real and imaginary parts of every receiver's cascaded channel,
//! so an agent sees both where the surface currently points and the channel
//! it must point through.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::channel::{generate, ChannelError, ChannelRealization};
use crate::config::LinearConfig;
use crate::rates::{
    make_precoders, rsma_report, PowerAllocation, PrecoderPolicy, Precoders, RatesError, Scheme,
    SecureSumEvaluator,
};
use crate::ris::{PhaseConfig, ReducedActionSpace};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("step called before reset")]
    NotReset,
    #[error("episode horizon of {0} steps already exhausted; call reset")]
    EpisodeExhausted(usize),
    #[error("action id {id} out of range for a space of {len} actions")]
    InvalidAction { id: usize, len: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Rates(#[from] RatesError),
}

/// Whether each episode sees a fresh channel or replays one realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// Every reset replays the same realization. This is the optimizer
    /// setting: the agent searches one instance's phase landscape.
    Fixed,
    /// Every reset draws a new realization from the environment stream.
    Resample,
}

/// One discrete action: write `candidate` into element `element`.
///
/// `candidate` indexes the element's candidate list, which for the full
/// space is the whole codebook (so `candidate` equals the phase index) and
/// for a reduced space is that element's retained subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Action {
    pub element: usize,
    pub candidate: usize,
}

/// Flat-indexed action set over (element, candidate) pairs.
#[derive(Debug, Clone)]
pub enum ActionSpace {
    /// Every element may take any of the `2^mu` codebook indices.
    Full { l: usize, mu: u8 },
    /// Per-element candidate subsets.
    Reduced(ReducedActionSpace),
}

impl ActionSpace {
    pub fn l(&self) -> usize {
        match self {
            ActionSpace::Full { l, .. } => *l,
            ActionSpace::Reduced(r) => r.l(),
        }
    }

    pub fn mu(&self) -> u8 {
        match self {
            ActionSpace::Full { mu, .. } => *mu,
            ActionSpace::Reduced(r) => r.mu(),
        }
    }

    /// Total number of flat action ids.
    pub fn len(&self) -> usize {
        match self {
            ActionSpace::Full { l, mu } => l * (1usize << mu),
            ActionSpace::Reduced(r) => r.action_count(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Decodes a flat id. Full spaces use `id = element * 2^mu + candidate`;
    /// reduced spaces concatenate each element's candidate list in order.
    pub fn decode(&self, id: usize) -> Option<Action> {
        match self {
            ActionSpace::Full { l, mu } => {
                let levels = 1usize << mu;
                if id >= l * levels {
                    return None;
                }
                Some(Action {
                    element: id / levels,
                    candidate: id % levels,
                })
            }
            ActionSpace::Reduced(r) => {
                let mut rest = id;
                for (element, cands) in r.candidates.iter().enumerate() {
                    if rest < cands.len() {
                        return Some(Action {
                            element,
                            candidate: rest,
                        });
                    }
                    rest -= cands.len();
                }
                None
            }
        }
    }

    /// Inverse of [`ActionSpace::decode`].
    pub fn encode(&self, action: Action) -> Option<usize> {
        match self {
            ActionSpace::Full { l, mu } => {
                let levels = 1usize << mu;
                if action.element >= *l || action.candidate >= levels {
                    return None;
                }
                Some(action.element * levels + action.candidate)
            }
            ActionSpace::Reduced(r) => {
                if action.element >= r.l()
                    || action.candidate >= r.candidates[action.element].len()
                {
                    return None;
                }
                let offset: usize = r.candidates[..action.element]
                    .iter()
                    .map(|c| c.len())
                    .sum();
                Some(offset + action.candidate)
            }
        }
    }

    /// The codebook index an action writes.
    pub fn phase_index(&self, action: Action) -> Option<u16> {
        match self {
            ActionSpace::Full { l, mu } => {
                if action.element >= *l || action.candidate >= (1usize << mu) {
                    return None;
                }
                Some(action.candidate as u16)
            }
            ActionSpace::Reduced(r) => r
                .candidates
                .get(action.element)?
                .get(action.candidate)
                .copied(),
        }
    }
}

/// Environment construction options.
#[derive(Debug, Clone)]
pub struct EnvOptions {
    pub mode: ChannelMode,
    /// Steps per episode; defaults to `2L`.
    pub horizon: Option<usize>,
    pub policy: PrecoderPolicy,
    /// A pinned realization for [`ChannelMode::Fixed`]; when absent, the
    /// first reset draws one from the environment stream and pins it.
    pub channel: Option<ChannelRealization>,
}

impl Default for EnvOptions {
    fn default() -> Self {
        Self {
            mode: ChannelMode::Fixed,
            horizon: None,
            policy: PrecoderPolicy::Matched,
            channel: None,
        }
    }
}

/// Current episode state.
#[derive(Debug, Clone)]
pub struct EnvState {
    pub phases: PhaseConfig,
    pub channel: ChannelRealization,
    /// Steps taken in the current episode.
    pub t: usize,
    /// Completed resets (1 after the first reset).
    pub episode: usize,
}

/// Result of one environment step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub reward: f64,
    pub features: Vec<f64>,
    pub terminal: bool,
}

/// Episodic phase-tuning environment; rewards are RSMA secure sum rates.
pub struct Env {
    cfg: LinearConfig,
    space: ActionSpace,
    mode: ChannelMode,
    horizon: usize,
    policy: PrecoderPolicy,
    pinned: Option<ChannelRealization>,
    rng: ChaCha12Rng,
    state: Option<EnvState>,
    precoders: Option<Precoders>,
    evaluator: Option<SecureSumEvaluator>,
    power: PowerAllocation,
}

impl Env {
    /// Builds an environment. `rng` drives channel draws (in `Resample`
    /// mode, or for an unpinned `Fixed` start) and fixed-random precoder
    /// draws, in reset order.
    pub fn new(
        cfg: LinearConfig,
        space: ActionSpace,
        opts: EnvOptions,
        rng: ChaCha12Rng,
    ) -> Result<Self, EnvError> {
        let horizon = opts.horizon.unwrap_or(2 * cfg.l);
        let power = PowerAllocation::rsma_uniform(cfg.p_t_w, cfg.alpha_split, cfg.k)?;
        Ok(Self {
            cfg,
            space,
            mode: opts.mode,
            horizon,
            policy: opts.policy,
            pinned: opts.channel,
            rng,
            state: None,
            precoders: None,
            evaluator: None,
            power,
        })
    }

    pub fn space(&self) -> &ActionSpace {
        &self.space
    }

    pub fn cfg(&self) -> &LinearConfig {
        &self.cfg
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn state(&self) -> Option<&EnvState> {
        self.state.as_ref()
    }

    /// Observation vector length: `L + 2 M (K + 1)`.
    pub fn feature_len(&self) -> usize {
        self.cfg.l + 2 * self.cfg.m * (self.cfg.k + 1)
    }

    fn draw_channel(&mut self) -> Result<ChannelRealization, EnvError> {
        match self.mode {
            ChannelMode::Fixed => {
                if self.pinned.is_none() {
                    self.pinned = Some(generate(&self.cfg, &mut self.rng)?);
                }
                Ok(self.pinned.clone().unwrap())
            }
            ChannelMode::Resample => Ok(generate(&self.cfg, &mut self.rng)?),
        }
    }

    /// Starts a new episode and returns the initial observation.
    ///
    /// In [`ChannelMode::Fixed`] the first reset also pins the beamformers
    /// (relevant under [`PrecoderPolicy::FixedRandom`]), so every episode
    /// optimizes the same landscape.
    pub fn reset(&mut self) -> Result<Vec<f64>, EnvError> {
        let channel = self.draw_channel()?;
        let phases = PhaseConfig::zeros(self.cfg.l, self.cfg.mu)
            .expect("validated config yields a valid phase configuration");
        let reuse = self.mode == ChannelMode::Fixed && self.precoders.is_some();
        if !reuse {
            let pre = make_precoders(&channel, &phases, self.policy, &mut self.rng);
            self.evaluator = match self.policy {
                PrecoderPolicy::MatchedPerPhase => None,
                _ => Some(SecureSumEvaluator::new(&self.cfg, &channel, &pre, Scheme::Rsma)?),
            };
            self.precoders = Some(pre);
        }
        let episode = self.state.as_ref().map_or(1, |s| s.episode + 1);
        self.state = Some(EnvState {
            phases,
            channel,
            t: 0,
            episode,
        });
        Ok(featurize(self.state.as_ref().unwrap()))
    }

    fn reward_of(&mut self, st: &EnvState) -> Result<f64, EnvError> {
        match (&self.evaluator, self.policy) {
            (Some(ev), _) => Ok(ev.secure_sum(&st.phases)),
            (None, PrecoderPolicy::MatchedPerPhase) => {
                let pre = make_precoders(
                    &st.channel,
                    &st.phases,
                    PrecoderPolicy::MatchedPerPhase,
                    &mut self.rng,
                );
                Ok(rsma_report(&st.channel, &st.phases, &self.power, &pre, &self.cfg)?.secure_sum)
            }
            (None, _) => Err(EnvError::NotReset),
        }
    }

    /// Applies one action by flat id.
    pub fn step_id(&mut self, id: usize) -> Result<StepOutcome, EnvError> {
        let action = self.space.decode(id).ok_or(EnvError::InvalidAction {
            id,
            len: self.space.len(),
        })?;
        self.step(action)
    }

    /// Applies one action, returning the reward of the updated
    /// configuration and the next observation.
    pub fn step(&mut self, action: Action) -> Result<StepOutcome, EnvError> {
        let phase_index = self
            .space
            .phase_index(action)
            .ok_or_else(|| EnvError::InvalidAction {
                id: self.space.encode(action).unwrap_or(usize::MAX),
                len: self.space.len(),
            })?;
        let mut st = self.state.take().ok_or(EnvError::NotReset)?;
        if st.t >= self.horizon {
            self.state = Some(st);
            return Err(EnvError::EpisodeExhausted(self.horizon));
        }
        st.phases
            .set(action.element, phase_index)
            .expect("decoded action is in range");
        st.t += 1;
        let reward = self.reward_of(&st)?;
        let features = featurize(&st);
        let terminal = st.t >= self.horizon;
        self.state = Some(st);
        Ok(StepOutcome {
            reward,
            features,
            terminal,
        })
    }

    /// Uniformly random valid action id.
    pub fn sample_action(&mut self, rng: &mut impl Rng) -> usize {
        rng.gen_range(0..self.space.len())
    }
}

/// Observation vector for a state: each element's phase index scaled to
/// `[0, 1)`, then the real and imaginary parts of every receiver's cascade
/// `h Phi G` (users in index order, then the eavesdropper), jointly scaled
/// by the cascade block's root-mean-square magnitude so the two blocks have
/// comparable dynamic range.
pub fn featurize(st: &EnvState) -> Vec<f64> {
    let levels = st.phases.levels() as f64;
    let mut out: Vec<f64> = st
        .phases
        .indices()
        .iter()
        .map(|&i| i as f64 / levels)
        .collect();
    let factors = st.phases.factors();
    let mut block = Vec::with_capacity(2 * st.channel.m() * (st.channel.k() + 1));
    let mut push_cascade = |h: &nalgebra::RowDVector<num_complex::Complex64>| {
        let scaled = nalgebra::RowDVector::from_iterator(
            h.len(),
            h.iter().zip(&factors).map(|(z, f)| z * f),
        );
        let cascade = scaled * &st.channel.g;
        for v in cascade.iter() {
            block.push(v.re);
            block.push(v.im);
        }
    };
    for h in &st.channel.h_users {
        push_cascade(h);
    }
    push_cascade(&st.channel.h_eve);
    let ms = block.iter().map(|x| x * x).sum::<f64>() / block.len() as f64;
    let rms = ms.sqrt();
    if rms > 0.0 {
        for v in &mut block {
            *v /= rms;
        }
    }
    out.extend(block);
    out
}
