//! Simulator and optimizer suite for a RIS-assisted secure satellite downlink.
//!
//! A satellite serves `K` single-antenna users through a reconfigurable
//! intelligent surface while one eavesdropper listens in. Rate-splitting
//! multiple access (RSMA) carries a common stream plus one private stream per
//! user, and the quantity of interest is the secure sum rate: each user's
//! achievable rate minus what the eavesdropper can decode, clamped at zero.
//!
//! The crate is organized along the data flow:
//!
//! * [`config`] — scenario description, validation, dB→linear conversion.
//! * [`channel`] — free-space path loss and Rician fading realizations.
//! * [`ris`] — discrete phase-shift configurations and their enumeration.
//! * [`rates`] — RSMA/NOMA SINRs, secrecy rates, and a fast evaluator.
//! * [`env`] — the sequential phase-tuning environment Q-learners act in.
//! * [`baselines`] — random search, element-wise greedy, exhaustive search,
//!   and greedy-driven action-space reduction.
//! * [`dqn`] — a from-scratch deep Q-network (MLP, replay memory, Adam) and
//!   the training loop, usable on the full or the reduced action space.
//! * [`experiments`] — deterministic drivers for the CLI experiments.
//!
//! Every random draw flows from a single `rng_seed` through [`stream::Streams`],
//! so a `(config, seed)` pair reproduces results bit-for-bit.

pub mod baselines;
pub mod channel;
pub mod config;
pub mod dqn;
pub mod env;
pub mod experiments;
pub mod rates;
pub mod ris;
pub mod stream;

pub use channel::ChannelRealization;
pub use config::{LinearConfig, SystemConfig};
pub use dqn::{QNet, ReplayMemory, TrainSpec};
pub use env::{Action, ActionSpace, EnvState};
pub use rates::{PowerAllocation, PrecoderPolicy, Precoders, RateReport, Scheme};
pub use ris::{PhaseConfig, ReducedActionSpace};
pub use stream::{Domain, Streams};
