//! Deep Q-learning for discrete RIS phase control.
//!
//! The agent is a plain multilayer perceptron trained from scratch: no
//! autograd, no external ML framework. [`mlp`] holds the network and its
//! hand-written backward pass, [`replay`] the experience buffer, and
//! [`train`] the Adam optimizer, the temporal-difference loss, and the
//! epsilon-greedy training loop. The same loop learns over the full
//! one-element action space or a reduced space built by
//! [`crate::baselines::build_reduced_for_channel`]; the latter pairing is
//! the heuristic variant evaluated by the experiment harness.

pub mod mlp;
pub mod replay;
pub mod train;

pub use mlp::{ForwardTrace, Gradients, QNet};
pub use replay::{ReplayMemory, Transition};
pub use train::{
    adam_step, evaluate, td_loss, train, AdamState, DqnError, EvalOutcome, TrainOutcome,
    TrainSpec,
};
