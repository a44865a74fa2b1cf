//! Rollouts, replay storage and the training loop.

mod bundle;
mod replay;
mod rollout;
mod train;

pub use bundle::{ControlLayout, PolicyBundle};
pub use replay::ReplayBuffer;
pub use rollout::{run_episode, satisfies_gate, EpisodeOutput, EpisodeSummary, Exploration, HucaAgent, HucaController};
pub use train::{initial_bundle, train, train_with, EpisodeRecord, TrainFailure, TrainLog, TrainOutcome};
pub(crate) use train::{stream_rng, streams};
