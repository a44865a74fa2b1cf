//! Feed-forward networks with exact reverse-mode gradients, an adaptive-moment
//! optimizer and soft target tracking.

mod adam;
mod agent;
mod mlp;

pub use adam::Adam;
pub use agent::{mse_loss_and_grad, scalar, symlog, ActorCritic, NetShape};
pub use mlp::{sigmoid, soft_update, Activation, ForwardTrace, Gradients, LayerSpec, Mlp};
