use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::{soft_update, Activation, ForwardTrace, Mlp};
use crate::error::{Error, Result};

/// Sizes and learning rates for one actor-critic pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetShape {
    pub hidden: Vec<usize>,
    pub actor_lr: f64,
    pub critic_lr: f64,
}

impl Default for NetShape {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            actor_lr: 1e-4,
            critic_lr: 1e-3,
        }
    }
}

/// Actor, critic, their slow-moving targets and both optimizers.
///
/// Serialized as one JSON document per agent for checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub actor: Mlp,
    pub critic: Mlp,
    pub target_actor: Mlp,
    pub target_critic: Mlp,
    pub actor_opt: Adam,
    pub critic_opt: Adam,
}

impl ActorCritic {
    /// Actor maps the state to one raw logit; critic maps state and actions to a scalar.
    pub fn new<R: Rng + ?Sized>(state_dim: usize, critic_dim: usize, shape: &NetShape, rng: &mut R) -> Result<Self> {
        let actor = Mlp::dense(state_dim, &shape.hidden, 1, Activation::Relu, Activation::Linear, rng)?;
        let critic = Mlp::dense(critic_dim, &shape.hidden, 1, Activation::Relu, Activation::Linear, rng)?;
        Ok(Self {
            actor_opt: Adam::for_net(shape.actor_lr, &actor),
            critic_opt: Adam::for_net(shape.critic_lr, &critic),
            target_actor: actor.clone(),
            target_critic: critic.clone(),
            actor,
            critic,
        })
    }

    pub fn soft_update_targets(&mut self, tau: f64) -> Result<()> {
        soft_update(&mut self.target_actor, &self.actor, tau)?;
        soft_update(&mut self.target_critic, &self.critic, tau)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let agent: Self = serde_json::from_str(text)?;
        for net in [&agent.actor, &agent.critic, &agent.target_actor, &agent.target_critic] {
            Mlp::from_params(net.layers().to_vec(), net.params().to_vec())?;
        }
        if !agent.actor.same_shape(&agent.target_actor) || !agent.critic.same_shape(&agent.target_critic) {
            return Err(Error::SpecMismatch);
        }
        Ok(agent)
    }
}

/// Scalar output of a single-output network.
pub fn scalar(net: &Mlp, input: &[f64]) -> Result<f64> {
    Ok(net.forward(input)?[0])
}

/// Mean squared error of a scalar regressor and its parameter gradient.
pub fn mse_loss_and_grad(net: &Mlp, inputs: &[Vec<f64>], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    if inputs.len() != targets.len() {
        return Err(Error::Shape {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    if inputs.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let n = inputs.len() as f64;
    let mut grad = vec![0.0; net.params().len()];
    let mut trace = ForwardTrace::default();
    let mut loss = 0.0;
    for (x, y) in inputs.iter().zip(targets) {
        net.forward_trace_into(x, &mut trace)?;
        let diff = trace.output()[0] - y;
        loss += diff * diff;
        net.backward_into(&trace, &[2.0 * diff / n], &mut grad)?;
    }
    let loss = loss / n;
    if !loss.is_finite() {
        return Err(Error::NumericalFault("non-finite critic loss".into()));
    }
    Ok((loss, grad))
}

/// Signed logarithmic compression used for unbounded value features.
pub fn symlog(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut agent = ActorCritic::new(6, 35, &NetShape::default(), &mut rng).unwrap();
        let grad: Vec<f64> = (0..agent.actor.params().len()).map(|i| (i as f64).sin() * 1e-3).collect();
        agent.actor_opt.step(&mut agent.actor, &grad).unwrap();
        agent.soft_update_targets(0.005).unwrap();
        let text = agent.to_json().unwrap();
        let back = ActorCritic::from_json(&text).unwrap();
        assert_eq!(back, agent);
        for (a, b) in back.actor.params().iter().zip(agent.actor.params()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn mse_gradient_vanishes_on_exact_fit() {
        let net = Mlp::from_params(vec![super::super::LayerSpec::new(2, 1, Activation::Linear)], vec![0.0, 0.0, 1.25]).unwrap();
        let inputs = vec![vec![1.0, 2.0], vec![-3.0, 0.5]];
        let (loss, grad) = mse_loss_and_grad(&net, &inputs, &[1.25, 1.25]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|g| g.abs() < 1e-10));
    }

    #[test]
    fn symlog_is_odd_and_monotone() {
        assert_eq!(symlog(0.0), 0.0);
        assert_eq!(symlog(-3.0), -symlog(3.0));
        assert!(symlog(10.0) > symlog(9.0));
    }
}
