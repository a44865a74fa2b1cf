//! High-level agent: decides whether the station charges or discharges.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{mse_loss_and_grad, scalar, sigmoid, symlog, ActorCritic, ForwardTrace};
use crate::simenv::{instantaneous_excess, TimeSlot, Traces};

/// Slots in one week, used for the same-hour-same-weekday price lookup.
const WEEK: usize = 168;
const DAY: usize = 24;

/// Default trailing window, in slots, of the averaged load.
pub const LOAD_AVG_WINDOW: usize = 24;

/// High-level observation at one slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighState {
    pub price_now: f64,
    pub price_avg_past_n: f64,
    pub price_historical: f64,
    pub load_now: f64,
    pub ev_count: usize,
    pub ev_energy_delivered_kw: f64,
    pub low_critic_mean: f64,
    pub low_critic_std: f64,
}

impl HighState {
    pub const DIM: usize = 8;

    /// Network input: prices in tenths of a dollar, loads in MW, EV count as a
    /// share of piles, power as a share of station capacity, critic values log-compressed.
    pub fn features(&self, n_piles: usize, p_station_max_kw: f64) -> [f64; Self::DIM] {
        [
            10.0 * self.price_now,
            10.0 * self.price_avg_past_n,
            10.0 * self.price_historical,
            self.load_now / 1000.0,
            self.ev_count as f64 / n_piles.max(1) as f64,
            self.ev_energy_delivered_kw / p_station_max_kw,
            symlog(self.low_critic_mean),
            symlog(self.low_critic_std),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HighTransition {
    pub s_h: HighState,
    pub a_h: f64,
    pub r_h: f64,
    pub s_h_next: HighState,
    pub terminal: bool,
}

/// Mean and population standard deviation, `(0, 0)` for no values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Assembles the high-level state for `slot`.
///
/// The past-price average covers the `n_hours` slots before `slot` (falling
/// back to the current price with no history). The historical price is the
/// same hour one week earlier, else one day earlier, else the current price.
pub fn build_high_state(
    traces: &Traces,
    slot: TimeSlot,
    ev_count: usize,
    ev_energy_delivered_kw: f64,
    prev_low_critic: &[f64],
    n_hours: usize,
) -> HighState {
    let prices = traces.price.values();
    let t = slot.0.min(prices.len() - 1);
    let price_now = prices[t];
    let start = t.saturating_sub(n_hours);
    let window = &prices[start..t];
    let price_avg_past_n = if window.is_empty() {
        price_now
    } else {
        window.iter().sum::<f64>() / window.len() as f64
    };
    let price_historical = if t >= WEEK {
        prices[t - WEEK]
    } else if t >= DAY {
        prices[t - DAY]
    } else {
        price_now
    };
    let (low_critic_mean, low_critic_std) = mean_std(prev_low_critic);
    HighState {
        price_now,
        price_avg_past_n,
        price_historical,
        load_now: traces.load.values()[t],
        ev_count,
        ev_energy_delivered_kw,
        low_critic_mean,
        low_critic_std,
    }
}

/// Charge (1) when the continuous action reaches one half, discharge (0) otherwise.
pub fn discretize_action(a_h: f64) -> Result<u8> {
    if !(0.0..=1.0).contains(&a_h) {
        return Err(Error::Domain {
            what: "high-level action must lie in [0, 1]",
            value: a_h,
        });
    }
    Ok(u8::from(a_h >= 0.5))
}

/// One slot of the episode's load/price record used by the reward.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoadRecord {
    pub price: f64,
    pub load_kw: f64,
}

/// High-level reward after slot `t`, where `history` holds every slot of the
/// episode up to and including `t`.
///
/// `kappa * (-(sum p*L) - phi * sum excess) - |L_t - L_avg|`.
pub fn high_reward(history: &[LoadRecord], load_avg: f64, kappa: f64, phi: f64, contract_kw: f64) -> f64 {
    let Some(last) = history.last() else {
        return 0.0;
    };
    let energy: f64 = history.iter().map(|r| r.price * r.load_kw).sum();
    let excess: f64 = history.iter().map(|r| instantaneous_excess(r.load_kw, contract_kw)).sum();
    kappa * (-energy - excess * phi) - (last.load_kw - load_avg).abs()
}

/// Per-episode running sums feeding [`high_reward`] without keeping the whole history.
#[derive(Clone, Debug, Default)]
pub struct HighRewardTracker {
    energy: f64,
    excess: f64,
    loads: VecDeque<f64>,
    window: usize,
}

impl HighRewardTracker {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            ..Default::default()
        }
    }

    pub fn reset(&mut self) {
        self.energy = 0.0;
        self.excess = 0.0;
        self.loads.clear();
    }

    /// Mean of the trailing loads before this slot, or `load_now` with none yet.
    pub fn load_avg(&self, load_now: f64) -> f64 {
        if self.loads.is_empty() {
            load_now
        } else {
            self.loads.iter().sum::<f64>() / self.loads.len() as f64
        }
    }

    /// Records slot `t` and returns its reward.
    pub fn push(&mut self, record: LoadRecord, kappa: f64, phi: f64, contract_kw: f64) -> f64 {
        let load_avg = self.load_avg(record.load_kw);
        self.energy += record.price * record.load_kw;
        self.excess += instantaneous_excess(record.load_kw, contract_kw);
        if self.loads.len() == self.window {
            self.loads.pop_front();
        }
        self.loads.push_back(record.load_kw);
        kappa * (-self.energy - self.excess * phi) - (record.load_kw - load_avg).abs()
    }
}

/// Critic input: state features followed by the action.
pub fn high_critic_input(features: &[f64], a_h: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(features.len() + 1);
    v.extend_from_slice(features);
    v.push(a_h);
    v
}

/// Deterministic policy output in [0, 1].
pub fn high_policy(actor: &crate::netcore::Mlp, features: &[f64]) -> Result<f64> {
    Ok(sigmoid(scalar(actor, features)?))
}

/// Bootstrapped target `r + gamma * Q'(s', mu'(s'))`, or `r` at episode end.
pub fn high_critic_target(r_h: f64, next_features: &[f64], agent: &ActorCritic, gamma: f64, terminal: bool) -> Result<f64> {
    if terminal || gamma == 0.0 {
        return Ok(r_h);
    }
    let a_next = high_policy(&agent.target_actor, next_features)?;
    Ok(r_h + gamma * scalar(&agent.target_critic, &high_critic_input(next_features, a_next))?)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateLosses {
    pub critic_loss: f64,
    pub actor_objective: f64,
}

/// Fixed scaling applied to high states before they reach the networks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HighScale {
    pub n_piles: usize,
    pub p_station_max_kw: f64,
}

impl HighScale {
    pub fn features(&self, s: &HighState) -> [f64; HighState::DIM] {
        s.features(self.n_piles, self.p_station_max_kw)
    }
}

/// Critic regression step towards the bootstrapped targets.
pub fn high_critic_step(batch: &[&HighTransition], agent: &mut ActorCritic, gamma: f64, scale: HighScale) -> Result<f64> {
    let mut inputs = Vec::with_capacity(batch.len());
    let mut targets = Vec::with_capacity(batch.len());
    for tr in batch {
        let f = scale.features(&tr.s_h);
        inputs.push(high_critic_input(&f, tr.a_h));
        targets.push(high_critic_target(tr.r_h, &scale.features(&tr.s_h_next), agent, gamma, tr.terminal)?);
    }
    let (loss, grad) = mse_loss_and_grad(&agent.critic, &inputs, &targets)?;
    agent.critic_opt.step(&mut agent.critic, &grad)?;
    Ok(loss)
}

/// Deterministic policy-gradient ascent on `Q(s, sigmoid(actor(s)))`.
///
/// Returns the batch-mean objective before the step.
pub fn high_actor_step(states: &[[f64; HighState::DIM]], agent: &mut ActorCritic) -> Result<f64> {
    if states.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let n = states.len() as f64;
    let mut grad = vec![0.0; agent.actor.params().len()];
    let mut actor_trace = ForwardTrace::default();
    let mut critic_trace = ForwardTrace::default();
    let mut critic_grad_scratch = vec![0.0; agent.critic.params().len()];
    let mut objective = 0.0;
    for f in states {
        agent.actor.forward_trace_into(f, &mut actor_trace)?;
        let a = sigmoid(actor_trace.output()[0]);
        let input = high_critic_input(f, a);
        agent.critic.forward_trace_into(&input, &mut critic_trace)?;
        objective += critic_trace.output()[0];
        let dq_dinput = agent.critic.backward_into(&critic_trace, &[1.0], &mut critic_grad_scratch)?;
        let dq_da = dq_dinput[HighState::DIM];
        // minimize -Q
        let upstream = -dq_da * a * (1.0 - a) / n;
        agent.actor.backward_into(&actor_trace, &[upstream], &mut grad)?;
    }
    let objective = objective / n;
    if !objective.is_finite() {
        return Err(Error::NumericalFault("non-finite actor objective".into()));
    }
    agent.actor_opt.step(&mut agent.actor, &grad)?;
    Ok(objective)
}

/// One critic step then one actor step on a minibatch.
pub fn update_high(batch: &[&HighTransition], agent: &mut ActorCritic, gamma: f64, scale: HighScale) -> Result<UpdateLosses> {
    if batch.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let critic_loss = high_critic_step(batch, agent, gamma, scale)?;
    let states: Vec<_> = batch.iter().map(|t| scale.features(&t.s_h)).collect();
    let actor_objective = high_actor_step(&states, agent)?;
    Ok(UpdateLosses {
        critic_loss,
        actor_objective,
    })
}
