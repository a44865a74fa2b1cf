//! Low-level pile agents: gated actions, power mapping, rewards, centralized
//! critics and the departure-aware augmentation of the actor objective.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::{mse_loss_and_grad, scalar, sigmoid, symlog, ActorCritic, ForwardTrace, Mlp};

/// Half-width of each gated action band.
pub const GATE: f64 = 0.5;

/// Action a pile without an EV is assigned; maps to zero power.
pub const IDLE_ACTION: f64 = 0.5;

/// Observation of one pile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowState {
    pub soc_now: f64,
    pub p_max_kw: f64,
    pub p_min_kw: f64,
    pub high_action_disc: u8,
    pub high_critic_value: f64,
    pub docked: bool,
}

impl LowState {
    pub const DIM: usize = 6;

    /// Placeholder for a pile with no EV.
    pub fn empty() -> Self {
        Self {
            soc_now: 0.0,
            p_max_kw: 0.0,
            p_min_kw: 0.0,
            high_action_disc: 0,
            high_critic_value: 0.0,
            docked: false,
        }
    }

    /// Network input with powers as a share of station capacity.
    pub fn features(&self, p_station_max_kw: f64) -> [f64; Self::DIM] {
        [
            self.soc_now,
            self.p_max_kw / p_station_max_kw,
            self.p_min_kw / p_station_max_kw,
            f64::from(self.high_action_disc),
            symlog(self.high_critic_value),
            if self.docked { 1.0 } else { 0.0 },
        ]
    }
}

/// The states of all piles, always one per pile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointObservation {
    pub states: Vec<LowState>,
}

impl JointObservation {
    pub fn empty(n: usize) -> Self {
        Self {
            states: vec![LowState::empty(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn any_docked(&self) -> bool {
        self.states.iter().any(|s| s.docked)
    }

    pub fn features(&self, p_station_max_kw: f64) -> Vec<f64> {
        self.states.iter().flat_map(|s| s.features(p_station_max_kw)).collect()
    }
}

/// What the centralized critics learn from. Carries no departure information.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowStep {
    pub x: JointObservation,
    pub actions: Vec<f64>,
    pub rewards: Vec<f64>,
    pub x_next: JointObservation,
    pub terminals: Vec<bool>,
}

/// Remaining SoC shortfall and slots until planned departure for a docked EV.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepartureGap {
    pub delta_soc: f64,
    pub delta_t: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowTransition {
    pub step: LowStep,
    /// Per pile, present when an EV was docked in `x`.
    pub gaps: Vec<Option<DepartureGap>>,
}

impl LowTransition {
    pub fn validate(&self) -> Result<()> {
        let n = self.step.x.len();
        for len in [
            self.step.actions.len(),
            self.step.rewards.len(),
            self.step.x_next.len(),
            self.step.terminals.len(),
            self.gaps.len(),
        ] {
            if len != n {
                return Err(Error::Shape { expected: n, got: len });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncertaintyInputs {
    pub delta_soc: f64,
    pub delta_t: f64,
    pub rho: f64,
    pub epsilon: f64,
}

impl UncertaintyInputs {
    pub fn from_gap(gap: DepartureGap, rho: f64, epsilon: f64) -> Self {
        Self {
            delta_soc: gap.delta_soc,
            delta_t: gap.delta_t,
            rho,
            epsilon,
        }
    }
}

/// How a raw logit becomes an action in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ActionMode {
    /// Confined to the half of [0, 1] chosen by the high-level decision.
    Gated,
    /// Plain sigmoid, ignoring any high-level decision.
    Free,
}

/// Gated action: `[0.5, 1]` when charging, `[0, 0.5)` when discharging.
pub fn map_action(g: f64, high_action_disc: u8) -> f64 {
    let s = sigmoid(g);
    if high_action_disc == 1 {
        GATE + GATE * s
    } else {
        // sigmoid saturates to exactly 1.0 in f64; keep the discharge band open at 0.5
        (GATE * s).min(GATE.next_down())
    }
}

fn action_and_slope(g: f64, disc: u8, mode: ActionMode) -> (f64, f64) {
    let s = sigmoid(g);
    match mode {
        ActionMode::Gated => (map_action(g, disc), GATE * s * (1.0 - s)),
        ActionMode::Free => (s, s * (1.0 - s)),
    }
}

/// Action for a state given the policy logit.
pub fn action_for(state: &LowState, g: f64, mode: ActionMode) -> f64 {
    if !state.docked {
        return IDLE_ACTION;
    }
    action_and_slope(g, state.high_action_disc, mode).0
}

/// Linear interpolation between the pile's power limits.
pub fn optimal_power(a: f64, p_min_kw: f64, p_max_kw: f64) -> f64 {
    a * (p_max_kw - p_min_kw) + p_min_kw
}

/// `|log2(a + eps)| * sqrt(max(dSoC, 0) / dT)`.
pub fn uncertainty_factor(a: f64, u: &UncertaintyInputs) -> f64 {
    let shortfall = u.delta_soc.max(0.0);
    if shortfall == 0.0 {
        return 0.0;
    }
    (a + u.epsilon).log2().abs() * (shortfall / u.delta_t).sqrt()
}

fn uncertainty_factor_slope(a: f64, u: &UncertaintyInputs) -> f64 {
    let shortfall = u.delta_soc.max(0.0);
    if shortfall == 0.0 {
        return 0.0;
    }
    let x = a + u.epsilon;
    let d_abs_log = if x < 1.0 { -1.0 } else { 1.0 } / (x * std::f64::consts::LN_2);
    d_abs_log * (shortfall / u.delta_t).sqrt()
}

/// Multiplier `1 - rho * factor` applied to the critic value, optionally floored at zero.
pub fn augmentation_multiplier(a: f64, u: &UncertaintyInputs, clamp_at_zero: bool) -> f64 {
    let m = 1.0 - u.rho * uncertainty_factor(a, u);
    if clamp_at_zero {
        m.max(0.0)
    } else {
        m
    }
}

/// Augmented value used only by the actor update.
pub fn augment_q(q: f64, a: f64, u: &UncertaintyInputs) -> f64 {
    q * augmentation_multiplier(a, u, false)
}

/// `(Q_aug, dQ_aug/da)` given `Q` and `dQ/da` at action `a`.
pub fn augment_q_with_slope(q: f64, dq_da: f64, a: f64, u: &UncertaintyInputs, clamp_at_zero: bool) -> (f64, f64) {
    let m = 1.0 - u.rho * uncertainty_factor(a, u);
    if clamp_at_zero && m < 0.0 {
        return (0.0, 0.0);
    }
    let dm = -u.rho * uncertainty_factor_slope(a, u);
    (q * m, dq_da * m + q * dm)
}

/// `omega * (-P * price) - |SoC - SoC_target|` with the post-step SoC.
pub fn low_reward(p_opt_kw: f64, price: f64, soc_now: f64, soc_dep_expected: f64, omega: f64) -> f64 {
    omega * (-p_opt_kw * price) - (soc_now - soc_dep_expected).abs()
}

/// Centralized critic input: all pile features followed by all actions.
pub fn low_critic_input(joint_features: &[f64], actions: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(joint_features.len() + actions.len());
    v.extend_from_slice(joint_features);
    v.extend_from_slice(actions);
    v
}

/// Actions every target actor takes on `x`, idle for empty piles.
pub fn target_joint_actions(x: &JointObservation, agents: &[ActorCritic], mode: ActionMode, p_station_max_kw: f64) -> Result<Vec<f64>> {
    if agents.len() != x.len() {
        return Err(Error::Shape {
            expected: x.len(),
            got: agents.len(),
        });
    }
    x.states
        .iter()
        .zip(agents)
        .map(|(s, ag)| {
            if !s.docked {
                return Ok(IDLE_ACTION);
            }
            let g = scalar(&ag.target_actor, &s.features(p_station_max_kw))?;
            Ok(action_for(s, g, mode))
        })
        .collect()
}

/// `r + gamma * Q'_i(x', a')`, or `r` at a terminal step.
pub fn low_critic_target(
    reward: f64,
    next_features: &[f64],
    next_actions: &[f64],
    target_critic: &Mlp,
    gamma: f64,
    terminal: bool,
) -> Result<f64> {
    if terminal || gamma == 0.0 {
        return Ok(reward);
    }
    Ok(reward + gamma * scalar(target_critic, &low_critic_input(next_features, next_actions))?)
}

/// Settings shared by every low-level update.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowUpdateConfig {
    pub gamma: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub clamp_augmentation: bool,
    pub mode: ActionMode,
    pub p_station_max_kw: f64,
}

/// Batch features computed once and shared by every agent's update.
pub struct PreparedBatch<'a> {
    pub steps: Vec<&'a LowStep>,
    pub gaps: Vec<&'a [Option<DepartureGap>]>,
    pub x_features: Vec<Vec<f64>>,
    pub next_features: Vec<Vec<f64>>,
    pub next_actions: Vec<Vec<f64>>,
}

impl<'a> PreparedBatch<'a> {
    /// Next-step actions come from the current target actors.
    pub fn new(batch: &[&'a LowTransition], agents: &[ActorCritic], cfg: &LowUpdateConfig) -> Result<Self> {
        let mut out = PreparedBatch {
            steps: Vec::with_capacity(batch.len()),
            gaps: Vec::with_capacity(batch.len()),
            x_features: Vec::with_capacity(batch.len()),
            next_features: Vec::with_capacity(batch.len()),
            next_actions: Vec::with_capacity(batch.len()),
        };
        for tr in batch {
            tr.validate()?;
            out.steps.push(&tr.step);
            out.gaps.push(&tr.gaps);
            out.x_features.push(tr.step.x.features(cfg.p_station_max_kw));
            out.next_features.push(tr.step.x_next.features(cfg.p_station_max_kw));
            out.next_actions
                .push(target_joint_actions(&tr.step.x_next, agents, cfg.mode, cfg.p_station_max_kw)?);
        }
        Ok(out)
    }
}

/// Critic `i` regression on raw (unaugmented) targets.
///
/// Takes only [`LowStep`] data, so departure information cannot reach the critic loss.
pub fn low_critic_step(
    agent: usize,
    steps: &[&LowStep],
    x_features: &[Vec<f64>],
    next_features: &[Vec<f64>],
    next_actions: &[Vec<f64>],
    nets: &mut ActorCritic,
    gamma: f64,
) -> Result<f64> {
    let mut inputs = Vec::with_capacity(steps.len());
    let mut targets = Vec::with_capacity(steps.len());
    for (b, st) in steps.iter().enumerate() {
        inputs.push(low_critic_input(&x_features[b], &st.actions));
        targets.push(low_critic_target(
            st.rewards[agent],
            &next_features[b],
            &next_actions[b],
            &nets.target_critic,
            gamma,
            st.terminals[agent],
        )?);
    }
    let (loss, grad) = mse_loss_and_grad(&nets.critic, &inputs, &targets)?;
    nets.critic_opt.step(&mut nets.critic, &grad)?;
    Ok(loss)
}

/// Actor `i` ascent on the augmented value over samples where pile `i` held an EV.
///
/// Other piles keep the actions stored in the batch. Returns the mean
/// augmented objective before the step, or `None` when no sample qualifies.
pub fn low_actor_step(agent: usize, prepared: &PreparedBatch<'_>, nets: &mut ActorCritic, cfg: &LowUpdateConfig) -> Result<Option<f64>> {
    let docked: Vec<usize> = (0..prepared.steps.len())
        .filter(|&b| prepared.steps[b].x.states[agent].docked)
        .collect();
    if docked.is_empty() {
        return Ok(None);
    }
    let n = docked.len() as f64;
    let n_piles = prepared.steps[0].x.len();
    let action_slot = n_piles * LowState::DIM + agent;
    let mut grad = vec![0.0; nets.actor.params().len()];
    let mut critic_scratch = vec![0.0; nets.critic.params().len()];
    let mut actor_trace = ForwardTrace::default();
    let mut critic_trace = ForwardTrace::default();
    let mut objective = 0.0;
    for b in docked {
        let st = prepared.steps[b];
        let s = &st.x.states[agent];
        let local = &prepared.x_features[b][agent * LowState::DIM..(agent + 1) * LowState::DIM];
        nets.actor.forward_trace_into(local, &mut actor_trace)?;
        let g = actor_trace.output()[0];
        let (a, da_dg) = action_and_slope(g, s.high_action_disc, cfg.mode);
        let mut actions = st.actions.clone();
        actions[agent] = a;
        let input = low_critic_input(&prepared.x_features[b], &actions);
        nets.critic.forward_trace_into(&input, &mut critic_trace)?;
        let q = critic_trace.output()[0];
        let dq_da = nets.critic.backward_into(&critic_trace, &[1.0], &mut critic_scratch)?[action_slot];
        let (value, slope) = match prepared.gaps[b][agent] {
            Some(gap) if cfg.rho != 0.0 => {
                let u = UncertaintyInputs::from_gap(gap, cfg.rho, cfg.epsilon);
                augment_q_with_slope(q, dq_da, a, &u, cfg.clamp_augmentation)
            }
            _ => (q, dq_da),
        };
        objective += value;
        nets.actor.backward_into(&actor_trace, &[-slope * da_dg / n], &mut grad)?;
    }
    let objective = objective / n;
    if !objective.is_finite() {
        return Err(Error::NumericalFault("non-finite low-level actor objective".into()));
    }
    nets.actor_opt.step(&mut nets.actor, &grad)?;
    Ok(Some(objective))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LowLosses {
    pub critic_loss: f64,
    pub actor_objective: Option<f64>,
}

/// Critic step then actor step for agent `i`.
pub fn update_low(agent: usize, prepared: &PreparedBatch<'_>, agents: &mut [ActorCritic], cfg: &LowUpdateConfig) -> Result<LowLosses> {
    if prepared.steps.is_empty() {
        return Err(Error::Config("empty batch".into()));
    }
    let nets = &mut agents[agent];
    let critic_loss = low_critic_step(
        agent,
        &prepared.steps,
        &prepared.x_features,
        &prepared.next_features,
        &prepared.next_actions,
        nets,
        cfg.gamma,
    )?;
    let actor_objective = low_actor_step(agent, prepared, nets, cfg)?;
    Ok(LowLosses {
        critic_loss,
        actor_objective,
    })
}

/// Updates every agent in turn on one shared minibatch.
pub fn update_low_all(batch: &[&LowTransition], agents: &mut [ActorCritic], cfg: &LowUpdateConfig) -> Result<Vec<LowLosses>> {
    let prepared = PreparedBatch::new(batch, agents, cfg)?;
    (0..agents.len()).map(|i| update_low(i, &prepared, agents, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{Activation, LayerSpec, NetShape};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn u(delta_soc: f64, delta_t: f64, rho: f64) -> UncertaintyInputs {
        UncertaintyInputs {
            delta_soc,
            delta_t,
            rho,
            epsilon: 1e-6,
        }
    }

    #[test]
    fn map_action_examples() {
        assert_eq!(map_action(0.0, 1), 0.75);
        assert_eq!(map_action(0.0, 0), 0.25);
        assert!(map_action(-50.0, 0) < 1e-20);
        assert!((map_action(50.0, 1) - 1.0).abs() < 1e-15);
        assert!(map_action(50.0, 0) < 0.5);
        assert!(map_action(-50.0, 1) >= 0.5);
    }

    #[test]
    fn optimal_power_examples() {
        assert_eq!(optimal_power(0.0, -15.0, 15.0), -15.0);
        assert_eq!(optimal_power(1.0, -15.0, 15.0), 15.0);
        assert_eq!(optimal_power(0.5, -15.0, 15.0), 0.0);
    }

    #[test]
    fn factor_examples() {
        assert_eq!(uncertainty_factor(0.3, &u(-0.1, 3.0, 10.0)), 0.0);
        let tiny = uncertainty_factor(1.0, &u(0.4, 4.0, 10.0));
        assert!(tiny < 1e-6 && tiny > 0.0);
        let f = uncertainty_factor(0.25, &u(0.4, 4.0, 10.0));
        let expect = (0.25f64 + 1e-6).log2().abs() * 0.1f64.sqrt();
        assert!((f - expect).abs() < 1e-12);
        assert!((f - 0.63246).abs() < 1e-4);
    }

    #[test]
    fn augment_examples() {
        assert_eq!(augment_q(3.0, 0.2, &u(0.4, 4.0, 0.0)), 3.0);
        assert_eq!(augment_q(3.0, 0.2, &u(0.0, 4.0, 10.0)), 3.0);
        let f = uncertainty_factor(0.25, &u(0.4, 4.0, 10.0));
        let got = augment_q(1.0, 0.25, &u(0.4, 4.0, 10.0));
        assert!((got - (1.0 - 10.0 * f)).abs() < 1e-12);
        assert!((got + 5.3246).abs() < 1e-3);
        assert_eq!(augmentation_multiplier(0.25, &u(0.4, 4.0, 10.0), true), 0.0);
    }

    #[test]
    fn augment_slope_matches_finite_difference() {
        let uu = u(0.3, 2.0, 10.0);
        for &a in &[0.05, 0.3, 0.6, 0.95] {
            let (q, dq) = (1.7 - a, -1.0);
            let (_, slope) = augment_q_with_slope(q, dq, a, &uu, false);
            let h = 1e-6;
            let fd = (augment_q(1.7 - (a + h), a + h, &uu) - augment_q(1.7 - (a - h), a - h, &uu)) / (2.0 * h);
            assert!((slope - fd).abs() < 1e-5, "a={a}: {slope} vs {fd}");
        }
    }

    #[test]
    fn reward_examples() {
        assert_eq!(low_reward(0.0, 0.05, 0.8, 0.8, 0.5), 0.0);
        assert!((low_reward(10.0, 0.05, 0.6, 0.8, 0.5) + 0.45).abs() < 1e-12);
        assert!(low_reward(-10.0, 0.05, 0.8, 0.8, 0.5) > 0.0);
    }

    #[test]
    fn critic_target_examples() {
        let critic = Mlp::from_params(vec![LayerSpec::new(2, 1, Activation::Linear)], vec![0.0, 0.0, -1.0]).unwrap();
        assert_eq!(low_critic_target(-0.45, &[0.0], &[0.0], &critic, 0.99, true).unwrap(), -0.45);
        assert_eq!(low_critic_target(-0.45, &[0.0], &[0.0], &critic, 0.0, false).unwrap(), -0.45);
        let y = low_critic_target(-0.45, &[0.3], &[0.5], &critic, 0.99, false).unwrap();
        assert!((y + 1.44).abs() < 1e-12);
    }

    fn docked(disc: u8) -> LowState {
        LowState {
            soc_now: 0.5,
            p_max_kw: 30.0,
            p_min_kw: -30.0,
            high_action_disc: disc,
            high_critic_value: -2.0,
            docked: true,
        }
    }

    fn transition(disc: u8, gap: DepartureGap) -> LowTransition {
        LowTransition {
            step: LowStep {
                x: JointObservation {
                    states: vec![docked(disc), LowState::empty()],
                },
                actions: vec![map_action(0.0, disc), IDLE_ACTION],
                rewards: vec![-0.3, 0.0],
                x_next: JointObservation {
                    states: vec![docked(disc), LowState::empty()],
                },
                terminals: vec![false, true],
            },
            gaps: vec![Some(gap), None],
        }
    }

    fn cfg(rho: f64, mode: ActionMode) -> LowUpdateConfig {
        LowUpdateConfig {
            gamma: 0.99,
            rho,
            epsilon: 1e-6,
            clamp_augmentation: false,
            mode,
            p_station_max_kw: 150.0,
        }
    }

    fn agents() -> Vec<ActorCritic> {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        (0..2)
            .map(|_| ActorCritic::new(LowState::DIM, 2 * LowState::DIM + 2, &NetShape::default(), &mut rng).unwrap())
            .collect()
    }

    #[test]
    fn positive_constant_critic_pushes_toward_full_charge() {
        let mut ag = agents();
        let critic_dim = 2 * LowState::DIM + 2;
        let mut p = vec![0.0; critic_dim + 1];
        p[critic_dim] = 1.0; // Q = 1 everywhere
        ag[0].critic = Mlp::from_params(vec![LayerSpec::new(critic_dim, 1, Activation::Linear)], p).unwrap();
        let gap = DepartureGap {
            delta_soc: 0.3,
            delta_t: 2.0,
        };
        let batch: Vec<LowTransition> = (0..8).map(|_| transition(1, gap)).collect();
        let refs: Vec<&LowTransition> = batch.iter().collect();
        let c = cfg(10.0, ActionMode::Gated);
        let local = docked(1).features(150.0);
        let a0 = map_action(scalar(&ag[0].actor, &local).unwrap(), 1);
        for _ in 0..30 {
            let prepared = PreparedBatch::new(&refs, &ag, &c).unwrap();
            low_actor_step(0, &prepared, &mut ag[0], &c).unwrap();
        }
        let a1 = map_action(scalar(&ag[0].actor, &local).unwrap(), 1);
        assert!(a1 > a0 && a1 <= 1.0 && a1 >= 0.5, "{a0} -> {a1}");
    }

    #[test]
    fn zero_rho_matches_plain_policy_gradient() {
        let gap = DepartureGap {
            delta_soc: 0.3,
            delta_t: 2.0,
        };
        let batch: Vec<LowTransition> = (0..4).map(|_| transition(0, gap)).collect();
        let refs: Vec<&LowTransition> = batch.iter().collect();
        let mut with_gap = agents();
        let mut without_gap = agents();
        let stripped: Vec<LowTransition> = batch
            .iter()
            .map(|t| LowTransition {
                step: t.step.clone(),
                gaps: vec![None, None],
            })
            .collect();
        let stripped_refs: Vec<&LowTransition> = stripped.iter().collect();
        let c = cfg(0.0, ActionMode::Gated);
        update_low_all(&refs, &mut with_gap, &c).unwrap();
        update_low_all(&stripped_refs, &mut without_gap, &c).unwrap();
        assert_eq!(with_gap, without_gap);
    }

    #[test]
    fn empty_pile_actor_is_untouched() {
        let gap = DepartureGap {
            delta_soc: 0.3,
            delta_t: 2.0,
        };
        let batch: Vec<LowTransition> = (0..4).map(|_| transition(1, gap)).collect();
        let refs: Vec<&LowTransition> = batch.iter().collect();
        let mut ag = agents();
        let before = ag[1].actor.clone();
        let losses = update_low_all(&refs, &mut ag, &cfg(10.0, ActionMode::Gated)).unwrap();
        assert_eq!(ag[1].actor, before);
        assert!(losses[1].actor_objective.is_none());
        assert!(losses[0].actor_objective.is_some());
    }

    #[test]
    fn exact_critic_has_zero_gradient() {
        let critic_dim = 2 * LowState::DIM + 2;
        let mut p = vec![0.0; critic_dim + 1];
        p[critic_dim] = -0.3;
        let critic = Mlp::from_params(vec![LayerSpec::new(critic_dim, 1, Activation::Linear)], p).unwrap();
        let gap = DepartureGap {
            delta_soc: 0.3,
            delta_t: 2.0,
        };
        let mut batch: Vec<LowTransition> = (0..4).map(|_| transition(1, gap)).collect();
        for t in &mut batch {
            t.step.terminals[0] = true;
        }
        let inputs: Vec<Vec<f64>> = batch
            .iter()
            .map(|t| low_critic_input(&t.step.x.features(150.0), &t.step.actions))
            .collect();
        let (loss, grad) = mse_loss_and_grad(&critic, &inputs, &[-0.3; 4]).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|g| g.abs() < 1e-10));
    }

    #[test]
    fn free_mode_ignores_gate() {
        let s = docked(0);
        assert!((action_for(&s, 3.0, ActionMode::Free) - sigmoid(3.0)).abs() < 1e-15);
        assert!(action_for(&s, 3.0, ActionMode::Gated) < 0.5);
        assert_eq!(action_for(&LowState::empty(), 3.0, ActionMode::Gated), IDLE_ACTION);
    }
}
