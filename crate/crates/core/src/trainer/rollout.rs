use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::bundle::{ControlLayout, PolicyBundle};
use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::hicontrol::{
    build_high_state, discretize_action, high_critic_input, high_policy, HighRewardTracker, HighState, HighTransition, LoadRecord,
};
use crate::locontrol::{
    action_for, low_critic_input, optimal_power, DepartureGap, JointObservation, LowStep, LowState, LowTransition, GATE, IDLE_ACTION,
};
use crate::netcore::scalar;
use crate::simenv::{run_day, Controller, EvSession, PenaltyConfig, SlotLedger, SlotView, Station, StationState, TimeSlot, Traces};

/// Gaussian exploration widths and the stream they draw from.
pub struct Exploration<'r> {
    pub sigma_high: f64,
    pub sigma_low: f64,
    pub rng: &'r mut ChaCha8Rng,
}

impl Exploration<'_> {
    fn draw(&mut self, sigma: f64) -> f64 {
        let z: f64 = self.rng.sample(StandardNormal);
        sigma * z
    }
}

/// Per-day totals gathered while acting.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub high_reward: f64,
    pub low_reward_sum: f64,
    /// Pile-slots with an EV docked.
    pub low_reward_count: usize,
    pub energy_cost: f64,
    pub peak_load_kw: f64,
    pub high_transitions: usize,
    pub low_transitions: usize,
    pub gating_checked: usize,
    pub gating_violations: usize,
    pub clamp_faults: usize,
}

impl EpisodeSummary {
    pub fn low_reward_mean(&self) -> Option<f64> {
        (self.low_reward_count > 0).then(|| self.low_reward_sum / self.low_reward_count as f64)
    }
}

struct Pending {
    slot: TimeSlot,
    s_h: HighState,
    a_h: f64,
    x: JointObservation,
    actions: Vec<f64>,
    gaps: Vec<Option<DepartureGap>>,
    /// Per pile, the target SoC of the docked EV.
    targets: Vec<Option<f64>>,
    r_h: f64,
    rewards: Vec<f64>,
    departed: Vec<bool>,
}

/// Acts for one station slot by slot and turns what happens into transitions.
///
/// Transitions are emitted one slot late, once the next observation exists.
pub struct HucaAgent {
    layout: ControlLayout,
    n_piles: usize,
    p_station_max_kw: f64,
    price_window: usize,
    kappa: f64,
    phi: f64,
    omega: f64,
    contract_kw: f64,
    traces: Arc<Traces>,
    tracker: HighRewardTracker,
    prev_low_critic: Vec<f64>,
    prev_delivered_kw: f64,
    pending: Option<Pending>,
    record: bool,
    pub high_out: Vec<HighTransition>,
    pub low_out: Vec<LowTransition>,
    pub summary: EpisodeSummary,
}

impl HucaAgent {
    pub fn new(bundle: &PolicyBundle, station: &Station, cfg: &TrainConfig, penalty: &PenaltyConfig, record: bool) -> Result<Self> {
        bundle.check()?;
        if bundle.n_piles != station.config().n_piles {
            return Err(Error::Shape {
                expected: station.config().n_piles,
                got: bundle.n_piles,
            });
        }
        Ok(Self {
            layout: bundle.layout,
            n_piles: bundle.n_piles,
            p_station_max_kw: station.config().p_station_max_kw,
            price_window: cfg.price_window,
            kappa: cfg.kappa,
            phi: cfg.phi,
            omega: cfg.omega,
            contract_kw: penalty.contract_kw,
            traces: Arc::clone(station.traces()),
            tracker: HighRewardTracker::new(cfg.load_avg_window),
            prev_low_critic: Vec::new(),
            prev_delivered_kw: 0.0,
            pending: None,
            record,
            high_out: Vec::new(),
            low_out: Vec::new(),
            summary: EpisodeSummary::default(),
        })
    }

    pub fn begin_day(&mut self) {
        self.tracker.reset();
        self.prev_low_critic.clear();
        self.prev_delivered_kw = 0.0;
        self.pending = None;
        self.summary = EpisodeSummary::default();
    }

    pub fn decide(&mut self, bundle: &PolicyBundle, view: &SlotView<'_>, mut noise: Option<&mut Exploration<'_>>) -> Result<Vec<f64>> {
        let state = view.state;
        let slot = state.slot;
        let pmax = self.p_station_max_kw;
        let s_h = build_high_state(
            view.traces,
            slot,
            state.n_docked(),
            self.prev_delivered_kw,
            &self.prev_low_critic,
            self.price_window,
        );

        let (a_h, disc, q_h) = match (self.layout, bundle.high.as_ref()) {
            (ControlLayout::Hierarchical, Some(high)) => {
                let f = s_h.features(self.n_piles, pmax);
                let mut a = high_policy(&high.actor, &f)?;
                if let Some(ex) = noise.as_deref_mut() {
                    let sigma = ex.sigma_high;
                    a = (a + ex.draw(sigma)).clamp(0.0, 1.0);
                }
                let q = scalar(&high.critic, &high_critic_input(&f, a))?;
                (a, discretize_action(a)?, q)
            }
            (ControlLayout::Hierarchical, None) => return Err(Error::SpecMismatch),
            _ => (0.0, 0, 0.0),
        };

        let mut pile_states = Vec::with_capacity(self.n_piles);
        let mut gaps = Vec::with_capacity(self.n_piles);
        let mut targets = Vec::with_capacity(self.n_piles);
        for (pile, bounds) in state.piles.iter().zip(view.bounds) {
            match (pile.docked.as_ref(), bounds) {
                (Some(d), Some(b)) => {
                    pile_states.push(LowState {
                        soc_now: d.soc,
                        p_max_kw: b.max_kw,
                        p_min_kw: b.min_kw,
                        high_action_disc: disc,
                        high_critic_value: q_h,
                        docked: true,
                    });
                    gaps.push(Some(DepartureGap {
                        delta_soc: d.session.soc_dep_expected - d.soc,
                        delta_t: slot.slots_until(d.session.t_dep_planned) as f64,
                    }));
                    targets.push(Some(d.session.soc_dep_expected));
                }
                _ => {
                    pile_states.push(LowState::empty());
                    gaps.push(None);
                    targets.push(None);
                }
            }
        }

        let mut powers = vec![0.0; self.n_piles];
        let (x, actions, gaps) = if self.layout == ControlLayout::Pooled {
            let docked: Vec<&LowState> = pile_states.iter().filter(|s| s.docked).collect();
            let pooled = if docked.is_empty() {
                LowState::empty()
            } else {
                LowState {
                    soc_now: docked.iter().map(|s| s.soc_now).sum::<f64>() / docked.len() as f64,
                    p_max_kw: docked.iter().map(|s| s.p_max_kw).sum(),
                    p_min_kw: docked.iter().map(|s| s.p_min_kw).sum(),
                    high_action_disc: 0,
                    high_critic_value: 0.0,
                    docked: true,
                }
            };
            let a = self.pick(bundle, 0, &pooled, noise.as_deref_mut())?;
            for (i, s) in pile_states.iter().enumerate() {
                if s.docked {
                    powers[i] = optimal_power(a, s.p_min_kw, s.p_max_kw);
                }
            }
            (JointObservation { states: vec![pooled] }, vec![a], vec![None])
        } else {
            let mut actions = Vec::with_capacity(self.n_piles);
            for (i, s) in pile_states.iter().enumerate() {
                let a = self.pick(bundle, i, s, noise.as_deref_mut())?;
                if s.docked {
                    powers[i] = optimal_power(a, s.p_min_kw, s.p_max_kw);
                }
                actions.push(a);
            }
            (JointObservation { states: pile_states.clone() }, actions, gaps)
        };
        for (p, b) in powers.iter_mut().zip(view.bounds) {
            if let Some(b) = b {
                *p = b.clamp(*p);
            }
        }

        let low_critic: Vec<f64> = if self.layout == ControlLayout::Hierarchical {
            let input = low_critic_input(&x.features(pmax), &actions);
            x.states
                .iter()
                .zip(&bundle.low)
                .filter(|(s, _)| s.docked)
                .map(|(_, ag)| scalar(&ag.critic, &input))
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };

        self.flush(Some((s_h, x.clone())));
        self.prev_low_critic = low_critic;
        self.pending = Some(Pending {
            slot,
            s_h,
            a_h,
            rewards: vec![0.0; x.len()],
            departed: vec![false; x.len()],
            x,
            actions,
            gaps,
            targets,
            r_h: 0.0,
        });
        Ok(powers)
    }

    fn pick(&self, bundle: &PolicyBundle, agent: usize, s: &LowState, noise: Option<&mut Exploration<'_>>) -> Result<f64> {
        if !s.docked {
            return Ok(IDLE_ACTION);
        }
        let mut g = scalar(&bundle.low[agent].actor, &s.features(self.p_station_max_kw))?;
        if let Some(ex) = noise {
            let sigma = ex.sigma_low;
            g += ex.draw(sigma);
        }
        Ok(action_for(s, g, self.layout.action_mode()))
    }

    pub fn observe(&mut self, ledger: &SlotLedger) -> Result<()> {
        let p = self.pending.as_mut().ok_or_else(|| Error::Config("observe before decide".into()))?;
        p.r_h = self.tracker.push(
            LoadRecord {
                price: ledger.price,
                load_kw: ledger.total_load_kw,
            },
            self.kappa,
            self.phi,
            self.contract_kw,
        );
        let mut pile_rewards = vec![0.0; self.n_piles];
        let mut pile_departed = vec![false; self.n_piles];
        for d in &ledger.departures {
            pile_departed[d.pile] = true;
        }
        let mut docked = 0;
        for i in 0..self.n_piles {
            if let (Some(target), Some(soc)) = (p.targets[i], ledger.soc_after[i]) {
                let r = crate::locontrol::low_reward(ledger.powers_kw[i], ledger.price, soc, target, self.omega);
                pile_rewards[i] = r;
                self.summary.low_reward_sum += r;
                docked += 1;
            }
        }
        self.summary.low_reward_count += docked;
        if self.layout == ControlLayout::Pooled {
            if docked > 0 {
                p.rewards[0] = pile_rewards.iter().sum::<f64>() / docked as f64;
                p.departed[0] = p.targets.iter().zip(&pile_departed).all(|(t, d)| t.is_none() || *d);
            }
        } else {
            p.rewards = pile_rewards;
            p.departed = pile_departed;
        }
        self.summary.high_reward += p.r_h;
        self.summary.energy_cost += ledger.energy_cost;
        self.summary.peak_load_kw = self.summary.peak_load_kw.max(ledger.total_load_kw);
        self.summary.clamp_faults += ledger.clamp_faults;
        self.prev_delivered_kw = ledger.powers_kw.iter().sum();
        Ok(())
    }

    /// Emits the last slot of the day as terminal.
    pub fn end_day(&mut self) {
        self.flush(None);
    }

    fn flush(&mut self, next: Option<(HighState, JointObservation)>) {
        let Some(p) = self.pending.take() else {
            return;
        };
        let last = next.is_none();
        let (s_h_next, x_next) = match next {
            Some(n) => n,
            None => {
                let s = build_high_state(
                    &self.traces,
                    p.slot.next(),
                    0,
                    self.prev_delivered_kw,
                    &self.prev_low_critic,
                    self.price_window,
                );
                (s, JointObservation::empty(p.x.len()))
            }
        };
        if self.layout == ControlLayout::Hierarchical {
            self.summary.high_transitions += 1;
            if self.record {
                self.high_out.push(HighTransition {
                    s_h: p.s_h,
                    a_h: p.a_h,
                    r_h: p.r_h,
                    s_h_next,
                    terminal: last,
                });
            }
        }
        if !p.x.any_docked() {
            return;
        }
        if self.layout == ControlLayout::Hierarchical {
            for (s, &a) in p.x.states.iter().zip(&p.actions) {
                if s.docked {
                    self.summary.gating_checked += 1;
                    if !satisfies_gate(a, s.high_action_disc) {
                        self.summary.gating_violations += 1;
                    }
                }
            }
        }
        let terminals = p
            .x
            .states
            .iter()
            .zip(&p.departed)
            .map(|(s, &gone)| last || !s.docked || gone)
            .collect();
        self.summary.low_transitions += 1;
        if self.record {
            self.low_out.push(LowTransition {
                step: LowStep {
                    x: p.x,
                    actions: p.actions,
                    rewards: p.rewards,
                    x_next,
                    terminals,
                },
                gaps: p.gaps,
            });
        }
    }
}

/// Whether a stored action lies in the half selected by the high-level decision.
pub fn satisfies_gate(a: f64, high_action_disc: u8) -> bool {
    if high_action_disc == 1 {
        (GATE..=1.0).contains(&a)
    } else {
        (0.0..GATE).contains(&a)
    }
}

/// A [`HucaAgent`] bound to fixed networks, usable with [`run_day`].
pub struct HucaController<'a> {
    pub agent: HucaAgent,
    pub bundle: &'a PolicyBundle,
    pub exploration: Option<Exploration<'a>>,
}

impl Controller for HucaController<'_> {
    fn begin_day(&mut self, _day: usize) {
        self.agent.begin_day();
    }

    fn decide(&mut self, view: &SlotView<'_>) -> Result<Vec<f64>> {
        self.agent.decide(self.bundle, view, self.exploration.as_mut())
    }

    fn observe(&mut self, ledger: &SlotLedger, _after: &StationState) -> Result<()> {
        self.agent.observe(ledger)
    }

    fn end_day(&mut self) -> Result<()> {
        self.agent.end_day();
        Ok(())
    }
}

/// Transitions and totals from one simulated day.
#[derive(Clone, Debug)]
pub struct EpisodeOutput {
    pub high: Vec<HighTransition>,
    pub low: Vec<LowTransition>,
    pub summary: EpisodeSummary,
    pub ledgers: Vec<SlotLedger>,
}

/// Plays one day with fixed networks, optionally exploring.
#[allow(clippy::too_many_arguments)]
pub fn run_episode(
    station: &mut Station,
    bundle: &PolicyBundle,
    cfg: &TrainConfig,
    penalty: &PenaltyConfig,
    day: usize,
    sessions: &[EvSession],
    exploration: Option<Exploration<'_>>,
) -> Result<EpisodeOutput> {
    let agent = HucaAgent::new(bundle, station, cfg, penalty, true)?;
    let mut ctrl = HucaController {
        agent,
        bundle,
        exploration,
    };
    let ledgers = run_day(station, &mut ctrl, day, sessions)?;
    let agent = ctrl.agent;
    Ok(EpisodeOutput {
        high: agent.high_out,
        low: agent.low_out,
        summary: agent.summary,
        ledgers,
    })
}
