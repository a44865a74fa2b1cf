use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bundle::{ControlLayout, PolicyBundle};
use super::replay::ReplayBuffer;
use super::rollout::{run_episode, EpisodeSummary, Exploration, HucaAgent};
use crate::config::{RunConfig, UpdateCadence};
use crate::error::{Error, Result};
use crate::hicontrol::{update_high, HighScale, HighTransition};
use crate::locontrol::{update_low_all, LowTransition, LowUpdateConfig};
use crate::simenv::{sample_ev_sessions, SlotView, Station, Traces, SLOTS_PER_DAY};

/// Independent random streams derived from one seed.
pub(crate) mod streams {
    pub const INIT: u64 = 0;
    pub const SESSIONS: u64 = 1;
    pub const NOISE: u64 = 2;
    pub const SAMPLING: u64 = 3;
    pub const EVAL: u64 = 4;
}

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One row of the training log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub day: usize,
    pub high_reward: f64,
    pub low_reward_mean: Option<f64>,
    pub energy_cost: f64,
    pub peak_load_kw: f64,
    pub sigma_high: f64,
    pub sigma_low: f64,
    pub high_critic_loss: Option<f64>,
    pub high_actor_objective: Option<f64>,
    pub low_critic_loss: Option<f64>,
    pub low_actor_objective: Option<f64>,
    pub update_steps: usize,
    pub high_buffer: usize,
    pub low_buffer: usize,
    pub gating_checked: usize,
    pub gating_violations: usize,
}

/// Per-episode records plus the structural switches of the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub layout: ControlLayout,
    pub hierarchical: bool,
    pub gated_actions: bool,
    pub critic_augmentation: bool,
    pub effective_rho: f64,
    pub records: Vec<EpisodeRecord>,
}

#[derive(Serialize)]
struct LogSummary<'a> {
    layout: ControlLayout,
    hierarchical: bool,
    gated_actions: bool,
    critic_augmentation: bool,
    effective_rho: f64,
    episodes: usize,
    total_update_steps: usize,
    gating_checked: usize,
    gating_violations: usize,
    first_window_mean_cost: Option<f64>,
    last_window_mean_cost: Option<f64>,
    last: Option<&'a EpisodeRecord>,
}

impl TrainLog {
    pub fn total_update_steps(&self) -> usize {
        self.records.iter().map(|r| r.update_steps).sum()
    }

    pub fn gating_totals(&self) -> (usize, usize) {
        self.records
            .iter()
            .fold((0, 0), |(c, v), r| (c + r.gating_checked, v + r.gating_violations))
    }

    /// Mean episode energy cost over the first or last `window` episodes.
    pub fn window_mean_cost(&self, window: usize, last: bool) -> Option<f64> {
        let n = window.min(self.records.len());
        if n == 0 {
            return None;
        }
        let slice = if last {
            &self.records[self.records.len() - n..]
        } else {
            &self.records[..n]
        };
        Some(slice.iter().map(|r| r.energy_cost).sum::<f64>() / n as f64)
    }

    pub fn to_csv(&self) -> String {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| x.to_string()).unwrap_or_default()
        }
        let mut out = String::from(
            "episode,day,high_reward,low_reward_mean,energy_cost,peak_load_kw,sigma_high,sigma_low,\
             high_critic_loss,high_actor_objective,low_critic_loss,low_actor_objective,update_steps,\
             high_buffer,low_buffer,gating_checked,gating_violations\n",
        );
        for r in &self.records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.episode,
                r.day,
                r.high_reward,
                opt(r.low_reward_mean),
                r.energy_cost,
                r.peak_load_kw,
                r.sigma_high,
                r.sigma_low,
                opt(r.high_critic_loss),
                opt(r.high_actor_objective),
                opt(r.low_critic_loss),
                opt(r.low_actor_objective),
                r.update_steps,
                r.high_buffer,
                r.low_buffer,
                r.gating_checked,
                r.gating_violations
            ));
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        let (gating_checked, gating_violations) = self.gating_totals();
        let s = LogSummary {
            layout: self.layout,
            hierarchical: self.hierarchical,
            gated_actions: self.gated_actions,
            critic_augmentation: self.critic_augmentation,
            effective_rho: self.effective_rho,
            episodes: self.records.len(),
            total_update_steps: self.total_update_steps(),
            gating_checked,
            gating_violations,
            first_window_mean_cost: self.window_mean_cost(50, false),
            last_window_mean_cost: self.window_mean_cost(50, true),
            last: self.records.last(),
        };
        Ok(serde_json::to_string_pretty(&s)?)
    }
}

/// Result of a finished run.
#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub bundle: PolicyBundle,
    pub log: TrainLog,
    pub high_buffer: ReplayBuffer<HighTransition>,
    pub low_buffer: ReplayBuffer<LowTransition>,
}

/// A run stopped by a numerical fault, with the last networks that were healthy.
#[derive(Debug)]
pub struct TrainFailure {
    pub error: Error,
    pub episode: usize,
    pub last_good: PolicyBundle,
    pub log: TrainLog,
}

impl std::fmt::Display for TrainFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "training stopped at episode {}: {}", self.episode, self.error)
    }
}

impl std::error::Error for TrainFailure {}

/// The same networks every run of `cfg` starts from.
pub fn initial_bundle(cfg: &RunConfig) -> Result<PolicyBundle> {
    let layout = ControlLayout::resolve(cfg.train.ablation, cfg.train.baseline);
    PolicyBundle::new(
        layout,
        cfg.station.n_piles,
        &cfg.train.net,
        &mut stream_rng(cfg.train.seed, streams::INIT),
    )
}

#[derive(Default)]
struct RoundStats {
    steps: usize,
    high_critic: Vec<f64>,
    high_actor: Vec<f64>,
    low_critic: Vec<f64>,
    low_actor: Vec<f64>,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

struct Learner<'c> {
    cfg: &'c RunConfig,
    high_buf: ReplayBuffer<HighTransition>,
    low_buf: ReplayBuffer<LowTransition>,
    sampling: ChaCha8Rng,
    scale: HighScale,
    low_cfg: LowUpdateConfig,
}

impl Learner<'_> {
    /// One gradient step per network where its buffer is warm, then target syncs.
    fn round(&mut self, bundle: &mut PolicyBundle, stats: &mut RoundStats) -> Result<()> {
        let t = &self.cfg.train;
        let mut touched = false;
        if let Some(high) = bundle.high.as_mut() {
            if self.high_buf.len() >= t.batch_size {
                let batch = self.high_buf.sample_minibatch(t.batch_size, &mut self.sampling)?;
                let l = update_high(&batch, high, t.gamma, self.scale)?;
                stats.high_critic.push(l.critic_loss);
                stats.high_actor.push(l.actor_objective);
                touched = true;
            }
        }
        if self.low_buf.len() >= t.batch_size {
            let batch = self.low_buf.sample_minibatch(t.batch_size, &mut self.sampling)?;
            for l in update_low_all(&batch, &mut bundle.low, &self.low_cfg)? {
                stats.low_critic.push(l.critic_loss);
                if let Some(a) = l.actor_objective {
                    stats.low_actor.push(a);
                }
            }
            touched = true;
        }
        if touched {
            bundle.soft_update_all(t.tau)?;
            stats.steps += 1;
        }
        Ok(())
    }

    fn store(&mut self, high: Vec<HighTransition>, low: Vec<LowTransition>) {
        high.into_iter().for_each(|h| self.high_buf.push(h));
        low.into_iter().for_each(|l| self.low_buf.push(l));
    }
}

/// Trains from scratch; see [`train_with`].
pub fn train(cfg: &RunConfig, traces: Arc<Traces>) -> std::result::Result<TrainOutcome, TrainFailure> {
    train_with(cfg, traces, &mut |_, _| Ok(()))
}

/// Trains for `cfg.train.episodes` simulated days, cycling through the trace days.
///
/// `on_checkpoint` receives the networks every `checkpoint_every` episodes.
pub fn train_with(
    cfg: &RunConfig,
    traces: Arc<Traces>,
    on_checkpoint: &mut dyn FnMut(usize, &PolicyBundle) -> Result<()>,
) -> std::result::Result<TrainOutcome, TrainFailure> {
    let t = &cfg.train;
    let layout = ControlLayout::resolve(t.ablation, t.baseline);
    let mut log = TrainLog {
        layout,
        hierarchical: layout == ControlLayout::Hierarchical,
        gated_actions: layout.action_mode() == crate::locontrol::ActionMode::Gated,
        critic_augmentation: t.effective_rho() > 0.0,
        effective_rho: t.effective_rho(),
        records: Vec::with_capacity(t.episodes),
    };
    let early = |error: Error, log: TrainLog| -> TrainFailure {
        let last_good = initial_bundle(cfg).unwrap_or(PolicyBundle {
            layout,
            n_piles: cfg.station.n_piles,
            high: None,
            low: Vec::new(),
        });
        TrainFailure {
            error,
            episode: 0,
            last_good,
            log,
        }
    };
    if let Err(e) = cfg.validate() {
        return Err(early(e, log));
    }
    let mut bundle = match initial_bundle(cfg) {
        Ok(b) => b,
        Err(e) => return Err(early(e, log)),
    };
    let mut station = match Station::new(cfg.station.clone(), Arc::clone(&traces)) {
        Ok(s) => s,
        Err(e) => return Err(early(e, log)),
    };
    let days = traces.days();
    if days == 0 {
        return Err(early(Error::Config("traces shorter than one day".into()), log));
    }

    let mut learner = Learner {
        cfg,
        high_buf: ReplayBuffer::new(t.buffer_capacity),
        low_buf: ReplayBuffer::new(t.buffer_capacity),
        sampling: stream_rng(t.seed, streams::SAMPLING),
        scale: HighScale {
            n_piles: cfg.station.n_piles,
            p_station_max_kw: cfg.station.p_station_max_kw,
        },
        low_cfg: LowUpdateConfig {
            gamma: t.gamma,
            rho: t.effective_rho(),
            epsilon: t.epsilon,
            clamp_augmentation: t.clamp_augmentation,
            mode: layout.action_mode(),
            p_station_max_kw: cfg.station.p_station_max_kw,
        },
    };
    let mut session_rng = stream_rng(t.seed, streams::SESSIONS);
    let mut noise_rng = stream_rng(t.seed, streams::NOISE);

    for episode in 0..t.episodes {
        let last_good = bundle.clone();
        let day = episode % days;
        let sessions = sample_ev_sessions(&mut session_rng, day, t.scenario, cfg.station.n_piles);
        let (sigma_high, sigma_low) = t.noise_at(episode);
        station.reset_accumulators();
        let mut stats = RoundStats::default();
        let result: Result<EpisodeSummary> = (|| {
            let exploration = Exploration {
                sigma_high,
                sigma_low,
                rng: &mut noise_rng,
            };
            match t.update_cadence {
                UpdateCadence::Episode => {
                    let out = run_episode(&mut station, &bundle, t, &cfg.penalty, day, &sessions, Some(exploration))?;
                    learner.store(out.high, out.low);
                    for _ in 0..t.updates_per_round {
                        learner.round(&mut bundle, &mut stats)?;
                    }
                    Ok(out.summary)
                }
                UpdateCadence::Slot => {
                    let mut exploration = exploration;
                    let mut agent = HucaAgent::new(&bundle, &station, t, &cfg.penalty, true)?;
                    station.begin_day(day, &sessions)?;
                    agent.begin_day();
                    for k in 0..SLOTS_PER_DAY {
                        let bounds = station.bounds();
                        let powers = {
                            let view = SlotView {
                                state: station.state(),
                                bounds: &bounds,
                                traces: station.traces(),
                                config: station.config(),
                            };
                            agent.decide(&bundle, &view, Some(&mut exploration))?
                        };
                        let ledger = station.step(&powers)?;
                        agent.observe(&ledger)?;
                        if k + 1 == SLOTS_PER_DAY {
                            agent.end_day();
                        }
                        learner.store(std::mem::take(&mut agent.high_out), std::mem::take(&mut agent.low_out));
                        for _ in 0..t.updates_per_round {
                            learner.round(&mut bundle, &mut stats)?;
                        }
                    }
                    Ok(agent.summary)
                }
            }
        })();
        let summary = match result {
            Ok(s) => s,
            Err(error) => {
                return Err(TrainFailure {
                    error,
                    episode,
                    last_good,
                    log,
                })
            }
        };
        log.records.push(EpisodeRecord {
            episode,
            day,
            high_reward: summary.high_reward,
            low_reward_mean: summary.low_reward_mean(),
            energy_cost: summary.energy_cost,
            peak_load_kw: summary.peak_load_kw,
            sigma_high,
            sigma_low,
            high_critic_loss: mean(&stats.high_critic),
            high_actor_objective: mean(&stats.high_actor),
            low_critic_loss: mean(&stats.low_critic),
            low_actor_objective: mean(&stats.low_actor),
            update_steps: stats.steps,
            high_buffer: learner.high_buf.len(),
            low_buffer: learner.low_buf.len(),
            gating_checked: summary.gating_checked,
            gating_violations: summary.gating_violations,
        });
        if t.checkpoint_every > 0 && (episode + 1) % t.checkpoint_every == 0 {
            if let Err(error) = on_checkpoint(episode + 1, &bundle) {
                return Err(TrainFailure {
                    error,
                    episode,
                    last_good: bundle,
                    log,
                });
            }
        }
    }
    Ok(TrainOutcome {
        bundle,
        log,
        high_buffer: learner.high_buf,
        low_buffer: learner.low_buf,
    })
}
