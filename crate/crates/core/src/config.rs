//! Run configuration and its flat `key = value` text form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netcore::NetShape;
use crate::simenv::{PenaltyConfig, Scenario, StationConfig};

/// Which parts of the controller are switched on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ablation {
    Full,
    NoCriticAug,
    NoHigh,
    NoEither,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [Ablation::Full, Ablation::NoCriticAug, Ablation::NoHigh, Ablation::NoEither];

    pub fn hierarchical(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoCriticAug)
    }

    pub fn critic_augmentation(self) -> bool {
        matches!(self, Ablation::Full | Ablation::NoHigh)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Ablation::Full => "full",
            Ablation::NoCriticAug => "no_critic_aug",
            Ablation::NoHigh => "no_high",
            Ablation::NoEither => "no_either",
        }
    }
}

impl std::str::FromStr for Ablation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "full" => Ok(Ablation::Full),
            "no-ca" | "no_ca" | "no_critic_aug" => Ok(Ablation::NoCriticAug),
            "no-high" | "no_high" => Ok(Ablation::NoHigh),
            "no-either" | "no_either" => Ok(Ablation::NoEither),
            other => Err(format!("unknown ablation '{other}' (expected full|no-ca|no-high|no-either)")),
        }
    }
}

impl std::fmt::Display for Ablation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Alternative single-agent learner replacing the pile agents.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// One shared actor-critic choosing a single action for every docked EV.
    Ddpg,
}

/// When gradient steps happen.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateCadence {
    /// After each simulated day.
    Episode,
    /// After every slot.
    Slot,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub episodes: usize,
    pub buffer_capacity: usize,
    pub batch_size: usize,
    pub gamma: f64,
    pub tau: f64,
    pub kappa: f64,
    pub phi: f64,
    pub omega: f64,
    pub rho: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub ablation: Ablation,
    pub scenario: Scenario,
    pub baseline: Option<Baseline>,
    pub price_window: usize,
    pub load_avg_window: usize,
    pub high_noise_start: f64,
    pub high_noise_end: f64,
    pub low_noise_start: f64,
    pub low_noise_end: f64,
    pub net: NetShape,
    pub update_cadence: UpdateCadence,
    pub updates_per_round: usize,
    pub clamp_augmentation: bool,
    pub checkpoint_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 1500,
            buffer_capacity: 30_000,
            batch_size: 1024,
            gamma: 0.99,
            tau: 0.005,
            kappa: 0.1,
            phi: 0.1,
            omega: 0.5,
            rho: 10.0,
            epsilon: 1e-6,
            seed: 0,
            ablation: Ablation::Full,
            scenario: Scenario::Certain,
            baseline: None,
            price_window: 3,
            load_avg_window: 24,
            high_noise_start: 0.3,
            high_noise_end: 0.02,
            low_noise_start: 0.5,
            low_noise_end: 0.05,
            net: NetShape::default(),
            update_cadence: UpdateCadence::Episode,
            updates_per_round: 1,
            clamp_augmentation: false,
            checkpoint_every: 0,
        }
    }
}

impl TrainConfig {
    /// Uncertainty weight actually used by the actor updates.
    pub fn effective_rho(&self) -> f64 {
        if self.ablation.critic_augmentation() && self.baseline.is_none() {
            self.rho
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("train: {m}")));
        if self.batch_size == 0 || self.batch_size > self.buffer_capacity {
            return bad("need 0 < batch_size <= buffer_capacity");
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return bad("kappa must lie in [0, 1]");
        }
        if !(self.epsilon > 0.0) || self.rho < 0.0 {
            return bad("need epsilon > 0 and rho >= 0");
        }
        if self.net.hidden.contains(&0) || !(self.net.actor_lr > 0.0 && self.net.critic_lr > 0.0) {
            return bad("hidden sizes and learning rates must be positive");
        }
        if self.updates_per_round == 0 {
            return bad("updates_per_round must be positive");
        }
        Ok(())
    }

    /// Exploration widths `(high, low)` for episode `e`, decaying linearly.
    pub fn noise_at(&self, episode: usize) -> (f64, f64) {
        let frac = if self.episodes > 1 {
            (episode as f64 / (self.episodes - 1) as f64).min(1.0)
        } else {
            1.0
        };
        let lerp = |a: f64, b: f64| a + (b - a) * frac;
        (
            lerp(self.high_noise_start, self.high_noise_end),
            lerp(self.low_noise_start, self.low_noise_end),
        )
    }
}

/// Everything needed to reproduce a training or evaluation run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub station: StationConfig,
    pub penalty: PenaltyConfig,
    pub eval_days: usize,
}

impl RunConfig {
    pub fn new() -> Self {
        Self {
            eval_days: 14,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.station.validate()?;
        self.penalty.validate()?;
        if self.eval_days == 0 {
            return Err(Error::Config("eval_days must be positive".into()));
        }
        Ok(())
    }

    /// Sets one field by its flat key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
        }
        fn parsed<T: std::str::FromStr<Err = String>>(v: &str) -> Result<T> {
            v.parse().map_err(Error::Config)
        }
        let t = &mut self.train;
        match key {
            "episodes" => t.episodes = num(key, value)?,
            "buffer_capacity" => t.buffer_capacity = num(key, value)?,
            "batch_size" => t.batch_size = num(key, value)?,
            "gamma" => t.gamma = num(key, value)?,
            "tau" => t.tau = num(key, value)?,
            "kappa" => t.kappa = num(key, value)?,
            "phi" => t.phi = num(key, value)?,
            "omega" => t.omega = num(key, value)?,
            "rho" => t.rho = num(key, value)?,
            "epsilon" => t.epsilon = num(key, value)?,
            "seed" => t.seed = num(key, value)?,
            "ablation" => t.ablation = parsed(value)?,
            "scenario" => t.scenario = parsed(value)?,
            "baseline" => {
                t.baseline = match value {
                    "none" | "" => None,
                    "ddpg" => Some(Baseline::Ddpg),
                    other => return Err(Error::Config(format!("baseline: unknown '{other}'"))),
                }
            }
            "price_window" => t.price_window = num(key, value)?,
            "load_avg_window" => t.load_avg_window = num(key, value)?,
            "high_noise_start" => t.high_noise_start = num(key, value)?,
            "high_noise_end" => t.high_noise_end = num(key, value)?,
            "low_noise_start" => t.low_noise_start = num(key, value)?,
            "low_noise_end" => t.low_noise_end = num(key, value)?,
            "hidden" => {
                t.net.hidden = value
                    .split(',')
                    .map(|h| num(key, h.trim()))
                    .collect::<Result<_>>()?
            }
            "actor_lr" => t.net.actor_lr = num(key, value)?,
            "critic_lr" => t.net.critic_lr = num(key, value)?,
            "update_cadence" => {
                t.update_cadence = match value {
                    "episode" => UpdateCadence::Episode,
                    "slot" => UpdateCadence::Slot,
                    other => return Err(Error::Config(format!("update_cadence: unknown '{other}'"))),
                }
            }
            "updates_per_round" => t.updates_per_round = num(key, value)?,
            "clamp_augmentation" => t.clamp_augmentation = num(key, value)?,
            "checkpoint_every" => t.checkpoint_every = num(key, value)?,
            "n_piles" => self.station.n_piles = num(key, value)?,
            "p_station_max_kw" => self.station.p_station_max_kw = num(key, value)?,
            "charge_efficiency" => self.station.charge_efficiency = num(key, value)?,
            "soc_hw_min" => self.station.soc_hw_min = num(key, value)?,
            "soc_hw_max" => self.station.soc_hw_max = num(key, value)?,
            "slot_hours" => self.station.slot_hours = num(key, value)?,
            "contract_kw" => self.penalty.contract_kw = num(key, value)?,
            "base_rate_usd_per_kw" => self.penalty.base_rate_usd_per_kw = num(key, value)?,
            "tier_threshold" => self.penalty.tier_threshold = num(key, value)?,
            "eval_days" => self.eval_days = num(key, value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key = value` document; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: i + 1,
                message: format!("expected 'key = value', got '{line}'"),
            })?;
            self.set(k.trim(), v.trim()).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = Self::new();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// Flat text form accepted by [`RunConfig::apply_text`].
    pub fn to_text(&self) -> String {
        let t = &self.train;
        let hidden: Vec<String> = t.net.hidden.iter().map(usize::to_string).collect();
        let rows: Vec<(&str, String)> = vec![
            ("episodes", t.episodes.to_string()),
            ("buffer_capacity", t.buffer_capacity.to_string()),
            ("batch_size", t.batch_size.to_string()),
            ("gamma", t.gamma.to_string()),
            ("tau", t.tau.to_string()),
            ("kappa", t.kappa.to_string()),
            ("phi", t.phi.to_string()),
            ("omega", t.omega.to_string()),
            ("rho", t.rho.to_string()),
            ("epsilon", t.epsilon.to_string()),
            ("seed", t.seed.to_string()),
            ("ablation", t.ablation.to_string()),
            ("scenario", t.scenario.to_string()),
            ("baseline", if t.baseline.is_some() { "ddpg" } else { "none" }.to_string()),
            ("price_window", t.price_window.to_string()),
            ("load_avg_window", t.load_avg_window.to_string()),
            ("high_noise_start", t.high_noise_start.to_string()),
            ("high_noise_end", t.high_noise_end.to_string()),
            ("low_noise_start", t.low_noise_start.to_string()),
            ("low_noise_end", t.low_noise_end.to_string()),
            ("hidden", hidden.join(",")),
            ("actor_lr", t.net.actor_lr.to_string()),
            ("critic_lr", t.net.critic_lr.to_string()),
            (
                "update_cadence",
                match t.update_cadence {
                    UpdateCadence::Episode => "episode",
                    UpdateCadence::Slot => "slot",
                }
                .to_string(),
            ),
            ("updates_per_round", t.updates_per_round.to_string()),
            ("clamp_augmentation", t.clamp_augmentation.to_string()),
            ("checkpoint_every", t.checkpoint_every.to_string()),
            ("n_piles", self.station.n_piles.to_string()),
            ("p_station_max_kw", self.station.p_station_max_kw.to_string()),
            ("charge_efficiency", self.station.charge_efficiency.to_string()),
            ("soc_hw_min", self.station.soc_hw_min.to_string()),
            ("soc_hw_max", self.station.soc_hw_max.to_string()),
            ("slot_hours", self.station.slot_hours.to_string()),
            ("contract_kw", self.penalty.contract_kw.to_string()),
            ("base_rate_usd_per_kw", self.penalty.base_rate_usd_per_kw.to_string()),
            ("tier_threshold", self.penalty.tier_threshold.to_string()),
            ("eval_days", self.eval_days.to_string()),
        ];
        rows.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
