use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Ablation, Baseline};
use crate::error::{Error, Result};
use crate::hicontrol::HighState;
use crate::locontrol::{ActionMode, LowState};
use crate::netcore::{ActorCritic, NetShape};

/// How the learned networks are wired to the piles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlLayout {
    /// High-level agent plus one gated agent per pile.
    Hierarchical,
    /// One ungated agent per pile, no high-level agent.
    Flat,
    /// A single agent driving every pile with one action.
    Pooled,
}

impl ControlLayout {
    pub fn resolve(ablation: Ablation, baseline: Option<Baseline>) -> Self {
        match (baseline, ablation.hierarchical()) {
            (Some(Baseline::Ddpg), _) => ControlLayout::Pooled,
            (None, true) => ControlLayout::Hierarchical,
            (None, false) => ControlLayout::Flat,
        }
    }

    pub fn action_mode(self) -> ActionMode {
        match self {
            ControlLayout::Hierarchical => ActionMode::Gated,
            _ => ActionMode::Free,
        }
    }

    /// Number of learned low-level agents for `n_piles` piles.
    pub fn low_agents(self, n_piles: usize) -> usize {
        match self {
            ControlLayout::Pooled => 1,
            _ => n_piles,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct BundleMeta {
    layout: ControlLayout,
    n_piles: usize,
    low_agents: usize,
}

/// Every network a controller needs; one checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyBundle {
    pub layout: ControlLayout,
    pub n_piles: usize,
    pub high: Option<ActorCritic>,
    pub low: Vec<ActorCritic>,
}

impl PolicyBundle {
    /// Fresh networks; the high-level pair is initialized first.
    pub fn new<R: Rng + ?Sized>(layout: ControlLayout, n_piles: usize, shape: &NetShape, rng: &mut R) -> Result<Self> {
        if n_piles == 0 {
            return Err(Error::Config("at least one pile is required".into()));
        }
        let high = match layout {
            ControlLayout::Hierarchical => Some(ActorCritic::new(HighState::DIM, HighState::DIM + 1, shape, rng)?),
            _ => None,
        };
        let k = layout.low_agents(n_piles);
        let low = (0..k)
            .map(|_| ActorCritic::new(LowState::DIM, k * (LowState::DIM + 1), shape, rng))
            .collect::<Result<_>>()?;
        Ok(Self {
            layout,
            n_piles,
            high,
            low,
        })
    }

    pub fn soft_update_all(&mut self, tau: f64) -> Result<()> {
        if let Some(h) = self.high.as_mut() {
            h.soft_update_targets(tau)?;
        }
        self.low.iter_mut().try_for_each(|a| a.soft_update_targets(tau))
    }

    /// Checkpoint files as `(name, contents)` in a fixed order.
    pub fn to_files(&self) -> Result<Vec<(String, String)>> {
        let meta = BundleMeta {
            layout: self.layout,
            n_piles: self.n_piles,
            low_agents: self.low.len(),
        };
        let mut files = vec![("bundle.json".to_string(), serde_json::to_string_pretty(&meta)?)];
        if let Some(h) = &self.high {
            files.push(("high.json".to_string(), h.to_json()?));
        }
        for (i, a) in self.low.iter().enumerate() {
            files.push((format!("low_{i}.json"), a.to_json()?));
        }
        Ok(files)
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in self.to_files()? {
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            std::fs::read_to_string(dir.join(name)).map_err(|e| Error::Io(format!("{}: {e}", dir.join(name).display())))
        };
        let meta: BundleMeta = serde_json::from_str(&read("bundle.json")?)?;
        let high = match meta.layout {
            ControlLayout::Hierarchical => Some(ActorCritic::from_json(&read("high.json")?)?),
            _ => None,
        };
        let low = (0..meta.low_agents)
            .map(|i| ActorCritic::from_json(&read(&format!("low_{i}.json"))?))
            .collect::<Result<Vec<_>>>()?;
        let bundle = Self {
            layout: meta.layout,
            n_piles: meta.n_piles,
            high,
            low,
        };
        bundle.check()?;
        Ok(bundle)
    }

    /// Verifies network dimensions against the layout.
    pub fn check(&self) -> Result<()> {
        let k = self.layout.low_agents(self.n_piles);
        if self.low.len() != k {
            return Err(Error::Shape {
                expected: k,
                got: self.low.len(),
            });
        }
        for a in &self.low {
            if a.actor.input_dim() != LowState::DIM || a.critic.input_dim() != k * (LowState::DIM + 1) {
                return Err(Error::SpecMismatch);
            }
        }
        match (&self.high, self.layout) {
            (Some(h), ControlLayout::Hierarchical) if h.actor.input_dim() == HighState::DIM => Ok(()),
            (None, ControlLayout::Flat | ControlLayout::Pooled) => Ok(()),
            _ => Err(Error::SpecMismatch),
        }
    }
}
