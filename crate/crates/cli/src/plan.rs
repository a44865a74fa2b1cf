use std::path::{Path, PathBuf};
use std::sync::Arc;

use huca_core::config::RunConfig;
use huca_core::evalkit::EvalSpec;
use huca_core::simenv::Traces;
use huca_core::traceio::{ingest_traces, synthetic_start, synthetic_traces_seeded, SyntheticProfile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{CommonArgs, PolicyKind};
use crate::error::{CliError, CliResult};

pub const DEFAULT_SYNTHETIC_DAYS: usize = 28;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Train,
    Eval,
    Ablate,
    Oracle,
    GenTraces,
}

impl CommandKind {
    pub fn name(self) -> &'static str {
        match self {
            CommandKind::Train => "train",
            CommandKind::Eval => "eval",
            CommandKind::Ablate => "ablate",
            CommandKind::Oracle => "oracle",
            CommandKind::GenTraces => "gen-traces",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum TraceSource {
    Synthetic { seed: u64, days: usize, profile: SyntheticProfile },
    Csv { load: PathBuf, price: PathBuf },
}

/// Traces plus where they came from.
pub struct LoadedTraces {
    pub traces: Arc<Traces>,
    pub start: chrono::NaiveDateTime,
    pub hash: String,
}

impl TraceSource {
    pub fn load(&self) -> CliResult<LoadedTraces> {
        let (traces, start) = match self {
            TraceSource::Synthetic { seed, days, profile } => (synthetic_traces_seeded(*seed, *days, profile)?, synthetic_start()),
            TraceSource::Csv { load, price } => {
                let set = ingest_traces(load, price)?;
                (set.traces, set.start)
            }
        };
        let hash = content_hash(&traces)?;
        Ok(LoadedTraces {
            traces: Arc::new(traces),
            start,
            hash,
        })
    }
}

/// Git-style object hash (`blob <len>\0<content>`) of the traces, SHA-256.
pub fn content_hash(traces: &Traces) -> CliResult<String> {
    let content = serde_json::to_vec(&(traces.load.values(), traces.price.values())).map_err(huca_core::Error::from)?;
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", content.len()).as_bytes());
    h.update(&content);
    Ok(hex::encode(h.finalize()))
}

/// Everything a command needs; stored in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub command: CommandKind,
    pub config: RunConfig,
    pub traces: TraceSource,
    pub eval: EvalSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Merges the config file and flags into a plan.
pub fn resolve(command: CommandKind, a: &CommonArgs) -> CliResult<Plan> {
    let mut cfg = RunConfig::new();
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
        cfg.apply_text(&text).map_err(|e| usage(format!("--config {}: {e}", path.display())))?;
    }
    if let Some(v) = a.seed {
        cfg.train.seed = v;
    }
    if let Some(v) = a.scenario {
        cfg.train.scenario = v;
    }
    if let Some(v) = a.piles {
        cfg.station.n_piles = v;
    }
    if let Some(v) = a.episodes {
        cfg.train.episodes = v;
    }
    if let Some(v) = a.ablation {
        if command == CommandKind::Ablate {
            return Err(usage("--ablation cannot be combined with ablate, which runs every variant"));
        }
        cfg.train.ablation = v;
    }
    if let Some(v) = a.rho {
        cfg.train.rho = v;
    }
    if let Some(v) = a.eval_days {
        cfg.eval_days = v;
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let traces = match (&a.load_csv, &a.price_csv, a.synthetic_days) {
        (Some(_), Some(_), Some(_)) => return Err(usage("--synthetic-days conflicts with --load-csv/--price-csv")),
        (Some(load), Some(price), None) => {
            if command == CommandKind::GenTraces {
                return Err(usage("gen-traces does not read CSV traces"));
            }
            TraceSource::Csv {
                load: load.clone(),
                price: price.clone(),
            }
        }
        (None, None, days) => {
            let days = days.unwrap_or(DEFAULT_SYNTHETIC_DAYS);
            if days == 0 {
                return Err(usage("--synthetic-days must be at least 1"));
            }
            TraceSource::Synthetic {
                seed: cfg.train.seed,
                days,
                profile: SyntheticProfile::default(),
            }
        }
        _ => return Err(usage("--load-csv and --price-csv must be given together")),
    };
    let eval = EvalSpec {
        scenario: cfg.train.scenario,
        days: cfg.eval_days,
        first_day: 0,
        seed: a.eval_seed.unwrap_or(cfg.train.seed),
    };
    Ok(Plan {
        command,
        config: cfg,
        traces,
        eval,
        policy: None,
        checkpoint: None,
    })
}

/// Output root from `HUCA_RUN_DIR`, else `runs`.
pub fn run_root() -> PathBuf {
    std::env::var_os("HUCA_RUN_DIR").map_or_else(|| PathBuf::from("runs"), PathBuf::from)
}

pub fn out_dir(out: Option<&Path>, plan: &Plan) -> PathBuf {
    match out {
        Some(p) if p.is_absolute() => p.to_path_buf(),
        Some(p) => run_root().join(p),
        None => run_root().join(format!("{}-{}-seed{}", plan.command.name(), plan.config.train.scenario, plan.config.train.seed)),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceInfo {
    pub sha256: String,
    pub days: usize,
    pub start: String,
}

/// Written once per output directory; enough to repeat the run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: CommandKind,
    pub seed: u64,
    pub plan: Plan,
    /// The resolved configuration in the flat file format.
    pub config_text: String,
    pub traces: TraceInfo,
    pub started_utc: String,
    pub finished_utc: String,
    pub status: String,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(plan: &Plan, traces: &LoadedTraces, started: chrono::DateTime<chrono::Utc>) -> Self {
        Self {
            tool: "huca".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: plan.command,
            seed: plan.config.train.seed,
            config_text: plan.config.to_text(),
            plan: plan.clone(),
            traces: TraceInfo {
                sha256: traces.hash.clone(),
                days: traces.traces.days(),
                start: traces.start.format("%Y-%m-%d %H:%M:%S").to_string(),
            },
            started_utc: started.to_rfc3339(),
            finished_utc: String::new(),
            status: "running".into(),
            outputs: Vec::new(),
        }
    }

    pub fn write(&mut self, dir: &Path, status: &str) -> CliResult<()> {
        self.status = status.into();
        self.finished_utc = chrono::Utc::now().to_rfc3339();
        self.outputs.sort();
        self.outputs.dedup();
        let text = serde_json::to_string_pretty(self).map_err(huca_core::Error::from)?;
        std::fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}
