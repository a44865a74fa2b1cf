use std::path::{Path, PathBuf};
use std::sync::Arc;

use huca_core::config::{Ablation, RunConfig};
use huca_core::evalkit::{
    comparison_csv, eval_sessions, evaluate, evaluate_baseline, greedy_oracle, ledger_csv, BaselinePolicy, EvalRun, MetricsReport,
};
use huca_core::traceio::{format_sig6, series_to_csv};
use huca_core::trainer::{initial_bundle, train_with, PolicyBundle, TrainLog};
use serde::Serialize;

use crate::args::PolicyKind;
use crate::error::{CliError, CliResult};
use crate::plan::{CommandKind, LoadedTraces, Plan, RunManifest};

/// Files written by one command, relative to its output directory.
struct Outputs<'a> {
    dir: &'a Path,
    written: Vec<String>,
}

impl<'a> Outputs<'a> {
    fn new(dir: &'a Path) -> CliResult<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self { dir, written: Vec::new() })
    }

    fn text(&mut self, rel: &str, content: &str) -> CliResult<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, content)?;
        self.written.push(rel.to_string());
        Ok(())
    }

    fn bundle(&mut self, rel: &str, bundle: &PolicyBundle) -> CliResult<()> {
        bundle.save_dir(&self.dir.join(rel))?;
        self.written.push(format!("{rel}/"));
        Ok(())
    }

    fn eval(&mut self, prefix: &str, run: &EvalRun) -> CliResult<()> {
        self.text(&format!("{prefix}metrics.json"), &run.report.to_json()?)?;
        self.text(&format!("{prefix}metrics.csv"), &run.report.to_csv())?;
        self.text(&format!("{prefix}ledger.csv"), &ledger_csv(&run.ledgers))
    }
}

/// Runs `plan` into `dir` and records a manifest there.
pub fn execute(plan: &Plan, dir: &Path) -> CliResult<String> {
    let traces = plan.traces.load()?;
    let mut out = Outputs::new(dir)?;
    let mut manifest = RunManifest::new(plan, &traces, chrono::Utc::now());
    let result = match plan.command {
        CommandKind::Train => run_train(plan, &traces, &mut out),
        CommandKind::Eval => run_eval(plan, &traces, &mut out),
        CommandKind::Ablate => run_ablate(plan, &traces, &mut out),
        CommandKind::Oracle => run_oracle(plan, &traces, &mut out),
        CommandKind::GenTraces => run_gen_traces(&traces, &mut out),
    };
    manifest.outputs = std::mem::take(&mut out.written);
    manifest.write(dir, if result.is_ok() { "ok" } else { "failed" })?;
    result
}

#[derive(Serialize)]
struct Summary<'a> {
    status: &'static str,
    command: &'static str,
    out_dir: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<&'a MetricsReport>,
}

fn summary(plan: &Plan, dir: &Path, metrics: Option<&MetricsReport>) -> CliResult<String> {
    let s = Summary {
        status: "ok",
        command: plan.command.name(),
        out_dir: dir.display().to_string(),
        metrics,
    };
    Ok(serde_json::to_string(&s).map_err(huca_core::Error::from)?)
}

fn train_logged(cfg: &RunConfig, traces: &LoadedTraces, out: &mut Outputs, ckpt_prefix: &str) -> CliResult<(PolicyBundle, TrainLog)> {
    let dir = out.dir.to_path_buf();
    let mut saved = Vec::new();
    let result = train_with(cfg, Arc::clone(&traces.traces), &mut |episode, bundle| {
        let rel = format!("{ckpt_prefix}ep_{episode}");
        bundle.save_dir(&dir.join(&rel))?;
        saved.push(format!("{rel}/"));
        Ok(())
    });
    out.written.extend(saved);
    match result {
        Ok(o) => Ok((o.bundle, o.log)),
        Err(f) => {
            out.bundle(&format!("{ckpt_prefix}last_good"), &f.last_good)?;
            out.text(&format!("{ckpt_prefix}logs.csv"), &f.log.to_csv())?;
            Err(f.into())
        }
    }
}

fn run_train(plan: &Plan, traces: &LoadedTraces, out: &mut Outputs) -> CliResult<String> {
    let cfg = &plan.config;
    let (bundle, log) = train_logged(cfg, traces, out, "checkpoints/")?;
    out.bundle("checkpoints/final", &bundle)?;
    out.text("logs.csv", &log.to_csv())?;
    out.text("log_summary.json", &log.summary_json()?)?;
    let run = evaluate(&bundle, cfg, Arc::clone(&traces.traces), &plan.eval)?;
    out.eval("", &run)?;
    summary(plan, out.dir, Some(&run.report))
}

/// Accepts a checkpoint directory or a train run directory.
fn resolve_checkpoint(path: &Path) -> PathBuf {
    let nested = path.join("checkpoints").join("final");
    if !path.join("bundle.json").exists() && nested.join("bundle.json").exists() {
        nested
    } else {
        path.to_path_buf()
    }
}

fn run_eval(plan: &Plan, traces: &LoadedTraces, out: &mut Outputs) -> CliResult<String> {
    let cfg = &plan.config;
    let t = Arc::clone(&traces.traces);
    let run = match plan.policy.unwrap_or(PolicyKind::Model) {
        PolicyKind::Model => {
            let bundle = match &plan.checkpoint {
                Some(p) => PolicyBundle::load_dir(&resolve_checkpoint(p))?,
                None => initial_bundle(cfg)?,
            };
            if bundle.n_piles != cfg.station.n_piles {
                return Err(CliError::Usage(format!(
                    "checkpoint has {} piles, configuration has {}",
                    bundle.n_piles, cfg.station.n_piles
                )));
            }
            evaluate(&bundle, cfg, t, &plan.eval)?
        }
        PolicyKind::Random => evaluate_baseline(BaselinePolicy::Random, cfg, t, &plan.eval)?,
        PolicyKind::MaxChargeToTarget => evaluate_baseline(BaselinePolicy::MaxChargeToTarget, cfg, t, &plan.eval)?,
        PolicyKind::MaxCharge => evaluate_baseline(BaselinePolicy::MaxCharge, cfg, t, &plan.eval)?,
    };
    out.eval("", &run)?;
    summary(plan, out.dir, Some(&run.report))
}

fn run_ablate(plan: &Plan, traces: &LoadedTraces, out: &mut Outputs) -> CliResult<String> {
    let mut rows = Vec::new();
    for ablation in Ablation::ALL {
        let name = ablation.as_str();
        let mut cfg = plan.config.clone();
        cfg.train.ablation = ablation;
        let (bundle, log) = train_logged(&cfg, traces, out, &format!("checkpoints/{name}/"))?;
        out.bundle(&format!("checkpoints/{name}"), &bundle)?;
        out.text(&format!("logs/{name}.csv"), &log.to_csv())?;
        let run = evaluate(&bundle, &cfg, Arc::clone(&traces.traces), &plan.eval)?;
        out.text(&format!("ledgers/{name}.csv"), &ledger_csv(&run.ledgers))?;
        rows.push((name.to_string(), run.report));
    }
    out.text("comparison.csv", &comparison_csv(&rows))?;
    summary(plan, out.dir, None)
}

#[derive(Serialize)]
struct OracleInfo {
    feasible: bool,
    infeasible_sessions: usize,
    bound_adjustments: usize,
}

fn run_oracle(plan: &Plan, traces: &LoadedTraces, out: &mut Outputs) -> CliResult<String> {
    let cfg = &plan.config;
    let days = eval_sessions(&plan.eval, cfg.station.n_piles, traces.traces.days())?;
    let result = greedy_oracle(&days, Arc::clone(&traces.traces), &cfg.station, &cfg.penalty)?;
    let mut csv = String::from("slot");
    for i in 0..cfg.station.n_piles {
        csv.push_str(&format!(",pile_{i}_power"));
    }
    csv.push('\n');
    for (slot, row) in result.schedule.iter().enumerate() {
        csv.push_str(&slot.to_string());
        for p in row {
            csv.push(',');
            csv.push_str(&format_sig6(*p));
        }
        csv.push('\n');
    }
    out.text("schedule.csv", &csv)?;
    out.eval("", &result.run)?;
    let info = OracleInfo {
        feasible: result.feasible(),
        infeasible_sessions: result.infeasible_sessions,
        bound_adjustments: result.bound_adjustments,
    };
    out.text("oracle.json", &serde_json::to_string_pretty(&info).map_err(huca_core::Error::from)?)?;
    summary(plan, out.dir, Some(&result.run.report))
}

fn run_gen_traces(traces: &LoadedTraces, out: &mut Outputs) -> CliResult<String> {
    out.text("load.csv", &series_to_csv(traces.start, traces.traces.load.values()))?;
    out.text("price.csv", &series_to_csv(traces.start, traces.traces.price.values()))?;
    let s = serde_json::json!({
        "status": "ok",
        "command": "gen-traces",
        "out_dir": out.dir.display().to_string(),
        "days": traces.traces.days(),
        "sha256": traces.hash,
    });
    Ok(s.to_string())
}
