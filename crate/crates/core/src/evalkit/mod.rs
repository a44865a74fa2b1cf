//! Policy evaluation, session metrics, baselines and the price-greedy oracle.

mod baselines;
mod metrics;
mod oracle;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use baselines::{ChargeOnly, MaxCharge, MaxChargeToTarget, RandomPolicy, ScheduleController};
pub use metrics::{soc_fulfillment, soc_maintenance, user_satisfaction, MetricsReport, SessionOutcome};
pub use oracle::{greedy_oracle, OracleResult};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::simenv::{run_day, Controller, EvSession, PenaltyConfig, Scenario, SlotLedger, Station, StationConfig, Traces};
use crate::trainer::{stream_rng, streams, HucaAgent, HucaController, PolicyBundle};

/// Which days to simulate and how EVs are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalSpec {
    pub scenario: Scenario,
    pub days: usize,
    /// Trace day of the first evaluated day; later days follow cyclically.
    pub first_day: usize,
    pub seed: u64,
}

/// EV sessions for one simulated day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaySessions {
    pub day: usize,
    pub sessions: Vec<EvSession>,
}

/// Sessions every policy is evaluated on for `spec`.
pub fn eval_sessions(spec: &EvalSpec, n_piles: usize, trace_days: usize) -> Result<Vec<DaySessions>> {
    if trace_days == 0 {
        return Err(Error::Config("traces shorter than one day".into()));
    }
    let mut rng = stream_rng(spec.seed, streams::EVAL);
    Ok((0..spec.days)
        .map(|k| {
            let day = (spec.first_day + k) % trace_days;
            DaySessions {
                day,
                sessions: crate::simenv::sample_ev_sessions(&mut rng, day, spec.scenario, n_piles),
            }
        })
        .collect())
}

/// Slot ledgers, finished sessions and the resulting metrics.
#[derive(Clone, Debug)]
pub struct EvalRun {
    pub report: MetricsReport,
    pub ledgers: Vec<SlotLedger>,
    pub outcomes: Vec<SessionOutcome>,
}

/// Runs `controller` over the given days on a fresh station.
pub fn run_horizon(
    controller: &mut dyn Controller,
    station_cfg: &StationConfig,
    penalty: &PenaltyConfig,
    traces: Arc<Traces>,
    days: &[DaySessions],
) -> Result<EvalRun> {
    let mut station = Station::new(station_cfg.clone(), traces)?;
    let mut ledgers = Vec::with_capacity(days.len() * crate::simenv::SLOTS_PER_DAY);
    for d in days {
        ledgers.extend(run_day(&mut station, controller, d.day, &d.sessions)?);
    }
    let outcomes: Vec<SessionOutcome> = ledgers
        .iter()
        .flat_map(|l| l.departures.iter().map(SessionOutcome::from_departure))
        .collect();
    Ok(EvalRun {
        report: MetricsReport::from_run(&ledgers, &outcomes, penalty),
        ledgers,
        outcomes,
    })
}

/// Greedy (noise-free) execution of trained networks.
pub fn evaluate(bundle: &PolicyBundle, cfg: &RunConfig, traces: Arc<Traces>, spec: &EvalSpec) -> Result<EvalRun> {
    evaluate_controlled(bundle, cfg, traces, spec, false)
}

/// As [`evaluate`], optionally with every discharge replaced by idling.
pub fn evaluate_controlled(bundle: &PolicyBundle, cfg: &RunConfig, traces: Arc<Traces>, spec: &EvalSpec, charge_only: bool) -> Result<EvalRun> {
    let days = eval_sessions(spec, cfg.station.n_piles, traces.days())?;
    let probe = Station::new(cfg.station.clone(), Arc::clone(&traces))?;
    let agent = HucaAgent::new(bundle, &probe, &cfg.train, &cfg.penalty, false)?;
    let ctrl = HucaController {
        agent,
        bundle,
        exploration: None,
    };
    if charge_only {
        run_horizon(&mut ChargeOnly(ctrl), &cfg.station, &cfg.penalty, traces, &days)
    } else {
        let mut ctrl = ctrl;
        run_horizon(&mut ctrl, &cfg.station, &cfg.penalty, traces, &days)
    }
}

/// Reference policies evaluated alongside learned ones.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselinePolicy {
    Random,
    MaxChargeToTarget,
    MaxCharge,
}

pub fn evaluate_baseline(kind: BaselinePolicy, cfg: &RunConfig, traces: Arc<Traces>, spec: &EvalSpec) -> Result<EvalRun> {
    let days = eval_sessions(spec, cfg.station.n_piles, traces.days())?;
    let mut ctrl: Box<dyn Controller> = match kind {
        BaselinePolicy::Random => Box::new(RandomPolicy::new(stream_rng(spec.seed, streams::NOISE))),
        BaselinePolicy::MaxChargeToTarget => Box::new(MaxChargeToTarget),
        BaselinePolicy::MaxCharge => Box::new(MaxCharge),
    };
    run_horizon(ctrl.as_mut(), &cfg.station, &cfg.penalty, traces, &days)
}

/// `slot,building_load,price,total_load,pile_i_power...,pile_i_soc...` rows.
pub fn ledger_csv(ledgers: &[SlotLedger]) -> String {
    let n = ledgers.first().map_or(0, |l| l.powers_kw.len());
    let mut out = String::from("slot,building_load,price,total_load");
    for i in 0..n {
        out.push_str(&format!(",pile_{i}_power"));
    }
    for i in 0..n {
        out.push_str(&format!(",pile_{i}_soc"));
    }
    out.push('\n');
    for l in ledgers {
        out.push_str(&format!("{},{},{},{}", l.slot.0, l.building_load_kw, l.price, l.total_load_kw));
        for p in &l.powers_kw {
            out.push_str(&format!(",{p}"));
        }
        for s in &l.soc_after {
            match s {
                Some(s) => out.push_str(&format!(",{s}")),
                None => out.push(','),
            }
        }
        out.push('\n');
    }
    out
}

/// Labelled metrics rows sharing one header.
pub fn comparison_csv(rows: &[(String, MetricsReport)]) -> String {
    let mut out = format!("name,{}\n", MetricsReport::CSV_HEADER);
    for (name, r) in rows {
        out.push_str(&format!("{name},{}\n", r.csv_row()));
    }
    out
}
