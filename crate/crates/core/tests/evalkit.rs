use std::sync::Arc;

use huca_core::config::RunConfig;
use huca_core::evalkit::{evaluate, evaluate_baseline, BaselinePolicy, EvalSpec, MetricsReport};
use huca_core::simenv::{PenaltyConfig, Scenario};
use huca_core::traceio::{synthetic_traces_seeded, SyntheticProfile};
use huca_core::trainer::initial_bundle;

fn setup() -> (RunConfig, Arc<huca_core::simenv::Traces>, EvalSpec) {
    let mut cfg = RunConfig::new();
    cfg.station.n_piles = 4;
    let traces = Arc::new(synthetic_traces_seeded(12, 7, &SyntheticProfile::default()).unwrap());
    let spec = EvalSpec {
        scenario: Scenario::Uncertain,
        days: 5,
        first_day: 0,
        seed: 31,
    };
    (cfg, traces, spec)
}

#[test]
fn doubling_prices_doubles_energy_cost_only() {
    let (cfg, traces, spec) = setup();
    let doubled = Arc::new(traces.with_price_scale(2.0));
    let a = evaluate_baseline(BaselinePolicy::MaxChargeToTarget, &cfg, traces, &spec).unwrap().report;
    let b = evaluate_baseline(BaselinePolicy::MaxChargeToTarget, &cfg, doubled, &spec).unwrap().report;
    assert!((b.energy_cost_usd - 2.0 * a.energy_cost_usd).abs() <= 1e-9 * a.energy_cost_usd.abs());
    assert_eq!(a.penalty_cost_usd, b.penalty_cost_usd);
    assert_eq!(a.peak_load_kw, b.peak_load_kw);
}

#[test]
fn totals_add_up_for_every_policy() {
    let (cfg, traces, spec) = setup();
    let bundle = initial_bundle(&cfg).unwrap();
    let mut reports = vec![evaluate(&bundle, &cfg, Arc::clone(&traces), &spec).unwrap().report];
    for p in [BaselinePolicy::Random, BaselinePolicy::MaxChargeToTarget, BaselinePolicy::MaxCharge] {
        reports.push(evaluate_baseline(p, &cfg, Arc::clone(&traces), &spec).unwrap().report);
    }
    for r in reports {
        assert_eq!(r.total_cost_usd, r.energy_cost_usd + r.penalty_cost_usd);
        assert_eq!(r.n_sessions, 4 * 5);
        assert_eq!(r.clamp_faults, 0);
    }
}

#[test]
fn session_metrics_do_not_depend_on_price_level() {
    let (cfg, traces, spec) = setup();
    let scaled = Arc::new(traces.with_price_scale(3.0));
    let a = evaluate_baseline(BaselinePolicy::MaxCharge, &cfg, traces, &spec).unwrap().report;
    let b = evaluate_baseline(BaselinePolicy::MaxCharge, &cfg, scaled, &spec).unwrap().report;
    assert_eq!(a.soc_fulfillment_pct, b.soc_fulfillment_pct);
    assert_eq!(a.soc_maintenance_pct, b.soc_maintenance_pct);
    assert_eq!(a.user_satisfaction_pct, b.user_satisfaction_pct);
}

#[test]
fn empty_run_reports_zero_costs() {
    let r = MetricsReport::from_run(&[], &[], &PenaltyConfig::default());
    assert_eq!(r.total_cost_usd, 0.0);
    assert_eq!(r.n_sessions, 0);
    assert!(r.soc_fulfillment_pct.is_none());
    assert!(!r.csv_row().contains("-0"));
}

#[test]
fn evaluation_is_repeatable() {
    let (cfg, traces, spec) = setup();
    let bundle = initial_bundle(&cfg).unwrap();
    let a = evaluate(&bundle, &cfg, Arc::clone(&traces), &spec).unwrap().report;
    let b = evaluate(&bundle, &cfg, traces, &spec).unwrap().report;
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}
