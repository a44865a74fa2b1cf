use std::sync::Arc;

use huca_core::simenv::{
    penalty_cost, sample_ev_sessions, PenaltyConfig, Scenario, Station, StationConfig, TimeSlot, SLOTS_PER_DAY,
};
use huca_core::traceio::{constant_traces, synthetic_traces_seeded, SyntheticProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn station(n: usize, days: usize) -> Station {
    let cfg = StationConfig {
        n_piles: n,
        ..StationConfig::default()
    };
    let traces = synthetic_traces_seeded(4, days, &SyntheticProfile::default()).unwrap();
    Station::new(cfg, Arc::new(traces)).unwrap()
}

#[test]
fn random_powers_keep_every_invariant() {
    let mut st = station(6, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = st.config().clone();
    for day in 0..5 {
        let sessions = sample_ev_sessions(&mut rng, day, Scenario::Uncertain, cfg.n_piles);
        st.begin_day(day, &sessions).unwrap();
        for _ in 0..SLOTS_PER_DAY {
            let bounds = st.bounds();
            let powers: Vec<f64> = bounds
                .iter()
                .map(|b| b.map_or(0.0, |b| rng.random_range(b.min_kw..=b.max_kw)))
                .collect();
            let total: f64 = powers.iter().sum();
            assert!(powers.iter().map(|p| p.abs()).sum::<f64>() <= cfg.p_station_max_kw + 1e-9);
            let ledger = st.step(&powers).unwrap();
            assert_eq!(ledger.clamp_faults, 0);
            assert!((ledger.total_load_kw - ledger.building_load_kw - total).abs() < 1e-9);
            assert!((ledger.energy_cost - ledger.price * ledger.total_load_kw * cfg.slot_hours).abs() < 1e-9);
            for soc in ledger.soc_after.iter().flatten() {
                assert!(*soc >= cfg.soc_hw_min - 1e-9 && *soc <= cfg.soc_hw_max + 1e-9);
            }
            for dep in &ledger.departures {
                if dep.session.t_dep_actual == dep.session.t_dep_planned {
                    assert!(dep.final_soc >= dep.session.soc_dep_expected - 1e-9);
                }
            }
        }
    }
}

#[test]
fn day_without_evs_is_just_the_building() {
    let mut st = station(3, 1);
    st.begin_day(0, &[]).unwrap();
    for h in 0..SLOTS_PER_DAY {
        assert!(st.bounds().iter().all(Option::is_none));
        let ledger = st.step(&[0.0; 3]).unwrap();
        assert_eq!(ledger.slot, TimeSlot::at(0, h));
        assert_eq!(ledger.total_load_kw, ledger.building_load_kw);
        assert!(ledger.departures.is_empty());
    }
}

#[test]
fn power_on_an_empty_pile_is_rejected() {
    let mut st = station(2, 1);
    st.begin_day(0, &[]).unwrap();
    assert!(st.step(&[5.0, 0.0]).is_err());
}

#[test]
fn sessions_respect_scenario_timing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for day in 0..200 {
        for s in sample_ev_sessions(&mut rng, day % 7, Scenario::Certain, 4) {
            s.validate().unwrap();
            assert_eq!(s.t_dep_actual, s.t_dep_planned);
            assert!(s.soc_arr < s.soc_dep_expected);
        }
        for s in sample_ev_sessions(&mut rng, day % 7, Scenario::Uncertain, 4) {
            s.validate().unwrap();
            assert!(s.t_dep_actual <= s.t_dep_planned && s.t_dep_actual > s.t_arr);
        }
    }
}

#[test]
fn penalty_is_monotone_and_scales_with_rate() {
    let cfg = PenaltyConfig::default();
    let doubled = PenaltyConfig {
        base_rate_usd_per_kw: 2.0 * cfg.base_rate_usd_per_kw,
        ..cfg.clone()
    };
    let mut prev = 0.0;
    for i in 0..2000 {
        let peak = i as f64 * 0.5;
        let c = penalty_cost(peak, &cfg);
        assert!(c >= prev);
        assert_eq!(penalty_cost(peak, &doubled), 2.0 * c);
        prev = c;
    }
}

#[test]
fn constant_traces_have_exact_cost() {
    let cfg = StationConfig {
        n_piles: 1,
        ..StationConfig::default()
    };
    let mut st = Station::new(cfg, Arc::new(constant_traces(1, 300.0, 0.05).unwrap())).unwrap();
    st.begin_day(0, &[]).unwrap();
    let ledger = st.step(&[0.0]).unwrap();
    assert!((ledger.energy_cost - 15.0).abs() < 1e-12);
}
