//! Hour-by-hour stepping of the charging station.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::physics::{apply_power, per_pile_power_limit, power_boundaries, PowerBounds};
use super::types::{EvSession, StationConfig, TimeSlot, Traces, SLOTS_PER_DAY};
use crate::error::{Error, Result};

/// Powers within this distance of a bound are accepted and snapped onto it.
pub const BOUNDARY_TOL_KW: f64 = 1e-9;

/// An EV currently plugged into a pile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DockedEv {
    pub session: EvSession,
    pub soc: f64,
    /// SoC at the start of every slot since arrival.
    pub soc_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PileState {
    pub pile_id: usize,
    pub docked: Option<DockedEv>,
}

impl PileState {
    pub fn session(&self) -> Option<&EvSession> {
        self.docked.as_ref().map(|d| &d.session)
    }

    pub fn soc_now(&self) -> Option<f64> {
        self.docked.as_ref().map(|d| d.soc)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationState {
    pub slot: TimeSlot,
    pub piles: Vec<PileState>,
    pub building_load_kw: f64,
    pub price: f64,
    pub peak_load_kw: f64,
    pub cumulative_energy_cost: f64,
}

impl StationState {
    pub fn n_docked(&self) -> usize {
        self.piles.iter().filter(|p| p.docked.is_some()).count()
    }
}

/// An EV leaving at the end of a slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Departure {
    pub pile: usize,
    pub session: EvSession,
    pub final_soc: f64,
    /// SoC at the start of each slot from arrival through departure.
    pub soc_history: Vec<f64>,
}

impl Departure {
    /// SoC held when slot `slot` began.
    pub fn soc_at(&self, slot: TimeSlot) -> Option<f64> {
        let k = slot.0.checked_sub(self.session.t_arr.0)?;
        self.soc_history.get(k).copied()
    }
}

/// What happened in one slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlotLedger {
    pub slot: TimeSlot,
    pub building_load_kw: f64,
    pub price: f64,
    pub total_load_kw: f64,
    pub energy_cost: f64,
    pub powers_kw: Vec<f64>,
    /// Post-step SoC for piles that held an EV during the slot.
    pub soc_after: Vec<Option<f64>>,
    pub departures: Vec<Departure>,
    pub clamp_faults: usize,
}

/// The station: configuration, traces and the evolving state.
#[derive(Clone, Debug)]
pub struct Station {
    cfg: StationConfig,
    traces: Arc<Traces>,
    state: StationState,
    pending: Vec<Option<EvSession>>,
}

impl Station {
    pub fn new(cfg: StationConfig, traces: Arc<Traces>) -> Result<Self> {
        cfg.validate()?;
        if traces.is_empty() {
            return Err(Error::Config("empty traces".into()));
        }
        let piles = (0..cfg.n_piles)
            .map(|pile_id| PileState { pile_id, docked: None })
            .collect();
        let state = StationState {
            slot: TimeSlot(0),
            piles,
            building_load_kw: traces.load.values()[0],
            price: traces.price.values()[0],
            peak_load_kw: 0.0,
            cumulative_energy_cost: 0.0,
        };
        Ok(Self {
            pending: vec![None; cfg.n_piles],
            cfg,
            traces,
            state,
        })
    }

    pub fn config(&self) -> &StationConfig {
        &self.cfg
    }

    pub fn traces(&self) -> &Arc<Traces> {
        &self.traces
    }

    pub fn state(&self) -> &StationState {
        &self.state
    }

    /// Zeroes the running peak and cost.
    pub fn reset_accumulators(&mut self) {
        self.state.peak_load_kw = 0.0;
        self.state.cumulative_energy_cost = 0.0;
    }

    /// Moves to midnight of `day` with `sessions[i]` scheduled on pile `i`.
    ///
    /// Running peak and cost carry over so multi-day horizons accumulate.
    pub fn begin_day(&mut self, day: usize, sessions: &[EvSession]) -> Result<()> {
        if sessions.len() > self.cfg.n_piles {
            return Err(Error::Config(format!(
                "{} sessions for {} piles",
                sessions.len(),
                self.cfg.n_piles
            )));
        }
        if (day + 1) * SLOTS_PER_DAY > self.traces.len() {
            return Err(Error::Config(format!(
                "traces cover {} slots, day {day} needs {}",
                self.traces.len(),
                (day + 1) * SLOTS_PER_DAY
            )));
        }
        for s in sessions {
            s.validate()?;
            if s.t_arr.day() != day || s.t_dep_planned.0 > (day + 1) * SLOTS_PER_DAY {
                return Err(Error::Config("session does not fall within the day".into()));
            }
        }
        self.pending = (0..self.cfg.n_piles).map(|i| sessions.get(i).copied()).collect();
        for pile in &mut self.state.piles {
            pile.docked = None;
        }
        self.state.slot = TimeSlot::at(day, 0);
        self.refresh_exogenous();
        self.dock_arrivals();
        Ok(())
    }

    fn refresh_exogenous(&mut self) {
        if let (Some(load), Some(price)) = (self.traces.load.get(self.state.slot), self.traces.price.get(self.state.slot)) {
            self.state.building_load_kw = load;
            self.state.price = price;
        }
    }

    fn dock_arrivals(&mut self) {
        let slot = self.state.slot;
        for (pile, pending) in self.state.piles.iter_mut().zip(self.pending.iter_mut()) {
            if pending.is_some_and(|s| s.t_arr == slot) {
                let session = pending.take().expect("checked");
                pile.docked = Some(DockedEv {
                    session,
                    soc: session.soc_arr,
                    soc_history: vec![session.soc_arr],
                });
            }
        }
    }

    /// Per-pile power range for the current slot; `None` for empty piles.
    pub fn bounds(&self) -> Vec<Option<PowerBounds>> {
        let n_docked = self.state.n_docked();
        let Ok(p_pile) = per_pile_power_limit(self.cfg.p_station_max_kw, n_docked) else {
            return vec![None; self.cfg.n_piles];
        };
        self.state
            .piles
            .iter()
            .map(|pile| {
                pile.docked.as_ref().map(|d| {
                    power_boundaries(&d.session, d.soc, self.state.slot, p_pile, &self.cfg)
                        .expect("docked EVs always precede their planned departure")
                })
            })
            .collect()
    }

    /// Applies one slot of pile powers and advances the clock.
    pub fn step(&mut self, powers_kw: &[f64]) -> Result<SlotLedger> {
        if powers_kw.len() != self.cfg.n_piles {
            return Err(Error::Shape {
                expected: self.cfg.n_piles,
                got: powers_kw.len(),
            });
        }
        let bounds = self.bounds();
        let mut applied = Vec::with_capacity(powers_kw.len());
        for (pile, (&p, b)) in powers_kw.iter().zip(&bounds).enumerate() {
            let b = b.unwrap_or(PowerBounds::ZERO);
            if !p.is_finite() || !b.contains(p, BOUNDARY_TOL_KW) {
                return Err(Error::BoundaryViolation {
                    pile,
                    power: p,
                    min: b.min_kw,
                    max: b.max_kw,
                });
            }
            applied.push(b.clamp(p));
        }

        let mut clamp_faults = 0;
        let mut soc_after = vec![None; self.cfg.n_piles];
        for (pile, &p) in self.state.piles.iter_mut().zip(&applied) {
            if let Some(d) = pile.docked.as_mut() {
                let upd = apply_power(d.soc, p, d.session.capacity_kwh, &self.cfg);
                clamp_faults += usize::from(upd.clamped);
                d.soc = upd.soc;
                d.soc_history.push(upd.soc);
                soc_after[pile.pile_id] = Some(upd.soc);
            }
        }

        let slot = self.state.slot;
        let building = self.state.building_load_kw;
        let price = self.state.price;
        let total = building + applied.iter().sum::<f64>();
        let energy_cost = price * total.max(0.0) * self.cfg.slot_hours;
        self.state.cumulative_energy_cost += energy_cost;
        self.state.peak_load_kw = self.state.peak_load_kw.max(total);

        self.state.slot = slot.next();
        let mut departures = Vec::new();
        for pile in &mut self.state.piles {
            if pile.docked.as_ref().is_some_and(|d| d.session.t_dep_actual <= self.state.slot) {
                let d = pile.docked.take().expect("checked");
                departures.push(Departure {
                    pile: pile.pile_id,
                    session: d.session,
                    final_soc: d.soc,
                    soc_history: d.soc_history,
                });
            }
        }
        self.refresh_exogenous();
        self.dock_arrivals();

        Ok(SlotLedger {
            slot,
            building_load_kw: building,
            price,
            total_load_kw: total,
            energy_cost,
            powers_kw: applied,
            soc_after,
            departures,
            clamp_faults,
        })
    }
}

/// Everything a controller may look at when choosing pile powers.
pub struct SlotView<'a> {
    pub state: &'a StationState,
    pub bounds: &'a [Option<PowerBounds>],
    pub traces: &'a Traces,
    pub config: &'a StationConfig,
}

/// Chooses pile powers slot by slot.
pub trait Controller {
    fn begin_day(&mut self, _day: usize) {}

    /// One power per pile; empty piles must get zero.
    fn decide(&mut self, view: &SlotView<'_>) -> Result<Vec<f64>>;

    /// Called after the station applied the decision.
    fn observe(&mut self, _ledger: &SlotLedger, _after: &StationState) -> Result<()> {
        Ok(())
    }

    fn end_day(&mut self) -> Result<()> {
        Ok(())
    }
}

/// Runs the 24 slots of `day` under `controller`.
pub fn run_day(station: &mut Station, controller: &mut dyn Controller, day: usize, sessions: &[EvSession]) -> Result<Vec<SlotLedger>> {
    station.begin_day(day, sessions)?;
    controller.begin_day(day);
    let mut ledgers = Vec::with_capacity(SLOTS_PER_DAY);
    for _ in 0..SLOTS_PER_DAY {
        let bounds = station.bounds();
        let powers = {
            let view = SlotView {
                state: station.state(),
                bounds: &bounds,
                traces: station.traces(),
                config: station.config(),
            };
            controller.decide(&view)?
        };
        let ledger = station.step(&powers)?;
        controller.observe(&ledger, station.state())?;
        ledgers.push(ledger);
    }
    controller.end_day()?;
    Ok(ledgers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simenv::types::Trace;

    fn traces(load: f64, price: f64, days: usize) -> Arc<Traces> {
        let n = days * SLOTS_PER_DAY;
        Arc::new(Traces::new(Trace::new_load(vec![load; n]).unwrap(), Trace::new(vec![price; n]).unwrap()).unwrap())
    }

    fn session(arr: usize, dep: usize, actual: usize) -> EvSession {
        EvSession {
            t_arr: TimeSlot(arr),
            t_dep_planned: TimeSlot(dep),
            t_dep_actual: TimeSlot(actual),
            soc_arr: 0.4,
            soc_dep_expected: 0.8,
            capacity_kwh: 60.0,
        }
    }

    #[test]
    fn empty_station_passes_building_load_through() {
        let mut st = Station::new(StationConfig { n_piles: 3, ..Default::default() }, traces(100.0, 0.05, 1)).unwrap();
        st.begin_day(0, &[]).unwrap();
        let l = st.step(&[0.0; 3]).unwrap();
        assert_eq!(l.total_load_kw, 100.0);
        assert!((l.energy_cost - 5.0).abs() < 1e-12);
        assert_eq!(st.state().slot, TimeSlot(1));
    }

    #[test]
    fn export_is_not_credited() {
        let cfg = StationConfig {
            n_piles: 1,
            p_station_max_kw: 150.0,
            soc_hw_min: 0.0,
            ..Default::default()
        };
        let mut st = Station::new(cfg, traces(100.0, 0.05, 1)).unwrap();
        let mut s = session(0, 20, 20);
        s.soc_arr = 0.9;
        s.soc_dep_expected = 0.95;
        s.capacity_kwh = 600.0;
        st.begin_day(0, &[s]).unwrap();
        let b = st.bounds()[0].unwrap();
        assert!(b.min_kw <= -120.0);
        let l = st.step(&[-120.0]).unwrap();
        assert!((l.total_load_kw + 20.0).abs() < 1e-12);
        assert_eq!(l.energy_cost, 0.0);
        assert_eq!(st.state().cumulative_energy_cost, 0.0);
    }

    #[test]
    fn departure_removes_session() {
        let mut st = Station::new(StationConfig { n_piles: 2, ..Default::default() }, traces(100.0, 0.05, 1)).unwrap();
        st.begin_day(0, &[session(0, 5, 1), session(0, 5, 5)]).unwrap();
        assert_eq!(st.state().n_docked(), 2);
        let l = st.step(&[10.0, 10.0]).unwrap();
        assert_eq!(l.departures.len(), 1);
        assert_eq!(l.departures[0].pile, 0);
        assert_eq!(l.departures[0].soc_history.len(), 2);
        assert_eq!(st.state().n_docked(), 1);
        assert!(st.state().piles[0].docked.is_none());
    }

    #[test]
    fn out_of_bounds_power_is_rejected() {
        let mut st = Station::new(StationConfig { n_piles: 1, ..Default::default() }, traces(100.0, 0.05, 1)).unwrap();
        st.begin_day(0, &[session(0, 5, 5)]).unwrap();
        assert!(matches!(st.step(&[151.0]), Err(Error::BoundaryViolation { pile: 0, .. })));
        let mut st = Station::new(StationConfig { n_piles: 1, ..Default::default() }, traces(100.0, 0.05, 1)).unwrap();
        st.begin_day(0, &[]).unwrap();
        assert!(matches!(st.step(&[1.0]), Err(Error::BoundaryViolation { .. })));
    }

    #[test]
    fn arrivals_dock_at_their_slot() {
        let mut st = Station::new(StationConfig { n_piles: 1, ..Default::default() }, traces(100.0, 0.05, 1)).unwrap();
        st.begin_day(0, &[session(2, 5, 5)]).unwrap();
        assert_eq!(st.state().n_docked(), 0);
        st.step(&[0.0]).unwrap();
        st.step(&[0.0]).unwrap();
        assert_eq!(st.state().n_docked(), 1);
    }

    #[test]
    fn peak_tracks_the_maximum() {
        let mut st = Station::new(StationConfig { n_piles: 1, ..Default::default() }, traces(100.0, 0.05, 1)).unwrap();
        st.begin_day(0, &[session(0, 5, 5)]).unwrap();
        st.step(&[30.0]).unwrap();
        st.step(&[0.0]).unwrap();
        assert_eq!(st.state().peak_load_kw, 130.0);
    }
}
