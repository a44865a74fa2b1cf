//! Charging-station physics, EV population, traces and demand-charge penalty.

mod penalty;
mod physics;
mod sessions;
mod station;
mod types;

pub use penalty::{instantaneous_excess, penalty_cost};
pub use physics::{
    apply_power, per_pile_power_limit, power_boundaries, power_to_soc_delta, soc_delta_to_power, soc_envelope, PowerBounds,
    SocUpdate, CLAMP_FAULT_TOL,
};
pub use sessions::{sample_ev_sessions, Scenario, EV_CAPACITY_KWH};
pub use station::{run_day, Controller, Departure, DockedEv, PileState, SlotLedger, SlotView, Station, StationState, BOUNDARY_TOL_KW};
pub use types::{EvSession, PenaltyConfig, StationConfig, TimeSlot, Trace, Traces, SLOTS_PER_DAY};
