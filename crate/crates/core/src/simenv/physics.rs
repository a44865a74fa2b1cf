//! Per-slot power limits, SoC envelopes and the battery update.
//!
//! Efficiency is applied multiply-on-charge, divide-on-discharge: a grid-side
//! power `p > 0` held for `dt` hours adds `p * dt * eta / C` to the SoC, while
//! `p < 0` removes `|p| * dt / (eta * C)`.

use serde::{Deserialize, Serialize};

use super::types::{EvSession, StationConfig, TimeSlot};
use crate::error::{Error, Result};

/// Clamp amounts smaller than this are not reported as faults.
pub const CLAMP_FAULT_TOL: f64 = 1e-9;

/// Signed power range a pile may apply during one slot.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerBounds {
    pub min_kw: f64,
    pub max_kw: f64,
}

impl PowerBounds {
    pub const ZERO: PowerBounds = PowerBounds {
        min_kw: 0.0,
        max_kw: 0.0,
    };

    pub fn contains(&self, power_kw: f64, tol: f64) -> bool {
        power_kw >= self.min_kw - tol && power_kw <= self.max_kw + tol
    }

    pub fn clamp(&self, power_kw: f64) -> f64 {
        power_kw.clamp(self.min_kw, self.max_kw)
    }
}

/// Station capacity shared evenly among the docked EVs.
pub fn per_pile_power_limit(p_station_max_kw: f64, n_docked: usize) -> Result<f64> {
    if n_docked == 0 {
        return Err(Error::DomainEmpty);
    }
    Ok(p_station_max_kw / n_docked as f64)
}

/// Grid-side power that moves the SoC by `delta_soc` within one slot.
pub fn soc_delta_to_power(delta_soc: f64, capacity_kwh: f64, cfg: &StationConfig) -> f64 {
    let energy = delta_soc * capacity_kwh;
    if energy >= 0.0 {
        energy / (cfg.charge_efficiency * cfg.slot_hours)
    } else {
        energy * cfg.charge_efficiency / cfg.slot_hours
    }
}

/// SoC change produced by holding `power_kw` for one slot.
pub fn power_to_soc_delta(power_kw: f64, capacity_kwh: f64, cfg: &StationConfig) -> f64 {
    let energy = power_kw * cfg.slot_hours;
    if power_kw >= 0.0 {
        energy * cfg.charge_efficiency / capacity_kwh
    } else {
        energy / (cfg.charge_efficiency * capacity_kwh)
    }
}

/// Lowest and highest SoC the EV may hold at the end of `slot`.
///
/// The upper bound is the hardware maximum. The lower bound is the smallest
/// SoC from which the expected SoC is still reachable by charging at `p_pile_kw`
/// through every remaining slot before the planned departure.
pub fn soc_envelope(session: &EvSession, slot: TimeSlot, p_pile_kw: f64, cfg: &StationConfig) -> (f64, f64) {
    let remaining = slot.slots_until(session.t_dep_planned).saturating_sub(1) as f64;
    let reachable = remaining * p_pile_kw * cfg.charge_efficiency * cfg.slot_hours / session.capacity_kwh;
    let lb = (session.soc_dep_expected - reachable).max(cfg.soc_hw_min);
    (lb.min(cfg.soc_hw_max), cfg.soc_hw_max)
}

/// Charging and discharging limits for a docked EV during `slot`.
///
/// The lower limit never exceeds the upper one; if the envelope cannot be met
/// at pile power the pile is asked to charge as hard as it can.
pub fn power_boundaries(
    session: &EvSession,
    soc_now: f64,
    slot: TimeSlot,
    p_pile_kw: f64,
    cfg: &StationConfig,
) -> Result<PowerBounds> {
    if slot >= session.t_dep_planned {
        return Err(Error::Domain {
            what: "slot must precede the planned departure",
            value: slot.0 as f64,
        });
    }
    let (lb, ub) = soc_envelope(session, slot, p_pile_kw, cfg);
    let max_kw = p_pile_kw.min(soc_delta_to_power(ub - soc_now, session.capacity_kwh, cfg));
    let min_kw = (-p_pile_kw).max(soc_delta_to_power(lb - soc_now, session.capacity_kwh, cfg));
    Ok(PowerBounds {
        min_kw: min_kw.min(max_kw),
        max_kw,
    })
}

/// Result of pushing power through a battery for one slot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SocUpdate {
    pub soc: f64,
    /// The hardware clamp moved the value by more than [`CLAMP_FAULT_TOL`].
    pub clamped: bool,
}

pub fn apply_power(soc: f64, power_kw: f64, capacity_kwh: f64, cfg: &StationConfig) -> SocUpdate {
    let raw = soc + power_to_soc_delta(power_kw, capacity_kwh, cfg);
    let next = raw.clamp(cfg.soc_hw_min, cfg.soc_hw_max);
    SocUpdate {
        soc: next,
        clamped: (raw - next).abs() > CLAMP_FAULT_TOL,
    }
}
