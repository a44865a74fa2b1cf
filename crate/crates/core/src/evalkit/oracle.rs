use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::baselines::ScheduleController;
use super::{run_horizon, DaySessions, EvalRun};
use crate::error::Result;
use crate::simenv::{soc_envelope, EvSession, PenaltyConfig, StationConfig, Traces, SLOTS_PER_DAY};

/// Price-greedy charging plan and its replayed outcome.
#[derive(Clone, Debug)]
pub struct OracleResult {
    /// One row of pile powers per horizon slot.
    pub schedule: Vec<Vec<f64>>,
    pub run: EvalRun,
    /// Sessions whose target could not be planned within pile limits.
    pub infeasible_sessions: usize,
    /// Pile-slots the replay had to move to respect live bounds.
    pub bound_adjustments: usize,
}

impl OracleResult {
    pub fn feasible(&self) -> bool {
        self.infeasible_sessions == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
struct Slot {
    hour: usize,
    price: f64,
    cap_kw: f64,
}

/// Cheapest-first charging-only plan for one session.
///
/// Deadlines are met in time order, each from the cheapest slot with spare
/// capacity before it: the SoC floor at every slot, then the full target by
/// actual departure. Returns `(power per slot, met)`.
fn plan_session(s: &EvSession, slots: &[Slot], day_start: usize, cfg: &StationConfig) -> (Vec<f64>, bool) {
    let dt = cfg.slot_hours;
    let grid_energy = |soc: f64| (soc - s.soc_arr).max(0.0) * s.capacity_kwh / cfg.charge_efficiency;
    let total = grid_energy(s.soc_dep_expected);
    let mut power = vec![0.0; slots.len()];
    let mut met = true;
    for k in 0..slots.len() {
        let slot = crate::simenv::TimeSlot(day_start + slots[k].hour);
        let floor = grid_energy(soc_envelope(s, slot, slots[k].cap_kw, cfg).0);
        let required = if k + 1 == slots.len() { floor.max(total) } else { floor };
        let mut deficit = required - power[..=k].iter().sum::<f64>() * dt;
        let mut order: Vec<usize> = (0..=k).collect();
        order.sort_by(|&a, &b| slots[a].price.total_cmp(&slots[b].price).then(a.cmp(&b)));
        for j in order {
            if deficit <= 0.0 {
                break;
            }
            let add = ((slots[j].cap_kw - power[j]) * dt).min(deficit);
            if add > 0.0 {
                power[j] += add / dt;
                deficit -= add;
            }
        }
        if deficit > 1e-9 * total.max(1.0) {
            met = false;
        }
    }
    (power, met)
}

/// Full-knowledge charging plan, replayed through the station for metrics.
///
/// Minimal energy cost among charging-only schedules that respect the pile
/// limits and SoC floors, ignoring the peak penalty.
pub fn greedy_oracle(
    days: &[DaySessions],
    traces: Arc<Traces>,
    station: &StationConfig,
    penalty: &PenaltyConfig,
) -> Result<OracleResult> {
    let n = station.n_piles;
    let mut schedule = vec![vec![0.0; n]; days.len() * SLOTS_PER_DAY];
    let mut infeasible = 0;
    for (k, d) in days.iter().enumerate() {
        let day_start = d.day * SLOTS_PER_DAY;
        let n_docked: Vec<usize> = (0..SLOTS_PER_DAY)
            .map(|h| {
                d.sessions
                    .iter()
                    .filter(|s| s.t_arr.0 <= day_start + h && day_start + h < s.t_dep_actual.0)
                    .count()
            })
            .collect();
        for (pile, s) in d.sessions.iter().enumerate() {
            let slots: Vec<Slot> = (s.t_arr.0..s.t_dep_actual.0)
                .map(|t| Slot {
                    hour: t - day_start,
                    price: traces.price.values()[t],
                    cap_kw: station.p_station_max_kw / n_docked[t - day_start] as f64,
                })
                .collect();
            let (power, met) = plan_session(s, &slots, day_start, station);
            infeasible += usize::from(!met);
            for (slot, p) in slots.iter().zip(power) {
                schedule[k * SLOTS_PER_DAY + slot.hour][pile] = p;
            }
        }
    }
    let mut ctrl = ScheduleController::new(schedule.clone());
    let run = run_horizon(&mut ctrl, station, penalty, traces, days)?;
    Ok(OracleResult {
        schedule,
        run,
        infeasible_sessions: infeasible,
        bound_adjustments: ctrl.adjustments,
    })
}
