use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::locontrol::optimal_power;
use crate::simenv::{
    soc_delta_to_power, Controller, PowerBounds, SlotLedger, SlotView, StationState, SLOTS_PER_DAY,
};

/// Uniform random action in [0, 1] per docked pile.
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { rng }
    }
}

impl Controller for RandomPolicy {
    fn decide(&mut self, view: &SlotView<'_>) -> Result<Vec<f64>> {
        Ok(view
            .bounds
            .iter()
            .map(|b| match b {
                Some(b) => optimal_power(self.rng.random::<f64>(), b.min_kw, b.max_kw),
                None => 0.0,
            })
            .collect())
    }
}

/// Charges every docked EV as fast as allowed until it reaches its target SoC.
#[derive(Clone, Copy, Debug, Default)]
pub struct MaxChargeToTarget;

impl Controller for MaxChargeToTarget {
    fn decide(&mut self, view: &SlotView<'_>) -> Result<Vec<f64>> {
        Ok(view
            .state
            .piles
            .iter()
            .zip(view.bounds)
            .map(|(pile, b)| match (pile.docked.as_ref(), b) {
                (Some(d), Some(b)) => {
                    let need = soc_delta_to_power(d.session.soc_dep_expected - d.soc, d.session.capacity_kwh, view.config);
                    b.clamp(need.clamp(0.0, b.max_kw))
                }
                _ => 0.0,
            })
            .collect())
    }
}

/// Always the largest admissible power, regardless of the target.
#[derive(Clone, Copy, Debug, Default)]
pub struct MaxCharge;

impl Controller for MaxCharge {
    fn decide(&mut self, view: &SlotView<'_>) -> Result<Vec<f64>> {
        Ok(view.bounds.iter().map(|b| b.map_or(0.0, |b| b.max_kw)).collect())
    }
}

/// Replays precomputed powers, one row per horizon slot, snapped into the live bounds.
pub struct ScheduleController {
    powers: Vec<Vec<f64>>,
    day: Option<usize>,
    /// Pile-slots where the schedule had to be moved by more than 1e-9 kW.
    pub adjustments: usize,
}

impl ScheduleController {
    pub fn new(powers: Vec<Vec<f64>>) -> Self {
        Self {
            powers,
            day: None,
            adjustments: 0,
        }
    }
}

impl Controller for ScheduleController {
    fn begin_day(&mut self, _day: usize) {
        self.day = Some(self.day.map_or(0, |d| d + 1));
    }

    fn decide(&mut self, view: &SlotView<'_>) -> Result<Vec<f64>> {
        let t = self.day.unwrap_or(0) * SLOTS_PER_DAY + view.state.slot.hour_of_day();
        let n = view.bounds.len();
        let row = self.powers.get(t).cloned().unwrap_or_else(|| vec![0.0; n]);
        let mut out = Vec::with_capacity(n);
        for (p, b) in row.into_iter().zip(view.bounds) {
            let b = b.unwrap_or(PowerBounds::ZERO);
            let q = b.clamp(p);
            if (q - p).abs() > 1e-9 {
                self.adjustments += 1;
            }
            out.push(q);
        }
        Ok(out)
    }
}

/// Wraps a controller and replaces any discharge with idling.
pub struct ChargeOnly<C>(pub C);

impl<C: Controller> Controller for ChargeOnly<C> {
    fn begin_day(&mut self, day: usize) {
        self.0.begin_day(day)
    }

    fn decide(&mut self, view: &SlotView<'_>) -> Result<Vec<f64>> {
        let powers = self.0.decide(view)?;
        Ok(powers
            .into_iter()
            .zip(view.bounds)
            .map(|(p, b)| b.map_or(0.0, |b| b.clamp(p.max(0.0))))
            .collect())
    }

    fn observe(&mut self, ledger: &SlotLedger, after: &StationState) -> Result<()> {
        self.0.observe(ledger, after)
    }

    fn end_day(&mut self) -> Result<()> {
        self.0.end_day()
    }
}
