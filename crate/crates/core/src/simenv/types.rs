use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hourly slots per simulated day.
pub const SLOTS_PER_DAY: usize = 24;

/// An hourly slot counted from the start of the traces.
///
/// Index 0 is midnight on day 0, which is taken to be a Monday.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TimeSlot(pub usize);

impl TimeSlot {
    pub fn at(day: usize, hour: usize) -> Self {
        TimeSlot(day * SLOTS_PER_DAY + hour)
    }

    pub fn index(self) -> usize {
        self.0
    }

    pub fn hour_of_day(self) -> usize {
        self.0 % SLOTS_PER_DAY
    }

    pub fn day(self) -> usize {
        self.0 / SLOTS_PER_DAY
    }

    pub fn day_of_week(self) -> usize {
        self.day() % 7
    }

    pub fn next(self) -> Self {
        TimeSlot(self.0 + 1)
    }

    /// Whole slots from `self` until `later`, zero if `later` is not after `self`.
    pub fn slots_until(self, later: TimeSlot) -> usize {
        later.0.saturating_sub(self.0)
    }
}

/// One value per hourly slot: kW for building load, USD/kWh for price.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    values: Vec<f64>,
}

impl Trace {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Domain {
                what: "trace values must be finite",
                value: *v,
            });
        }
        Ok(Self { values })
    }

    /// A load trace additionally rejects negative values.
    pub fn new_load(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| **v < 0.0) {
            return Err(Error::Domain {
                what: "load values must be non-negative",
                value: *v,
            });
        }
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, slot: TimeSlot) -> Option<f64> {
        self.values.get(slot.0).copied()
    }

    /// Every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    /// Number of complete days covered.
    pub fn days(&self) -> usize {
        self.values.len() / SLOTS_PER_DAY
    }
}

/// Building load and price traces on a common hourly grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Traces {
    pub load: Trace,
    pub price: Trace,
}

impl Traces {
    pub fn new(load: Trace, price: Trace) -> Result<Self> {
        if load.len() != price.len() {
            return Err(Error::Alignment(format!(
                "load has {} slots, price has {}",
                load.len(),
                price.len()
            )));
        }
        Ok(Self { load, price })
    }

    pub fn len(&self) -> usize {
        self.load.len()
    }

    pub fn is_empty(&self) -> bool {
        self.load.is_empty()
    }

    pub fn days(&self) -> usize {
        self.load.days()
    }

    /// Copy with every price multiplied by `factor`.
    pub fn with_price_scale(&self, factor: f64) -> Self {
        Self {
            load: self.load.clone(),
            price: self.price.scaled(factor),
        }
    }
}

/// One EV's charging request plus the (possibly earlier) actual departure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvSession {
    pub t_arr: TimeSlot,
    pub t_dep_planned: TimeSlot,
    pub t_dep_actual: TimeSlot,
    pub soc_arr: f64,
    pub soc_dep_expected: f64,
    pub capacity_kwh: f64,
}

impl EvSession {
    pub fn validate(&self) -> Result<()> {
        let bad = |what| Err(Error::Config(format!("invalid EV session: {what}")));
        if self.t_arr >= self.t_dep_planned {
            return bad("arrival must precede planned departure");
        }
        if self.t_dep_actual > self.t_dep_planned {
            return bad("actual departure after planned departure");
        }
        if self.t_dep_actual.0 < self.t_arr.0 + 1 {
            return bad("EV must stay at least one slot");
        }
        if !(0.0 <= self.soc_arr && self.soc_arr < self.soc_dep_expected && self.soc_dep_expected <= 1.0) {
            return bad("SoC values out of order");
        }
        if !(self.capacity_kwh > 0.0) {
            return bad("capacity must be positive");
        }
        Ok(())
    }

    /// Midpoint slot between arrival and actual departure, rounded down.
    pub fn midpoint(&self) -> TimeSlot {
        TimeSlot((self.t_arr.0 + self.t_dep_actual.0) / 2)
    }

    pub fn is_present(&self, slot: TimeSlot) -> bool {
        self.t_arr <= slot && slot < self.t_dep_actual
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationConfig {
    pub n_piles: usize,
    pub p_station_max_kw: f64,
    pub charge_efficiency: f64,
    pub soc_hw_min: f64,
    pub soc_hw_max: f64,
    pub slot_hours: f64,
}

impl Default for StationConfig {
    fn default() -> Self {
        Self {
            n_piles: 10,
            p_station_max_kw: 150.0,
            charge_efficiency: 0.95,
            soc_hw_min: 0.1,
            soc_hw_max: 1.0,
            slot_hours: 1.0,
        }
    }
}

impl StationConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("station: {what}")));
        if self.n_piles == 0 {
            return bad("n_piles must be positive");
        }
        if !(self.p_station_max_kw > 0.0) {
            return bad("p_station_max_kw must be positive");
        }
        if !(self.charge_efficiency > 0.0 && self.charge_efficiency <= 1.0) {
            return bad("charge_efficiency must lie in (0, 1]");
        }
        if !(0.0 <= self.soc_hw_min && self.soc_hw_min < self.soc_hw_max && self.soc_hw_max <= 1.0) {
            return bad("need 0 <= soc_hw_min < soc_hw_max <= 1");
        }
        if !(self.slot_hours > 0.0) {
            return bad("slot_hours must be positive");
        }
        Ok(())
    }
}

/// Tiered demand-charge settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub contract_kw: f64,
    pub base_rate_usd_per_kw: f64,
    pub tier_threshold: f64,
}

impl Default for PenaltyConfig {
    fn default() -> Self {
        Self {
            contract_kw: 700.0,
            base_rate_usd_per_kw: 15.0,
            tier_threshold: 0.1,
        }
    }
}

impl PenaltyConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.contract_kw > 0.0 && self.base_rate_usd_per_kw > 0.0) {
            return Err(Error::Config("penalty: contract and base rate must be positive".into()));
        }
        if !(self.tier_threshold > 0.0 && self.tier_threshold < 1.0) {
            return Err(Error::Config("penalty: tier_threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }
}
