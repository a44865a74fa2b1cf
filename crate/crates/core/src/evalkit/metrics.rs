use serde::{Deserialize, Serialize};

use crate::simenv::{penalty_cost, Departure, EvSession, PenaltyConfig, SlotLedger};

/// SoC of one finished session at the two instants the metrics use.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    pub session: EvSession,
    pub soc_at_actual_departure: f64,
    pub soc_at_midpoint: f64,
}

impl SessionOutcome {
    pub fn from_departure(d: &Departure) -> Self {
        let soc_at_midpoint = d.soc_at(d.session.midpoint()).unwrap_or(d.session.soc_arr);
        Self {
            session: d.session,
            soc_at_actual_departure: d.final_soc,
            soc_at_midpoint,
        }
    }
}

/// Percentage of the requested SoC held at departure.
pub fn soc_fulfillment(o: &SessionOutcome) -> f64 {
    100.0 * o.soc_at_actual_departure / o.session.soc_dep_expected
}

/// Share of the session's SoC gain already present at the midpoint; `None`
/// when the EV left with its arrival SoC.
pub fn soc_maintenance(o: &SessionOutcome) -> Option<f64> {
    let gain = o.soc_at_actual_departure - o.session.soc_arr;
    (gain != 0.0).then(|| 100.0 * (o.soc_at_midpoint - o.session.soc_arr) / gain)
}

pub fn user_satisfaction(fulfillment: f64, maintenance: f64) -> f64 {
    (fulfillment + maintenance) / 2.0
}

/// Costs and session metrics over one evaluation horizon.
///
/// Percentages are `None` when no session defines them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub penalty_cost_usd: f64,
    pub energy_cost_usd: f64,
    pub total_cost_usd: f64,
    pub soc_fulfillment_pct: Option<f64>,
    pub soc_maintenance_pct: Option<f64>,
    pub user_satisfaction_pct: Option<f64>,
    pub n_sessions: usize,
    /// Sessions left out of the maintenance and satisfaction means.
    pub maintenance_excluded: usize,
    pub peak_load_kw: f64,
    pub clamp_faults: usize,
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

impl MetricsReport {
    pub fn from_run(ledgers: &[SlotLedger], outcomes: &[SessionOutcome], penalty: &PenaltyConfig) -> Self {
        let energy_cost_usd = ledgers.iter().map(|l| l.energy_cost).fold(0.0, |a, b| a + b);
        let peak_load_kw = ledgers.iter().map(|l| l.total_load_kw).fold(f64::NEG_INFINITY, f64::max);
        let peak_load_kw = if ledgers.is_empty() { 0.0 } else { peak_load_kw };
        let penalty_cost_usd = penalty_cost(peak_load_kw, penalty);
        let fulfil: Vec<f64> = outcomes.iter().map(soc_fulfillment).collect();
        let mut maint = Vec::new();
        let mut sat = Vec::new();
        for (o, f) in outcomes.iter().zip(&fulfil) {
            if let Some(m) = soc_maintenance(o) {
                maint.push(m);
                sat.push(user_satisfaction(*f, m));
            }
        }
        Self {
            penalty_cost_usd,
            energy_cost_usd,
            total_cost_usd: energy_cost_usd + penalty_cost_usd,
            soc_fulfillment_pct: mean(&fulfil),
            soc_maintenance_pct: mean(&maint),
            user_satisfaction_pct: mean(&sat),
            n_sessions: outcomes.len(),
            maintenance_excluded: outcomes.len() - maint.len(),
            peak_load_kw,
            clamp_faults: ledgers.iter().map(|l| l.clamp_faults).sum(),
        }
    }

    pub const CSV_HEADER: &'static str = "penalty_cost_usd,energy_cost_usd,total_cost_usd,soc_fulfillment_pct,\
soc_maintenance_pct,user_satisfaction_pct,n_sessions,maintenance_excluded,peak_load_kw,clamp_faults";

    /// Values in [`MetricsReport::CSV_HEADER`] order; undefined metrics are empty.
    pub fn csv_row(&self) -> String {
        let o = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.penalty_cost_usd,
            self.energy_cost_usd,
            self.total_cost_usd,
            o(self.soc_fulfillment_pct),
            o(self.soc_maintenance_pct),
            o(self.user_satisfaction_pct),
            self.n_sessions,
            self.maintenance_excluded,
            self.peak_load_kw,
            self.clamp_faults
        )
    }

    pub fn to_csv(&self) -> String {
        format!("{}\n{}\n", Self::CSV_HEADER, self.csv_row())
    }

    pub fn to_json(&self) -> crate::Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simenv::TimeSlot;

    fn outcome(arr: f64, mid: f64, dep: f64, expected: f64) -> SessionOutcome {
        SessionOutcome {
            session: EvSession {
                t_arr: TimeSlot(8),
                t_dep_planned: TimeSlot(18),
                t_dep_actual: TimeSlot(18),
                soc_arr: arr,
                soc_dep_expected: expected,
                capacity_kwh: 60.0,
            },
            soc_at_actual_departure: dep,
            soc_at_midpoint: mid,
        }
    }

    #[test]
    fn metric_examples() {
        assert_eq!(soc_fulfillment(&outcome(0.4, 0.5, 0.8, 0.8)), 100.0);
        assert!((soc_fulfillment(&outcome(0.4, 0.5, 0.72, 0.8)) - 90.0).abs() < 1e-12);
        assert!((soc_fulfillment(&outcome(0.4, 0.4, 0.4, 0.8)) - 50.0).abs() < 1e-12);
        assert!((soc_maintenance(&outcome(0.4, 0.5, 0.8, 0.8)).unwrap() - 25.0).abs() < 1e-12);
        assert_eq!(soc_maintenance(&outcome(0.4, 0.8, 0.8, 0.8)), Some(100.0));
        assert!(soc_maintenance(&outcome(0.4, 0.3, 0.8, 0.8)).unwrap() < 0.0);
        assert_eq!(soc_maintenance(&outcome(0.4, 0.5, 0.4, 0.8)), None);
        assert_eq!(user_satisfaction(90.0, 25.0), 57.5);
        assert_eq!(user_satisfaction(100.0, 100.0), 100.0);
    }

    #[test]
    fn empty_run_flags_undefined() {
        let r = MetricsReport::from_run(&[], &[], &PenaltyConfig::default());
        assert_eq!(r.n_sessions, 0);
        assert!(r.soc_fulfillment_pct.is_none() && r.soc_maintenance_pct.is_none() && r.user_satisfaction_pct.is_none());
        assert!(r.to_csv().lines().nth(1).unwrap().starts_with("0,0,0,,,,0"));
    }
}
