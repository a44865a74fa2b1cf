use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::types::{EvSession, TimeSlot};

pub const EV_CAPACITY_KWH: f64 = 60.0;

/// Whether EVs leave at their announced time or earlier.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Certain,
    Uncertain,
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "certain" => Ok(Scenario::Certain),
            "uncertain" => Ok(Scenario::Uncertain),
            other => Err(format!("unknown scenario '{other}' (expected certain|uncertain)")),
        }
    }
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::Certain => "certain",
            Scenario::Uncertain => "uncertain",
        })
    }
}

/// Clipped normal draws for the daily EV population.
struct Clipped {
    dist: Normal<f64>,
    lo: f64,
    hi: f64,
}

impl Clipped {
    fn new(mean: f64, std: f64, lo: f64, hi: f64) -> Self {
        Self {
            dist: Normal::new(mean, std).expect("positive std"),
            lo,
            hi,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.dist.sample(rng).clamp(self.lo, self.hi)
    }
}

/// Draws one EV per pile for `day`.
///
/// Arrival and planned departure are rounded to whole hours. Under the
/// uncertain scenario the actual departure is uniform over the slots strictly
/// after arrival and strictly before the planned departure.
pub fn sample_ev_sessions<R: Rng + ?Sized>(rng: &mut R, day: usize, scenario: Scenario, n_piles: usize) -> Vec<EvSession> {
    let arrival = Clipped::new(9.0, 1.0, 7.0, 12.0);
    let departure = Clipped::new(19.0, 1.0, 16.0, 23.0);
    let soc_arr = Clipped::new(0.4, 0.1, 0.3, 0.6);
    let soc_dep = Clipped::new(0.8, 0.1, 0.6, 0.9);

    (0..n_piles)
        .map(|_| {
            let (t_arr, t_dep) = loop {
                let a = arrival.sample(rng).round() as usize;
                let d = departure.sample(rng).round() as usize;
                if a < d {
                    break (TimeSlot::at(day, a), TimeSlot::at(day, d));
                }
            };
            // both ranges meet at 0.6; redraw the pair on a tie
            let (soc_arr, soc_dep_expected) = loop {
                let a = soc_arr.sample(rng);
                let d = soc_dep.sample(rng);
                if a < d {
                    break (a, d);
                }
            };
            let t_dep_actual = match scenario {
                Scenario::Certain => t_dep,
                Scenario::Uncertain if t_dep.0 - t_arr.0 > 1 => TimeSlot(rng.random_range(t_arr.0 + 1..t_dep.0)),
                Scenario::Uncertain => t_dep,
            };
            EvSession {
                t_arr,
                t_dep_planned: t_dep,
                t_dep_actual,
                soc_arr,
                soc_dep_expected,
                capacity_kwh: EV_CAPACITY_KWH,
            }
        })
        .collect()
}
