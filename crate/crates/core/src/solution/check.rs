use std::fmt;

use serde::{Deserialize, Serialize};

use super::schedule::simulate_schedule;
use super::{trip_sums, Plan};
use crate::arcs::MetricMatrix;
use crate::instance::{Instance, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationClass {
    /// Customer unserved or served more than once. Counts.
    CustomerCoverage,
    /// Trip handovers above `h_max`. Counts.
    Handover,
    /// Trip expected outage above `o_max`. Seconds.
    Outage,
    /// Malformed trip: endpoints, interior depots, several customers.
    TripStructure,
    /// Workday start/end depot or trip-to-trip depot mismatch.
    DepotChaining,
    /// Service after the window closes. Seconds.
    TimeWindow,
    /// Negative battery on arrival. Fraction of a charge.
    Battery,
    /// Activity past the end of the working day. Seconds.
    Horizon,
}

impl ViolationClass {
    pub const ALL: [ViolationClass; 8] = [
        ViolationClass::CustomerCoverage,
        ViolationClass::Handover,
        ViolationClass::Outage,
        ViolationClass::TripStructure,
        ViolationClass::DepotChaining,
        ViolationClass::TimeWindow,
        ViolationClass::Battery,
        ViolationClass::Horizon,
    ];
}

impl fmt::Display for ViolationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("serializes");
        write!(f, "{}", s.as_str().unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub class: ViolationClass,
    pub magnitude: f64,
    pub drone: Option<usize>,
    pub trip: Option<usize>,
    pub node: Option<usize>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripReport {
    pub drone: usize,
    pub trip: usize,
    pub handovers: u32,
    pub outage_s: f64,
    pub distance_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub total_distance_m: f64,
    pub trips: Vec<TripReport>,
    pub violations: Vec<Violation>,
}

impl EvalResult {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn classes(&self) -> Vec<ViolationClass> {
        let mut v: Vec<_> = self.violations.iter().map(|v| v.class).collect();
        v.sort();
        v.dedup();
        v
    }

    pub fn magnitude(&self, class: ViolationClass) -> f64 {
        self.violations
            .iter()
            .filter(|v| v.class == class)
            .map(|v| v.magnitude)
            .sum()
    }

    pub fn max_handovers(&self) -> u32 {
        self.trips.iter().map(|t| t.handovers).max().unwrap_or(0)
    }

    pub fn max_outage_s(&self) -> f64 {
        self.trips.iter().map(|t| t.outage_s).fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("result serializes")
    }
}

struct Recorder(Vec<Violation>);

impl Recorder {
    fn add(
        &mut self,
        class: ViolationClass,
        magnitude: f64,
        drone: Option<usize>,
        trip: Option<usize>,
        node: Option<usize>,
        detail: impl Into<String>,
    ) {
        self.0.push(Violation {
            class,
            magnitude,
            drone,
            trip,
            node,
            detail: detail.into(),
        });
    }
}

/// Checks every constraint class and reports violations with magnitudes.
pub fn check_feasibility(plan: &Plan, instance: &Instance, matrix: &MetricMatrix) -> EvalResult {
    use ViolationClass::*;
    let mut rec = Recorder(Vec::new());
    let n_f = instance.n_flyable();

    if plan.trips_by_drone.len() != instance.n_drones() {
        rec.add(
            TripStructure,
            (plan.trips_by_drone.len() as f64 - instance.n_drones() as f64).abs(),
            None,
            None,
            None,
            format!(
                "plan lists {} drones, instance has {}",
                plan.trips_by_drone.len(),
                instance.n_drones()
            ),
        );
    }

    let mut trips = Vec::new();
    let mut total = 0.0;
    let mut visits = vec![0usize; instance.n_customers()];
    for (u, k, t) in plan.trips() {
        let issues = t.structural_issues(instance);
        for issue in &issues {
            rec.add(TripStructure, 1.0, Some(u), Some(k), None, issue.clone());
        }
        if t.nodes.iter().any(|&n| n >= n_f) {
            continue;
        }
        for &n in t.interior() {
            if let Some(c) = instance.customer_index(n) {
                visits[c] += 1;
            }
        }
        let m = trip_sums(t, matrix);
        total += m.distance_m;
        if m.handovers as f64 > instance.thresholds.h_max {
            rec.add(
                Handover,
                m.handovers as f64 - instance.thresholds.h_max,
                Some(u),
                Some(k),
                None,
                format!("{} handovers > {}", m.handovers, instance.thresholds.h_max),
            );
        }
        if m.outage_s > instance.thresholds.o_max {
            rec.add(
                Outage,
                m.outage_s - instance.thresholds.o_max,
                Some(u),
                Some(k),
                None,
                format!("{:.3} s outage > {}", m.outage_s, instance.thresholds.o_max),
            );
        }
        trips.push(TripReport {
            drone: u,
            trip: k,
            handovers: m.handovers,
            outage_s: m.outage_s,
            distance_m: m.distance_m,
        });
    }

    for (c, &n) in visits.iter().enumerate() {
        let node = instance.customers[c].node;
        if n == 0 {
            rec.add(CustomerCoverage, 1.0, None, None, Some(node), format!("customer {c} unserved"));
        } else if n > 1 {
            rec.add(
                CustomerCoverage,
                (n - 1) as f64,
                None,
                None,
                Some(node),
                format!("customer {c} served {n} times"),
            );
        }
    }

    for (u, drone) in instance.drones.iter().enumerate() {
        let Some(ts) = plan.trips_by_drone.get(u) else {
            continue;
        };
        if ts.is_empty() {
            if drone.start_depot != drone.end_depot {
                rec.add(
                    DepotChaining,
                    1.0,
                    Some(u),
                    None,
                    None,
                    "no trips but start and end depots differ",
                );
            }
            continue;
        }
        if ts[0].start() != Some(drone.start_depot) {
            rec.add(
                DepotChaining,
                1.0,
                Some(u),
                Some(0),
                ts[0].start(),
                format!("first trip must leave depot {}", drone.start_depot),
            );
        }
        let last = ts.len() - 1;
        if ts[last].end() != Some(drone.end_depot) {
            rec.add(
                DepotChaining,
                1.0,
                Some(u),
                Some(last),
                ts[last].end(),
                format!("last trip must end at depot {}", drone.end_depot),
            );
        }
        for k in 0..last {
            if ts[k].end() != ts[k + 1].start() {
                rec.add(
                    DepotChaining,
                    1.0,
                    Some(u),
                    Some(k + 1),
                    ts[k + 1].start(),
                    format!("trip {} does not start where trip {k} ended", k + 1),
                );
            }
        }
    }

    let schedule = simulate_schedule(plan, instance, matrix);
    for (u, ts) in schedule.drones.iter().enumerate() {
        for (k, trip) in ts.iter().enumerate() {
            for v in &trip.visits {
                if v.battery_on_arrival < 0.0 {
                    rec.add(
                        Battery,
                        -v.battery_on_arrival,
                        Some(u),
                        Some(k),
                        Some(v.node),
                        format!("battery {:.4} on arrival", v.battery_on_arrival),
                    );
                }
            }
            for v in trip.visits.iter().skip(1).take(trip.visits.len().saturating_sub(2)) {
                if instance.kind(v.node) != NodeKind::Customer {
                    continue;
                }
                let c = &instance.customers[instance.customer_index(v.node).unwrap()];
                if v.service_start_s > c.window_end_s {
                    rec.add(
                        TimeWindow,
                        v.service_start_s - c.window_end_s,
                        Some(u),
                        Some(k),
                        Some(v.node),
                        format!("served at {:.1} s after window end {:.1} s", v.service_start_s, c.window_end_s),
                    );
                }
            }
        }
        if let Some(last) = ts.last() {
            let end = last.end_arrival_s();
            if end > instance.horizon_s {
                rec.add(
                    Horizon,
                    end - instance.horizon_s,
                    Some(u),
                    Some(ts.len() - 1),
                    None,
                    format!("workday ends at {end:.1} s"),
                );
            }
        }
    }

    EvalResult {
        total_distance_m: total,
        trips,
        violations: rec.0,
    }
}
