//! Delivery plans: per-drone trip sequences, their communication and distance
//! totals, schedule simulation and constraint checking.

mod check;
mod schedule;

pub use check::{check_feasibility, EvalResult, TripReport, Violation, ViolationClass};
pub use schedule::{simulate_schedule, simulate_trip, DroneClock, Schedule, TripSchedule, Visit};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::arcs::MetricMatrix;
use crate::error::{Error, Result};
use crate::instance::{Instance, NodeKind};

pub const PLAN_VERSION: u32 = 1;

/// Depot-to-depot node sequence. Interior nodes are customers, charging
/// stations or waypoints, with at most one customer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Trip {
    pub nodes: Vec<usize>,
}

impl Trip {
    pub fn new(nodes: Vec<usize>) -> Self {
        Self { nodes }
    }

    pub fn start(&self) -> Option<usize> {
        self.nodes.first().copied()
    }

    pub fn end(&self) -> Option<usize> {
        self.nodes.last().copied()
    }

    pub fn interior(&self) -> &[usize] {
        if self.nodes.len() < 2 {
            &[]
        } else {
            &self.nodes[1..self.nodes.len() - 1]
        }
    }

    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.windows(2).map(|w| (w[0], w[1]))
    }

    /// Structural problems of this trip, empty when well formed.
    pub fn structural_issues(&self, instance: &Instance) -> Vec<String> {
        let mut issues = Vec::new();
        if let Some(&bad) = self.nodes.iter().find(|&&n| n >= instance.n_flyable()) {
            issues.push(format!("unknown node {bad}"));
            return issues;
        }
        if self.nodes.len() < 2 {
            issues.push("trip needs at least two nodes".into());
            return issues;
        }
        if !instance.is_depot(self.nodes[0]) {
            issues.push(format!("trip starts at non-depot node {}", self.nodes[0]));
        }
        if !instance.is_depot(*self.nodes.last().unwrap()) {
            issues.push(format!("trip ends at non-depot node {}", self.nodes.last().unwrap()));
        }
        for &n in self.interior() {
            if instance.is_depot(n) {
                issues.push(format!("depot {n} inside trip"));
            }
        }
        let customers = self
            .interior()
            .iter()
            .filter(|&&n| instance.kind(n) == NodeKind::Customer)
            .count();
        if customers > 1 {
            issues.push(format!("{customers} customers on one trip"));
        }
        for (a, b) in self.arcs() {
            if a == b {
                issues.push(format!("zero-length arc at node {a}"));
            }
        }
        issues
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Plan {
    pub trips_by_drone: Vec<Vec<Trip>>,
}

impl Plan {
    pub fn empty(n_drones: usize) -> Self {
        Self {
            trips_by_drone: vec![Vec::new(); n_drones],
        }
    }

    pub fn trips(&self) -> impl Iterator<Item = (usize, usize, &Trip)> {
        self.trips_by_drone
            .iter()
            .enumerate()
            .flat_map(|(u, ts)| ts.iter().enumerate().map(move |(k, t)| (u, k, t)))
    }

    pub fn trip_count(&self) -> usize {
        self.trips_by_drone.iter().map(Vec::len).sum()
    }

    pub fn to_json(&self) -> String {
        let doc = PlanFile {
            version: PLAN_VERSION,
            trips_by_drone: self.trips_by_drone.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("plan serializes")
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let doc: PlanFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        if doc.version != PLAN_VERSION {
            return Err(Error::Parse {
                context: context.to_string(),
                message: format!("unsupported plan version {}", doc.version),
            });
        }
        Ok(Self {
            trips_by_drone: doc.trips_by_drone,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }

    /// Plan refers only to known nodes and has one entry per drone.
    pub fn matches(&self, instance: &Instance) -> Result<()> {
        if self.trips_by_drone.len() != instance.n_drones() {
            return Err(Error::Argument(format!(
                "plan has {} drones, instance has {}",
                self.trips_by_drone.len(),
                instance.n_drones()
            )));
        }
        for (u, k, t) in self.trips() {
            if let Some(&n) = t.nodes.iter().find(|&&n| n >= instance.n_flyable()) {
                return Err(Error::Argument(format!(
                    "drone {u} trip {k} visits node {n}, instance has {} nodes",
                    instance.n_flyable()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct PlanFile {
    version: u32,
    trips_by_drone: Vec<Vec<Trip>>,
}

/// Handovers, expected outage (s) and distance (m) of one trip.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TripMetrics {
    pub handovers: u32,
    pub outage_s: f64,
    pub distance_m: f64,
}

/// Arc-wise sums without structural checks.
pub fn trip_sums(trip: &Trip, matrix: &MetricMatrix) -> TripMetrics {
    let mut m = TripMetrics::default();
    for (i, j) in trip.arcs() {
        let a = matrix.get(i, j);
        m.handovers += a.handovers;
        m.outage_s += a.outage_duration_s;
        m.distance_m += a.distance_m;
    }
    m
}

pub fn evaluate_trip(trip: &Trip, instance: &Instance, matrix: &MetricMatrix) -> Result<TripMetrics> {
    let issues = trip.structural_issues(instance);
    if !issues.is_empty() {
        return Err(Error::Structure(issues.join("; ")));
    }
    Ok(trip_sums(trip, matrix))
}

/// Total flight distance over all trips.
pub fn objective(plan: &Plan, matrix: &MetricMatrix) -> f64 {
    plan.trips().map(|(_, _, t)| trip_sums(t, matrix).distance_m).sum()
}

/// Largest per-trip handover count, 0 for a plan without trips.
pub fn max_trip_handovers(plan: &Plan, matrix: &MetricMatrix) -> u32 {
    plan.trips()
        .map(|(_, _, t)| trip_sums(t, matrix).handovers)
        .max()
        .unwrap_or(0)
}

/// Largest per-trip expected outage, 0 for a plan without trips.
pub fn max_trip_outage(plan: &Plan, matrix: &MetricMatrix) -> f64 {
    plan.trips()
        .map(|(_, _, t)| trip_sums(t, matrix).outage_s)
        .fold(0.0, f64::max)
}

/// Objective minimized by the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    #[default]
    TotalDistance,
    /// Largest handover count of any trip.
    MinmaxHandover,
    /// Largest expected outage (s) of any trip.
    MinmaxOutage,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 3] = [
        ObjectiveKind::TotalDistance,
        ObjectiveKind::MinmaxHandover,
        ObjectiveKind::MinmaxOutage,
    ];

    pub fn value(self, result: &EvalResult) -> f64 {
        match self {
            ObjectiveKind::TotalDistance => result.total_distance_m,
            ObjectiveKind::MinmaxHandover => f64::from(result.max_handovers()),
            ObjectiveKind::MinmaxOutage => result.max_outage_s(),
        }
    }

    pub fn value_of(self, plan: &Plan, matrix: &MetricMatrix) -> f64 {
        match self {
            ObjectiveKind::TotalDistance => objective(plan, matrix),
            ObjectiveKind::MinmaxHandover => f64::from(max_trip_handovers(plan, matrix)),
            ObjectiveKind::MinmaxOutage => max_trip_outage(plan, matrix),
        }
    }
}

impl std::fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ObjectiveKind::TotalDistance => "total_distance",
            ObjectiveKind::MinmaxHandover => "minmax_handover",
            ObjectiveKind::MinmaxOutage => "minmax_outage",
        })
    }
}

impl std::str::FromStr for ObjectiveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.to_string() == s)
            .ok_or_else(|| Error::Argument(format!("unknown objective {s:?}, expected total_distance, minmax_handover or minmax_outage")))
    }
}
