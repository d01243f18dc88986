//! Earliest-start schedule simulation.
//!
//! A drone starts its day at time 0. Leaving a depot costs the depot
//! operation time, except on a direct depot-to-depot hop. At a customer the
//! drone may hover until the window opens; service then takes the customer's
//! operation time. Battery drops by the arc cost on every arc and is restored
//! to full when leaving a charging station, and when leaving a depot in
//! [`BatteryMode::ResetAtDepot`]. Nothing here rejects a plan; infeasible
//! values are recorded and judged by the checker.

use serde::{Deserialize, Serialize};

use super::{Plan, Trip};
use crate::arcs::MetricMatrix;
use crate::instance::{BatteryMode, Instance, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Visit {
    pub node: usize,
    pub arrival_s: f64,
    /// Start of the operation: later than arrival when waiting for a window.
    pub service_start_s: f64,
    pub departure_s: f64,
    pub battery_on_arrival: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripSchedule {
    /// Time the trip begins at its start depot, before the depot operation.
    pub start_s: f64,
    pub visits: Vec<Visit>,
}

impl TripSchedule {
    pub fn end_arrival_s(&self) -> f64 {
        self.visits.last().map_or(self.start_s, |v| v.arrival_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub drones: Vec<Vec<TripSchedule>>,
}

/// State carried from one trip of a drone to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneClock {
    pub time_s: f64,
    pub battery: f64,
}

impl Default for DroneClock {
    fn default() -> Self {
        Self {
            time_s: 0.0,
            battery: 1.0,
        }
    }
}

/// Simulates one trip starting from `clock`. Node ids must be valid.
pub fn simulate_trip(
    trip: &Trip,
    clock: DroneClock,
    instance: &Instance,
    matrix: &MetricMatrix,
) -> (TripSchedule, DroneClock) {
    let mut visits = Vec::with_capacity(trip.nodes.len());
    let Some(&first) = trip.nodes.first() else {
        return (
            TripSchedule {
                start_s: clock.time_s,
                visits,
            },
            clock,
        );
    };
    let depot_hop = trip.nodes.len() == 2 && trip.nodes.iter().all(|&n| instance.is_depot(n));
    let first_op = if depot_hop { 0.0 } else { instance.op_time(first) };
    let mut dep = clock.time_s + first_op;
    visits.push(Visit {
        node: first,
        arrival_s: clock.time_s,
        service_start_s: clock.time_s,
        departure_s: dep,
        battery_on_arrival: clock.battery,
    });
    let mut battery = leave_battery(first, clock.battery, instance);
    let last_idx = trip.nodes.len() - 1;
    for (idx, (i, j)) in trip.arcs().enumerate() {
        let a = matrix.get(i, j);
        let arrival = dep + a.travel_time_s;
        let arrive_battery = battery - a.battery_cost;
        let is_end = idx + 1 == last_idx;
        let (service, departure) = if is_end {
            (arrival, arrival)
        } else {
            let start = match instance.kind(j) {
                NodeKind::Customer => arrival.max(instance.customers[instance.customer_index(j).unwrap()].window_start_s),
                _ => arrival,
            };
            (start, start + instance.op_time(j))
        };
        visits.push(Visit {
            node: j,
            arrival_s: arrival,
            service_start_s: service,
            departure_s: departure,
            battery_on_arrival: arrive_battery,
        });
        dep = departure;
        battery = if is_end {
            arrive_battery
        } else {
            leave_battery(j, arrive_battery, instance)
        };
    }
    let end = visits.last().unwrap();
    let next = DroneClock {
        time_s: end.arrival_s,
        battery: end.battery_on_arrival,
    };
    (
        TripSchedule {
            start_s: clock.time_s,
            visits,
        },
        next,
    )
}

fn leave_battery(node: usize, level: f64, instance: &Instance) -> f64 {
    match instance.kind(node) {
        NodeKind::ChargingStation => 1.0,
        NodeKind::Depot if instance.battery_mode == BatteryMode::ResetAtDepot => 1.0,
        _ => level,
    }
}

/// Simulates every drone. Trips with unknown node ids end that drone's
/// simulation.
pub fn simulate_schedule(plan: &Plan, instance: &Instance, matrix: &MetricMatrix) -> Schedule {
    let drones = plan
        .trips_by_drone
        .iter()
        .map(|trips| {
            let mut clock = DroneClock::default();
            let mut out = Vec::with_capacity(trips.len());
            for t in trips {
                if t.nodes.iter().any(|&n| n >= instance.n_flyable()) {
                    break;
                }
                let (ts, next) = simulate_trip(t, clock, instance, matrix);
                out.push(ts);
                clock = next;
            }
            out
        })
        .collect();
    Schedule { drones }
}
