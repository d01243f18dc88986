//! Genome to plan.
//!
//! The genome holds one segment of `n_C * n_F` labels per drone. A segment is
//! recovered (runs of equal labels collapsed) and scanned left to right:
//!
//! - the drone starts at its start depot, prefixed if the segment does not
//!   begin there;
//! - interior labels (customers, charging stations, waypoints) accumulate on
//!   the open trip; a depot label closes it there, and the next trip leaves
//!   from that depot;
//! - a depot label on a trip with no interior nodes is a depot-to-depot hop
//!   (ignored when it names the current depot);
//! - a customer already served earlier in decode order (drones in id order)
//!   is skipped;
//! - a second customer on an open trip first closes the trip at the depot
//!   nearest the trip's last node, then opens a new trip from there;
//! - an open trip at the end closes at the end depot, and a drone left at
//!   another depot gets a final hop to its end depot.

use crate::instance::{Instance, NodeKind};
use crate::solution::{Plan, Trip};

/// Collapses every run of equal consecutive labels to one occurrence.
pub fn recover(segment: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::with_capacity(segment.len());
    for &g in segment {
        if out.last() != Some(&g) {
            out.push(g);
        }
    }
    out
}

pub fn genome_len(instance: &Instance) -> usize {
    instance.n_drones() * instance.n_customers() * instance.n_flyable()
}

/// Reusable decoder with the nearest-depot table precomputed.
#[derive(Debug, Clone)]
pub struct Decoder<'a> {
    instance: &'a Instance,
    nearest_depot: Vec<usize>,
}

impl<'a> Decoder<'a> {
    pub fn new(instance: &'a Instance) -> Self {
        let nearest_depot = (0..instance.n_flyable()).map(|n| instance.nearest_depot(n)).collect();
        Self {
            instance,
            nearest_depot,
        }
    }

    pub fn decode(&self, genes: &[usize]) -> Plan {
        let inst = self.instance;
        let seg_len = inst.n_customers() * inst.n_flyable();
        let mut served = vec![false; inst.n_customers()];
        let mut trips_by_drone = Vec::with_capacity(inst.n_drones());
        for (u, drone) in inst.drones.iter().enumerate() {
            let lo = (u * seg_len).min(genes.len());
            let hi = ((u + 1) * seg_len).min(genes.len());
            let labels = recover(&genes[lo..hi]);
            trips_by_drone.push(self.decode_segment(&labels, drone.start_depot, drone.end_depot, &mut served));
        }
        Plan { trips_by_drone }
    }

    fn decode_segment(&self, labels: &[usize], start: usize, end: usize, served: &mut [bool]) -> Vec<Trip> {
        let inst = self.instance;
        let n_f = inst.n_flyable();
        let mut trips = Vec::new();
        let mut current = start;
        let mut interior: Vec<usize> = Vec::new();
        let mut has_customer = false;

        let close = |trips: &mut Vec<Trip>, current: &mut usize, interior: &mut Vec<usize>, at: usize| {
            let mut nodes = Vec::with_capacity(interior.len() + 2);
            nodes.push(*current);
            nodes.append(interior);
            nodes.push(at);
            trips.push(Trip::new(nodes));
            *current = at;
        };

        let body = if labels.first() == Some(&start) {
            &labels[1..]
        } else {
            labels
        };
        for &label in body {
            if label >= n_f {
                continue;
            }
            match inst.kind(label) {
                NodeKind::Depot => {
                    if interior.is_empty() {
                        if label != current {
                            close(&mut trips, &mut current, &mut interior, label);
                        }
                    } else {
                        close(&mut trips, &mut current, &mut interior, label);
                    }
                    has_customer = false;
                }
                NodeKind::Customer => {
                    let c = inst.customer_index(label).expect("customer node");
                    if served[c] {
                        continue;
                    }
                    if has_customer {
                        let last = *interior.last().expect("open trip has a customer");
                        let depot = self.nearest_depot[last];
                        close(&mut trips, &mut current, &mut interior, depot);
                    }
                    interior.push(label);
                    served[c] = true;
                    has_customer = true;
                }
                NodeKind::ChargingStation | NodeKind::Waypoint => {
                    if interior.last() != Some(&label) {
                        interior.push(label);
                    }
                }
            }
        }
        if !interior.is_empty() {
            close(&mut trips, &mut current, &mut interior, end);
        }
        if current != end {
            close(&mut trips, &mut current, &mut interior, end);
        }
        trips
    }
}

pub fn decode(genes: &[usize], instance: &Instance) -> Plan {
    Decoder::new(instance).decode(genes)
}
