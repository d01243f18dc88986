//! Exhaustive search for tiny instances.
//!
//! A trip is a start depot, up to `max_interior_nodes_per_trip` distinct
//! whitelisted non-depot nodes (at most one customer) and an end depot.
//! Drones are searched in id order; each drone chains trips from its start
//! depot and may stop once it stands on its end depot. From a given drone
//! state only the trips of one class (end depot, customer or none) that are
//! not dominated on objective contribution, arrival time and, when battery
//! carries over, remaining charge are expanded. Total distance is pruned with
//! a per-customer lower bound; min-max objectives with the incumbent.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::arcs::MetricMatrix;
use crate::error::{Error, Result};
use crate::instance::{BatteryMode, Instance, NodeKind};
use crate::solution::{
    check_feasibility, simulate_trip, trip_sums, DroneClock, EvalResult, ObjectiveKind, Plan, Trip,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnumerationBounds {
    pub max_interior_nodes_per_trip: usize,
    /// `None` means `max(n_C, 1)`.
    pub max_trips_per_drone: Option<usize>,
    /// Charging stations and waypoints to search over; `None` means all.
    /// Customers are always included.
    pub node_whitelist: Option<Vec<usize>>,
    /// Largest accepted value of [`search_estimate`].
    pub budget: f64,
}

impl Default for EnumerationBounds {
    fn default() -> Self {
        Self {
            max_interior_nodes_per_trip: 3,
            max_trips_per_drone: None,
            node_whitelist: None,
            budget: 1e8,
        }
    }
}

impl EnumerationBounds {
    pub fn validate(&self, instance: &Instance) -> Result<()> {
        if self.max_interior_nodes_per_trip == 0 {
            return Err(Error::Config("max_interior_nodes_per_trip must be at least 1".into()));
        }
        if self.max_trips_per_drone == Some(0) {
            return Err(Error::Config("max_trips_per_drone must be at least 1".into()));
        }
        if let Some(w) = &self.node_whitelist {
            for &n in w {
                if n >= instance.n_flyable() || instance.is_depot(n) {
                    return Err(Error::Config(format!("whitelist node {n} is not a non-depot node")));
                }
            }
        }
        if !(self.budget > 0.0) {
            return Err(Error::Config(format!("budget must be positive, got {}", self.budget)));
        }
        Ok(())
    }

    pub fn max_trips(&self, instance: &Instance) -> usize {
        self.max_trips_per_drone.unwrap_or(instance.n_customers().max(1))
    }

    /// Sorted non-depot nodes searched, customers included.
    pub fn searched_nodes(&self, instance: &Instance) -> Vec<usize> {
        let mut nodes: Vec<usize> = match &self.node_whitelist {
            Some(w) => w.clone(),
            None => (0..instance.n_flyable()).filter(|&n| !instance.is_depot(n)).collect(),
        };
        nodes.extend(instance.customers.iter().map(|c| c.node));
        nodes.sort_unstable();
        nodes.dedup();
        nodes
    }
}

/// Size proxy of the search: `(n_D * (n_C + 1)) ^ (n_U * max_trips)`.
pub fn search_estimate(instance: &Instance, max_trips: usize) -> f64 {
    let base = (instance.n_depots() * (instance.n_customers() + 1)) as f64;
    base.powf((instance.n_drones() * max_trips) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactOutcome {
    pub objective: ObjectiveKind,
    /// Optimal plan under the bounds, `None` when no plan is feasible.
    pub plan: Option<Plan>,
    pub value: Option<f64>,
    pub result: Option<EvalResult>,
    pub states: u64,
    pub trips_simulated: u64,
    pub search_estimate: f64,
}

impl ExactOutcome {
    pub fn is_feasible(&self) -> bool {
        self.plan.is_some()
    }
}

#[derive(Debug, Clone)]
struct Candidate {
    trip: Trip,
    value: f64,
}

struct Search<'a> {
    inst: &'a Instance,
    matrix: &'a MetricMatrix,
    kind: ObjectiveKind,
    max_trips: usize,
    classes: HashMap<(usize, usize, Option<usize>), Vec<Candidate>>,
    depots: Vec<usize>,
    customer_lb: Vec<f64>,
    carry: bool,
    all_served: u64,
    best: Option<(f64, Vec<Vec<Trip>>)>,
    stack: Vec<Vec<Trip>>,
    states: u64,
    sims: u64,
}

/// Interior sequences of distinct nodes, length 0..=max_len, with at most
/// one customer, in lexicographic order by length.
fn interior_sequences(nodes: &[usize], max_len: usize, instance: &Instance) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for seq in &frontier {
            let has_customer = seq.iter().any(|&n: &usize| instance.kind(n) == NodeKind::Customer);
            for &n in nodes {
                if seq.contains(&n) || (has_customer && instance.kind(n) == NodeKind::Customer) {
                    continue;
                }
                let mut s = seq.clone();
                s.push(n);
                next.push(s);
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

impl<'a> Search<'a> {
    fn new(
        inst: &'a Instance,
        matrix: &'a MetricMatrix,
        bounds: &EnumerationBounds,
        kind: ObjectiveKind,
    ) -> Self {
        let depots: Vec<usize> = inst.depots().collect();
        let nodes = bounds.searched_nodes(inst);
        let seqs = interior_sequences(&nodes, bounds.max_interior_nodes_per_trip, inst);
        let th = &inst.thresholds;
        let mut classes: HashMap<(usize, usize, Option<usize>), Vec<Candidate>> = HashMap::new();
        for &s in &depots {
            for &e in &depots {
                for seq in &seqs {
                    if seq.is_empty() && s == e {
                        continue;
                    }
                    let mut nodes = Vec::with_capacity(seq.len() + 2);
                    nodes.push(s);
                    nodes.extend_from_slice(seq);
                    nodes.push(e);
                    let trip = Trip::new(nodes);
                    let m = trip_sums(&trip, matrix);
                    if f64::from(m.handovers) > th.h_max || m.outage_s > th.o_max {
                        continue;
                    }
                    let customer = seq.iter().find_map(|&n| inst.customer_index(n));
                    let value = match kind {
                        ObjectiveKind::TotalDistance => m.distance_m,
                        ObjectiveKind::MinmaxHandover => f64::from(m.handovers),
                        ObjectiveKind::MinmaxOutage => m.outage_s,
                    };
                    classes.entry((s, e, customer)).or_default().push(Candidate {
                        trip,
                        value,
                    });
                }
            }
        }
        let customer_lb = inst
            .customers
            .iter()
            .map(|c| {
                let to = depots.iter().map(|&d| matrix.get(d, c.node).distance_m).fold(f64::INFINITY, f64::min);
                let from = depots.iter().map(|&d| matrix.get(c.node, d).distance_m).fold(f64::INFINITY, f64::min);
                to + from
            })
            .collect();
        let n_c = inst.n_customers();
        Self {
            inst,
            matrix,
            kind,
            max_trips: bounds.max_trips(inst),
            classes,
            depots,
            customer_lb,
            carry: inst.battery_mode == BatteryMode::CarryOver,
            all_served: if n_c == 64 { u64::MAX } else { (1u64 << n_c) - 1 },
            best: None,
            stack: vec![Vec::new(); inst.n_drones()],
            states: 0,
            sims: 0,
        }
    }

    fn combine(&self, partial: f64, v: f64) -> f64 {
        match self.kind {
            ObjectiveKind::TotalDistance => partial + v,
            _ => partial.max(v),
        }
    }

    fn lower_bound(&self, partial: f64, served: u64) -> f64 {
        match self.kind {
            ObjectiveKind::TotalDistance => {
                let mut lb = partial;
                for (c, &l) in self.customer_lb.iter().enumerate() {
                    if served & (1 << c) == 0 {
                        lb += l;
                    }
                }
                lb
            }
            _ => partial,
        }
    }

    fn pruned(&self, partial: f64, served: u64) -> bool {
        match &self.best {
            Some((b, _)) => self.lower_bound(partial, served) >= *b,
            None => false,
        }
    }

    /// Feasible, mutually non-dominated trips of one class from `clock`.
    fn expand(&mut self, key: (usize, usize, Option<usize>), clock: DroneClock, partial: f64) -> Vec<(f64, DroneClock, Trip)> {
        let Some(cands) = self.classes.get(&key) else {
            return Vec::new();
        };
        let mut ok: Vec<(f64, DroneClock, usize)> = Vec::new();
        let mut sims = 0;
        for (idx, c) in cands.iter().enumerate() {
            sims += 1;
            let (ts, next) = simulate_trip(&c.trip, clock, self.inst, self.matrix);
            if next.time_s > self.inst.horizon_s {
                continue;
            }
            if ts.visits.iter().any(|v| v.battery_on_arrival < 0.0) {
                continue;
            }
            let late = ts.visits[1..ts.visits.len() - 1].iter().any(|v| {
                self.inst
                    .customer_index(v.node)
                    .is_some_and(|ci| v.service_start_s > self.inst.customers[ci].window_end_s)
            });
            if late {
                continue;
            }
            ok.push((self.combine(partial, c.value), next, idx));
        }
        self.sims += sims;
        ok.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.time_s.total_cmp(&b.1.time_s))
                .then(b.1.battery.total_cmp(&a.1.battery))
                .then(a.2.cmp(&b.2))
        });
        let mut kept: Vec<(f64, DroneClock, usize)> = Vec::new();
        for cand in ok {
            let dominated = kept.iter().any(|k| {
                k.0 <= cand.0 && k.1.time_s <= cand.1.time_s && (!self.carry || k.1.battery >= cand.1.battery)
            });
            if !dominated {
                kept.push(cand);
            }
        }
        kept.into_iter()
            .map(|(v, clock, idx)| (v, clock, cands[idx].trip.clone()))
            .collect()
    }

    fn dfs(&mut self, u: usize, cur: usize, clock: DroneClock, used: usize, served: u64, partial: f64) {
        self.states += 1;
        if self.pruned(partial, served) {
            return;
        }
        let inst = self.inst;
        if u == inst.n_drones() {
            if served == self.all_served {
                self.best = Some((partial, self.stack.clone()));
            }
            return;
        }
        let drone = &inst.drones[u];
        if cur == drone.end_depot {
            let (next_start, next_u) = match inst.drones.get(u + 1) {
                Some(d) => (d.start_depot, u + 1),
                None => (0, u + 1),
            };
            self.dfs(next_u, next_start, DroneClock::default(), 0, served, partial);
        }
        if used >= self.max_trips {
            return;
        }
        let mut keys = Vec::new();
        for &e in &self.depots {
            for c in 0..inst.n_customers() {
                if served & (1 << c) == 0 {
                    keys.push((cur, e, Some(c)));
                }
            }
            keys.push((cur, e, None));
        }
        for key in keys {
            for (value, next, trip) in self.expand(key, clock, partial) {
                let s = match key.2 {
                    Some(c) => served | (1 << c),
                    None => served,
                };
                if self.pruned(value, s) {
                    continue;
                }
                self.stack[u].push(trip);
                self.dfs(u, key.1, next, used + 1, s, value);
                self.stack[u].pop();
            }
        }
    }
}

/// Optimal plan under `bounds` for the given objective.
pub fn enumerate_optimal(
    instance: &Instance,
    matrix: &MetricMatrix,
    bounds: &EnumerationBounds,
    kind: ObjectiveKind,
) -> Result<ExactOutcome> {
    bounds.validate(instance)?;
    if matrix.len() != instance.n_flyable() {
        return Err(Error::Argument(format!(
            "metric matrix has {} nodes, instance has {}",
            matrix.len(),
            instance.n_flyable()
        )));
    }
    let max_trips = bounds.max_trips(instance);
    let estimate = search_estimate(instance, max_trips);
    if estimate > bounds.budget || instance.n_customers() > 63 {
        return Err(Error::SearchTooLarge {
            estimate,
            budget: bounds.budget,
        });
    }
    let mut search = Search::new(instance, matrix, bounds, kind);
    if instance.n_drones() == 0 {
        let feasible = instance.n_customers() == 0;
        let plan = feasible.then(|| Plan::empty(0));
        let result = plan.as_ref().map(|p| check_feasibility(p, instance, matrix));
        return Ok(ExactOutcome {
            objective: kind,
            value: result.as_ref().map(|r| kind.value(r)),
            plan,
            result,
            states: 0,
            trips_simulated: 0,
            search_estimate: estimate,
        });
    }
    let first = instance.drones[0].start_depot;
    search.dfs(0, first, DroneClock::default(), 0, 0, 0.0);
    let (plan, value, result) = match search.best.take() {
        Some((_, trips_by_drone)) => {
            let plan = Plan { trips_by_drone };
            let result = check_feasibility(&plan, instance, matrix);
            debug_assert!(result.is_feasible(), "{:?}", result.violations);
            (Some(plan), Some(kind.value(&result)), Some(result))
        }
        None => (None, None, None),
    };
    Ok(ExactOutcome {
        objective: kind,
        plan,
        value,
        result,
        states: search.states,
        trips_simulated: search.sims,
        search_estimate: estimate,
    })
}
