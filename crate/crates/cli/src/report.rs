use serde::{Deserialize, Serialize};

use cddp::exact::{optimality_gap, ExactOutcome};
use cddp::ga::GaOutcome;
use cddp::instance::Instance;
use cddp::solution::{EvalResult, ObjectiveKind, TripReport, ViolationClass};

/// Summary of one solver run, written as `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub instance_hash: String,
    pub algorithm: String,
    pub objective: ObjectiveKind,
    /// `None` when no feasible plan exists (exact) or none was found.
    pub objective_value: Option<f64>,
    pub feasible: bool,
    pub total_distance_m: Option<f64>,
    pub max_handovers: Option<u32>,
    pub max_outage_s: Option<f64>,
    pub trips: Vec<TripReport>,
    pub violated_classes: Vec<ViolationClass>,
    /// `null` means no limit.
    pub h_max: Option<f64>,
    pub o_max: Option<f64>,
    pub wall_time_s: f64,
    pub generations: Option<usize>,
    pub evaluations: Option<usize>,
    pub search_states: Option<u64>,
    pub bound: Option<f64>,
    pub gap: Option<f64>,
    pub seed: Option<u64>,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl RunReport {
    fn base(instance: &Instance, algorithm: &str, objective: ObjectiveKind, wall_time_s: f64) -> Self {
        Self {
            instance: instance.name.clone(),
            instance_hash: instance.hash(),
            algorithm: algorithm.into(),
            objective,
            objective_value: None,
            feasible: false,
            total_distance_m: None,
            max_handovers: None,
            max_outage_s: None,
            trips: Vec::new(),
            violated_classes: Vec::new(),
            h_max: finite(instance.thresholds.h_max),
            o_max: finite(instance.thresholds.o_max),
            wall_time_s,
            generations: None,
            evaluations: None,
            search_states: None,
            bound: None,
            gap: None,
            seed: None,
        }
    }

    fn fill(&mut self, result: &EvalResult, value: f64) {
        self.objective_value = Some(value);
        self.feasible = result.is_feasible();
        self.total_distance_m = Some(result.total_distance_m);
        self.max_handovers = Some(result.max_handovers());
        self.max_outage_s = Some(result.max_outage_s());
        self.trips = result.trips.clone();
        self.violated_classes = result.classes();
    }

    pub fn from_ga(instance: &Instance, out: &GaOutcome, objective: ObjectiveKind, seed: u64) -> Self {
        let mut r = Self::base(instance, "ga", objective, out.stats.wall_time_s);
        r.fill(&out.result, objective.value(&out.result));
        r.generations = Some(out.stats.generations);
        r.evaluations = Some(out.stats.evaluations);
        r.seed = Some(seed);
        r
    }

    pub fn from_exact(instance: &Instance, out: &ExactOutcome, wall_time_s: f64) -> Self {
        let mut r = Self::base(instance, "exact", out.objective, wall_time_s);
        if let (Some(result), Some(v)) = (&out.result, out.value) {
            r.fill(result, v);
        }
        r.search_states = Some(out.states);
        r
    }

    pub fn with_bound(mut self, bound: Option<f64>) -> Self {
        self.bound = bound;
        self.gap = match (bound, self.objective_value) {
            (Some(b), Some(v)) => optimality_gap(v, b),
            _ => None,
        };
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
