//! Plans as MIP assignments and back.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::mip::{build_mip, BatteryRows, MipExportConfig, MipModel, RowSense, RowViolation};
use super::optimality_gap;
use crate::arcs::MetricMatrix;
use crate::error::{Error, Result};
use crate::instance::{BatteryMode, Instance};
use crate::solution::{check_feasibility, simulate_schedule, EvalResult, Plan, Trip};

fn set(model: &MipModel, values: &mut [f64], name: &str, v: f64) -> Result<()> {
    let c = model
        .column_index(name)
        .ok_or_else(|| Error::Mapping(format!("no column {name} in the model")))?;
    values[c] = v;
    Ok(())
}

/// Column values implied by a plan: arcs, trip flags, simulated times and
/// battery levels. Columns of nodes a trip does not visit get values that
/// keep their relaxed rows satisfied where possible.
pub fn assignment_from_plan(model: &MipModel, plan: &Plan, instance: &Instance, matrix: &MetricMatrix) -> Result<Vec<f64>> {
    plan.matches(instance).map_err(|e| Error::Mapping(e.to_string()))?;
    let n_k = instance.n_customers();
    let mut values = vec![0.0; model.columns.len()];
    let mut fixed = vec![false; model.columns.len()];
    for (u, trips) in plan.trips_by_drone.iter().enumerate() {
        if trips.len() > n_k {
            return Err(Error::Mapping(format!(
                "drone {u} flies {} trips, the model has {n_k} trip slots",
                trips.len()
            )));
        }
        for (k, t) in trips.iter().enumerate() {
            let mut seen = t.nodes.clone();
            seen.sort_unstable();
            seen.dedup();
            let round_trip = t.nodes.len() > 2 && t.start() == t.end();
            if seen.len() + usize::from(round_trip) != t.nodes.len() {
                return Err(Error::Mapping(format!("drone {u} trip {k} revisits a node")));
            }
        }
    }
    let schedule = simulate_schedule(plan, instance, matrix);
    let mut mark = |values: &mut Vec<f64>, name: String, v: f64| -> Result<()> {
        set(model, values, &name, v)?;
        fixed[model.column_index(&name).unwrap()] = true;
        Ok(())
    };
    for (u, trips) in plan.trips_by_drone.iter().enumerate() {
        for (k, t) in trips.iter().enumerate() {
            mark(&mut values, format!("p_{u}_{k}"), 1.0)?;
            for (i, j) in t.arcs() {
                mark(&mut values, format!("x_{i}_{j}_{u}_{k}"), 1.0)?;
            }
            let ts = &schedule.drones[u][k];
            let last = ts.visits.len() - 1;
            for (idx, v) in ts.visits.iter().enumerate() {
                let i = v.node;
                if idx == 0 {
                    mark(&mut values, format!("sL_{i}_{u}_{k}"), v.arrival_s)?;
                    if model.battery_rows == BatteryRows::Verbatim {
                        let level = match instance.battery_mode {
                            BatteryMode::ResetAtDepot => 1.0,
                            BatteryMode::CarryOver => v.battery_on_arrival,
                        };
                        mark(&mut values, format!("y_{i}_{u}_{k}"), level)?;
                    }
                } else if idx == last {
                    mark(&mut values, format!("sA_{i}_{u}_{k}"), v.arrival_s)?;
                    mark(&mut values, format!("y_{i}_{u}_{k}"), v.battery_on_arrival)?;
                } else {
                    mark(&mut values, format!("sV_{i}_{u}_{k}"), v.service_start_s)?;
                    mark(&mut values, format!("y_{i}_{u}_{k}"), v.battery_on_arrival)?;
                }
            }
        }
    }
    // unpinned battery columns: start at 1, then move each into the interval
    // its rows allow given the others
    let inc = model.incidence();
    let free: Vec<usize> = model
        .columns
        .iter()
        .enumerate()
        .filter(|(c, col)| !fixed[*c] && col.name.starts_with("y_"))
        .map(|(c, _)| c)
        .collect();
    for &c in &free {
        values[c] = 1.0;
    }
    for _ in 0..4 {
        for &c in &free {
            let (mut lo, mut hi) = (model.columns[c].lower, model.columns[c].upper);
            for &(r, a) in &inc[c] {
                let row = &model.rows[r];
                let rest = model.activity(row, &values) - a * values[c];
                let bound = (row.rhs - rest) / a;
                let upper = match row.sense {
                    RowSense::Le => a > 0.0,
                    RowSense::Ge => a < 0.0,
                    RowSense::Eq => {
                        lo = lo.max(bound);
                        hi = hi.min(bound);
                        continue;
                    }
                };
                if upper {
                    hi = hi.min(bound);
                } else {
                    lo = lo.max(bound);
                }
            }
            if lo <= hi {
                values[c] = values[c].clamp(lo, hi);
            }
        }
    }
    Ok(values)
}

/// Reads `name value` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn parse_solution(text: &str) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse {
                context: format!("solution line {}", lineno + 1),
                message: format!("expected `name value`, got {line:?}"),
            });
        };
        let v: f64 = value.parse().map_err(|_| Error::Parse {
            context: format!("solution line {}", lineno + 1),
            message: format!("bad number {value:?}"),
        })?;
        out.push((name.to_string(), v));
    }
    Ok(out)
}

/// Rebuilds trips from the arc columns set above 0.5.
pub fn plan_from_assignment(instance: &Instance, values: &[(String, f64)]) -> Result<Plan> {
    let n = instance.n_flyable();
    let mut arcs: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (name, v) in values {
        let Some(rest) = name.strip_prefix("x_") else {
            continue;
        };
        let idx: Vec<usize> = rest
            .split('_')
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Mapping(format!("bad arc column name {name}")))?;
        let [i, j, u, k] = idx[..] else {
            return Err(Error::Mapping(format!("bad arc column name {name}")));
        };
        if i >= n || j >= n || i == j || u >= instance.n_drones() || k >= instance.n_customers() {
            return Err(Error::Mapping(format!("arc column {name} does not exist for this instance")));
        }
        if *v > 0.5 {
            arcs.entry((u, k)).or_default().push((i, j));
        }
    }
    let mut plan = Plan::empty(instance.n_drones());
    for ((u, k), list) in arcs {
        let mut succ: HashMap<usize, usize> = HashMap::new();
        let mut has_pred: HashMap<usize, usize> = HashMap::new();
        for &(i, j) in &list {
            if succ.insert(i, j).is_some() {
                return Err(Error::Mapping(format!("drone {u} trip {k}: node {i} has two outgoing arcs")));
            }
            if has_pred.insert(j, i).is_some() {
                return Err(Error::Mapping(format!("drone {u} trip {k}: node {j} has two incoming arcs")));
            }
        }
        let starts: Vec<usize> = list.iter().map(|&(i, _)| i).filter(|i| !has_pred.contains_key(i)).collect();
        let start = match starts.as_slice() {
            [s] => *s,
            // closed loop through its start depot
            [] => {
                let depots: Vec<usize> = list.iter().map(|&(i, _)| i).filter(|&i| instance.is_depot(i)).collect();
                match depots.as_slice() {
                    [d] => *d,
                    _ => return Err(Error::Mapping(format!("drone {u} trip {k}: arcs form no depot-rooted path"))),
                }
            }
            _ => return Err(Error::Mapping(format!("drone {u} trip {k}: arcs form several paths"))),
        };
        let mut nodes = vec![start];
        let mut cur = start;
        while let Some(&next) = succ.get(&cur) {
            nodes.push(next);
            cur = next;
            if nodes.len() > list.len() + 1 || next == start {
                break;
            }
        }
        if nodes.len() != list.len() + 1 {
            return Err(Error::Mapping(format!("drone {u} trip {k}: arcs do not form one path")));
        }
        plan.trips_by_drone[u].push(Trip::new(nodes));
    }
    Ok(plan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub plan: Plan,
    pub result: EvalResult,
    pub feasible: bool,
    /// Total distance of the reconstructed plan.
    pub objective_value: f64,
    /// Objective row evaluated at the supplied values.
    pub mip_objective: f64,
    pub objective_agrees: bool,
    pub gap: Option<f64>,
    /// Model rows the supplied values violate by more than 1e-6.
    pub row_violations: Vec<RowViolation>,
}

/// Checks an external solver's `name value` solution against the instance.
pub fn verify_against_mps(
    instance: &Instance,
    matrix: &MetricMatrix,
    config: &MipExportConfig,
    solution_text: &str,
    bound: Option<f64>,
) -> Result<VerifyReport> {
    let model = build_mip(instance, matrix, config)?;
    let pairs = parse_solution(solution_text)?;
    let mut values = vec![0.0; model.columns.len()];
    for (name, v) in &pairs {
        let c = model
            .column_index(name)
            .ok_or_else(|| Error::Mapping(format!("solution names unknown column {name}")))?;
        values[c] = *v;
    }
    let plan = plan_from_assignment(instance, &pairs)?;
    let result = check_feasibility(&plan, instance, matrix);
    let objective_value = result.total_distance_m;
    let mip_objective = model.objective_value(&values);
    Ok(VerifyReport {
        feasible: result.is_feasible(),
        objective_agrees: (objective_value - mip_objective).abs() <= 1e-6 * objective_value.abs().max(1.0),
        gap: bound.and_then(|b| optimality_gap(objective_value, b)),
        row_violations: model.violations(&values, 1e-6),
        plan,
        result,
        objective_value,
        mip_objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comm::{CommNetwork, CommParams};
    use crate::geometry::{Point, Region};
    use crate::instance::InstanceBuilder;
    use crate::solution::ViolationClass;

    fn inst() -> Instance {
        let net = CommNetwork::from_positions(&[Point::new(500.0, 500.0)], 46.0, CommParams::default()).unwrap();
        let mut b = InstanceBuilder::new(Region::new(1000.0, 1000.0), net);
        b.depots = vec![Point::new(0.0, 0.0), Point::new(1000.0, 0.0)];
        b.customers = vec![(Point::new(500.0, 400.0), 600.0, 28_800.0)];
        b.charging_stations = vec![Point::new(500.0, 900.0)];
        b.with_waypoints = false;
        b.drones = vec![(0, 1)];
        b.build().unwrap()
    }

    fn to_text(model: &MipModel, values: &[f64]) -> String {
        model
            .columns
            .iter()
            .zip(values)
            .map(|(c, v)| format!("{} {v}\n", c.name))
            .collect()
    }

    #[test]
    fn plan_assignment_satisfies_every_row() {
        let inst = inst();
        let m = inst.metric_matrix().unwrap();
        let model = build_mip(&inst, &m, &MipExportConfig::default()).unwrap();
        for trip in [vec![0, 2, 1], vec![0, 2, 3, 1], vec![0, 3, 2, 1]] {
            let plan = Plan {
                trips_by_drone: vec![vec![Trip::new(trip.clone())]],
            };
            assert!(check_feasibility(&plan, &inst, &m).is_feasible());
            let values = assignment_from_plan(&model, &plan, &inst, &m).unwrap();
            let bad = model.violations(&values, 1e-6);
            assert!(bad.is_empty(), "{trip:?}: {bad:?}");
            assert!((model.objective_value(&values) - crate::solution::objective(&plan, &m)).abs() < 1e-6);
        }
    }

    #[test]
    fn round_trip_through_solution_text() {
        let inst = inst();
        let m = inst.metric_matrix().unwrap();
        let cfg = MipExportConfig::default();
        let model = build_mip(&inst, &m, &cfg).unwrap();
        let plan = Plan {
            trips_by_drone: vec![vec![Trip::new(vec![0, 2, 1])]],
        };
        let values = assignment_from_plan(&model, &plan, &inst, &m).unwrap();
        let best = crate::solution::objective(&plan, &m);
        let report = verify_against_mps(&inst, &m, &cfg, &to_text(&model, &values), Some(best)).unwrap();
        assert_eq!(report.plan, plan);
        assert!(report.feasible);
        assert!(report.objective_agrees);
        assert_eq!(report.gap, Some(0.0));
        assert!(report.row_violations.is_empty());
    }

    #[test]
    fn unserved_customer_is_flagged() {
        let inst = inst();
        let m = inst.metric_matrix().unwrap();
        let cfg = MipExportConfig::default();
        let report = verify_against_mps(&inst, &m, &cfg, "x_0_1_0_0 1\np_0_0 1\n", None).unwrap();
        assert!(report.result.classes().contains(&ViolationClass::CustomerCoverage));
        assert!(report.row_violations.iter().any(|r| r.name == "visit_2"));
    }

    #[test]
    fn inconsistent_solutions_are_mapping_errors() {
        let inst = inst();
        let m = inst.metric_matrix().unwrap();
        let cfg = MipExportConfig::default();
        for text in ["x_0_9_0_0 1", "z_1 1", "x_0_2_0_0 1\nx_0_3_0_0 1"] {
            assert!(matches!(
                verify_against_mps(&inst, &m, &cfg, text, None),
                Err(Error::Mapping(_))
            ), "{text}");
        }
        assert!(matches!(parse_solution("x_0_1_0_0"), Err(Error::Parse { .. })));
    }

    #[test]
    fn revisits_cannot_be_mapped() {
        let inst = inst();
        let m = inst.metric_matrix().unwrap();
        let model = build_mip(&inst, &m, &MipExportConfig::default()).unwrap();
        let plan = Plan {
            trips_by_drone: vec![vec![Trip::new(vec![0, 3, 2, 3, 1])]],
        };
        assert!(matches!(assignment_from_plan(&model, &plan, &inst, &m), Err(Error::Mapping(_))));
    }
}
