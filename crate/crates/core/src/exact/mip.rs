//! The mixed-integer model of the delivery problem and its free-MPS form.
//!
//! Columns:
//! - `x_<i>_<j>_<u>_<k>` binary, arc (i, j) flown by drone u on trip k
//! - `p_<u>_<k>` binary, drone u operates trip k
//! - `y_<i>_<u>_<k>` in [0, 1], battery on arrival at node i
//! - `sL_<i>_<u>_<k>`, `sA_<i>_<u>_<k>` leave and arrival times at depot i
//! - `sV_<i>_<u>_<k>` visit (service start) time at non-depot node i
//!
//! Rows, by family prefix: `hand`, `outg` (per-trip thresholds, omitted when
//! infinite), `visit` (customer served once), `flow` (balance at non-depot
//! nodes), `start`, `end` (workday depots), `assign` (arc needs its trip),
//! `seq` (trips used in order), `leave`, `arrive`, `onecust` (at most one
//! per trip), `depot` (next trip leaves where the last ended), `batlo` and
//! `bathi` (the two sides of each battery equation), `twlo`, `twhi` (time
//! windows), `tstart`, `tfirst`, `tmid`, `tend`, `thop` (timing).
//!
//! Trips are indexed `k = 0..n_C`. Big-M is horizon plus the largest
//! operation time plus the largest arc travel time.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::arcs::MetricMatrix;
use crate::error::{Error, Result};
use crate::instance::{BatteryMode, Instance, NodeKind};

/// Which battery equation arcs leaving a depot use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryRows {
    /// Depots use the chained form `y_j = y_i - c_ij`, as for customers and
    /// waypoints. A trip that returns to its start depot then needs zero
    /// battery use, since both ends share one `y` column.
    Verbatim,
    /// Arcs leaving a depot use the charging-station form `y_j = 1 - c_ij`,
    /// matching a battery swap at every depot departure.
    DepotReset,
}

impl BatteryRows {
    pub fn for_mode(mode: BatteryMode) -> Self {
        match mode {
            BatteryMode::ResetAtDepot => BatteryRows::DepotReset,
            BatteryMode::CarryOver => BatteryRows::Verbatim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MipExportConfig {
    /// Model name; `None` uses the instance name or `cddp`.
    pub name: Option<String>,
    /// `None` follows the instance battery mode.
    pub battery_rows: Option<BatteryRows>,
    pub max_columns: usize,
}

impl Default for MipExportConfig {
    fn default() -> Self {
        Self {
            name: None,
            battery_rows: None,
            max_columns: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipColumn {
    pub name: String,
    pub kind: ColumnKind,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MipRow {
    pub name: String,
    pub sense: RowSense,
    pub rhs: f64,
    pub terms: Vec<(usize, f64)>,
}

/// A violated row or column bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowViolation {
    pub name: String,
    pub activity: f64,
    pub rhs: f64,
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipModel {
    pub name: String,
    pub columns: Vec<MipColumn>,
    pub rows: Vec<MipRow>,
    pub big_m: f64,
    pub battery_rows: BatteryRows,
    index: HashMap<String, usize>,
}

impl MipModel {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.columns.iter().zip(values).map(|(c, v)| c.objective * v).sum()
    }

    pub fn activity(&self, row: &MipRow, values: &[f64]) -> f64 {
        row.terms.iter().map(|&(c, a)| a * values[c]).sum()
    }

    /// Rows and bounds violated by more than `tol`.
    pub fn violations(&self, values: &[f64], tol: f64) -> Vec<RowViolation> {
        let mut out = Vec::new();
        for row in &self.rows {
            let act = self.activity(row, values);
            let excess = match row.sense {
                RowSense::Le => act - row.rhs,
                RowSense::Ge => row.rhs - act,
                RowSense::Eq => (act - row.rhs).abs(),
            };
            if excess > tol {
                out.push(RowViolation {
                    name: row.name.clone(),
                    activity: act,
                    rhs: row.rhs,
                    excess,
                });
            }
        }
        for (c, &v) in self.columns.iter().zip(values) {
            let below = c.lower - v;
            let above = v - c.upper;
            let frac = if c.kind == ColumnKind::Binary {
                (v - v.round()).abs()
            } else {
                0.0
            };
            let excess = below.max(above).max(frac);
            if excess > tol {
                out.push(RowViolation {
                    name: c.name.clone(),
                    activity: v,
                    rhs: if below > 0.0 { c.lower } else { c.upper },
                    excess,
                });
            }
        }
        out
    }

    /// Column-to-row incidence, rows in ascending order.
    pub(crate) fn incidence(&self) -> Vec<Vec<(usize, f64)>> {
        let mut inc = vec![Vec::new(); self.columns.len()];
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, a) in &row.terms {
                inc[c].push((r, a));
            }
        }
        inc
    }

    /// Free-MPS text. Binary columns are wrapped in integer markers and
    /// bounded above by 1.
    pub fn to_mps(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NAME {}", self.name);
        out.push_str("ROWS\n N obj\n");
        for row in &self.rows {
            let s = match row.sense {
                RowSense::Le => "L",
                RowSense::Ge => "G",
                RowSense::Eq => "E",
            };
            let _ = writeln!(out, " {s} {}", row.name);
        }
        out.push_str("COLUMNS\n");
        let inc = self.incidence();
        let mut in_int = false;
        for (c, col) in self.columns.iter().enumerate() {
            let is_int = col.kind == ColumnKind::Binary;
            if is_int != in_int {
                let tag = if is_int { "'INTORG'" } else { "'INTEND'" };
                let _ = writeln!(out, "    MARKER 'MARKER' {tag}");
                in_int = is_int;
            }
            let mut wrote = false;
            if col.objective != 0.0 {
                let _ = writeln!(out, "    {} obj {}", col.name, fmt_num(col.objective));
                wrote = true;
            }
            for &(r, a) in &inc[c] {
                let _ = writeln!(out, "    {} {} {}", col.name, self.rows[r].name, fmt_num(a));
                wrote = true;
            }
            if !wrote {
                let _ = writeln!(out, "    {} obj 0", col.name);
            }
        }
        if in_int {
            out.push_str("    MARKER 'MARKER' 'INTEND'\n");
        }
        out.push_str("RHS\n");
        for row in &self.rows {
            if row.rhs != 0.0 {
                let _ = writeln!(out, "    rhs {} {}", row.name, fmt_num(row.rhs));
            }
        }
        out.push_str("BOUNDS\n");
        for col in &self.columns {
            if col.lower != 0.0 {
                let _ = writeln!(out, " LO bnd {} {}", col.name, fmt_num(col.lower));
            }
            if col.upper.is_finite() {
                let _ = writeln!(out, " UP bnd {} {}", col.name, fmt_num(col.upper));
            }
        }
        out.push_str("ENDATA\n");
        out
    }
}

/// Twelve significant digits, plain decimal unless the magnitude is extreme.
pub(crate) fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.11e}", v);
    let exp: i32 = sci.rsplit('e').next().unwrap().parse().unwrap();
    if !(-6..15).contains(&exp) {
        let (mant, _) = sci.split_once('e').unwrap();
        let mant = trim_zeros(mant);
        return format!("{mant}e{exp}");
    }
    let prec = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", prec, v))
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

struct Builder {
    columns: Vec<MipColumn>,
    rows: Vec<MipRow>,
}

impl Builder {
    fn col(&mut self, name: String, kind: ColumnKind, upper: f64, objective: f64) -> usize {
        self.columns.push(MipColumn {
            name,
            kind,
            lower: 0.0,
            upper,
            objective,
        });
        self.columns.len() - 1
    }

    fn row(&mut self, name: String, sense: RowSense, rhs: f64, terms: Vec<(usize, f64)>) {
        // merge repeated columns, drop zeros
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (c, a) in terms {
            match merged.iter_mut().find(|(mc, _)| *mc == c) {
                Some(e) => e.1 += a,
                None => merged.push((c, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.rows.push(MipRow {
            name,
            sense,
            rhs,
            terms: merged,
        });
    }
}

/// Number of columns the model of `instance` would have.
pub fn column_count(instance: &Instance) -> usize {
    let n = instance.n_flyable();
    let per_trip = n * n.saturating_sub(1) + 1 + n + 2 * instance.n_depots() + (n - instance.n_depots());
    per_trip * instance.n_drones() * instance.n_customers()
}

pub fn build_mip(instance: &Instance, matrix: &MetricMatrix, config: &MipExportConfig) -> Result<MipModel> {
    let n = instance.n_flyable();
    if matrix.len() != n {
        return Err(Error::Argument(format!(
            "metric matrix has {} nodes, instance has {n}",
            matrix.len()
        )));
    }
    let columns = column_count(instance);
    if columns > config.max_columns {
        return Err(Error::ModelTooLarge {
            columns,
            limit: config.max_columns,
        });
    }
    let battery_rows = config
        .battery_rows
        .unwrap_or(BatteryRows::for_mode(instance.battery_mode));
    let n_u = instance.n_drones();
    let n_k = instance.n_customers();
    let is_depot: Vec<bool> = (0..n).map(|i| instance.is_depot(i)).collect();
    let kind: Vec<NodeKind> = (0..n).map(|i| instance.kind(i)).collect();
    let w: Vec<f64> = (0..n).map(|i| instance.op_time(i)).collect();
    let big_m = instance.horizon_s + instance.max_op_time() + matrix.max_travel_time();
    let inf = f64::INFINITY;

    let mut b = Builder {
        columns: Vec::with_capacity(columns),
        rows: Vec::new(),
    };
    let none = usize::MAX;
    let slot = |u: usize, k: usize| u * n_k + k;
    let mut x = vec![none; n_u * n_k * n * n];
    let xi = |u: usize, k: usize, i: usize, j: usize| (slot(u, k) * n + i) * n + j;
    for u in 0..n_u {
        for k in 0..n_k {
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        x[xi(u, k, i, j)] = b.col(
                            format!("x_{i}_{j}_{u}_{k}"),
                            ColumnKind::Binary,
                            1.0,
                            matrix.get(i, j).distance_m,
                        );
                    }
                }
            }
        }
    }
    let mut p = vec![none; n_u * n_k];
    for u in 0..n_u {
        for k in 0..n_k {
            p[slot(u, k)] = b.col(format!("p_{u}_{k}"), ColumnKind::Binary, 1.0, 0.0);
        }
    }
    let mut y = vec![none; n_u * n_k * n];
    let mut s_l = vec![none; n_u * n_k * n];
    let mut s_a = vec![none; n_u * n_k * n];
    let mut s_v = vec![none; n_u * n_k * n];
    let ni = |u: usize, k: usize, i: usize| slot(u, k) * n + i;
    for u in 0..n_u {
        for k in 0..n_k {
            for i in 0..n {
                y[ni(u, k, i)] = b.col(format!("y_{i}_{u}_{k}"), ColumnKind::Continuous, 1.0, 0.0);
            }
            for i in 0..n {
                if is_depot[i] {
                    s_l[ni(u, k, i)] = b.col(format!("sL_{i}_{u}_{k}"), ColumnKind::Continuous, inf, 0.0);
                    s_a[ni(u, k, i)] = b.col(format!("sA_{i}_{u}_{k}"), ColumnKind::Continuous, inf, 0.0);
                } else {
                    s_v[ni(u, k, i)] = b.col(format!("sV_{i}_{u}_{k}"), ColumnKind::Continuous, inf, 0.0);
                }
            }
        }
    }
    debug_assert_eq!(b.columns.len(), columns);

    let th = &instance.thresholds;
    let arcs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).collect();
    let out_of = |u: usize, k: usize, i: usize, x: &[usize]| -> Vec<(usize, f64)> {
        (0..n).filter(|&j| j != i).map(|j| (x[xi(u, k, i, j)], 1.0)).collect()
    };
    let into = |u: usize, k: usize, j: usize, x: &[usize]| -> Vec<(usize, f64)> {
        (0..n).filter(|&i| i != j).map(|i| (x[xi(u, k, i, j)], 1.0)).collect()
    };

    for u in 0..n_u {
        for k in 0..n_k {
            if th.h_max.is_finite() {
                let t = arcs
                    .iter()
                    .map(|&(i, j)| (x[xi(u, k, i, j)], f64::from(matrix.get(i, j).handovers)))
                    .collect();
                b.row(format!("hand_{u}_{k}"), RowSense::Le, th.h_max, t);
            }
            if th.o_max.is_finite() {
                let t = arcs
                    .iter()
                    .map(|&(i, j)| (x[xi(u, k, i, j)], matrix.get(i, j).outage_duration_s))
                    .collect();
                b.row(format!("outg_{u}_{k}"), RowSense::Le, th.o_max, t);
            }
        }
    }
    for c in &instance.customers {
        let j = c.node;
        let mut t = Vec::new();
        for u in 0..n_u {
            for k in 0..n_k {
                t.extend(into(u, k, j, &x));
            }
        }
        b.row(format!("visit_{j}"), RowSense::Eq, 1.0, t);
    }
    for u in 0..n_u {
        for k in 0..n_k {
            for i in (0..n).filter(|&i| !is_depot[i]) {
                let mut t = out_of(u, k, i, &x);
                t.extend(into(u, k, i, &x).into_iter().map(|(c, _)| (c, -1.0)));
                b.row(format!("flow_{i}_{u}_{k}"), RowSense::Eq, 0.0, t);
            }
        }
    }
    for (u, d) in instance.drones.iter().enumerate() {
        if n_k == 0 {
            continue;
        }
        let mut t = vec![(p[slot(u, 0)], 1.0)];
        t.extend(out_of(u, 0, d.start_depot, &x).into_iter().map(|(c, _)| (c, -1.0)));
        b.row(format!("start_{u}"), RowSense::Le, 0.0, t);
        for k in 0..n_k {
            let mut t = vec![(p[slot(u, k)], 1.0)];
            if k + 1 < n_k {
                t.push((p[slot(u, k + 1)], -1.0));
            }
            t.extend(into(u, k, d.end_depot, &x).into_iter().map(|(c, _)| (c, -1.0)));
            b.row(format!("end_{u}_{k}"), RowSense::Le, 0.0, t);
        }
    }
    for u in 0..n_u {
        for k in 0..n_k {
            for &(i, j) in &arcs {
                b.row(
                    format!("assign_{i}_{j}_{u}_{k}"),
                    RowSense::Le,
                    0.0,
                    vec![(x[xi(u, k, i, j)], 1.0), (p[slot(u, k)], -1.0)],
                );
            }
        }
    }
    for u in 0..n_u {
        for k in 0..n_k.saturating_sub(1) {
            b.row(
                format!("seq_{u}_{k}"),
                RowSense::Le,
                0.0,
                vec![(p[slot(u, k + 1)], 1.0), (p[slot(u, k)], -1.0)],
            );
        }
    }
    for u in 0..n_u {
        for k in 0..n_k {
            let leave = (0..n).filter(|&i| is_depot[i]).flat_map(|i| out_of(u, k, i, &x)).collect();
            b.row(format!("leave_{u}_{k}"), RowSense::Le, 1.0, leave);
            let arrive = (0..n).filter(|&i| is_depot[i]).flat_map(|i| into(u, k, i, &x)).collect();
            b.row(format!("arrive_{u}_{k}"), RowSense::Le, 1.0, arrive);
            let cust = instance.customers.iter().flat_map(|c| into(u, k, c.node, &x)).collect();
            b.row(format!("onecust_{u}_{k}"), RowSense::Le, 1.0, cust);
        }
    }
    for u in 0..n_u {
        for k in 0..n_k.saturating_sub(1) {
            for i in (0..n).filter(|&i| is_depot[i]) {
                let mut t = out_of(u, k + 1, i, &x);
                t.extend(into(u, k, i, &x).into_iter().map(|(c, _)| (c, -1.0)));
                b.row(format!("depot_{i}_{u}_{k}"), RowSense::Le, 0.0, t);
            }
        }
    }
    for u in 0..n_u {
        for k in 0..n_k {
            for &(i, j) in &arcs {
                let c = matrix.get(i, j).battery_cost;
                let xv = x[xi(u, k, i, j)];
                let yj = y[ni(u, k, j)];
                let reset = kind[i] == NodeKind::ChargingStation
                    || (is_depot[i] && battery_rows == BatteryRows::DepotReset);
                if reset {
                    b.row(format!("batlo_{i}_{j}_{u}_{k}"), RowSense::Ge, -c, vec![(yj, 1.0), (xv, -1.0)]);
                    b.row(format!("bathi_{i}_{j}_{u}_{k}"), RowSense::Le, 2.0 - c, vec![(yj, 1.0), (xv, 1.0)]);
                } else {
                    let yi = y[ni(u, k, i)];
                    b.row(
                        format!("batlo_{i}_{j}_{u}_{k}"),
                        RowSense::Ge,
                        -1.0 - c,
                        vec![(yj, 1.0), (yi, -1.0), (xv, -1.0)],
                    );
                    b.row(
                        format!("bathi_{i}_{j}_{u}_{k}"),
                        RowSense::Le,
                        1.0 - c,
                        vec![(yj, 1.0), (yi, -1.0), (xv, 1.0)],
                    );
                }
            }
        }
    }
    for u in 0..n_u {
        for k in 0..n_k {
            for cu in &instance.customers {
                let i = cu.node;
                let sv = s_v[ni(u, k, i)];
                let inflow = into(u, k, i, &x);
                let mut lo = vec![(sv, 1.0)];
                lo.extend(inflow.iter().map(|&(c, _)| (c, -big_m)));
                b.row(format!("twlo_{i}_{u}_{k}"), RowSense::Ge, cu.window_start_s - big_m, lo);
                let mut hi = vec![(sv, 1.0)];
                hi.extend(inflow.iter().map(|&(c, _)| (c, big_m)));
                b.row(format!("twhi_{i}_{u}_{k}"), RowSense::Le, cu.window_end_s + big_m, hi);
            }
        }
    }
    for u in 0..n_u {
        for k in 0..n_k.saturating_sub(1) {
            for i in (0..n).filter(|&i| is_depot[i]) {
                b.row(
                    format!("tstart_{i}_{u}_{k}"),
                    RowSense::Le,
                    big_m,
                    vec![
                        (s_a[ni(u, k, i)], 1.0),
                        (s_l[ni(u, k + 1, i)], -1.0),
                        (p[slot(u, k + 1)], big_m),
                    ],
                );
            }
        }
    }
    for u in 0..n_u {
        for k in 0..n_k {
            for &(i, j) in &arcs {
                let t = matrix.get(i, j).travel_time_s;
                let xv = x[xi(u, k, i, j)];
                let (family, from, to, rhs) = match (is_depot[i], is_depot[j]) {
                    (true, false) => ("tfirst", s_l[ni(u, k, i)], s_v[ni(u, k, j)], big_m - w[i] - t),
                    (false, false) => ("tmid", s_v[ni(u, k, i)], s_v[ni(u, k, j)], big_m - w[i] - t),
                    (false, true) => ("tend", s_v[ni(u, k, i)], s_a[ni(u, k, j)], big_m - w[i] - t),
                    (true, true) => ("thop", s_l[ni(u, k, i)], s_a[ni(u, k, j)], big_m - t),
                };
                b.row(
                    format!("{family}_{i}_{j}_{u}_{k}"),
                    RowSense::Le,
                    rhs,
                    vec![(from, 1.0), (to, -1.0), (xv, big_m)],
                );
            }
        }
    }

    let index = b
        .columns
        .iter()
        .enumerate()
        .map(|(i, c)| (c.name.clone(), i))
        .collect();
    let name = config.name.clone().unwrap_or_else(|| {
        if instance.name.is_empty() {
            "cddp".into()
        } else {
            instance.name.clone()
        }
    });
    Ok(MipModel {
        name: name.split_whitespace().collect::<Vec<_>>().join("_"),
        columns: b.columns,
        rows: b.rows,
        big_m,
        battery_rows,
        index,
    })
}

pub fn export_mps(instance: &Instance, matrix: &MetricMatrix, config: &MipExportConfig) -> Result<String> {
    Ok(build_mip(instance, matrix, config)?.to_mps())
}
