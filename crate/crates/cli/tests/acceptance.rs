//! Acceptance criteria 1-10. Each prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails. Pass criterion numbers as
//! arguments to run a subset.

use std::collections::HashMap;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cddp::arcs::{comm_profile, MetricMatrix};
use cddp::comm::{spectral_efficiency_from_sinr, CommNetwork, CommParams};
use cddp::exact::{
    assignment_from_plan, build_mip, enumerate_optimal, verify_against_mps, EnumerationBounds, MipExportConfig,
};
use cddp::ga::{self, genome_len, GaConfig};
use cddp::geometry::{Point, Region};
use cddp::instance::{
    generate, generate_waypoints, illustrative, illustrative_stations, Drone, GeneratorConfig, Instance,
    InstanceBuilder, NodeKind, Thresholds,
};
use cddp::solution::{check_feasibility, simulate_schedule, ObjectiveKind, Plan, Trip, ViolationClass};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

type Criterion = fn() -> Outcome;

fn main() {
    let criteria: [(u32, &str, u64, Criterion); 10] = [
        (1, "illustrative label count", 1, c1_label_count),
        (2, "genome length", 1, c2_genome_length),
        (3, "channel model properties", 5, c3_channel),
        (4, "discretization convergence", 30, c4_discretization),
        (5, "GA against enumeration", 600, c5_oracle_equivalence),
        (6, "relaxation monotonicity", 600, c6_relaxation),
        (7, "illustrative min-max handover", 120, c7_illustrative),
        (8, "MIP cross-check", 60, c8_mip),
        (9, "checker mutation suite", 60, c9_mutations),
        (10, "solve determinism", 120, c10_determinism),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (n, name, limit_s, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let started = Instant::now();
        let outcome = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        let elapsed = started.elapsed();
        let in_time = elapsed <= Duration::from_secs(limit_s);
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {n:>2} {name}: {} ({}; {:.2} s of {limit_s} s)",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- fixtures

fn illustrative_network(params: CommParams) -> CommNetwork {
    CommNetwork::from_positions(&illustrative_stations(), 46.0, params).unwrap()
}

const CORNERS: [(f64, f64); 4] = [(0.0, 0.0), (1000.0, 0.0), (1000.0, 1000.0), (0.0, 1000.0)];
const CHARGERS: [(f64, f64); 4] = [(300.0, 300.0), (700.0, 300.0), (700.0, 700.0), (300.0, 700.0)];

#[derive(Clone, Copy)]
struct TinySpec {
    customers: usize,
    drones: usize,
    chargers: usize,
    waypoints: usize,
    windows: bool,
    range_m: f64,
}

/// A 1 km instance on the nine-station network with few non-depot nodes.
fn tiny_instance(seed: u64, spec: TinySpec) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let region = Region::new(1000.0, 1000.0);
    let comm = illustrative_network(CommParams::default());
    let all_wps = generate_waypoints(&comm, &region);
    let mut b = InstanceBuilder::new(region, comm);
    b.name = format!("tiny-{seed}");
    b.depots = CORNERS.iter().map(|&(x, y)| Point::new(x, y)).collect();
    let horizon = b.horizon_s;
    b.customers = (0..spec.customers)
        .map(|_| {
            let p = Point::new(rng.random_range(50.0..950.0), rng.random_range(50.0..950.0));
            if spec.windows {
                let a = rng.random_range(0.0..3600.0);
                (p, a, a + rng.random_range(900.0..3600.0))
            } else {
                (p, 0.0, horizon)
            }
        })
        .collect();
    b.charging_stations = sample(&mut rng, CHARGERS.len(), spec.chargers)
        .into_iter()
        .map(|i| Point::new(CHARGERS[i].0, CHARGERS[i].1))
        .collect();
    b.with_waypoints = false;
    b.extra_waypoints = sample(&mut rng, all_wps.len(), spec.waypoints)
        .into_iter()
        .map(|i| all_wps[i])
        .collect();
    b.drones = (0..spec.drones)
        .map(|_| (rng.random_range(0..4), rng.random_range(0..4)))
        .collect();
    b.metric_config.battery_range_m = spec.range_m;
    b.build().unwrap()
}

fn non_depot_ids(inst: &Instance, kinds: &[NodeKind]) -> Vec<usize> {
    inst.nodes.iter().filter(|n| kinds.contains(&n.kind)).map(|n| n.id).collect()
}

fn exact(inst: &Instance, m: &MetricMatrix, kind: ObjectiveKind) -> Option<f64> {
    enumerate_optimal(inst, m, &EnumerationBounds::default(), kind).unwrap().value
}

fn trip_handovers(t: &[usize], m: &MetricMatrix) -> u32 {
    t.windows(2).map(|w| m.get(w[0], w[1]).handovers).sum()
}

fn trip_outage(t: &[usize], m: &MetricMatrix) -> f64 {
    t.windows(2).map(|w| m.get(w[0], w[1]).outage_duration_s).sum()
}

fn trip_distance(t: &[usize], m: &MetricMatrix) -> f64 {
    t.windows(2).map(|w| m.get(w[0], w[1]).distance_m).sum()
}

// ---------------------------------------------------------------- 1, 2

fn c1_label_count() -> Outcome {
    let inst = illustrative(CommParams::default()).unwrap();
    let count = |k: NodeKind| inst.nodes.iter().filter(|n| n.kind == k).count();
    let n = inst.n_flyable();
    let ok = n == 26
        && count(NodeKind::Depot) == 4
        && count(NodeKind::Customer) == 2
        && count(NodeKind::ChargingStation) == 4
        && inst.comm.len() == 9;
    Outcome::new(
        ok,
        format!("{n} labels, {} waypoints", count(NodeKind::Waypoint)),
    )
}

fn c2_genome_length() -> Outcome {
    let one = illustrative(CommParams::default()).unwrap();
    let mut two = one.clone();
    two.drones.push(Drone {
        id: 1,
        start_depot: 2,
        end_depot: 3,
    });
    two.validate().unwrap();
    let m = one.metric_matrix().unwrap();
    let cfg = GaConfig {
        population_size: 4,
        max_generations: Some(1),
        ..GaConfig::default()
    };
    let g1 = ga::run(&one, &m, &cfg).unwrap().genes.len();
    let g2 = ga::run(&two, &m, &cfg).unwrap().genes.len();
    let ok = genome_len(&one) == 52 && genome_len(&two) == 104 && g1 == 52 && g2 == 104;
    Outcome::new(ok, format!("one drone {g1}, two drones {g2}"))
}

// ---------------------------------------------------------------- 3

fn c3_channel() -> Outcome {
    let p = CommParams::default();
    let mut problems = Vec::new();
    let mut prev = -1.0;
    for k in 0..=900 {
        let theta = k as f64 * 0.1;
        let v = p.los_probability_at_angle(theta);
        let closed = 1.0 / (1.0 + 12.08 * (-0.11 * (theta - 12.08)).exp());
        if !(0.0..=1.0).contains(&v) {
            problems.push(format!("P_LoS({theta}) = {v} outside [0,1]"));
        }
        if v <= prev {
            problems.push(format!("P_LoS not increasing at {theta}"));
        }
        if (v - closed).abs() > 1e-12 {
            problems.push(format!("P_LoS({theta}) off closed form by {:e}", (v - closed).abs()));
        }
        prev = v;
    }
    let mut prev = f64::NEG_INFINITY;
    for k in 0..=2000 {
        let d = k as f64 * 5.0;
        let l = p.mean_pathloss_at(d);
        let slant = (d * d + 100.0 * 100.0).sqrt();
        let theta = (100.0 / d).atan().to_degrees();
        let pl = 1.0 / (1.0 + 12.08 * (-0.11 * (theta - 12.08)).exp());
        let closed = 25.0 * (4.0 * std::f64::consts::PI * 2.0e9 / 299_792_458.0 * slant).log10()
            + 1.6 * pl
            + 23.0 * (1.0 - pl);
        if l <= prev {
            problems.push(format!("pathloss not increasing at {d} m"));
        }
        if (l - closed).abs() > 1e-12 * closed.abs().max(1.0) {
            problems.push(format!("pathloss({d}) off closed form by {:e}", (l - closed).abs()));
        }
        prev = l;
    }
    let se1 = spectral_efficiency_from_sinr(1.0);
    let se3 = spectral_efficiency_from_sinr(3.0);
    if (se1 - 1.0).abs() > 1e-12 || (se3 - 2.0).abs() > 1e-12 {
        problems.push(format!("SE(1) = {se1}, SE(3) = {se3}"));
    }
    let net = illustrative_network(p);
    let q = Point::new(123.0, 456.0);
    let signal = net.sinr(net.serving_cn(q), q).unwrap();
    let mw = |dbm: f64| 10f64.powf(dbm / 10.0);
    let rx: Vec<f64> = net
        .stations
        .iter()
        .map(|s| mw(46.0 - net.params.mean_pathloss_at(s.position.distance(&q))))
        .collect();
    let k = net.serving_cn(q);
    let expect = rx[k] / (mw(-173.0) + rx.iter().sum::<f64>() - rx[k]);
    if ((signal - expect) / expect).abs() > 1e-12 {
        problems.push(format!("SINR {signal} vs {expect}"));
    }
    Outcome::new(
        problems.is_empty(),
        if problems.is_empty() {
            "LoS, pathloss, SE and SINR identities hold".to_string()
        } else {
            problems[..problems.len().min(3)].join("; ")
        },
    )
}

// ---------------------------------------------------------------- 4

fn c4_discretization() -> Outcome {
    let inst = generate(&GeneratorConfig::new("PUL".parse().unwrap(), 10, 1)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let n = inst.n_flyable();
    let mut same = 0;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let i = rng.random_range(0..n);
        let mut j = rng.random_range(0..n - 1);
        if j >= i {
            j += 1;
        }
        let (a, b) = (inst.position(i), inst.position(j));
        let (h1, o1) = comm_profile(&inst.comm, a, b, 1000).unwrap();
        let (h2, o2) = comm_profile(&inst.comm, a, b, 2000).unwrap();
        if h1 == h2 {
            same += 1;
        }
        worst = worst.max((o1 - o2).abs());
    }
    Outcome::new(
        same >= 48 && worst <= 0.01,
        format!("handovers equal on {same}/50 arcs, max outage-probability change {worst:.5}"),
    )
}

// ---------------------------------------------------------------- 5

fn c5_spec(k: u64) -> TinySpec {
    TinySpec {
        customers: 1 + (k % 3) as usize,
        drones: 1 + ((k / 3) % 2) as usize,
        chargers: 2,
        waypoints: 3,
        windows: k % 2 == 0,
        range_m: [15_000.0, 3_000.0, 2_500.0][(k % 3) as usize],
    }
}

fn c5_oracle_equivalence() -> Outcome {
    let mut within = 0;
    let mut beaten = Vec::new();
    let mut misses = Vec::new();
    let mut worst_gap = 0.0f64;
    for k in 0..20u64 {
        let inst = tiny_instance(500 + k, c5_spec(k));
        let m = inst.metric_matrix().unwrap();
        let whitelist = non_depot_ids(&inst, &[NodeKind::ChargingStation, NodeKind::Waypoint]);
        assert!(whitelist.len() + inst.n_customers() <= 10);
        let bounds = EnumerationBounds {
            node_whitelist: Some(whitelist),
            ..EnumerationBounds::default()
        };
        let oracle = enumerate_optimal(&inst, &m, &bounds, ObjectiveKind::TotalDistance)
            .unwrap()
            .value;
        let cfg = GaConfig {
            population_size: 1000,
            max_generations: Some(300),
            time_limit_s: 60.0,
            seed: k,
            ..GaConfig::default()
        };
        let out = ga::run(&inst, &m, &cfg).unwrap();
        let ga_value = out.feasible.then_some(out.objective_value);
        match (oracle, ga_value) {
            (None, None) => within += 1,
            (None, Some(g)) => beaten.push(format!("#{k}: GA {g:.1} on oracle-infeasible")),
            (Some(o), None) => misses.push(format!("#{k}: GA infeasible, oracle {o:.1}")),
            (Some(o), Some(g)) => {
                if g < o - 1e-6 * o.max(1.0) {
                    beaten.push(format!("#{k}: GA {g:.3} < oracle {o:.3}"));
                }
                let gap = (g - o) / o;
                worst_gap = worst_gap.max(gap);
                if gap <= 0.05 + 1e-12 {
                    within += 1;
                } else {
                    misses.push(format!("#{k}: GA {g:.1} vs oracle {o:.1}"));
                }
            }
        }
    }
    let mut detail = format!("{within}/20 within 5%, worst gap {:.2}%", worst_gap * 100.0);
    if !beaten.is_empty() {
        detail += &format!(", GA beat oracle: {}", beaten.join(", "));
    }
    if !misses.is_empty() {
        detail += &format!(", misses: {}", misses.join(", "));
    }
    Outcome::new(within >= 18 && beaten.is_empty(), detail)
}

// ---------------------------------------------------------------- 6

fn c6_relaxation() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for k in 0..10u64 {
        let spec = TinySpec {
            customers: 1 + (k % 3) as usize,
            drones: 1 + (k % 2) as usize,
            chargers: 2,
            waypoints: 3,
            windows: false,
            range_m: 15_000.0,
        };
        let base = tiny_instance(900 + k, spec);
        let m = base.metric_matrix().unwrap();
        let h = exact(&base, &m, ObjectiveKind::MinmaxHandover).expect("min-max handover feasible");
        let o = exact(&base, &m, ObjectiveKind::MinmaxOutage).expect("min-max outage feasible");
        let dist = |f: Option<f64>| {
            let mut inst = base.clone();
            if let Some(f) = f {
                inst.thresholds = Thresholds::new(f * h, f * o);
            }
            exact(&inst, &m, ObjectiveKind::TotalDistance).unwrap_or(f64::INFINITY)
        };
        let (d11, d13, d0) = (dist(Some(1.1)), dist(Some(1.3)), dist(None));
        let holds = d11 >= d13 && d13 >= d0 && d0.is_finite();
        ok &= holds;
        if !holds || k < 3 {
            lines.push(format!("#{k} H*={h} O*={o:.2}: {d11:.1} >= {d13:.1} >= {d0:.1}"));
        }
    }
    Outcome::new(ok, format!("10 instances; {}", lines.join("; ")))
}

// ---------------------------------------------------------------- 7

/// Fewest handovers on a trip from `s` to `e` through customer `c` with at
/// most two further distinct charging-station or waypoint nodes.
fn best_trip_handovers(s: usize, c: usize, e: usize, others: &[usize], m: &MetricMatrix) -> u32 {
    let mut best = trip_handovers(&[s, c, e], m);
    for &a in others {
        for t in [[s, a, c, e], [s, c, a, e]] {
            best = best.min(trip_handovers(&t, m));
        }
        for &b in others {
            if a == b {
                continue;
            }
            for t in [[s, a, b, c, e], [s, a, c, b, e], [s, c, a, b, e]] {
                best = best.min(trip_handovers(&t, m));
            }
        }
    }
    best
}

fn c7_illustrative() -> Outcome {
    let params = CommParams::default();
    let inst = illustrative(params.clone()).unwrap();
    let m = inst.metric_matrix().unwrap();
    let h = exact(&inst, &m, ObjectiveKind::MinmaxHandover).unwrap();
    let o = exact(&inst, &m, ObjectiveKind::MinmaxOutage).unwrap();

    // Independent check: one drone, two customers, two trips.
    let others = non_depot_ids(&inst, &[NodeKind::ChargingStation, NodeKind::Waypoint]);
    let custs: Vec<usize> = inst.customers.iter().map(|c| c.node).collect();
    let (s, e) = (inst.drones[0].start_depot, inst.drones[0].end_depot);
    let mut brute = u32::MAX;
    for (a, b) in [(custs[0], custs[1]), (custs[1], custs[0])] {
        for d in inst.depots() {
            let v = best_trip_handovers(s, a, d, &others, &m).max(best_trip_handovers(d, b, e, &others, &m));
            brute = brute.min(v);
        }
    }
    let verified = f64::from(brute) == h;

    let mut both = inst.clone();
    both.thresholds = Thresholds::new(h, o);
    let joint = enumerate_optimal(&both, &m, &EnumerationBounds::default(), ObjectiveKind::TotalDistance).unwrap();
    let pattern = match &joint.plan {
        None => "enforcing both optima is infeasible".to_string(),
        Some(p) => format!("counterexample: both optima met by {:?}", p.trips_by_drone),
    };
    let divergence = if h == 3.0 && (o - 43.0).abs() < 0.5 {
        String::new()
    } else {
        format!(
            "; differs from the paper's 3 and 43 under f_c={} Hz, H={} m, speed={} m/s, gamma={}, R={}",
            params.carrier_freq_hz,
            params.drone_altitude_m,
            inst.metric_config.speed_mps,
            params.se_threshold,
            inst.metric_config.r_segments
        )
    };
    Outcome::new(
        verified,
        format!("H*={h} (brute force {brute}), O*={o:.2} s; {pattern}{divergence}"),
    )
}

// ---------------------------------------------------------------- 8

/// A free-MPS reader independent of the exporter.
#[derive(Default)]
struct Mps {
    rows: Vec<(String, char)>,
    row_index: HashMap<String, usize>,
    cols: Vec<String>,
    col_index: HashMap<String, usize>,
    integer: Vec<bool>,
    cost: Vec<f64>,
    entries: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Mps {
    fn parse(text: &str) -> Mps {
        let mut mps = Mps::default();
        let mut section = "";
        let mut obj = String::new();
        let mut in_int = false;
        for line in text.lines() {
            if line.trim().is_empty() || line.starts_with('*') {
                continue;
            }
            let tok: Vec<&str> = line.split_whitespace().collect();
            if !line.starts_with(char::is_whitespace) {
                section = tok[0];
                assert!(
                    ["NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"].contains(&section),
                    "unexpected section {section}"
                );
                continue;
            }
            match section {
                "ROWS" => {
                    let sense = tok[0].chars().next().unwrap();
                    if sense == 'N' {
                        obj = tok[1].to_string();
                    } else {
                        mps.row_index.insert(tok[1].to_string(), mps.rows.len());
                        mps.rows.push((tok[1].to_string(), sense));
                        mps.rhs.push(0.0);
                    }
                }
                "COLUMNS" => {
                    if tok.len() == 3 && tok[1] == "'MARKER'" {
                        in_int = tok[2] == "'INTORG'";
                        continue;
                    }
                    let c = *mps.col_index.entry(tok[0].to_string()).or_insert_with(|| {
                        mps.cols.push(tok[0].to_string());
                        mps.integer.push(in_int);
                        mps.cost.push(0.0);
                        mps.lower.push(0.0);
                        mps.upper.push(f64::INFINITY);
                        mps.cols.len() - 1
                    });
                    for pair in tok[1..].chunks(2) {
                        let v: f64 = pair[1].parse().unwrap();
                        if pair[0] == obj {
                            mps.cost[c] += v;
                        } else {
                            mps.entries.push((mps.row_index[pair[0]], c, v));
                        }
                    }
                }
                "RHS" => {
                    for pair in tok[1..].chunks(2) {
                        mps.rhs[mps.row_index[pair[0]]] = pair[1].parse().unwrap();
                    }
                }
                "BOUNDS" => {
                    let c = mps.col_index[tok[2]];
                    let v: f64 = tok[3].parse().unwrap();
                    match tok[0] {
                        "UP" => mps.upper[c] = v,
                        "LO" => mps.lower[c] = v,
                        "FX" => (mps.lower[c], mps.upper[c]) = (v, v),
                        other => panic!("unsupported bound {other}"),
                    }
                }
                _ => {}
            }
        }
        mps
    }

    /// Names of rows, bounds and integrality conditions violated beyond `tol`.
    fn violations(&self, x: &[f64], tol: f64) -> Vec<String> {
        let mut act = vec![0.0; self.rows.len()];
        for &(r, c, v) in &self.entries {
            act[r] += v * x[c];
        }
        let mut bad = Vec::new();
        for (r, (name, sense)) in self.rows.iter().enumerate() {
            let d = act[r] - self.rhs[r];
            let ok = match sense {
                'L' => d <= tol,
                'G' => d >= -tol,
                'E' => d.abs() <= tol,
                _ => false,
            };
            if !ok {
                bad.push(format!("{name} ({} vs {})", act[r], self.rhs[r]));
            }
        }
        for (c, name) in self.cols.iter().enumerate() {
            if x[c] < self.lower[c] - tol || x[c] > self.upper[c] + tol {
                bad.push(format!("bound of {name}"));
            }
            if self.integer[c] && (x[c] - x[c].round()).abs() > tol {
                bad.push(format!("integrality of {name}"));
            }
        }
        bad
    }
}

fn c8_one(inst: &Instance, label: &str, scratch: &Path) -> Result<String, String> {
    let m = inst.metric_matrix().unwrap();
    let oracle = enumerate_optimal(inst, &m, &EnumerationBounds::default(), ObjectiveKind::TotalDistance).unwrap();
    let (plan, value) = (oracle.plan.unwrap(), oracle.value.unwrap());
    let cfg = MipExportConfig::default();
    let model = build_mip(inst, &m, &cfg).unwrap();
    let text = model.to_mps();
    let mps = Mps::parse(&text);
    if mps.cols.len() != model.columns.len() || mps.rows.len() != model.rows.len() {
        return Err(format!("{label}: reader sees {} columns, {} rows", mps.cols.len(), mps.rows.len()));
    }
    let values = assignment_from_plan(&model, &plan, inst, &m).unwrap();
    let mut x = vec![0.0; mps.cols.len()];
    for (col, v) in model.columns.iter().zip(&values) {
        x[mps.col_index[&col.name]] = *v;
    }
    let bad = mps.violations(&x, 1e-6);
    if !bad.is_empty() {
        return Err(format!("{label}: oracle assignment violates {}", bad[..bad.len().min(3)].join(", ")));
    }
    let obj: f64 = mps.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
    if (obj - value).abs() > 1e-6 {
        return Err(format!("{label}: substituted objective {obj} vs oracle {value}"));
    }
    let mut note = format!("{label}: {} columns, {} rows, substitution ok", mps.cols.len(), mps.rows.len());

    let script = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/milp_check.py");
    let have_scipy = Command::new("python3")
        .args(["-c", "import scipy.optimize"])
        .output()
        .is_ok_and(|o| o.status.success());
    if !have_scipy {
        note += ", external solver skipped";
        return Ok(note);
    }
    let path = scratch.join(format!("{label}.mps"));
    fs::write(&path, &text).unwrap();
    let out = Command::new("python3").arg(&script).arg(&path).output().unwrap();
    if !out.status.success() {
        return Err(format!("{label}: scipy milp failed: {}", String::from_utf8_lossy(&out.stdout)));
    }
    let solution = String::from_utf8(out.stdout).unwrap();
    let solver_obj: f64 = solution
        .lines()
        .find_map(|l| l.strip_prefix("# objective "))
        .unwrap()
        .parse()
        .unwrap();
    let rep = verify_against_mps(inst, &m, &cfg, &solution, None).unwrap();
    if (solver_obj - value).abs() > 1e-6 || !rep.feasible || !rep.row_violations.is_empty() {
        return Err(format!(
            "{label}: solver optimum {solver_obj} vs oracle {value}, plan feasible {}, {} row violations",
            rep.feasible,
            rep.row_violations.len()
        ));
    }
    note += &format!(", HiGHS optimum {solver_obj:.9} vs oracle {value:.9}");
    Ok(note)
}

fn c8_mip() -> Outcome {
    let scratch = tempfile::tempdir().unwrap();
    let mut one = illustrative(CommParams::default()).unwrap();
    let mut b = InstanceBuilder::new(one.region, one.comm.clone());
    b.depots = CORNERS.iter().map(|&(x, y)| Point::new(x, y)).collect();
    b.customers = vec![(Point::new(500.0, 150.0), 600.0, 7200.0)];
    b.charging_stations = CHARGERS.iter().map(|&(x, y)| Point::new(x, y)).collect();
    b.drones = vec![(0, 1)];
    one = b.build().unwrap();
    let generated = generate(&GeneratorConfig::new("UUL".parse().unwrap(), 1, 3)).unwrap();
    let mut notes = Vec::new();
    for (inst, label) in [(&one, "one-customer-1km"), (&generated, "UUL-1-3")] {
        match c8_one(inst, label, scratch.path()) {
            Ok(n) => notes.push(n),
            Err(e) => return Outcome::new(false, e),
        }
    }
    Outcome::new(true, notes.join("; "))
}

// ---------------------------------------------------------------- 9

const MUTATED: [ViolationClass; 6] = [
    ViolationClass::CustomerCoverage,
    ViolationClass::Handover,
    ViolationClass::Outage,
    ViolationClass::DepotChaining,
    ViolationClass::TimeWindow,
    ViolationClass::Battery,
];

/// Customers dealt round-robin to drones; each trip goes to the depot
/// nearest its customer, the last one to the drone's end depot.
fn constructive_plan(inst: &Instance) -> Plan {
    let mut plan = Plan::empty(inst.n_drones());
    for (u, d) in inst.drones.iter().enumerate() {
        let mine: Vec<usize> = (u..inst.n_customers()).step_by(inst.n_drones()).collect();
        let mut at = d.start_depot;
        for (i, &c) in mine.iter().enumerate() {
            let node = inst.customers[c].node;
            let to = if i + 1 == mine.len() {
                d.end_depot
            } else {
                inst.nearest_depot(node)
            };
            plan.trips_by_drone[u].push(Trip::new(vec![at, node, to]));
            at = to;
        }
        if mine.is_empty() && d.start_depot != d.end_depot {
            plan.trips_by_drone[u].push(Trip::new(vec![d.start_depot, d.end_depot]));
        }
    }
    plan
}

/// All single insertions of a charging station or waypoint into a trip.
fn insertions(inst: &Instance, plan: &Plan, kinds: &[NodeKind]) -> Vec<(usize, usize, usize, usize)> {
    let cands = non_depot_ids(inst, kinds);
    let mut out = Vec::new();
    for (u, k, t) in plan.trips() {
        for &w in &cands {
            if t.nodes.contains(&w) {
                continue;
            }
            for pos in 1..t.nodes.len() {
                out.push((u, k, pos, w));
            }
        }
    }
    out
}

fn inserted(plan: &Plan, (u, k, pos, w): (usize, usize, usize, usize)) -> Plan {
    let mut p = plan.clone();
    p.trips_by_drone[u][k].nodes.insert(pos, w);
    p
}

fn pick<T: Clone>(rng: &mut ChaCha8Rng, v: &[T]) -> Option<T> {
    (!v.is_empty()).then(|| v[rng.random_range(0..v.len())].clone())
}

/// Corrupts a feasible plan in one class. The instance limit of that class
/// is set to the base plan's own value so the base stays feasible.
fn mutate(inst: &Instance, m: &MetricMatrix, plan: &Plan, class: ViolationClass, rng: &mut ChaCha8Rng) -> Option<(Instance, MetricMatrix, Plan)> {
    let mut inst = inst.clone();
    let mut m = m.clone();
    let wps_and_cs = [NodeKind::ChargingStation, NodeKind::Waypoint];
    let bad = match class {
        ViolationClass::CustomerCoverage => {
            if rng.random_bool(0.5) {
                let removable: Vec<(usize, usize)> = plan
                    .trips()
                    .filter(|(_, _, t)| t.interior().len() == 1 && t.start() != t.end())
                    .filter(|(_, _, t)| inst.kind(t.nodes[1]) == NodeKind::Customer)
                    .map(|(u, k, _)| (u, k))
                    .collect();
                let (u, k) = pick(rng, &removable)?;
                let mut p = plan.clone();
                p.trips_by_drone[u][k].nodes.remove(1);
                p
            } else {
                let u = rng.random_range(0..inst.n_drones());
                let e = inst.drones[u].end_depot;
                let c = inst.customers[rng.random_range(0..inst.n_customers())].node;
                let mut p = plan.clone();
                p.trips_by_drone[u].push(Trip::new(vec![e, c, e]));
                p
            }
        }
        ViolationClass::Handover => {
            let limit = plan.trips().map(|(_, _, t)| trip_handovers(&t.nodes, &m)).max()?;
            inst.thresholds.h_max = f64::from(limit);
            let over: Vec<_> = insertions(&inst, plan, &wps_and_cs)
                .into_iter()
                .filter(|&(u, k, pos, w)| {
                    let mut t = plan.trips_by_drone[u][k].nodes.clone();
                    t.insert(pos, w);
                    trip_handovers(&t, &m) > limit
                })
                .collect();
            inserted(plan, pick(rng, &over)?)
        }
        ViolationClass::Outage => {
            let limit = plan.trips().map(|(_, _, t)| trip_outage(&t.nodes, &m)).fold(0.0, f64::max);
            inst.thresholds.o_max = limit;
            let over: Vec<_> = insertions(&inst, plan, &wps_and_cs)
                .into_iter()
                .filter(|&(u, k, pos, w)| {
                    let mut t = plan.trips_by_drone[u][k].nodes.clone();
                    t.insert(pos, w);
                    trip_outage(&t, &m) > limit + 1e-6
                })
                .collect();
            inserted(plan, pick(rng, &over)?)
        }
        ViolationClass::DepotChaining => {
            let u = rng.random_range(0..inst.n_drones());
            let n = plan.trips_by_drone[u].len();
            if n == 0 {
                return None;
            }
            let mut p = plan.clone();
            let trips = &mut p.trips_by_drone[u];
            let k = rng.random_range(0..n);
            let start = rng.random_bool(0.5);
            let node = if start { &mut trips[k].nodes[0] } else { trips[k].nodes.last_mut().unwrap() };
            let old = *node;
            let new = (old + rng.random_range(1..4)) % 4;
            *node = new;
            if trips[k].nodes.windows(2).any(|w| w[0] == w[1]) {
                return None;
            }
            p
        }
        ViolationClass::TimeWindow => {
            let sched = simulate_schedule(plan, &inst, &m);
            let mut service = HashMap::new();
            for v in sched.drones.iter().flatten().flat_map(|t| &t.visits) {
                service.insert(v.node, v.service_start_s);
            }
            for c in inst.customers.iter_mut() {
                c.window_start_s = 0.0;
                c.window_end_s = service[&c.node] + 1e-6;
            }
            let before: Vec<_> = insertions(&inst, plan, &wps_and_cs)
                .into_iter()
                .filter(|&(u, k, pos, w)| {
                    let t = &plan.trips_by_drone[u][k].nodes;
                    let c = t.iter().position(|&n| inst.kind(n) == NodeKind::Customer);
                    c.is_some_and(|c| pos <= c)
                        && m.get(t[pos - 1], w).distance_m + m.get(w, t[pos]).distance_m
                            > m.get(t[pos - 1], t[pos]).distance_m + 1.0
                })
                .collect();
            inserted(plan, pick(rng, &before)?)
        }
        ViolationClass::Battery => {
            let longest = plan.trips().map(|(_, _, t)| trip_distance(&t.nodes, &m)).fold(0.0, f64::max);
            inst.metric_config.battery_range_m = longest * (1.0 + 1e-9);
            m = inst.metric_matrix().unwrap();
            let over: Vec<_> = insertions(&inst, plan, &[NodeKind::Waypoint])
                .into_iter()
                .filter(|&(u, k, pos, w)| {
                    let mut t = plan.trips_by_drone[u][k].nodes.clone();
                    t.insert(pos, w);
                    trip_distance(&t, &m) > longest + 1.0
                })
                .collect();
            inserted(plan, pick(rng, &over)?)
        }
        _ => unreachable!(),
    };
    Some((inst, m, bad))
}

fn c9_mutations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut per_class = [0usize; 6];
    let mut wrong = Vec::new();
    let mut done = 0;
    let mut attempt = 0u64;
    while done < 100 && attempt < 1000 {
        attempt += 1;
        let ci = done % MUTATED.len();
        let class = MUTATED[ci];
        let spec = TinySpec {
            customers: 2 + (attempt % 2) as usize,
            drones: 1 + ((attempt / 2) % 2) as usize,
            chargers: 4,
            waypoints: 8,
            windows: false,
            range_m: 15_000.0,
        };
        let inst = tiny_instance(3000 + attempt, spec);
        let m = inst.metric_matrix().unwrap();
        let base = constructive_plan(&inst);
        let Some((minst, mm, bad)) = mutate(&inst, &m, &base, class, &mut rng) else {
            continue;
        };
        let base_result = check_feasibility(&base, &minst, &mm);
        if !base_result.is_feasible() {
            wrong.push(format!("{class}: base plan flagged {:?}", base_result.classes()));
        }
        let classes = check_feasibility(&bad, &minst, &mm).classes();
        if classes != [class] {
            wrong.push(format!("{class}: flagged {classes:?} for {:?}", bad.trips_by_drone));
        }
        per_class[ci] += 1;
        done += 1;
    }
    let counts = MUTATED
        .iter()
        .zip(per_class)
        .map(|(c, n)| format!("{c} {n}"))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::new(
        done == 100 && wrong.is_empty(),
        if wrong.is_empty() {
            format!("{done} mutations flagged in their own class ({counts})")
        } else {
            format!("{} wrong: {}", wrong.len(), wrong[..wrong.len().min(3)].join("; "))
        },
    )
}

// ---------------------------------------------------------------- 10

fn c10_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_cddp");
    let run = |args: &[&str]| {
        let out = Command::new(bin).args(args).current_dir(dir.path()).output().unwrap();
        out.status.code()
    };
    assert_eq!(
        run(&["gen", "--setting", "PUT", "--customers", "3", "--seed", "7", "--out", "inst.json"]),
        Some(0)
    );
    let mut same = Vec::new();
    for (algo, extra) in [("ga", vec!["--generations", "60", "--seed", "11"]), ("exact", vec!["--max-interior", "1"])] {
        let mut plans = Vec::new();
        for k in 0..2 {
            let out = format!("{algo}{k}");
            let mut args = vec!["solve", "--instance", "inst.json", "--algo", algo, "--out", &out];
            args.extend(&extra);
            let code = run(&args);
            assert!(matches!(code, Some(0 | 2)), "{algo} exit {code:?}");
            plans.push(fs::read(dir.path().join(&out).join("plan.json")).unwrap());
        }
        same.push((algo, plans[0] == plans[1], plans[0].len()));
    }
    Outcome::new(
        same.iter().all(|s| s.1),
        same.iter()
            .map(|(a, s, n)| format!("{a}: {} ({n} bytes)", if *s { "identical" } else { "differs" }))
            .collect::<Vec<_>>()
            .join(", "),
    )
}
