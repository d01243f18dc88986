//! Problem instances: flyable nodes, customers with time windows, drones,
//! QoS thresholds and the channel model, plus the JSON file format.
//!
//! Flyable-node labels are contiguous and ordered depots, customers, charging
//! stations, waypoints. Customer `i` is therefore always node `n_depots + i`.

mod generator;
mod waypoints;

pub use generator::{
    assign_drones, generate, generate_comm_network, generate_customers, generate_time_windows,
    hex_lattice_centers, place_facilities, CommLayout, CustomerLayout, GeneratorConfig, Setting,
    WindowKind,
};
pub use waypoints::generate_waypoints;

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::arcs::{MetricConfig, MetricMatrix};
use crate::comm::{CommNetwork, CommParams};
use crate::error::{Error, Result};
use crate::geometry::{Point, Region};

pub const FORMAT_VERSION: u32 = 1;
pub const WORKDAY_S: f64 = 28_800.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Depot,
    Customer,
    ChargingStation,
    Waypoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: usize,
    pub kind: NodeKind,
    pub position: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Customer {
    /// Flyable-node label of this customer.
    pub node: usize,
    pub window_start_s: f64,
    pub window_end_s: f64,
    pub service_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Drone {
    pub id: usize,
    pub start_depot: usize,
    pub end_depot: usize,
}

/// Operation times per node kind, seconds. Customers carry their own
/// service time; `customer_s` is the value the generator assigns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpTimes {
    pub depot_s: f64,
    pub customer_s: f64,
    pub charging_station_s: f64,
}

impl Default for OpTimes {
    fn default() -> Self {
        Self {
            depot_s: 120.0,
            customer_s: 60.0,
            charging_station_s: 180.0,
        }
    }
}

/// Per-trip QoS limits. Infinite values disable the check and are stored as
/// `null` in files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    #[serde(with = "inf_as_null")]
    pub h_max: f64,
    #[serde(with = "inf_as_null")]
    pub o_max: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            h_max: f64::INFINITY,
            o_max: f64::INFINITY,
        }
    }
}

impl Thresholds {
    pub fn new(h_max: f64, o_max: f64) -> Self {
        Self { h_max, o_max }
    }
}

mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// How the battery behaves when a drone leaves a depot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatteryMode {
    /// Depot operations include a swap: every trip starts full.
    #[default]
    ResetAtDepot,
    /// The level carries over from the previous trip; only charging stations
    /// restore it.
    CarryOver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub region: Region,
    pub horizon_s: f64,
    pub comm: CommNetwork,
    pub nodes: Vec<Node>,
    pub customers: Vec<Customer>,
    pub drones: Vec<Drone>,
    pub op_times: OpTimes,
    pub thresholds: Thresholds,
    pub metric_config: MetricConfig,
    #[serde(default)]
    pub battery_mode: BatteryMode,
}

impl Instance {
    pub fn n_flyable(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_customers(&self) -> usize {
        self.customers.len()
    }

    pub fn n_drones(&self) -> usize {
        self.drones.len()
    }

    pub fn n_depots(&self) -> usize {
        self.count_kind(NodeKind::Depot)
    }

    fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.nodes[node].kind
    }

    pub fn is_depot(&self, node: usize) -> bool {
        self.nodes.get(node).is_some_and(|n| n.kind == NodeKind::Depot)
    }

    pub fn position(&self, node: usize) -> Point {
        self.nodes[node].position
    }

    pub fn positions(&self) -> Vec<Point> {
        self.nodes.iter().map(|n| n.position).collect()
    }

    pub fn depots(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Depot).map(|n| n.id)
    }

    /// Customer index of a node, if it is a customer.
    pub fn customer_index(&self, node: usize) -> Option<usize> {
        match self.nodes.get(node)?.kind {
            NodeKind::Customer => Some(node - self.n_depots()),
            _ => None,
        }
    }

    pub fn op_time(&self, node: usize) -> f64 {
        match self.nodes[node].kind {
            NodeKind::Depot => self.op_times.depot_s,
            NodeKind::Customer => self.customers[node - self.n_depots()].service_time_s,
            NodeKind::ChargingStation => self.op_times.charging_station_s,
            NodeKind::Waypoint => 0.0,
        }
    }

    pub fn max_op_time(&self) -> f64 {
        (0..self.n_flyable()).map(|i| self.op_time(i)).fold(0.0, f64::max)
    }

    /// Nearest depot to `node`, ties to the smallest label.
    pub fn nearest_depot(&self, node: usize) -> usize {
        let p = self.position(node);
        let mut best = None;
        for d in self.depots() {
            let dist = self.position(d).distance_sq(&p);
            match best {
                Some((_, bd)) if bd <= dist => {}
                _ => best = Some((d, dist)),
            }
        }
        best.expect("instance has at least one depot").0
    }

    pub fn metric_matrix(&self) -> Result<MetricMatrix> {
        MetricMatrix::build(&self.positions(), &self.comm, &self.metric_config)
    }

    /// Metric matrix backed by a JSON sidecar keyed by instance hash and R.
    pub fn metric_matrix_cached(&self, sidecar: &Path) -> Result<MetricMatrix> {
        let key = format!("{}:{}", self.hash(), self.metric_config.r_segments);
        if let Some(m) = MetricMatrix::load_sidecar(sidecar, &key)? {
            return Ok(m);
        }
        let m = self.metric_matrix()?;
        m.save_sidecar(sidecar, &key)?;
        Ok(m)
    }

    /// Short content hash of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("instance serializes");
        let digest = Sha256::digest(&bytes);
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported instance version {} (expected {FORMAT_VERSION})",
                self.version
            )));
        }
        self.comm.validate()?;
        self.metric_config.validate()?;
        if !(self.horizon_s > 0.0 && self.horizon_s.is_finite()) {
            return Err(Error::Config("horizon_s must be positive".into()));
        }
        let mut rank = 0;
        let order = |k: NodeKind| match k {
            NodeKind::Depot => 0,
            NodeKind::Customer => 1,
            NodeKind::ChargingStation => 2,
            NodeKind::Waypoint => 3,
        };
        for (i, n) in self.nodes.iter().enumerate() {
            if n.id != i {
                return Err(Error::Config(format!("node at position {i} has label {}", n.id)));
            }
            if order(n.kind) < rank {
                return Err(Error::Config(format!(
                    "node {i} out of order: labels must list depots, customers, charging stations, waypoints"
                )));
            }
            rank = order(n.kind);
            if !n.position.is_finite() {
                return Err(Error::Config(format!("node {i} has a non-finite position")));
            }
        }
        let n_d = self.n_depots();
        if n_d == 0 {
            return Err(Error::Config("instance needs at least one depot".into()));
        }
        if self.customers.len() != self.count_kind(NodeKind::Customer) {
            return Err(Error::Config("customer list does not match customer nodes".into()));
        }
        for (i, c) in self.customers.iter().enumerate() {
            if c.node != n_d + i {
                return Err(Error::Config(format!(
                    "customer {i} refers to node {} (expected {})",
                    c.node,
                    n_d + i
                )));
            }
            if !(0.0 <= c.window_start_s && c.window_start_s <= c.window_end_s && c.window_end_s <= self.horizon_s)
            {
                return Err(Error::Config(format!("customer {i} has an invalid time window")));
            }
            if c.service_time_s < 0.0 {
                return Err(Error::Config(format!("customer {i} has a negative service time")));
            }
        }
        if !self.customers.is_empty() && self.drones.is_empty() {
            return Err(Error::Config("instance with customers needs at least one drone".into()));
        }
        for (u, d) in self.drones.iter().enumerate() {
            if d.id != u {
                return Err(Error::Config(format!("drone ids must be contiguous; found {} at {u}", d.id)));
            }
            if !self.is_depot(d.start_depot) || !self.is_depot(d.end_depot) {
                return Err(Error::Config(format!("drone {u} references a non-depot node")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serializes")
    }

    pub fn from_json(text: &str, context: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(text).map_err(|e| Error::Parse {
            context: context.to_string(),
            message: e.to_string(),
        })?;
        inst.validate()?;
        Ok(inst)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, &path.display().to_string())
    }
}

pub fn save_instance(instance: &Instance, path: &Path) -> Result<()> {
    instance.save(path)
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    Instance::load(path)
}

/// Assembles an instance from its parts, assigning labels in canonical order.
/// Customer windows are `(start, end)` pairs; waypoints are computed from the
/// network when `with_waypoints` is set.
#[derive(Debug, Clone)]
pub struct InstanceBuilder {
    pub name: String,
    pub region: Region,
    pub horizon_s: f64,
    pub comm: CommNetwork,
    pub depots: Vec<Point>,
    pub customers: Vec<(Point, f64, f64)>,
    pub charging_stations: Vec<Point>,
    pub extra_waypoints: Vec<Point>,
    pub with_waypoints: bool,
    /// (start depot index, end depot index) among `depots`.
    pub drones: Vec<(usize, usize)>,
    pub op_times: OpTimes,
    pub thresholds: Thresholds,
    pub metric_config: MetricConfig,
    pub battery_mode: BatteryMode,
}

impl InstanceBuilder {
    pub fn new(region: Region, comm: CommNetwork) -> Self {
        Self {
            name: String::new(),
            region,
            horizon_s: WORKDAY_S,
            comm,
            depots: Vec::new(),
            customers: Vec::new(),
            charging_stations: Vec::new(),
            extra_waypoints: Vec::new(),
            with_waypoints: true,
            drones: Vec::new(),
            op_times: OpTimes::default(),
            thresholds: Thresholds::default(),
            metric_config: MetricConfig::default(),
            battery_mode: BatteryMode::default(),
        }
    }

    pub fn build(self) -> Result<Instance> {
        let mut nodes = Vec::new();
        let mut push = |kind: NodeKind, position: Point| {
            let id = nodes.len();
            nodes.push(Node { id, kind, position });
            id
        };
        for &p in &self.depots {
            push(NodeKind::Depot, p);
        }
        let customers: Vec<Customer> = self
            .customers
            .iter()
            .map(|&(p, a, b)| Customer {
                node: push(NodeKind::Customer, p),
                window_start_s: a,
                window_end_s: b,
                service_time_s: self.op_times.customer_s,
            })
            .collect();
        for &p in &self.charging_stations {
            push(NodeKind::ChargingStation, p);
        }
        let mut wps = if self.with_waypoints {
            generate_waypoints(&self.comm, &self.region)
        } else {
            Vec::new()
        };
        wps.extend(self.extra_waypoints.iter().copied());
        for p in wps {
            push(NodeKind::Waypoint, p);
        }
        let drones = self
            .drones
            .iter()
            .enumerate()
            .map(|(id, &(s, e))| Drone {
                id,
                start_depot: s,
                end_depot: e,
            })
            .collect();
        let inst = Instance {
            version: FORMAT_VERSION,
            name: self.name,
            region: self.region,
            horizon_s: self.horizon_s,
            comm: self.comm,
            nodes,
            customers,
            drones,
            op_times: self.op_times,
            thresholds: self.thresholds,
            metric_config: self.metric_config,
            battery_mode: self.battery_mode,
        };
        inst.validate()?;
        Ok(inst)
    }
}

/// Station layout of the 1 km illustrative example: nine stations on the two
/// diagonals of the square, 200 m apart along each axis.
pub fn illustrative_stations() -> Vec<Point> {
    let mut pts = vec![Point::new(500.0, 500.0)];
    for k in [200.0, 400.0] {
        for (sx, sy) in [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)] {
            pts.push(Point::new(500.0 + sx * k, 500.0 + sy * k));
        }
    }
    pts
}

/// The 1000 x 1000 m illustrative instance: four corner depots, four
/// charging stations, two customers without time windows and one drone
/// flying from depot 0 to depot 1.
pub fn illustrative(params: CommParams) -> Result<Instance> {
    let comm = CommNetwork::from_positions(&illustrative_stations(), 46.0, params)?;
    let mut b = InstanceBuilder::new(Region::new(1000.0, 1000.0), comm);
    b.name = "illustrative".into();
    b.depots = vec![
        Point::new(0.0, 0.0),
        Point::new(1000.0, 0.0),
        Point::new(1000.0, 1000.0),
        Point::new(0.0, 1000.0),
    ];
    b.customers = vec![
        (Point::new(500.0, 150.0), 0.0, WORKDAY_S),
        (Point::new(500.0, 900.0), 0.0, WORKDAY_S),
    ];
    b.charging_stations = vec![
        Point::new(300.0, 300.0),
        Point::new(700.0, 300.0),
        Point::new(700.0, 700.0),
        Point::new(300.0, 700.0),
    ];
    b.drones = vec![(0, 1)];
    b.build()
}
