//! Per-arc communication and travel metrics.
//!
//! Each straight arc is sampled at `R + 1` equally spaced points. Handovers
//! count changes of serving station between consecutive samples; the outage
//! probability is the fraction of samples whose spectral efficiency from the
//! serving station falls below the threshold.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::comm::CommNetwork;
use crate::error::{Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArcMetrics {
    pub distance_m: f64,
    pub travel_time_s: f64,
    /// Fraction of a full battery consumed on the arc.
    pub battery_cost: f64,
    pub handovers: u32,
    pub outage_prob: f64,
    pub outage_duration_s: f64,
}

/// Discretization, speed and battery model used to build a [`MetricMatrix`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub r_segments: usize,
    pub speed_mps: f64,
    pub battery_range_m: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            r_segments: 100,
            speed_mps: 15.0,
            battery_range_m: 15_000.0,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r_segments == 0 {
            return Err(Error::Argument("r_segments must be >= 1".into()));
        }
        if !(self.speed_mps > 0.0 && self.speed_mps.is_finite()) {
            return Err(Error::Config("speed_mps must be positive".into()));
        }
        if !(self.battery_range_m > 0.0 && self.battery_range_m.is_finite()) {
            return Err(Error::Config("battery_range_m must be positive".into()));
        }
        Ok(())
    }
}

/// `r + 1` equally spaced points from `v1` to `v2`, both endpoints included.
pub fn sample_path(v1: Point, v2: Point, r: usize) -> Result<Vec<Point>> {
    if r == 0 {
        return Err(Error::Argument("segment count must be >= 1".into()));
    }
    let mut pts: Vec<Point> = (0..r).map(|k| v1.lerp(&v2, k as f64 / r as f64)).collect();
    pts.push(v2);
    Ok(pts)
}

pub fn handover_count(network: &CommNetwork, v1: Point, v2: Point, r: usize) -> Result<u32> {
    let cells: Vec<usize> = sample_path(v1, v2, r)?
        .into_iter()
        .map(|p| network.serving_cn(p))
        .collect();
    Ok(count_changes(&cells))
}

pub fn outage_probability(network: &CommNetwork, v1: Point, v2: Point, r: usize) -> Result<f64> {
    let pts = sample_path(v1, v2, r)?;
    let in_outage = pts.iter().filter(|p| network.in_outage(**p)).count();
    Ok(in_outage as f64 / pts.len() as f64)
}

pub fn outage_duration(outage_prob: f64, travel_time_s: f64) -> f64 {
    outage_prob * travel_time_s
}

fn count_changes(cells: &[usize]) -> u32 {
    cells.windows(2).filter(|w| w[0] != w[1]).count() as u32
}

/// Handover count and outage probability from a single sampling pass.
pub fn comm_profile(network: &CommNetwork, v1: Point, v2: Point, r: usize) -> Result<(u32, f64)> {
    let pts = sample_path(v1, v2, r)?;
    let mut cells = Vec::with_capacity(pts.len());
    let mut outages = 0usize;
    for p in &pts {
        let (cn, se) = network.serving_link(*p);
        cells.push(cn);
        if se < network.params.se_threshold {
            outages += 1;
        }
    }
    Ok((count_changes(&cells), outages as f64 / pts.len() as f64))
}

/// All-pairs arc metrics over the flyable nodes, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricMatrix {
    n: usize,
    pub r_segments: usize,
    metrics: Vec<ArcMetrics>,
}

impl MetricMatrix {
    /// Computes metrics for every ordered pair of `nodes`. Each unordered pair
    /// is sampled once and mirrored, so reverse arcs agree bit for bit.
    pub fn build(nodes: &[Point], network: &CommNetwork, config: &MetricConfig) -> Result<Self> {
        config.validate()?;
        let n = nodes.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .collect();
        let upper: Vec<ArcMetrics> = pairs
            .par_iter()
            .map(|&(i, j)| arc_metrics(network, nodes[i], nodes[j], config))
            .collect::<Result<_>>()?;
        let mut metrics = vec![ArcMetrics::default(); n * n];
        for (&(i, j), m) in pairs.iter().zip(upper) {
            metrics[i * n + j] = m;
            metrics[j * n + i] = m;
        }
        Ok(Self {
            n,
            r_segments: config.r_segments,
            metrics,
        })
    }

    /// Wraps precomputed row-major metrics.
    pub fn from_raw(n: usize, r_segments: usize, metrics: Vec<ArcMetrics>) -> Result<Self> {
        if metrics.len() != n * n {
            return Err(Error::Argument(format!(
                "expected {} entries, got {}",
                n * n,
                metrics.len()
            )));
        }
        Ok(Self {
            n,
            r_segments,
            metrics,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn entry_count(&self) -> usize {
        self.metrics.len()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        i < self.n && j < self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &ArcMetrics {
        &self.metrics[i * self.n + j]
    }

    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut ArcMetrics {
        &mut self.metrics[i * self.n + j]
    }

    pub fn max_travel_time(&self) -> f64 {
        self.metrics.iter().map(|m| m.travel_time_s).fold(0.0, f64::max)
    }

    /// Writes the matrix as a JSON sidecar tagged with `key`.
    pub fn save_sidecar(&self, path: &Path, key: &str) -> Result<()> {
        let doc = Sidecar {
            key: key.to_string(),
            matrix: self.clone(),
        };
        let text = serde_json::to_string(&doc).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            message: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    /// Loads a sidecar, returning `None` when it is missing or keyed differently.
    pub fn load_sidecar(path: &Path, key: &str) -> Result<Option<Self>> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(path, e)),
        };
        let doc: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Parse {
            context: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok((doc.key == key).then_some(doc.matrix))
    }
}

#[derive(Serialize, Deserialize)]
struct Sidecar {
    key: String,
    matrix: MetricMatrix,
}

pub fn arc_metrics(network: &CommNetwork, v1: Point, v2: Point, config: &MetricConfig) -> Result<ArcMetrics> {
    let distance_m = v1.distance(&v2);
    if distance_m == 0.0 {
        return Ok(ArcMetrics::default());
    }
    let travel_time_s = distance_m / config.speed_mps;
    let (handovers, outage_prob) = comm_profile(network, v1, v2, config.r_segments)?;
    Ok(ArcMetrics {
        distance_m,
        travel_time_s,
        battery_cost: distance_m / config.battery_range_m,
        handovers,
        outage_prob,
        outage_duration_s: outage_duration(outage_prob, travel_time_s),
    })
}
