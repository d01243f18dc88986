//! Air-to-ground channel between ground base stations and a drone flying at
//! fixed altitude: LoS probability, mean pathloss, SINR, spectral efficiency
//! and nearest-station association.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Channel and receiver parameters. Defaults are the dense-urban set with a
/// 2 GHz carrier and a 100 m cruise altitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommParams {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Pathloss exponent.
    pub alpha3: f64,
    /// Excess loss for the LoS group, dB.
    pub mu_los: f64,
    /// Excess loss for the NLoS group, dB.
    pub mu_nlos: f64,
    pub noise_power_dbm: f64,
    pub carrier_freq_hz: f64,
    pub light_speed_mps: f64,
    pub drone_altitude_m: f64,
    /// Spectral-efficiency threshold below which a point is in outage, bits/s/Hz.
    pub se_threshold: f64,
}

impl Default for CommParams {
    fn default() -> Self {
        Self {
            alpha1: 12.08,
            alpha2: 0.11,
            alpha3: 2.5,
            mu_los: 1.6,
            mu_nlos: 23.0,
            noise_power_dbm: -173.0,
            carrier_freq_hz: 2.0e9,
            light_speed_mps: 299_792_458.0,
            drone_altitude_m: 100.0,
            se_threshold: 2.0,
        }
    }
}

impl CommParams {
    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.alpha1,
            self.alpha2,
            self.alpha3,
            self.mu_los,
            self.mu_nlos,
            self.noise_power_dbm,
            self.carrier_freq_hz,
            self.light_speed_mps,
            self.drone_altitude_m,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("channel parameters must be finite".into()));
        }
        if self.alpha2 <= 0.0 || self.alpha3 <= 0.0 {
            return Err(Error::Config("alpha2 and alpha3 must be positive".into()));
        }
        if self.drone_altitude_m <= 0.0 || self.carrier_freq_hz <= 0.0 || self.light_speed_mps <= 0.0 {
            return Err(Error::Config(
                "altitude, carrier frequency and light speed must be positive".into(),
            ));
        }
        if self.se_threshold.is_nan() || self.se_threshold < 0.0 {
            return Err(Error::Config("se_threshold must be >= 0".into()));
        }
        if self.mu_nlos < self.mu_los {
            return Err(Error::Config("mu_nlos must be >= mu_los".into()));
        }
        Ok(())
    }

    /// Elevation angle in degrees seen from a station at the given horizontal
    /// distance. Exactly 90 when the drone is overhead.
    pub fn elevation_deg(&self, horizontal_m: f64) -> f64 {
        if horizontal_m == 0.0 {
            90.0
        } else {
            (180.0 / PI) * (self.drone_altitude_m / horizontal_m).atan()
        }
    }

    pub fn los_probability_at_angle(&self, theta_deg: f64) -> f64 {
        1.0 / (1.0 + self.alpha1 * (-self.alpha2 * (theta_deg - self.alpha1)).exp())
    }

    pub fn los_probability_at(&self, horizontal_m: f64) -> f64 {
        self.los_probability_at_angle(self.elevation_deg(horizontal_m))
    }

    /// Mean pathloss in dB at the given horizontal distance.
    pub fn mean_pathloss_at(&self, horizontal_m: f64) -> f64 {
        let slant = horizontal_m.hypot(self.drone_altitude_m);
        let free_space = 10.0
            * self.alpha3
            * (4.0 * PI * self.carrier_freq_hz / self.light_speed_mps * slant).log10();
        let p_los = self.los_probability_at(horizontal_m);
        free_space + self.mu_los * p_los + self.mu_nlos * (1.0 - p_los)
    }

    pub fn noise_mw(&self) -> f64 {
        dbm_to_mw(self.noise_power_dbm)
    }
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: usize,
    pub position: Point,
    pub tx_power_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommNetwork {
    pub stations: Vec<BaseStation>,
    pub params: CommParams,
}

impl CommNetwork {
    pub fn new(stations: Vec<BaseStation>, params: CommParams) -> Result<Self> {
        let network = Self { stations, params };
        network.validate()?;
        Ok(network)
    }

    /// Builds a network with ids assigned in order and a common transmit power.
    pub fn from_positions(positions: &[Point], tx_power_dbm: f64, params: CommParams) -> Result<Self> {
        let stations = positions
            .iter()
            .enumerate()
            .map(|(id, &position)| BaseStation {
                id,
                position,
                tx_power_dbm,
            })
            .collect();
        Self::new(stations, params)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        if self.stations.is_empty() {
            return Err(Error::Config("network needs at least one station".into()));
        }
        for (i, s) in self.stations.iter().enumerate() {
            if s.id != i {
                return Err(Error::Config(format!(
                    "station ids must be contiguous from 0; found id {} at position {i}",
                    s.id
                )));
            }
            if !s.position.is_finite() || !s.tx_power_dbm.is_finite() {
                return Err(Error::Config(format!("station {i} has non-finite data")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.stations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stations.is_empty()
    }

    pub fn positions(&self) -> Vec<Point> {
        self.stations.iter().map(|s| s.position).collect()
    }

    fn station(&self, cn: usize) -> Result<&BaseStation> {
        self.stations.get(cn).ok_or(Error::StationIndex {
            index: cn,
            len: self.stations.len(),
        })
    }

    pub fn los_probability(&self, cn: usize, ground_point: Point) -> Result<f64> {
        let s = self.station(cn)?;
        Ok(self.params.los_probability_at(s.position.distance(&ground_point)))
    }

    pub fn nlos_probability(&self, cn: usize, ground_point: Point) -> Result<f64> {
        Ok(1.0 - self.los_probability(cn, ground_point)?)
    }

    pub fn mean_pathloss(&self, cn: usize, ground_point: Point) -> Result<f64> {
        let s = self.station(cn)?;
        Ok(self.params.mean_pathloss_at(s.position.distance(&ground_point)))
    }

    /// Mean received power from station `cn`, in milliwatts.
    fn received_mw(&self, s: &BaseStation, ground_point: Point) -> f64 {
        let loss_db = self.params.mean_pathloss_at(s.position.distance(&ground_point));
        dbm_to_mw(s.tx_power_dbm - loss_db)
    }

    pub fn sinr(&self, cn: usize, ground_point: Point) -> Result<f64> {
        self.station(cn)?;
        let mut signal = 0.0;
        let mut interference = 0.0;
        for s in &self.stations {
            let p = self.received_mw(s, ground_point);
            if s.id == cn {
                signal = p;
            } else {
                interference += p;
            }
        }
        Ok(signal / (self.params.noise_mw() + interference))
    }

    pub fn spectral_efficiency(&self, cn: usize, ground_point: Point) -> Result<f64> {
        Ok(spectral_efficiency_from_sinr(self.sinr(cn, ground_point)?))
    }

    /// Index of the nearest station; ties go to the smallest index.
    pub fn serving_cn(&self, ground_point: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in self.stations.iter().enumerate() {
            let d = s.position.distance_sq(&ground_point);
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        best
    }

    /// Serving station and the spectral efficiency received from it.
    pub fn serving_link(&self, ground_point: Point) -> (usize, f64) {
        let cn = self.serving_cn(ground_point);
        let se = self
            .spectral_efficiency(cn, ground_point)
            .expect("serving index is always valid");
        (cn, se)
    }

    pub fn in_outage(&self, ground_point: Point) -> bool {
        self.serving_link(ground_point).1 < self.params.se_threshold
    }
}

pub fn spectral_efficiency_from_sinr(sinr: f64) -> f64 {
    (1.0 + sinr).log2()
}
