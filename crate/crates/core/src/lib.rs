//! Communication-aware drone delivery.
//!
//! The crate covers the whole pipeline: an air-to-ground channel model
//! ([`comm`]), per-arc handover/outage metrics ([`arcs`]), benchmark instance
//! generation ([`instance`]), plan simulation and constraint checking
//! ([`solution`]), a label-vector genetic algorithm ([`ga`]) and exact
//! machinery for tiny instances ([`exact`]).

pub mod arcs;
pub mod comm;
pub mod error;
pub mod exact;
pub mod ga;
pub mod geometry;
pub mod instance;
pub mod solution;

pub use error::{Error, Result};
pub use geometry::Point;
