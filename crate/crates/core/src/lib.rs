//! Analytical energy and latency model for row-stationary CNN accelerators,
//! with a client/cloud partition optimizer built on top.
//!
//! The pipeline for one network is: [`schedule::schedule_layer`] maps each
//! layer onto the PE array, [`energy::layer_energy`] prices the resulting
//! access counts, and [`partition::optimal_partition`] picks the cheapest
//! point to hand the remaining layers to the cloud.

pub mod comm;
pub mod config;
pub mod dse;
pub mod energy;
pub mod error;
pub mod fixtures;
pub mod model;
pub mod oracle;
pub mod partition;
pub mod schedule;

pub use comm::{CommEnvironment, DelayProfile};
pub use dse::GlbEnergyCurve;
pub use energy::{EnergyBreakdown, EnergyOptions, LayerContext, LayerReport, PassCounts};
pub use error::{Error, Result};
pub use model::{
    at_bit_width, scale_technology, AcceleratorConfig, LayerKind, LayerShape, NetworkTopology, Rule, SramClockCap,
    TechnologyParams, Violation,
};
pub use oracle::AccessTally;
pub use partition::{Crossover, PartitionResult};
pub use schedule::{Exception, SchedulingParams};
