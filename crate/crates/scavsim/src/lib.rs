//! Lumped-parameter electromechanical co-simulation of vibration and motion
//! energy scavengers: closed-form power analytics, a transient
//! electrical-equivalent network solver, electrostatic and electromagnetic
//! transducer models, and ready-made harvester scenarios.
//!
//! The numeric core is generic over [`float::Scalar`] (`f32` or `f64`); the
//! aliases at the crate root fix `f64`, which is what the CLI and the shipped
//! scenario files use.

pub mod eqnet;
pub mod float;
pub mod lumped;

pub use float::Scalar;

/// `f64` instantiations of the core types.
pub type MechanicalParams = lumped::MechanicalParams<f64>;
pub type HarmonicSource = lumped::HarmonicSource<f64>;
pub type NormalizedParams = lumped::NormalizedParams<f64>;
pub type Netlist = eqnet::Netlist<f64>;
pub type Element = eqnet::Element<f64>;
pub type SimulationResult = eqnet::SimulationResult<f64>;
pub type TransientSettings = eqnet::TransientSettings<f64>;
