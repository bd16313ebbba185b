//! Transient network solver for the electrical-equivalent method.
//!
//! Forces map to voltages and velocities to currents; masses become
//! inductors, springs capacitors of value 1/k, dampers resistors. Transducers
//! couple the mechanical loop to the electrical side through two-port
//! elements, and the whole system integrates with the fixed-step trapezoidal
//! rule plus Newton iteration.

mod netlist;
mod pwl;
mod result;
mod solve;
mod transient;
mod waveform;

pub use netlist::{
    build_mechanical_chain, mechanical_to_network, terminate_chain, BuildError, Element,
    ElementKind, Netlist, NodeId, Port, GROUND,
};
pub use pwl::{CurveError, PwlCurve};
pub use result::{BranchKind, BranchTrace, ResultError, SimulationResult, SolveStats};
pub use transient::{transient, transient_with, SolveError, TransientSettings};
pub use waveform::{StrokeProfile, Waveform};
