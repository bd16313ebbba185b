//! Simulation traces and derived quantities.

use thiserror::Error;

use crate::float::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ResultError {
    #[error("no branch named `{0}` in the result")]
    UnknownBranch(String),
    #[error("averaging window is empty")]
    EmptyWindow,
    #[error("branch `{0}` is not a capacitor")]
    NotACapacitor(String),
    #[error("time {0} s is outside the recorded grid")]
    TimeOutOfRange(f64),
    #[error("no node named `{0}` in the result")]
    UnknownNode(String),
}

/// Coarse classification of a recorded branch, used by energy accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchKind {
    Resistor,
    Inductor,
    Capacitor,
    Source,
    Diode,
    /// Lossless coupler port (transformer or electromechanical coupling).
    Coupler,
    /// Electrical port of a position-dependent capacitor.
    FieldStore,
    EndStop,
}

impl BranchKind {
    /// Dissipative branches turn absorbed energy into heat.
    pub fn is_dissipative(self) -> bool {
        matches!(self, BranchKind::Resistor | BranchKind::Diode | BranchKind::EndStop)
    }

    pub fn is_storage(self) -> bool {
        matches!(self, BranchKind::Inductor | BranchKind::Capacitor)
    }
}

/// One recorded port of one element. Two-port elements (transformer,
/// transduction, position capacitor) produce a mechanical-side trace under
/// the element label and an electrical-side trace under `label.elec`.
#[derive(Debug, Clone)]
pub struct BranchTrace<T> {
    pub label: String,
    pub kind: BranchKind,
    /// Mechanical-equivalent branch: voltage is force (N), current is
    /// velocity (m/s).
    pub mechanical: bool,
    pub voltage: Vec<T>,
    pub current: Vec<T>,
    /// Running trapezoidal integral of the branch current, for mechanical
    /// branches and position-dependent elements.
    pub position: Option<Vec<T>>,
    pub capacitance: Option<T>,
    pub inductance: Option<T>,
    /// Energy absorbed by this port over the whole run (v·i integrated at the
    /// solver step, not the recording stride).
    pub absorbed_energy: T,
}

#[derive(Debug, Clone, Copy)]
pub struct SolveStats {
    pub steps: usize,
    pub max_newton_iterations: usize,
    /// max over steps of (KCL residual / largest branch current).
    pub max_kcl_residual_ratio: f64,
}

/// Uniformly sampled transient traces.
#[derive(Debug, Clone)]
pub struct SimulationResult<T> {
    /// Spacing of the recorded samples (solver step times the stride).
    pub sample_dt: T,
    /// Solver integration step.
    pub solver_dt: T,
    pub times: Vec<T>,
    pub node_labels: Vec<String>,
    /// Indexed `[node][sample]`; ground is all zeros.
    pub node_voltages: Vec<Vec<T>>,
    pub branches: Vec<BranchTrace<T>>,
    pub stats: SolveStats,
}

impl<T: Scalar> SimulationResult<T> {
    pub fn sample_count(&self) -> usize {
        self.times.len()
    }

    pub fn end_time(&self) -> T {
        *self.times.last().expect("at least one sample")
    }

    pub fn branch(&self, label: &str) -> Result<&BranchTrace<T>, ResultError> {
        self.branches
            .iter()
            .find(|b| b.label == label)
            .ok_or_else(|| ResultError::UnknownBranch(label.to_string()))
    }

    pub fn node_voltage(&self, label: &str) -> Result<&[T], ResultError> {
        let idx = self
            .node_labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ResultError::UnknownNode(label.to_string()))?;
        Ok(&self.node_voltages[idx])
    }

    /// Index of the recorded sample at time `t`, which must lie on the grid
    /// to within half a sample step.
    pub fn index_at_time(&self, t: T) -> Result<usize, ResultError> {
        let idx = (t / self.sample_dt).round();
        let idx = idx.to_usize().ok_or(ResultError::TimeOutOfRange(t.as_f64()))?;
        if idx >= self.times.len() {
            return Err(ResultError::TimeOutOfRange(t.as_f64()));
        }
        if (self.times[idx] - t).abs() > self.sample_dt * T::of(0.5) + T::epsilon() {
            return Err(ResultError::TimeOutOfRange(t.as_f64()));
        }
        Ok(idx)
    }

    /// Mean of v·i over `[t_start, end]` with trapezoidal weighting.
    pub fn average_branch_power(&self, label: &str, t_start: T) -> Result<T, ResultError> {
        let branch = self.branch(label)?;
        let first = self
            .times
            .iter()
            .position(|&t| t >= t_start - self.sample_dt * T::of(1e-9))
            .ok_or(ResultError::EmptyWindow)?;
        if first + 1 >= self.times.len() {
            return Err(ResultError::EmptyWindow);
        }
        let mut acc = T::zero();
        for k in first..self.times.len() - 1 {
            let p0 = branch.voltage[k] * branch.current[k];
            let p1 = branch.voltage[k + 1] * branch.current[k + 1];
            acc = acc + (p0 + p1) * T::of(0.5) * self.sample_dt;
        }
        let span = self.times[self.times.len() - 1] - self.times[first];
        Ok(acc / span)
    }

    /// Σ ½·C·v(t)² over the named capacitor branches.
    pub fn stored_energy(&self, capacitor_labels: &[&str], t: T) -> Result<T, ResultError> {
        let idx = self.index_at_time(t)?;
        let mut total = T::zero();
        for &label in capacitor_labels {
            let branch = self.branch(label)?;
            let capacitance = branch
                .capacitance
                .ok_or_else(|| ResultError::NotACapacitor(label.to_string()))?;
            let v = branch.voltage[idx];
            total = total + T::of(0.5) * capacitance * v * v;
        }
        Ok(total)
    }
}
