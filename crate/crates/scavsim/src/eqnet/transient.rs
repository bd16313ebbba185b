//! Fixed-step trapezoidal transient solver with Newton iteration for the
//! nonlinear elements (diodes, position-dependent transducers, end stops).
//!
//! Companion models follow the usual SPICE construction: reactive elements
//! become Norton equivalents refreshed from the previous step, nonlinear
//! elements are linearized about the current Newton iterate, and the
//! resulting linear system is solved dense with partial pivoting.

use thiserror::Error;

use super::netlist::{BuildError, Element, ElementKind, Netlist, Port};
use super::result::{BranchKind, BranchTrace, SimulationResult, SolveStats};
use super::solve::DenseMatrix;
use crate::float::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("time step must be positive")]
    NonPositiveStep,
    #[error("duration must be non-negative")]
    NegativeDuration,
    #[error(
        "time step {dt} s violates dt <= 1/(50*f_max) = {limit} s for the declared maximum frequency {f_max} Hz"
    )]
    StepTooLarge { dt: f64, limit: f64, f_max: f64 },
    #[error("Newton iteration did not converge at step {step} (t = {time} s, {iterations} iterations)")]
    NonConvergence {
        step: usize,
        time: f64,
        iterations: usize,
    },
    #[error("singular system matrix at step {step} (pivot {pivot}); a subnetwork is floating")]
    SingularMatrix { step: usize, pivot: usize },
    #[error(transparent)]
    Build(#[from] BuildError),
}

#[derive(Debug, Clone, Copy)]
pub struct TransientSettings<T> {
    pub t_end: T,
    pub dt: T,
    /// Record every n-th solver step. Positions and energies still advance at
    /// the solver step, so coarse recording never degrades the integration.
    pub record_stride: usize,
    pub newton_tolerance: T,
    pub newton_max_iterations: usize,
    /// Enforce dt <= 1/(50*f_max) against the netlist's declared maximum
    /// source or resonance frequency.
    pub enforce_step_rule: bool,
}

impl<T: Scalar> TransientSettings<T> {
    pub fn new(t_end: T, dt: T) -> Self {
        Self {
            t_end,
            dt,
            record_stride: 1,
            newton_tolerance: T::of(1e-9),
            newton_max_iterations: 50,
            enforce_step_rule: true,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride.max(1);
        self
    }
}

/// Run a transient analysis with default solver settings.
pub fn transient<T: Scalar>(
    net: &Netlist<T>,
    t_end: T,
    dt: T,
) -> Result<SimulationResult<T>, SolveError> {
    transient_with(net, &TransientSettings::new(t_end, dt))
}

pub fn transient_with<T: Scalar>(
    net: &Netlist<T>,
    settings: &TransientSettings<T>,
) -> Result<SimulationResult<T>, SolveError> {
    Engine::new(net, settings)?.run()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Integrator<T> {
    Trapezoid { dt: T },
    BackwardEuler { dt: T },
}

impl<T: Scalar> Integrator<T> {
    fn dt(&self) -> T {
        match self {
            Integrator::Trapezoid { dt } | Integrator::BackwardEuler { dt } => *dt,
        }
    }

    /// Sensitivity of the end-of-step position to the end-of-step current.
    fn dz_di(&self) -> T {
        match self {
            Integrator::Trapezoid { dt } => *dt * T::of(0.5),
            Integrator::BackwardEuler { dt } => *dt,
        }
    }
}

/// Per-element mutable solver state.
struct ElemState<T> {
    aux0: usize,
    aux1: usize,
    /// Primary-port voltage and current at the last committed step.
    v: T,
    i: T,
    /// Secondary-port voltage and current (two-port elements).
    v2: T,
    i2: T,
    /// Position capacitor charge.
    q: T,
    /// Integrated position.
    z: T,
    tracks_position: bool,
    /// Absorbed-energy accumulators per port.
    energy: T,
    energy2: T,
    /// Last committed port powers, for trapezoidal energy accumulation.
    power: T,
    power2: T,
}

struct Engine<'a, T> {
    net: &'a Netlist<T>,
    settings: TransientSettings<T>,
    n_vars: usize,
    n_nodes: usize,
    states: Vec<ElemState<T>>,
    matrix: DenseMatrix<T>,
    rhs: Vec<T>,
    x: Vec<T>,
    x_prev_iter: Vec<T>,
    regions: Vec<u8>,
    regions_prev: Vec<u8>,
    node_current_sum: Vec<T>,
    max_kcl_ratio: f64,
    max_newton_iters: usize,
    has_nonlinear: bool,
}

fn var_of(node: usize) -> Option<usize> {
    node.checked_sub(1)
}

impl<'a, T: Scalar> Engine<'a, T> {
    fn new(net: &'a Netlist<T>, settings: &TransientSettings<T>) -> Result<Self, SolveError> {
        net.validate()?;
        if !(settings.dt > T::zero()) {
            return Err(SolveError::NonPositiveStep);
        }
        if settings.t_end < T::zero() {
            return Err(SolveError::NegativeDuration);
        }
        if settings.enforce_step_rule {
            if let Some(f_max) = net.max_frequency_hz {
                let limit = T::one() / (T::of(50.0) * f_max);
                if settings.dt > limit * (T::one() + T::of(1e-12)) {
                    return Err(SolveError::StepTooLarge {
                        dt: settings.dt.as_f64(),
                        limit: limit.as_f64(),
                        f_max: f_max.as_f64(),
                    });
                }
            }
        }
        let n_nodes = net.node_count();
        let mut n_aux = 0usize;
        let mut states = Vec::with_capacity(net.elements.len());
        for e in &net.elements {
            let aux_count = match e.kind {
                ElementKind::VoltageSource { .. }
                | ElementKind::Transformer { .. }
                | ElementKind::EndStop { .. }
                | ElementKind::PositionCapacitor { .. } => 1,
                ElementKind::Transduction { .. } => 2,
                _ => 0,
            };
            let base = n_nodes - 1 + n_aux;
            n_aux += aux_count;
            let tracks_position = e.mechanical
                || matches!(
                    e.kind,
                    ElementKind::PositionCapacitor { .. }
                        | ElementKind::Transduction { .. }
                        | ElementKind::EndStop { .. }
                );
            let (v0, i0, q0, z0) = initial_state(e);
            states.push(ElemState {
                aux0: if aux_count >= 1 { base } else { usize::MAX },
                aux1: if aux_count >= 2 { base + 1 } else { usize::MAX },
                v: v0,
                i: i0,
                v2: T::zero(),
                i2: T::zero(),
                q: q0,
                z: z0,
                tracks_position,
                energy: T::zero(),
                energy2: T::zero(),
                power: T::zero(),
                power2: T::zero(),
            });
        }
        let n_vars = n_nodes - 1 + n_aux;
        Ok(Self {
            net,
            settings: *settings,
            n_vars,
            n_nodes,
            states,
            matrix: DenseMatrix::new(n_vars),
            rhs: vec![T::zero(); n_vars],
            x: vec![T::zero(); n_vars],
            x_prev_iter: vec![T::zero(); n_vars],
            regions: vec![0; net.elements.len()],
            regions_prev: vec![0; net.elements.len()],
            node_current_sum: vec![T::zero(); n_nodes],
            max_kcl_ratio: 0.0,
            max_newton_iters: 0,
            has_nonlinear: net.has_nonlinear_elements(),
        })
    }

    fn run(mut self) -> Result<SimulationResult<T>, SolveError> {
        let dt = self.settings.dt;
        let stride = self.settings.record_stride.max(1);
        let mut n_steps = (self.settings.t_end / dt).as_f64().round() as usize;
        if self.settings.t_end > T::zero() && n_steps == 0 {
            n_steps = 1;
        }
        // Pad to a whole number of recording strides so the last sample is
        // the last solved step and the grid stays uniform.
        if n_steps % stride != 0 {
            n_steps += stride - n_steps % stride;
        }
        let n_samples = n_steps / stride + 1;

        let mut recorder = Recorder::new(self.net, n_samples, dt * T::of(stride as f64));

        // Consistent initial point: one tiny backward-Euler step from the
        // declared initial conditions resolves the t = 0 node voltages and
        // branch currents without disturbing the stored state.
        let init = Integrator::BackwardEuler {
            dt: dt * T::of(1e-6),
        };
        self.solve_step(init, T::zero(), 0)?;
        self.commit(init, T::zero(), false);
        recorder.record(T::zero(), &self.x, &self.states, self.n_nodes);

        let trap = Integrator::Trapezoid { dt };
        for step in 1..=n_steps {
            let t = dt * T::of(step as f64);
            self.solve_step(trap, t, step)?;
            self.commit(trap, t, true);
            if step % stride == 0 {
                recorder.record(t, &self.x, &self.states, self.n_nodes);
            }
        }

        Ok(recorder.finish(
            self.net,
            &self.states,
            dt,
            SolveStats {
                steps: n_steps,
                max_newton_iterations: self.max_newton_iters,
                max_kcl_residual_ratio: self.max_kcl_ratio,
            },
        ))
    }

    /// Newton loop for one time step ending at `t`.
    fn solve_step(&mut self, integ: Integrator<T>, t: T, step: usize) -> Result<(), SolveError> {
        let max_iter = if self.has_nonlinear {
            self.settings.newton_max_iterations.max(1)
        } else {
            1
        };
        for iteration in 1..=max_iter {
            self.x_prev_iter.copy_from_slice(&self.x);
            std::mem::swap(&mut self.regions, &mut self.regions_prev);
            self.assemble(integ, t);
            self.matrix
                .solve_in_place(&mut self.rhs)
                .map_err(|pivot| SolveError::SingularMatrix { step, pivot })?;
            self.x.copy_from_slice(&self.rhs);
            if !self.has_nonlinear {
                self.max_newton_iters = self.max_newton_iters.max(1);
                return Ok(());
            }
            let converged = self.newton_converged() && self.regions == self.regions_prev;
            if converged && iteration >= 2 {
                self.max_newton_iters = self.max_newton_iters.max(iteration);
                return Ok(());
            }
        }
        Err(SolveError::NonConvergence {
            step,
            time: t.as_f64(),
            iterations: max_iter,
        })
    }

    fn newton_converged(&self) -> bool {
        let nv = self.n_nodes - 1;
        let tol = self.settings.newton_tolerance;
        let mut max_dv = T::zero();
        let mut scale_v = T::one();
        for k in 0..nv {
            max_dv = max_dv.max((self.x[k] - self.x_prev_iter[k]).abs());
            scale_v = scale_v.max(self.x[k].abs());
        }
        if max_dv > tol * scale_v {
            return false;
        }
        let mut max_da = T::zero();
        let mut scale_a = T::one();
        for k in nv..self.n_vars {
            max_da = max_da.max((self.x[k] - self.x_prev_iter[k]).abs());
            scale_a = scale_a.max(self.x[k].abs());
        }
        max_da <= tol * scale_a
    }

    fn x_diff(&self, port: Port) -> T {
        let vp = var_of(port.pos).map_or(T::zero(), |k| self.x[k]);
        let vn = var_of(port.neg).map_or(T::zero(), |k| self.x[k]);
        vp - vn
    }

    fn a_add(&mut self, row: Option<usize>, col: Option<usize>, value: T) {
        if let (Some(r), Some(c)) = (row, col) {
            self.matrix.add(r, c, value);
        }
    }

    fn b_add(&mut self, row: Option<usize>, value: T) {
        if let Some(r) = row {
            self.rhs[r] = self.rhs[r] + value;
        }
    }

    /// Branch current i(p->n) = g·(vp - vn) + j.
    fn stamp_norton(&mut self, port: Port, g: T, j: T) {
        let p = var_of(port.pos);
        let n = var_of(port.neg);
        self.a_add(p, p, g);
        self.a_add(n, n, g);
        self.a_add(p, n, -g);
        self.a_add(n, p, -g);
        self.b_add(p, -j);
        self.b_add(n, j);
    }

    /// KCL entries for a branch current held in variable `col`.
    fn stamp_current_var(&mut self, col: usize, port: Port) {
        self.a_add(var_of(port.pos), Some(col), T::one());
        self.a_add(var_of(port.neg), Some(col), -T::one());
    }

    /// Adds `coef·(v_pos - v_neg)` to constraint row `row`.
    fn stamp_row_diff(&mut self, row: usize, port: Port, coef: T) {
        self.a_add(Some(row), var_of(port.pos), coef);
        self.a_add(Some(row), var_of(port.neg), -coef);
    }

    fn assemble(&mut self, integ: Integrator<T>, t: T) {
        self.matrix.clear();
        self.rhs.fill(T::zero());
        let dt = integ.dt();
        let dz_di = integ.dz_di();
        let half = T::of(0.5);
        for idx in 0..self.net.elements.len() {
            let element = &self.net.elements[idx];
            let port = element.port;
            let (aux0, aux1, v_prev, i_prev, i2_prev, q_prev, z_prev) = {
                let s = &self.states[idx];
                (s.aux0, s.aux1, s.v, s.i, s.i2, s.q, s.z)
            };
            match &element.kind {
                ElementKind::Resistor { resistance } => {
                    self.stamp_norton(port, T::one() / *resistance, T::zero());
                }
                ElementKind::Capacitor { capacitance, .. } => {
                    let (g, j) = match integ {
                        Integrator::Trapezoid { .. } => {
                            let g = T::of(2.0) * *capacitance / dt;
                            (g, -(g * v_prev + i_prev))
                        }
                        Integrator::BackwardEuler { .. } => {
                            let g = *capacitance / dt;
                            (g, -(g * v_prev))
                        }
                    };
                    self.stamp_norton(port, g, j);
                }
                ElementKind::Inductor { inductance, .. } => {
                    let (g, j) = match integ {
                        Integrator::Trapezoid { .. } => {
                            let g = dt / (T::of(2.0) * *inductance);
                            (g, i_prev + g * v_prev)
                        }
                        Integrator::BackwardEuler { .. } => (dt / *inductance, i_prev),
                    };
                    self.stamp_norton(port, g, j);
                }
                ElementKind::VoltageSource { waveform } => {
                    let value = waveform.value(t);
                    self.stamp_current_var(aux0, port);
                    self.stamp_row_diff(aux0, port, T::one());
                    self.b_add(Some(aux0), value);
                }
                ElementKind::CurrentSource { waveform } => {
                    let value = waveform.value(t);
                    self.b_add(var_of(port.pos), -value);
                    self.b_add(var_of(port.neg), value);
                }
                ElementKind::Diode {
                    forward_drop,
                    on_conductance,
                    off_conductance,
                } => {
                    let v_guess = self.x_diff(port);
                    let on = v_guess > *forward_drop;
                    self.regions[idx] = on as u8;
                    let (g, j) = if on {
                        (
                            *off_conductance + *on_conductance,
                            -*on_conductance * *forward_drop,
                        )
                    } else {
                        (*off_conductance, T::zero())
                    };
                    self.stamp_norton(port, g, j);
                }
                ElementKind::Transformer { ratio, secondary } => {
                    let secondary = *secondary;
                    let ratio = *ratio;
                    self.stamp_current_var(aux0, port);
                    // i_secondary (s+ -> s-) = -ratio·i_primary.
                    self.a_add(var_of(secondary.pos), Some(aux0), -ratio);
                    self.a_add(var_of(secondary.neg), Some(aux0), ratio);
                    // v_primary - ratio·v_secondary = 0.
                    self.stamp_row_diff(aux0, port, T::one());
                    self.stamp_row_diff(aux0, secondary, -ratio);
                }
                ElementKind::Transduction {
                    ratio_curve,
                    electrical,
                } => {
                    let electrical = *electrical;
                    let jm = self.x[aux0];
                    let je = self.x[aux1];
                    let z_est = match integ {
                        Integrator::Trapezoid { .. } => z_prev + dz_di * (i_prev + jm),
                        Integrator::BackwardEuler { .. } => z_prev + dz_di * jm,
                    };
                    let (gamma, gamma_slope) = ratio_curve.eval(z_est);
                    self.stamp_current_var(aux0, port);
                    self.stamp_current_var(aux1, electrical);
                    // Mechanical row: v_m - Γ(z)·j_e = 0.
                    self.stamp_row_diff(aux0, port, T::one());
                    self.a_add(Some(aux0), Some(aux1), -gamma);
                    self.a_add(Some(aux0), Some(aux0), -je * gamma_slope * dz_di);
                    self.b_add(Some(aux0), -je * gamma_slope * dz_di * jm);
                    // Electrical row: v_e + Γ(z)·j_m = 0.
                    self.stamp_row_diff(aux1, electrical, T::one());
                    self.a_add(Some(aux1), Some(aux0), gamma + jm * gamma_slope * dz_di);
                    self.b_add(Some(aux1), jm * jm * gamma_slope * dz_di);
                }
                ElementKind::PositionCapacitor {
                    capacitance_curve,
                    series_bias,
                    electrical,
                } => {
                    let electrical = *electrical;
                    let jm = self.x[aux0];
                    let ve = self.x_diff(electrical);
                    let z_est = match integ {
                        Integrator::Trapezoid { .. } => z_prev + dz_di * (i_prev + jm),
                        Integrator::BackwardEuler { .. } => z_prev + dz_di * jm,
                    };
                    let (cap, cap_slope) = capacitance_curve.eval(z_est);
                    let vc = ve - *series_bias;
                    let (i_now, g_v) = match integ {
                        Integrator::Trapezoid { .. } => {
                            let two_over_dt = T::of(2.0) / dt;
                            (two_over_dt * (cap * vc - q_prev) - i2_prev, two_over_dt * cap)
                        }
                        Integrator::BackwardEuler { .. } => {
                            ((cap * vc - q_prev) / dt, cap / dt)
                        }
                    };
                    // d i / d j_m via the position estimate; dz_di cancels the
                    // 1/dt of the companion, leaving vc·C'(z) (trapezoid) or
                    // the same value for backward Euler.
                    let g_x = vc * cap_slope;
                    let ep = var_of(electrical.pos);
                    let en = var_of(electrical.neg);
                    self.a_add(ep, ep, g_v);
                    self.a_add(en, en, g_v);
                    self.a_add(ep, en, -g_v);
                    self.a_add(en, ep, -g_v);
                    self.a_add(ep, Some(aux0), g_x);
                    self.a_add(en, Some(aux0), -g_x);
                    let j_const = i_now - g_v * ve - g_x * jm;
                    self.b_add(ep, -j_const);
                    self.b_add(en, j_const);
                    // Mechanical row: v_m + ½·v_c²·dC/dz = 0.
                    self.stamp_current_var(aux0, port);
                    self.stamp_row_diff(aux0, port, T::one());
                    self.a_add(Some(aux0), ep, vc * cap_slope);
                    self.a_add(Some(aux0), en, -vc * cap_slope);
                    self.b_add(Some(aux0), vc * cap_slope * ve - half * vc * vc * cap_slope);
                }
                ElementKind::EndStop {
                    gap,
                    stiffness,
                    damping,
                } => {
                    let j = self.x[aux0];
                    let z_est = match integ {
                        Integrator::Trapezoid { .. } => z_prev + dz_di * (i_prev + j),
                        Integrator::BackwardEuler { .. } => z_prev + dz_di * j,
                    };
                    let (force, df_dj, region) =
                        end_stop_force(z_est, j, *gap, *stiffness, *damping, dz_di);
                    self.regions[idx] = region;
                    self.stamp_current_var(aux0, port);
                    self.stamp_row_diff(aux0, port, T::one());
                    self.a_add(Some(aux0), Some(aux0), -df_dj);
                    self.b_add(Some(aux0), force - df_dj * j);
                }
            }
        }
    }

    /// Update element states and energy accumulators from the converged
    /// solution, and run the per-step Kirchhoff current audit.
    fn commit(&mut self, integ: Integrator<T>, t: T, accumulate_energy: bool) {
        let dt = integ.dt();
        let half = T::of(0.5);
        self.node_current_sum.fill(T::zero());
        let mut max_current = T::zero();
        for idx in 0..self.net.elements.len() {
            let element = &self.net.elements[idx];
            let port = element.port;
            let v_new = self.x_diff(port);
            let state = &self.states[idx];
            let (v_prev, i_prev, i2_prev, q_prev, z_prev) =
                (state.v, state.i, state.i2, state.q, state.z);
            let aux0 = state.aux0;
            let aux1 = state.aux1;
            let mut v2_new = T::zero();
            let mut i2_new = T::zero();
            let mut q_new = q_prev;
            let i_new = match &element.kind {
                ElementKind::Resistor { resistance } => v_new / *resistance,
                ElementKind::Capacitor { capacitance, .. } => match integ {
                    Integrator::Trapezoid { .. } => {
                        T::of(2.0) * *capacitance / dt * (v_new - v_prev) - i_prev
                    }
                    Integrator::BackwardEuler { .. } => *capacitance / dt * (v_new - v_prev),
                },
                ElementKind::Inductor { inductance, .. } => match integ {
                    Integrator::Trapezoid { .. } => {
                        i_prev + dt / (T::of(2.0) * *inductance) * (v_new + v_prev)
                    }
                    Integrator::BackwardEuler { .. } => i_prev + dt / *inductance * v_new,
                },
                ElementKind::VoltageSource { .. } => self.x[aux0],
                ElementKind::CurrentSource { waveform } => waveform.value(t),
                ElementKind::Diode {
                    forward_drop,
                    on_conductance,
                    off_conductance,
                } => {
                    let leak = *off_conductance * v_new;
                    if v_new > *forward_drop {
                        leak + *on_conductance * (v_new - *forward_drop)
                    } else {
                        leak
                    }
                }
                ElementKind::Transformer { ratio, secondary } => {
                    v2_new = self.x_diff(*secondary);
                    i2_new = -*ratio * self.x[aux0];
                    self.x[aux0]
                }
                ElementKind::Transduction { electrical, .. } => {
                    v2_new = self.x_diff(*electrical);
                    i2_new = self.x[aux1];
                    self.x[aux0]
                }
                ElementKind::PositionCapacitor {
                    capacitance_curve,
                    series_bias,
                    electrical,
                } => {
                    let jm = self.x[aux0];
                    v2_new = self.x_diff(*electrical);
                    let z_new = match integ {
                        Integrator::Trapezoid { .. } => {
                            z_prev + dt * half * (i_prev + jm)
                        }
                        Integrator::BackwardEuler { .. } => z_prev + dt * jm,
                    };
                    let (cap, _) = capacitance_curve.eval(z_new);
                    q_new = cap * (v2_new - *series_bias);
                    i2_new = match integ {
                        Integrator::Trapezoid { .. } => {
                            T::of(2.0) / dt * (q_new - q_prev) - i2_prev
                        }
                        Integrator::BackwardEuler { .. } => (q_new - q_prev) / dt,
                    };
                    jm
                }
                ElementKind::EndStop { .. } => self.x[aux0],
            };
            let z_new = if self.states[idx].tracks_position {
                match integ {
                    Integrator::Trapezoid { .. } => z_prev + dt * half * (i_prev + i_new),
                    Integrator::BackwardEuler { .. } => z_prev + dt * i_new,
                }
            } else {
                z_prev
            };

            let state = &mut self.states[idx];
            let power = v_new * i_new;
            let power2 = v2_new * i2_new;
            if accumulate_energy {
                state.energy = state.energy + dt * half * (state.power + power);
                state.energy2 = state.energy2 + dt * half * (state.power2 + power2);
            }
            state.power = power;
            state.power2 = power2;
            state.v = v_new;
            state.i = i_new;
            state.v2 = v2_new;
            state.i2 = i2_new;
            state.q = q_new;
            state.z = z_new;

            // Kirchhoff audit.
            let mut kcl = |p: Port, i: T, sums: &mut [T]| {
                sums[p.pos] = sums[p.pos] + i;
                sums[p.neg] = sums[p.neg] - i;
            };
            kcl(port, i_new, &mut self.node_current_sum);
            if let Some(sec) = element.kind.secondary_port() {
                kcl(sec, i2_new, &mut self.node_current_sum);
            }
            max_current = max_current.max(i_new.abs()).max(i2_new.abs());
        }
        let mut max_residual = T::zero();
        for (node, sum) in self.node_current_sum.iter().enumerate() {
            if node == 0 {
                continue;
            }
            max_residual = max_residual.max(sum.abs());
        }
        if max_current > T::zero() {
            let ratio = (max_residual / max_current).as_f64();
            if ratio > self.max_kcl_ratio {
                self.max_kcl_ratio = ratio;
            }
        }
    }
}

fn initial_state<T: Scalar>(e: &Element<T>) -> (T, T, T, T) {
    let z0 = e.initial_position;
    match &e.kind {
        ElementKind::Capacitor {
            initial_voltage, ..
        } => (*initial_voltage, T::zero(), T::zero(), z0),
        ElementKind::Inductor {
            initial_current, ..
        } => (T::zero(), *initial_current, T::zero(), z0),
        ElementKind::PositionCapacitor {
            capacitance_curve,
            series_bias,
            ..
        } => {
            // Default electrical state: port voltage zero, so the capacitor
            // sits at -bias and carries the corresponding charge.
            let (cap, _) = capacitance_curve.eval(z0);
            (T::zero(), T::zero(), cap * -*series_bias, z0)
        }
        _ => (T::zero(), T::zero(), T::zero(), z0),
    }
}

/// Contact force of the symmetric penalty stop, clamped so it never pulls.
/// Returns (force, dF/dj, region).
fn end_stop_force<T: Scalar>(
    z: T,
    j: T,
    gap: T,
    stiffness: T,
    damping: T,
    dz_dj: T,
) -> (T, T, u8) {
    if z > gap {
        let raw = stiffness * (z - gap) + damping * j;
        if raw > T::zero() {
            return (raw, damping + stiffness * dz_dj, 1);
        }
    } else if z < -gap {
        let raw = stiffness * (z + gap) + damping * j;
        if raw < T::zero() {
            return (raw, damping + stiffness * dz_dj, 2);
        }
    }
    (T::zero(), T::zero(), 0)
}

/// Collects traces at the recording stride.
struct Recorder<T> {
    sample_dt: T,
    times: Vec<T>,
    node_voltages: Vec<Vec<T>>,
    branch_v: Vec<Vec<T>>,
    branch_i: Vec<Vec<T>>,
    branch_z: Vec<Option<Vec<T>>>,
    branch2_v: Vec<Vec<T>>,
    branch2_i: Vec<Vec<T>>,
}

impl<T: Scalar> Recorder<T> {
    fn new(net: &Netlist<T>, n_samples: usize, sample_dt: T) -> Self {
        let n_el = net.elements.len();
        let mut branch_z = Vec::with_capacity(n_el);
        for e in &net.elements {
            let tracks = e.mechanical
                || matches!(
                    e.kind,
                    ElementKind::PositionCapacitor { .. }
                        | ElementKind::Transduction { .. }
                        | ElementKind::EndStop { .. }
                );
            branch_z.push(tracks.then(|| Vec::with_capacity(n_samples)));
        }
        Self {
            sample_dt,
            times: Vec::with_capacity(n_samples),
            node_voltages: vec![Vec::with_capacity(n_samples); net.node_count()],
            branch_v: vec![Vec::with_capacity(n_samples); n_el],
            branch_i: vec![Vec::with_capacity(n_samples); n_el],
            branch_z,
            branch2_v: vec![Vec::with_capacity(n_samples); n_el],
            branch2_i: vec![Vec::with_capacity(n_samples); n_el],
        }
    }

    fn record(&mut self, t: T, x: &[T], states: &[ElemState<T>], n_nodes: usize) {
        self.times.push(t);
        self.node_voltages[0].push(T::zero());
        for node in 1..n_nodes {
            self.node_voltages[node].push(x[node - 1]);
        }
        for (idx, state) in states.iter().enumerate() {
            self.branch_v[idx].push(state.v);
            self.branch_i[idx].push(state.i);
            if let Some(trace) = &mut self.branch_z[idx] {
                trace.push(state.z);
            }
            self.branch2_v[idx].push(state.v2);
            self.branch2_i[idx].push(state.i2);
        }
    }

    fn finish(
        self,
        net: &Netlist<T>,
        states: &[ElemState<T>],
        solver_dt: T,
        stats: SolveStats,
    ) -> SimulationResult<T> {
        let mut branches = Vec::new();
        for (idx, e) in net.elements.iter().enumerate() {
            let (kind, kind2) = branch_kinds(&e.kind);
            let capacitance = match &e.kind {
                ElementKind::Capacitor { capacitance, .. } => Some(*capacitance),
                _ => None,
            };
            let inductance = match &e.kind {
                ElementKind::Inductor { inductance, .. } => Some(*inductance),
                _ => None,
            };
            branches.push(BranchTrace {
                label: e.label.clone(),
                kind,
                mechanical: e.mechanical,
                voltage: self.branch_v[idx].clone(),
                current: self.branch_i[idx].clone(),
                position: self.branch_z[idx].clone(),
                capacitance,
                inductance,
                absorbed_energy: states[idx].energy,
            });
            if let Some(kind2) = kind2 {
                branches.push(BranchTrace {
                    label: format!("{}.elec", e.label),
                    kind: kind2,
                    mechanical: false,
                    voltage: self.branch2_v[idx].clone(),
                    current: self.branch2_i[idx].clone(),
                    position: None,
                    capacitance: None,
                    inductance: None,
                    absorbed_energy: states[idx].energy2,
                });
            }
        }
        SimulationResult {
            sample_dt: self.sample_dt,
            solver_dt,
            times: self.times,
            node_labels: net.node_labels().to_vec(),
            node_voltages: self.node_voltages,
            branches,
            stats,
        }
    }
}

fn branch_kinds<T>(kind: &ElementKind<T>) -> (BranchKind, Option<BranchKind>) {
    match kind {
        ElementKind::Resistor { .. } => (BranchKind::Resistor, None),
        ElementKind::Inductor { .. } => (BranchKind::Inductor, None),
        ElementKind::Capacitor { .. } => (BranchKind::Capacitor, None),
        ElementKind::VoltageSource { .. } | ElementKind::CurrentSource { .. } => {
            (BranchKind::Source, None)
        }
        ElementKind::Diode { .. } => (BranchKind::Diode, None),
        ElementKind::Transformer { .. } => (BranchKind::Coupler, Some(BranchKind::Coupler)),
        ElementKind::Transduction { .. } => (BranchKind::Coupler, Some(BranchKind::Coupler)),
        ElementKind::PositionCapacitor { .. } => {
            (BranchKind::Coupler, Some(BranchKind::FieldStore))
        }
        ElementKind::EndStop { .. } => (BranchKind::EndStop, None),
    }
}
