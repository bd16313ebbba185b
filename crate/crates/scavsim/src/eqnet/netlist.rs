//! Netlist model for the electrical-equivalent method: forces map to
//! voltages, velocities to currents, masses to inductors, springs to
//! capacitors of value 1/k and dampers to resistors.

use thiserror::Error;

use super::pwl::PwlCurve;
use super::waveform::Waveform;
use crate::float::Scalar;
use crate::lumped::{HarmonicSource, MechanicalParams};

pub type NodeId = usize;

/// The distinguished reference node.
pub const GROUND: NodeId = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Port {
    pub pos: NodeId,
    pub neg: NodeId,
}

impl Port {
    pub fn new(pos: NodeId, neg: NodeId) -> Self {
        Self { pos, neg }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind<T> {
    Resistor {
        resistance: T,
    },
    Inductor {
        inductance: T,
        initial_current: T,
    },
    Capacitor {
        capacitance: T,
        initial_voltage: T,
    },
    VoltageSource {
        waveform: Waveform<T>,
    },
    CurrentSource {
        waveform: Waveform<T>,
    },
    /// Piecewise-linear ideal-drop diode; conducting slope `on_conductance`
    /// above `forward_drop`, leakage slope `off_conductance` elsewhere.
    Diode {
        forward_drop: T,
        on_conductance: T,
        off_conductance: T,
    },
    /// Ideal transformer: v_primary = ratio * v_secondary,
    /// i_secondary = ratio * i_primary. Primary is the element port,
    /// secondary is `secondary`.
    Transformer {
        ratio: T,
        secondary: Port,
    },
    /// Position-dependent capacitor with a series bias voltage. The element
    /// port is the mechanical side (force/velocity); `electrical` is the
    /// capacitor terminal pair. Implements i = d(C(z)·v_c)/dt with
    /// v_c = v_port - bias and reaction force -(1/2)·v_c²·dC/dz.
    PositionCapacitor {
        capacitance_curve: PwlCurve<T>,
        series_bias: T,
        electrical: Port,
    },
    /// Position-dependent electromechanical coupling: force = Γ(z)·i_coil on
    /// the mechanical port, EMF = Γ(z)·velocity on the electrical port.
    Transduction {
        ratio_curve: PwlCurve<T>,
        electrical: Port,
    },
    /// Symmetric one-sided penalty contact engaging beyond ±gap, with no
    /// adhesion (contact force never pulls back toward the stop).
    EndStop {
        gap: T,
        stiffness: T,
        damping: T,
    },
}

impl<T> ElementKind<T> {
    pub fn is_nonlinear(&self) -> bool {
        matches!(
            self,
            ElementKind::Diode { .. }
                | ElementKind::PositionCapacitor { .. }
                | ElementKind::Transduction { .. }
                | ElementKind::EndStop { .. }
        )
    }

    pub fn secondary_port(&self) -> Option<Port> {
        match self {
            ElementKind::Transformer { secondary, .. } => Some(*secondary),
            ElementKind::PositionCapacitor { electrical, .. } => Some(*electrical),
            ElementKind::Transduction { electrical, .. } => Some(*electrical),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Element<T> {
    pub label: String,
    pub port: Port,
    pub kind: ElementKind<T>,
    /// Mechanical-equivalent branch: voltage reads back as force, current as
    /// velocity, and the integrated position is traced.
    pub mechanical: bool,
    /// Starting value for the integrated position of mechanical branches and
    /// position-dependent elements.
    pub initial_position: T,
}

impl<T: Scalar> Element<T> {
    pub fn new(label: impl Into<String>, port: Port, kind: ElementKind<T>) -> Self {
        Self {
            label: label.into(),
            port,
            kind,
            mechanical: false,
            initial_position: T::zero(),
        }
    }

    pub fn mechanical(mut self) -> Self {
        self.mechanical = true;
        self
    }

    pub fn with_initial_position(mut self, z0: T) -> Self {
        self.initial_position = z0;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BuildError {
    #[error("element `{label}` references node {node} which does not exist")]
    UnknownNode { label: String, node: usize },
    #[error("element `{label}`: {message}")]
    InvalidParameter { label: String, message: String },
    #[error("node {0} has no path to ground; the subnetwork is floating")]
    FloatingNode(usize),
    #[error("duplicate element label `{0}`")]
    DuplicateLabel(String),
    #[error("scenario topology: {0}")]
    Topology(String),
}

/// An electrical-equivalent network plus the highest frequency its sources or
/// resonances declare, which gates the transient time step.
#[derive(Debug, Clone)]
pub struct Netlist<T> {
    node_labels: Vec<String>,
    pub elements: Vec<Element<T>>,
    pub max_frequency_hz: Option<T>,
}

impl<T: Scalar> Default for Netlist<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Scalar> Netlist<T> {
    pub fn new() -> Self {
        Self {
            node_labels: vec!["gnd".to_string()],
            elements: Vec::new(),
            max_frequency_hz: None,
        }
    }

    /// Allocate a new node with an automatic label.
    pub fn node(&mut self) -> NodeId {
        let id = self.node_labels.len();
        self.node_labels.push(format!("n{id}"));
        id
    }

    /// Allocate a new node with an explicit label.
    pub fn labeled_node(&mut self, label: impl Into<String>) -> NodeId {
        let id = self.node_labels.len();
        self.node_labels.push(label.into());
        id
    }

    pub fn node_count(&self) -> usize {
        self.node_labels.len()
    }

    pub fn node_labels(&self) -> &[String] {
        &self.node_labels
    }

    pub fn add(&mut self, element: Element<T>) -> usize {
        self.elements.push(element);
        self.elements.len() - 1
    }

    pub fn element(&self, label: &str) -> Option<&Element<T>> {
        self.elements.iter().find(|e| e.label == label)
    }

    /// Record a source or resonance frequency; keeps the maximum.
    pub fn declare_frequency(&mut self, f_hz: T) {
        self.max_frequency_hz = Some(match self.max_frequency_hz {
            Some(current) => current.max(f_hz),
            None => f_hz,
        });
    }

    pub fn validate(&self) -> Result<(), BuildError> {
        let n = self.node_count();
        let mut seen = std::collections::HashSet::new();
        for e in &self.elements {
            if !seen.insert(e.label.clone()) {
                return Err(BuildError::DuplicateLabel(e.label.clone()));
            }
            let mut check_node = |node: NodeId| -> Result<(), BuildError> {
                if node >= n {
                    Err(BuildError::UnknownNode {
                        label: e.label.clone(),
                        node,
                    })
                } else {
                    Ok(())
                }
            };
            check_node(e.port.pos)?;
            check_node(e.port.neg)?;
            if let Some(sec) = e.kind.secondary_port() {
                check_node(sec.pos)?;
                check_node(sec.neg)?;
            }
            self.validate_parameters(e)?;
        }
        // Every node must reach ground through the element graph.
        let mut adjacency = vec![Vec::new(); n];
        let mut connect = |a: NodeId, b: NodeId, adjacency: &mut Vec<Vec<NodeId>>| {
            adjacency[a].push(b);
            adjacency[b].push(a);
        };
        for e in &self.elements {
            connect(e.port.pos, e.port.neg, &mut adjacency);
            if let Some(sec) = e.kind.secondary_port() {
                connect(sec.pos, sec.neg, &mut adjacency);
            }
        }
        let mut visited = vec![false; n];
        let mut queue = vec![GROUND];
        visited[GROUND] = true;
        while let Some(node) = queue.pop() {
            for &next in &adjacency[node] {
                if !visited[next] {
                    visited[next] = true;
                    queue.push(next);
                }
            }
        }
        if let Some(node) = visited.iter().position(|v| !v) {
            return Err(BuildError::FloatingNode(node));
        }
        Ok(())
    }

    fn validate_parameters(&self, e: &Element<T>) -> Result<(), BuildError> {
        let bad = |message: &str| {
            Err(BuildError::InvalidParameter {
                label: e.label.clone(),
                message: message.to_string(),
            })
        };
        match &e.kind {
            ElementKind::Resistor { resistance } => {
                if !(*resistance > T::zero()) {
                    return bad("resistance must be positive");
                }
            }
            ElementKind::Inductor { inductance, .. } => {
                if !(*inductance > T::zero()) {
                    return bad("inductance must be positive");
                }
            }
            ElementKind::Capacitor { capacitance, .. } => {
                if !(*capacitance > T::zero()) {
                    return bad("capacitance must be positive");
                }
            }
            ElementKind::Diode {
                forward_drop,
                on_conductance,
                off_conductance,
            } => {
                if *forward_drop < T::zero() {
                    return bad("forward drop must be non-negative");
                }
                if !(*off_conductance > T::zero()) || !(*on_conductance > *off_conductance) {
                    return bad("need on_conductance > off_conductance > 0");
                }
            }
            ElementKind::Transformer { ratio, .. } => {
                if !ratio.is_finite() || *ratio == T::zero() {
                    return bad("transformer ratio must be finite and nonzero");
                }
            }
            ElementKind::PositionCapacitor {
                capacitance_curve, ..
            } => {
                if !(capacitance_curve.min_value() > T::zero()) {
                    return bad("capacitance curve must stay positive");
                }
            }
            ElementKind::Transduction { .. } => {}
            ElementKind::EndStop {
                gap,
                stiffness,
                damping,
            } => {
                if !(*gap > T::zero()) {
                    return bad("end-stop gap must be positive");
                }
                if !(*stiffness > T::zero()) || *damping < T::zero() {
                    return bad("end-stop stiffness must be positive, damping non-negative");
                }
            }
            ElementKind::VoltageSource { .. } | ElementKind::CurrentSource { .. } => {}
        }
        Ok(())
    }

    pub fn has_nonlinear_elements(&self) -> bool {
        self.elements.iter().any(|e| e.kind.is_nonlinear())
    }
}

/// Emit the mechanical one-port of a suspended proof mass driven by the
/// inertial force of a sinusoidal base excitation: a series chain
/// source -> inductor (mass) -> resistor (parasitic damper) -> capacitor
/// (spring, value 1/k) ending at `tail`. The generator damper is not
/// emitted; it is realized by the attached transducer and load. Returns the
/// netlist and the tail node the transducer chain should continue from.
pub fn mechanical_to_network<T: Scalar>(
    p: &MechanicalParams<T>,
    s: &HarmonicSource<T>,
) -> (Netlist<T>, NodeId) {
    let force_amplitude = p.mass * s.acceleration_amplitude();
    build_mechanical_chain(
        p,
        Waveform::Sine {
            amplitude: force_amplitude,
            angular_frequency: s.angular_frequency(),
            phase: T::zero(),
        },
        Some(s.frequency_hz()),
        T::zero(),
    )
}

/// As [`mechanical_to_network`] but with an arbitrary inertial-force waveform.
pub fn build_mechanical_chain<T: Scalar>(
    p: &MechanicalParams<T>,
    force: Waveform<T>,
    source_frequency_hz: Option<T>,
    initial_position: T,
) -> (Netlist<T>, NodeId) {
    let mut net = Netlist::new();
    let top = net.labeled_node("mech_drive");
    net.add(Element::new(
        "source",
        Port::new(top, GROUND),
        ElementKind::VoltageSource { waveform: force },
    ));
    let mut tail = top;
    let next = net.labeled_node("mech_mass_out");
    net.add(
        Element::new(
            "mass",
            Port::new(tail, next),
            ElementKind::Inductor {
                inductance: p.mass,
                initial_current: T::zero(),
            },
        )
        .mechanical()
        .with_initial_position(initial_position),
    );
    tail = next;
    if p.parasitic_damping > T::zero() {
        let next = net.labeled_node("mech_damper_out");
        net.add(
            Element::new(
                "parasitic_damper",
                Port::new(tail, next),
                ElementKind::Resistor {
                    resistance: p.parasitic_damping,
                },
            )
            .mechanical()
            .with_initial_position(initial_position),
        );
        tail = next;
    }
    if p.spring > T::zero() {
        let next = net.labeled_node("mech_spring_out");
        // Spring preloaded by a nonzero initial position: capacitor voltage
        // is the spring force k*z0.
        net.add(
            Element::new(
                "suspension",
                Port::new(tail, next),
                ElementKind::Capacitor {
                    capacitance: T::one() / p.spring,
                    initial_voltage: p.spring * initial_position,
                },
            )
            .mechanical()
            .with_initial_position(initial_position),
        );
        tail = next;
        net.declare_frequency(
            (p.spring / p.mass).sqrt() / (T::of(2.0) * T::of(std::f64::consts::PI)),
        );
    }
    if let Some(f) = source_frequency_hz {
        net.declare_frequency(f);
    }
    (net, tail)
}

/// Close a series chain back to ground through a 0 V source, which doubles
/// as a loop-current meter. Scenarios splice the transducer and load in here
/// instead when one is present.
pub fn terminate_chain<T: Scalar>(net: &mut Netlist<T>, tail: NodeId, label: &str) -> usize {
    net.add(
        Element::new(
            label,
            Port::new(tail, GROUND),
            ElementKind::VoltageSource {
                waveform: Waveform::Constant { value: T::zero() },
            },
        )
        .mechanical(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_floating_subnetwork() {
        let mut net: Netlist<f64> = Netlist::new();
        let a = net.node();
        let b = net.node();
        net.add(Element::new(
            "r1",
            Port::new(a, GROUND),
            ElementKind::Resistor { resistance: 1.0 },
        ));
        // b only connects to a fresh node, never to ground.
        let c = net.node();
        net.add(Element::new(
            "r2",
            Port::new(b, c),
            ElementKind::Resistor { resistance: 1.0 },
        ));
        assert!(matches!(net.validate(), Err(BuildError::FloatingNode(_))));
    }

    #[test]
    fn validate_rejects_bad_diode() {
        let mut net: Netlist<f64> = Netlist::new();
        let a = net.node();
        net.add(Element::new(
            "d",
            Port::new(a, GROUND),
            ElementKind::Diode {
                forward_drop: 0.6,
                on_conductance: 1e-9,
                off_conductance: 10.0,
            },
        ));
        assert!(matches!(
            net.validate(),
            Err(BuildError::InvalidParameter { .. })
        ));
    }

    #[test]
    fn validate_rejects_duplicate_labels() {
        let mut net: Netlist<f64> = Netlist::new();
        let a = net.node();
        for _ in 0..2 {
            net.add(Element::new(
                "r",
                Port::new(a, GROUND),
                ElementKind::Resistor { resistance: 1.0 },
            ));
        }
        assert!(matches!(net.validate(), Err(BuildError::DuplicateLabel(_))));
    }

    #[test]
    fn mechanical_chain_declares_resonance() {
        let p = MechanicalParams::new(1e-3, 39.478, 0.01, 0.0).unwrap();
        let s = HarmonicSource::from_amplitude(1e-3, 100.0).unwrap();
        let (net, _) = mechanical_to_network(&p, &s);
        net.validate().expect("chain must not float");
        let f = net.max_frequency_hz.unwrap();
        assert!((f - 31.62).abs() < 0.01, "got {f}");
        assert_eq!(net.elements.len(), 3 + 1); // source + L + R + C
    }

    #[test]
    fn springless_chain_omits_the_spring() {
        let p = MechanicalParams::new(1e-3, 0.0, 0.0, 0.0).unwrap();
        let (net, tail) = build_mechanical_chain(
            &p,
            Waveform::Constant { value: 1.0 },
            None,
            0.0,
        );
        assert_eq!(net.elements.len(), 2); // source + mass only
        assert!(net.element("suspension").is_none());
        assert!(tail > GROUND);
    }
}
