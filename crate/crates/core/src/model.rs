//! Shared domain types: geometry, radio/energy/sensing parameters, nodes,
//! reduced topologies and the mutable network state.

use std::collections::{BTreeMap, BTreeSet};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Dense node index. The sink is always node 0.
pub type NodeId = usize;

pub const SINK: NodeId = 0;

/// Residual energy at or below `initial * DEPLETION_EPSILON` counts as
/// exhausted. Absorbs the rounding left over by repeated f64 subtraction.
pub const DEPLETION_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        distance(*self, *other)
    }
}

/// Euclidean distance in meters.
pub fn distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).hypot(a.y - b.y)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeploymentArea {
    pub width: f64,
    pub height: f64,
}

impl Default for DeploymentArea {
    fn default() -> Self {
        DeploymentArea {
            width: 1074.0,
            height: 660.0,
        }
    }
}

impl DeploymentArea {
    pub fn center(&self) -> Point {
        Point::new(self.width / 2.0, self.height / 2.0)
    }

    pub fn validate(&self) -> Result<()> {
        positive("deployment.width", self.width)?;
        positive("deployment.height", self.height)
    }
}

/// Two-ray ground radio description plus the fixed communication and
/// sensing radii used by the simulator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadioParams {
    /// Transmit power `P_t` in watts.
    pub tx_power: f64,
    pub gain_tx: f64,
    pub gain_rx: f64,
    pub height_tx: f64,
    pub height_rx: f64,
    /// Transceiver sensitivity constant `C_t`.
    pub transceiver_const: f64,
    pub comm_radius: f64,
    pub sensing_radius: f64,
}

impl Default for RadioParams {
    fn default() -> Self {
        RadioParams {
            tx_power: 1.0,
            gain_tx: 1.0,
            gain_rx: 1.0,
            height_tx: 1.0,
            height_rx: 1.0,
            transceiver_const: 1.0,
            comm_radius: 100.0,
            sensing_radius: 20.0,
        }
    }
}

impl RadioParams {
    pub fn validate(&self) -> Result<()> {
        positive("radio.tx_power", self.tx_power)?;
        positive("radio.gain_tx", self.gain_tx)?;
        positive("radio.gain_rx", self.gain_rx)?;
        positive("radio.height_tx", self.height_tx)?;
        positive("radio.height_rx", self.height_rx)?;
        positive("radio.transceiver_const", self.transceiver_const)?;
        positive("radio.comm_radius", self.comm_radius)?;
        positive("radio.sensing_radius", self.sensing_radius)
    }
}

/// First-order radio model constants and battery/packet sizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    /// Electronics energy per bit (J/bit).
    pub elec_per_bit: f64,
    /// Amplifier energy per bit per square meter (J/bit/m²).
    pub amp_per_bit_m2: f64,
    /// Battery at deployment (J). Not given by the source model; 1 J here.
    pub initial: f64,
    pub control_packet_bits: u64,
    pub data_packet_bits: u64,
}

impl Default for EnergyParams {
    fn default() -> Self {
        EnergyParams {
            elec_per_bit: 50e-9,
            amp_per_bit_m2: 10e-12,
            initial: 1.0,
            control_packet_bits: 128,
            data_packet_bits: 1000,
        }
    }
}

impl EnergyParams {
    pub fn validate(&self) -> Result<()> {
        positive("energy.elec_per_bit", self.elec_per_bit)?;
        positive("energy.amp_per_bit_m2", self.amp_per_bit_m2)?;
        positive("energy.initial", self.initial)?;
        if self.control_packet_bits < 1 {
            return Err(SimError::config(
                "energy.control_packet_bits",
                "must be at least 1 bit",
            ));
        }
        if self.data_packet_bits < 1 {
            return Err(SimError::config(
                "energy.data_packet_bits",
                "must be at least 1 bit",
            ));
        }
        Ok(())
    }
}

/// Parameters of the three-zone probabilistic sensing model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensingParams {
    /// Uncertainty half-width `r_u` around the nominal sensing radius.
    pub uncertainty_radius: f64,
    pub lambda: f64,
    pub beta: f64,
    /// Combined detection probability needed for a point to count as covered.
    pub detection_threshold: f64,
}

impl Default for SensingParams {
    fn default() -> Self {
        SensingParams {
            uncertainty_radius: 2.0,
            lambda: 0.5,
            beta: 1.0,
            detection_threshold: 0.5,
        }
    }
}

impl SensingParams {
    /// `sensing_radius` is the nominal radius `r` from [`RadioParams`].
    pub fn validate(&self, sensing_radius: f64) -> Result<()> {
        if !(self.uncertainty_radius >= 0.0 && self.uncertainty_radius < sensing_radius) {
            return Err(SimError::config(
                "sensing.uncertainty_radius",
                format!("must satisfy 0 <= r_u < r (r = {sensing_radius})"),
            ));
        }
        positive("sensing.lambda", self.lambda)?;
        positive("sensing.beta", self.beta)?;
        let p = self.detection_threshold;
        if !(p > 0.0 && p < 1.0) {
            return Err(SimError::config(
                "sensing.detection_threshold",
                "must lie strictly between 0 and 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Life {
    Alive,
    Dead,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Role {
    Sink,
    Active,
    Sleeping,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    pub position: Point,
    pub energy: f64,
    pub life: Life,
    pub role: Role,
}

impl Node {
    pub fn is_alive(&self) -> bool {
        self.life == Life::Alive
    }

    pub fn is_sink(&self) -> bool {
        self.role == Role::Sink
    }
}

/// A reduced topology: a tree rooted at the sink whose internal nodes (plus
/// coverage promotions) are active; every other attached node sleeps.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub active: BTreeSet<NodeId>,
    /// child -> parent. Includes sleeping leaves attached to their parent.
    pub parent: BTreeMap<NodeId, NodeId>,
    pub root: NodeId,
    pub activation_time: u64,
    pub activation_energy: BTreeMap<NodeId, f64>,
    /// Nodes activated for sensing coverage; exempt from pruning.
    pub promoted: BTreeSet<NodeId>,
}

impl Topology {
    /// Topology holding only the root.
    pub fn empty(root: NodeId) -> Self {
        Topology {
            active: BTreeSet::from([root]),
            parent: BTreeMap::new(),
            root,
            activation_time: 0,
            activation_energy: BTreeMap::new(),
            promoted: BTreeSet::new(),
        }
    }

    pub fn is_active(&self, id: NodeId) -> bool {
        self.active.contains(&id)
    }

    /// Active members other than the root, ascending.
    pub fn relays(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.active.iter().copied().filter(move |&id| id != self.root)
    }

    pub fn children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.parent
            .iter()
            .filter(move |(_, &p)| p == id)
            .map(|(&c, _)| c)
    }

    pub fn has_children(&self, id: NodeId) -> bool {
        self.parent.values().any(|&p| p == id)
    }

    /// Checks that parent links are acyclic, reach the root, that the root
    /// has no parent, and that every parent is an active node.
    pub fn check_tree(&self) -> std::result::Result<(), String> {
        if self.parent.contains_key(&self.root) {
            return Err(format!("root {} has a parent", self.root));
        }
        if !self.active.contains(&self.root) {
            return Err(format!("root {} is not active", self.root));
        }
        for (&child, &parent) in &self.parent {
            if !self.active.contains(&parent) {
                return Err(format!("parent {parent} of {child} is not active"));
            }
            let mut cur = child;
            let mut hops = 0usize;
            while cur != self.root {
                cur = match self.parent.get(&cur) {
                    Some(&p) => p,
                    None => return Err(format!("node {child} does not reach the root")),
                };
                hops += 1;
                if hops > self.parent.len() {
                    return Err(format!("cycle through node {child}"));
                }
            }
        }
        for &id in &self.active {
            if id != self.root && !self.parent.contains_key(&id) {
                return Err(format!("active node {id} is detached from the tree"));
            }
        }
        Ok(())
    }
}

/// Whole-network state owned by one simulation run.
#[derive(Debug, Clone)]
pub struct NetworkState {
    pub nodes: Vec<Node>,
    pub topology: Topology,
    pub time: u64,
    pub rng: ChaCha8Rng,
    /// Total energy drained from non-sink nodes so far (J).
    pub energy_ledger: f64,
    pub radio: RadioParams,
    pub energy: EnergyParams,
}

impl NetworkState {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Result<&Node> {
        self.nodes.get(id).ok_or(SimError::UnknownNode(id))
    }

    pub fn position(&self, id: NodeId) -> Point {
        self.nodes[id].position
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.nodes.get(id).is_some_and(Node::is_alive)
    }

    pub fn dist(&self, a: NodeId, b: NodeId) -> f64 {
        distance(self.nodes[a].position, self.nodes[b].position)
    }

    /// Alive nodes other than `id` within `radius` (closed disk), ascending.
    pub fn neighbors(&self, id: NodeId, radius: f64) -> Result<Vec<NodeId>> {
        let origin = self.node(id)?.position;
        Ok(self
            .nodes
            .iter()
            .filter(|n| n.id != id && n.is_alive() && distance(origin, n.position) <= radius)
            .map(|n| n.id)
            .collect())
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_alive()).count()
    }

    /// Sum of battery budgets handed to non-sink nodes at deployment.
    pub fn initial_energy_total(&self) -> f64 {
        self.energy.initial * self.nodes.len().saturating_sub(1) as f64
    }

    pub fn residual_energy_total(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| !n.is_sink())
            .map(|n| n.energy)
            .sum()
    }

    /// Relative mismatch between the drained energy and the ledger.
    pub fn ledger_error(&self) -> f64 {
        let drained = self.initial_energy_total() - self.residual_energy_total();
        let scale = self.energy_ledger.abs().max(drained.abs()).max(f64::MIN_POSITIVE);
        if drained == self.energy_ledger {
            0.0
        } else {
            (drained - self.energy_ledger).abs() / scale
        }
    }

    /// Draws `joules` from node `id`. Returns `true` when the node could pay
    /// the full amount. A node that cannot pay, or is left with an exhausted
    /// battery, dies on the spot with its energy clamped to zero. The sink is
    /// never charged; dead nodes cannot pay.
    pub fn charge(&mut self, id: NodeId, joules: f64) -> bool {
        let eps = self.energy.initial * DEPLETION_EPSILON;
        let node = &mut self.nodes[id];
        if node.is_sink() {
            return true;
        }
        if !node.is_alive() {
            return false;
        }
        let affordable = node.energy + eps >= joules;
        let remaining = node.energy - joules;
        let paid = if !affordable || remaining <= eps {
            let all = node.energy;
            node.energy = 0.0;
            node.life = Life::Dead;
            all
        } else {
            node.energy = remaining;
            joules
        };
        self.energy_ledger += paid;
        affordable
    }

    /// Installs `topology` as the running reduced topology: stamps it with
    /// the current time and energy snapshot and assigns roles (members
    /// active, every other alive non-sink node sleeping).
    pub fn activate(&mut self, mut topology: Topology) {
        topology.activation_time = self.time;
        topology.active.retain(|&id| self.nodes[id].is_alive());
        topology.activation_energy = topology
            .active
            .iter()
            .map(|&id| (id, self.nodes[id].energy))
            .collect();
        for node in &mut self.nodes {
            if node.is_sink() {
                continue;
            }
            node.role = if node.is_alive() && topology.active.contains(&node.id) {
                Role::Active
            } else {
                Role::Sleeping
            };
        }
        self.topology = topology;
    }

    /// Removes dead nodes from the active set of the running topology.
    /// Parent links and the activation snapshot are left as they were.
    pub fn retire_dead(&mut self) {
        let nodes = &mut self.nodes;
        self.topology.active.retain(|&id| nodes[id].is_alive());
        for node in nodes.iter_mut() {
            if !node.is_alive() && node.role == Role::Active {
                node.role = Role::Sleeping;
            }
        }
    }
}

fn positive(field: &str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(SimError::config(field, format!("must be finite and > 0, got {value}")))
    }
}
