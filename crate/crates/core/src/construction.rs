//! Reduced-topology construction: A3 grows a connected dominating tree from
//! the sink; A3Cov additionally wakes nodes whose own position is poorly
//! sensed.
//!
//! Both protocols are simulated centrally. Every node that joins the tree is
//! charged one control-packet reception (the parent's invitation) and one
//! control-packet transmission over its parent distance (its reply).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coverage::detection_probability;
use crate::error::{Result, SimError};
use crate::model::{EnergyParams, NetworkState, NodeId, Point, SensingParams, Topology, SINK};
use crate::radio::{rx_energy, tx_energy};

/// Weights of the child-selection score
/// `w_E·(E_rem/E_init) + w_D·(d(parent, child)/R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A3Params {
    pub energy_weight: f64,
    pub distance_weight: f64,
}

impl Default for A3Params {
    fn default() -> Self {
        A3Params {
            energy_weight: 0.5,
            distance_weight: 0.5,
        }
    }
}

impl A3Params {
    pub fn validate(&self) -> Result<()> {
        for (field, w) in [
            ("a3.energy_weight", self.energy_weight),
            ("a3.distance_weight", self.distance_weight),
        ] {
            if !(0.0..=1.0).contains(&w) {
                return Err(SimError::config(field, "must lie in [0, 1]"));
            }
        }
        if (self.energy_weight + self.distance_weight - 1.0).abs() > 1e-9 {
            return Err(SimError::config(
                "a3.energy_weight",
                "energy_weight + distance_weight must equal 1",
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MessageCount {
    pub sent: u32,
    pub received: u32,
    /// Distance to the parent the reply was sent to.
    pub hop: f64,
}

/// Control traffic generated by one construction run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstructionCharge {
    pub messages: BTreeMap<NodeId, MessageCount>,
}

impl ConstructionCharge {
    fn record_join(&mut self, id: NodeId, hop: f64) {
        let m = self.messages.entry(id).or_default();
        m.sent += 1;
        m.received += 1;
        m.hop = hop;
    }

    pub fn energy_of(&self, id: NodeId, energy: &EnergyParams) -> f64 {
        self.messages.get(&id).map_or(0.0, |m| {
            let bits = energy.control_packet_bits;
            let tx = tx_energy(energy, bits, m.hop).expect("hop distances are non-negative");
            f64::from(m.sent) * tx + f64::from(m.received) * rx_energy(energy, bits)
        })
    }

    pub fn total_energy(&self, energy: &EnergyParams) -> f64 {
        self.messages.keys().map(|&id| self.energy_of(id, energy)).sum()
    }

    /// Draws the control-message energy from every charged node, ascending id.
    pub fn apply(&self, state: &mut NetworkState) {
        let energy = state.energy;
        for &id in self.messages.keys() {
            let cost = self.energy_of(id, &energy);
            state.charge(id, cost);
        }
    }
}

/// Result of one construction run.
#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    pub topology: Topology,
    pub charge: ConstructionCharge,
    /// Nodes attached to the tree, sink included.
    pub reached: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TcProtocol {
    A3,
    A3Cov,
}

impl TcProtocol {
    pub const ALL: [TcProtocol; 2] = [TcProtocol::A3, TcProtocol::A3Cov];
}

impl fmt::Display for TcProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TcProtocol::A3 => "A3",
            TcProtocol::A3Cov => "A3Cov",
        })
    }
}

impl FromStr for TcProtocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "A3" => Ok(TcProtocol::A3),
            "A3Cov" | "A3cov" => Ok(TcProtocol::A3Cov),
            other => Err(format!("unknown topology construction protocol `{other}` (expected A3 or A3Cov)")),
        }
    }
}

/// A configured topology-construction protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constructor {
    pub protocol: TcProtocol,
    pub a3: A3Params,
    pub sensing: SensingParams,
}

impl Constructor {
    pub fn build(&self, state: &NetworkState, exclude: &BTreeSet<NodeId>) -> Result<Construction> {
        match self.protocol {
            TcProtocol::A3 => a3_construct(state, &self.a3, exclude),
            TcProtocol::A3Cov => a3cov_construct(state, &self.a3, &self.sensing, exclude),
        }
    }
}

/// Grows the A3 tree from the sink.
///
/// Each dequeued parent collects its unvisited eligible neighbors, orders
/// them by descending score (ties: lowest id), attaches all of them and
/// appoints as active relays those not within `R` of a relay already
/// appointed in the same round. When the queue drains while some attached
/// sleeping node still borders an unattached eligible node, the lowest such
/// sleeping node is appointed and growth resumes, so every eligible node
/// connected to the sink ends up attached. Relays left without children are
/// pruned back to sleep.
pub fn a3_construct(state: &NetworkState, params: &A3Params, exclude: &BTreeSet<NodeId>) -> Result<Construction> {
    if !state.is_alive(SINK) {
        return Err(SimError::SinkDead);
    }
    if exclude.contains(&SINK) {
        return Err(SimError::domain("the sink cannot be excluded from construction"));
    }
    let n = state.len();
    let radius = state.radio.comm_radius;
    let e_init = state.energy.initial;
    let eligible: Vec<bool> = (0..n)
        .map(|id| state.is_alive(id) && !exclude.contains(&id))
        .collect();
    let pos: Vec<Point> = state.nodes.iter().map(|node| node.position).collect();
    let within = |a: NodeId, b: NodeId| pos[a].distance(&pos[b]) <= radius;

    let mut visited = vec![false; n];
    visited[SINK] = true;
    let mut topology = Topology::empty(SINK);
    let mut charge = ConstructionCharge::default();
    let mut queue = VecDeque::from([SINK]);

    loop {
        while let Some(p) = queue.pop_front() {
            let mut candidates: Vec<(f64, NodeId)> = (0..n)
                .filter(|&c| eligible[c] && !visited[c] && within(p, c))
                .map(|c| {
                    let d = pos[p].distance(&pos[c]);
                    let score = params.energy_weight * (state.nodes[c].energy / e_init)
                        + params.distance_weight * (d / radius);
                    (score, c)
                })
                .collect();
            candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));

            let mut appointed: Vec<NodeId> = Vec::new();
            for &(_, c) in &candidates {
                visited[c] = true;
                topology.parent.insert(c, p);
                charge.record_join(c, pos[p].distance(&pos[c]));
                if appointed.iter().all(|&a| !within(a, c)) {
                    appointed.push(c);
                    topology.active.insert(c);
                    queue.push_back(c);
                }
            }
        }

        let frontier = (0..n).find(|&s| {
            visited[s]
                && !topology.active.contains(&s)
                && (0..n).any(|u| eligible[u] && !visited[u] && within(s, u))
        });
        match frontier {
            Some(s) => {
                topology.active.insert(s);
                queue.push_back(s);
            }
            None => break,
        }
    }

    let reached = visited.iter().filter(|&&v| v).count();
    Ok(Construction {
        topology: prune_childless(topology),
        charge,
        reached,
    })
}

/// Runs A3, then visits attached sleeping nodes in ascending id and wakes
/// each one whose own position is detected with probability below the
/// threshold by the current active set. A woken node hangs off its nearest
/// active node (ties: lowest id) and counts as a sensor for later checks.
pub fn a3cov_construct(
    state: &NetworkState,
    params: &A3Params,
    sp: &SensingParams,
    exclude: &BTreeSet<NodeId>,
) -> Result<Construction> {
    let mut built = a3_construct(state, params, exclude)?;
    let radius = state.radio.comm_radius;
    let r = state.radio.sensing_radius;
    let topology = &mut built.topology;

    let sleepers: Vec<NodeId> = topology
        .parent
        .keys()
        .copied()
        .filter(|id| !topology.active.contains(id))
        .collect();
    for id in sleepers {
        let here = state.position(id);
        let sensors: Vec<Point> = topology.active.iter().map(|&a| state.position(a)).collect();
        if detection_probability(sp, r, &sensors, here) >= sp.detection_threshold {
            continue;
        }
        let nearest = topology
            .active
            .iter()
            .map(|&a| (state.position(a).distance(&here), a))
            .filter(|&(d, _)| d <= radius)
            .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
        if let Some((_, parent)) = nearest {
            topology.parent.insert(id, parent);
            topology.active.insert(id);
            topology.promoted.insert(id);
        }
    }
    Ok(built)
}

/// Demotes every active non-root node that has no children and was not
/// promoted for coverage. Demoted nodes stay attached as sleeping leaves, so
/// one pass reaches the fixpoint.
pub fn prune_childless(mut topology: Topology) -> Topology {
    let parents: BTreeSet<NodeId> = topology.parent.values().copied().collect();
    let root = topology.root;
    let promoted = &topology.promoted;
    topology
        .active
        .retain(|id| *id == root || parents.contains(id) || promoted.contains(id));
    let active = &topology.active;
    topology.activation_energy.retain(|id, _| active.contains(id));
    topology
}
