//! Topology maintenance: when to replace the running reduced topology
//! (time or energy trigger) and how (static rotation over precomputed
//! topologies, dynamic recreation, or a hybrid of both).
//!
//! Protocol names decode as D/H/S = dynamic/hybrid/static, G = global
//! (sink-coordinated), ET/TT = energy/time triggered, Rec = recreation,
//! Rot = rotation.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::construction::Constructor;
use crate::error::{Result, SimError};
use crate::model::{NetworkState, NodeId, Topology, SINK};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TriggerPolicy {
    /// Fire once `period` steps have elapsed since activation.
    Time { period: u64 },
    /// Fire once any active relay drops below `threshold` of its energy at
    /// activation, or dies.
    Energy { threshold: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TriggerFamily {
    Time,
    Energy,
}

impl fmt::Display for TriggerFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TriggerFamily::Time => "time",
            TriggerFamily::Energy => "energy",
        })
    }
}

impl TriggerPolicy {
    pub const DEFAULT_PERIOD: u64 = 500;
    pub const DEFAULT_THRESHOLD: f64 = 0.6;

    pub fn family(&self) -> TriggerFamily {
        match self {
            TriggerPolicy::Time { .. } => TriggerFamily::Time,
            TriggerPolicy::Energy { .. } => TriggerFamily::Energy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            TriggerPolicy::Time { period } if period < 1 => {
                Err(SimError::config("trigger.period", "must be at least 1 step"))
            }
            TriggerPolicy::Energy { threshold } if !(threshold > 0.0 && threshold < 1.0) => Err(
                SimError::config("trigger.threshold", "must lie strictly between 0 and 1"),
            ),
            _ => Ok(()),
        }
    }
}

pub fn should_trigger(policy: &TriggerPolicy, state: &NetworkState) -> bool {
    let topology = &state.topology;
    match *policy {
        TriggerPolicy::Time { period } => {
            state.time.saturating_sub(topology.activation_time) >= period
        }
        TriggerPolicy::Energy { threshold } => topology
            .activation_energy
            .iter()
            .filter(|(&id, _)| id != topology.root)
            .any(|(&id, &at_activation)| {
                let node = &state.nodes[id];
                !node.is_alive() || node.energy < threshold * at_activation
            }),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StrategyKind {
    StaticRotation,
    DynamicRecreation,
    HybridRecreationRotation,
}

/// The six maintenance protocols: {energy, time} trigger × {dynamic
/// recreation, hybrid, static rotation}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TmProtocol {
    DGETRec,
    HGETRecRot,
    SGETRot,
    DGTTRec,
    HGTTRecRot,
    SGTTRot,
}

impl TmProtocol {
    pub const ALL: [TmProtocol; 6] = [
        TmProtocol::DGETRec,
        TmProtocol::HGETRecRot,
        TmProtocol::SGETRot,
        TmProtocol::DGTTRec,
        TmProtocol::HGTTRecRot,
        TmProtocol::SGTTRot,
    ];

    pub fn strategy(&self) -> StrategyKind {
        match self {
            TmProtocol::DGETRec | TmProtocol::DGTTRec => StrategyKind::DynamicRecreation,
            TmProtocol::HGETRecRot | TmProtocol::HGTTRecRot => StrategyKind::HybridRecreationRotation,
            TmProtocol::SGETRot | TmProtocol::SGTTRot => StrategyKind::StaticRotation,
        }
    }

    pub fn family(&self) -> TriggerFamily {
        match self {
            TmProtocol::DGETRec | TmProtocol::HGETRecRot | TmProtocol::SGETRot => TriggerFamily::Energy,
            _ => TriggerFamily::Time,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TmProtocol::DGETRec => "DGETRec",
            TmProtocol::HGETRecRot => "HGETRecRot",
            TmProtocol::SGETRot => "SGETRot",
            TmProtocol::DGTTRec => "DGTTRec",
            TmProtocol::HGTTRecRot => "HGTTRecRot",
            TmProtocol::SGTTRot => "SGTTRot",
        }
    }
}

impl fmt::Display for TmProtocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TmProtocol {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        TmProtocol::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown maintenance protocol `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaintenanceAction {
    Rotated,
    Recreated,
    Retained,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaintenanceStrategy {
    pub kind: StrategyKind,
    pub rotation_set: Vec<Topology>,
    pub cursor: usize,
}

impl MaintenanceStrategy {
    pub fn dynamic() -> Self {
        MaintenanceStrategy {
            kind: StrategyKind::DynamicRecreation,
            rotation_set: Vec::new(),
            cursor: 0,
        }
    }

    /// Rotation-capable strategy starting at the first precomputed topology.
    pub fn with_rotation(kind: StrategyKind, rotation_set: Vec<Topology>) -> Self {
        MaintenanceStrategy {
            kind,
            rotation_set,
            cursor: 0,
        }
    }

    /// Next usable rotation entry after the cursor, wrapping around to the
    /// cursor itself last.
    fn next_usable(&self, state: &NetworkState) -> Option<usize> {
        let len = self.rotation_set.len();
        (1..=len)
            .map(|offset| (self.cursor + offset) % len)
            .find(|&i| usable(&self.rotation_set[i], state))
    }
}

/// A precomputed topology is usable while every relay in it is alive.
pub fn usable(topology: &Topology, state: &NetworkState) -> bool {
    topology.relays().all(|id| state.is_alive(id))
}

/// Builds `k` topologies, excluding the relays of earlier ones from later
/// runs. A run that attaches fewer than half of the alive nodes under
/// exclusion is redone without exclusion. Construction energy is charged
/// after each run.
pub fn precompute_rotation_set(state: &mut NetworkState, ctor: &Constructor, k: usize) -> Result<Vec<Topology>> {
    if k < 1 {
        return Err(SimError::config("rotation_k", "must be at least 1"));
    }
    let mut exclude: BTreeSet<NodeId> = BTreeSet::new();
    let mut set = Vec::with_capacity(k);
    for _ in 0..k {
        let alive = state.alive_count();
        let mut built = ctor.build(state, &exclude)?;
        if !exclude.is_empty() && 2 * built.reached < alive {
            built = ctor.build(state, &BTreeSet::new())?;
        }
        built.charge.apply(state);
        exclude.extend(built.topology.relays());
        set.push(built.topology);
    }
    Ok(set)
}

/// Builds a fresh topology over the alive nodes and charges its control
/// traffic. If the charge kills one of the new relays, the build is redone.
pub fn recreate(state: &mut NetworkState, ctor: &Constructor) -> Result<Topology> {
    loop {
        let built = ctor.build(state, &BTreeSet::new())?;
        built.charge.apply(state);
        if usable(&built.topology, state) {
            return Ok(built.topology);
        }
    }
}

/// Replaces the running topology according to `strategy` and activates the
/// result at the current time.
pub fn maintain(
    strategy: &mut MaintenanceStrategy,
    state: &mut NetworkState,
    ctor: &Constructor,
) -> Result<MaintenanceAction> {
    if !state.is_alive(SINK) {
        return Err(SimError::SinkDead);
    }
    let (topology, action) = match strategy.kind {
        StrategyKind::DynamicRecreation => (recreate(state, ctor)?, MaintenanceAction::Recreated),
        StrategyKind::StaticRotation => match strategy.next_usable(state) {
            Some(i) => {
                strategy.cursor = i;
                (strategy.rotation_set[i].clone(), MaintenanceAction::Rotated)
            }
            None => (state.topology.clone(), MaintenanceAction::Retained),
        },
        StrategyKind::HybridRecreationRotation => match strategy.next_usable(state) {
            Some(i) => {
                strategy.cursor = i;
                (strategy.rotation_set[i].clone(), MaintenanceAction::Rotated)
            }
            None => {
                let fresh = recreate(state, ctor)?;
                strategy.rotation_set = vec![fresh.clone()];
                strategy.cursor = 0;
                (fresh, MaintenanceAction::Recreated)
            }
        },
    };
    state.activate(topology);
    Ok(action)
}
