//! Uniform random node placement with the sink at the center of the area.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::{
    DeploymentArea, EnergyParams, Life, NetworkState, Node, Point, RadioParams, Role, Topology,
    SINK,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeploymentConfig {
    /// Total node count, sink included.
    pub node_count: usize,
    pub area: DeploymentArea,
    pub seed: u64,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        DeploymentConfig {
            node_count: 300,
            area: DeploymentArea::default(),
            seed: 1,
        }
    }
}

impl DeploymentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.node_count == 0 {
            return Err(SimError::config(
                "deployment.node_count",
                "must be at least 1 (the sink)",
            ));
        }
        self.area.validate()
    }
}

/// Places the sink at the area center and every other node uniformly at
/// random. Positions are drawn from ChaCha8 seeded with `config.seed`
/// (`rand_chacha` guarantees a portable, value-stable stream), x then y per
/// node in id order.
pub fn deploy(
    config: &DeploymentConfig,
    radio: &RadioParams,
    energy: &EnergyParams,
) -> Result<NetworkState> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let area = config.area;

    let mut nodes = Vec::with_capacity(config.node_count);
    nodes.push(Node {
        id: SINK,
        position: area.center(),
        energy: energy.initial,
        life: Life::Alive,
        role: Role::Sink,
    });
    for id in 1..config.node_count {
        let x = rng.gen_range(0.0..=area.width);
        let y = rng.gen_range(0.0..=area.height);
        nodes.push(Node {
            id,
            position: Point::new(x, y),
            energy: energy.initial,
            life: Life::Alive,
            role: Role::Sleeping,
        });
    }

    Ok(NetworkState {
        nodes,
        topology: Topology::empty(SINK),
        time: 0,
        rng,
        energy_ledger: 0.0,
        radio: *radio,
        energy: *energy,
    })
}
