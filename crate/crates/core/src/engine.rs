//! Time-stepped lifetime loop.
//!
//! One step is: traffic over the running topology, death bookkeeping,
//! trigger check and maintenance, clock advance, and metric sampling.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::construction::{A3Params, Constructor, TcProtocol};
use crate::coverage::{comm_coverage_of, sensing_coverage_of, sink_reachable, CoverageGrid, MetricsSample};
use crate::deployment::{deploy, DeploymentConfig};
use crate::error::{Result, SimError};
use crate::maintenance::{
    maintain, precompute_rotation_set, should_trigger, MaintenanceAction, MaintenanceStrategy,
    StrategyKind, TmProtocol, TriggerPolicy,
};
use crate::model::{EnergyParams, NetworkState, NodeId, Point, RadioParams, SensingParams, SINK};
use crate::parallel::Execution;
use crate::radio::{rx_energy, tx_energy};

/// Maintenance selection; `None` runs the construction once and never
/// repairs it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TmChoice {
    None,
    Protocol(TmProtocol),
}

impl fmt::Display for TmChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TmChoice::None => f.write_str("None"),
            TmChoice::Protocol(p) => p.fmt(f),
        }
    }
}

impl FromStr for TmChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "None" {
            Ok(TmChoice::None)
        } else {
            s.parse().map(TmChoice::Protocol)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub deployment: DeploymentConfig,
    pub radio: RadioParams,
    pub energy: EnergyParams,
    pub sensing: SensingParams,
    pub a3: A3Params,
    pub tc: TcProtocol,
    pub tm: TmChoice,
    pub trigger: TriggerPolicy,
    pub rotation_k: usize,
    pub grid_cell: f64,
    pub max_steps: u64,
    pub metrics_stride: u64,
    /// How coverage grids are evaluated. Does not affect results.
    pub execution: Execution,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            deployment: DeploymentConfig::default(),
            radio: RadioParams::default(),
            energy: EnergyParams::default(),
            sensing: SensingParams::default(),
            a3: A3Params::default(),
            tc: TcProtocol::A3,
            tm: TmChoice::Protocol(TmProtocol::DGETRec),
            trigger: TriggerPolicy::Energy {
                threshold: TriggerPolicy::DEFAULT_THRESHOLD,
            },
            rotation_k: 3,
            grid_cell: CoverageGrid::DEFAULT_CELL,
            max_steps: 5000,
            metrics_stride: 1,
            execution: Execution::default(),
        }
    }
}

impl SimConfig {
    /// Configuration checks run before any simulation work.
    pub fn validate(&self) -> Result<()> {
        self.deployment.validate()?;
        self.radio.validate()?;
        self.energy.validate()?;
        self.sensing.validate(self.radio.sensing_radius)?;
        self.a3.validate()?;
        self.trigger.validate()?;
        if self.rotation_k < 1 {
            return Err(SimError::config("rotation_k", "must be at least 1"));
        }
        if !(self.grid_cell > 0.0 && self.grid_cell.is_finite()) {
            return Err(SimError::config("grid_cell", "must be finite and > 0"));
        }
        if self.max_steps < 1 {
            return Err(SimError::config("max_steps", "must be at least 1"));
        }
        if self.metrics_stride < 1 {
            return Err(SimError::config("metrics_stride", "must be at least 1"));
        }
        if let TmChoice::Protocol(p) = self.tm {
            if p.family() != self.trigger.family() {
                return Err(SimError::config(
                    "trigger.kind",
                    format!(
                        "{p} needs a {} trigger but a {} trigger is configured",
                        p.family(),
                        self.trigger.family()
                    ),
                ));
            }
        }
        Ok(())
    }

    pub fn constructor(&self) -> Constructor {
        Constructor {
            protocol: self.tc,
            a3: self.a3,
            sensing: self.sensing,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaintenanceState {
    pub policy: TriggerPolicy,
    pub strategy: Option<MaintenanceStrategy>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaintenanceEvent {
    pub step: u64,
    pub action: MaintenanceAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTotals {
    pub steps: u64,
    pub terminated_early: bool,
    pub final_alive: usize,
    pub final_sink_reachable: usize,
    pub energy_spent: f64,
    pub packets_delivered: u64,
    pub bits_delivered: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub series: Vec<MetricsSample>,
    /// Node id -> step after which the node was first seen dead.
    pub death_times: BTreeMap<NodeId, u64>,
    pub maintenance_events: Vec<MaintenanceEvent>,
    pub totals: RunTotals,
}

/// What a single call to [`Simulation::step`] did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub sample: Option<MetricsSample>,
    pub maintenance: Option<MaintenanceAction>,
    pub packets_sent: u64,
    pub bits_delivered: u64,
    pub ended: bool,
}

/// Deploys the network, builds the first topology (plus the rotation set
/// for static and hybrid maintenance), charges construction energy and
/// activates the first topology at time 0.
pub fn initialize(config: &SimConfig) -> Result<(NetworkState, MaintenanceState)> {
    config.validate()?;
    let mut state = deploy(&config.deployment, &config.radio, &config.energy)?;
    let ctor = config.constructor();
    let strategy = match config.tm {
        TmChoice::Protocol(p) if p.strategy() != StrategyKind::DynamicRecreation => {
            let set = precompute_rotation_set(&mut state, &ctor, config.rotation_k)?;
            Some(MaintenanceStrategy::with_rotation(p.strategy(), set))
        }
        choice => {
            let built = ctor.build(&state, &Default::default())?;
            built.charge.apply(&mut state);
            state.topology = built.topology;
            matches!(choice, TmChoice::Protocol(_)).then(MaintenanceStrategy::dynamic)
        }
    };
    let first = match &strategy {
        Some(s) if !s.rotation_set.is_empty() => s.rotation_set[0].clone(),
        _ => state.topology.clone(),
    };
    state.activate(first);
    Ok((
        state,
        MaintenanceState {
            policy: config.trigger,
            strategy,
        },
    ))
}

/// A run in progress.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    state: NetworkState,
    maint: MaintenanceState,
    grid: CoverageGrid,
    ctor: Constructor,
    coverage_cache: Option<(Vec<NodeId>, f64, f64)>,
    series: Vec<MetricsSample>,
    death_times: BTreeMap<NodeId, u64>,
    events: Vec<MaintenanceEvent>,
    packets_delivered: u64,
    bits_delivered: u64,
    had_relays: bool,
    ended: bool,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        let (state, maint) = initialize(&config)?;
        Self::from_parts(config, state, maint)
    }

    /// Wraps an externally prepared state. Records the step-0 sample.
    pub fn from_parts(config: SimConfig, state: NetworkState, maint: MaintenanceState) -> Result<Self> {
        config.validate()?;
        let grid = CoverageGrid::new(&config.deployment.area, config.grid_cell)?;
        let ctor = config.constructor();
        let had_relays = state.topology.relays().next().is_some();
        let mut sim = Simulation {
            config,
            state,
            maint,
            grid,
            ctor,
            coverage_cache: None,
            series: Vec::new(),
            death_times: BTreeMap::new(),
            events: Vec::new(),
            packets_delivered: 0,
            bits_delivered: 0,
            had_relays,
            ended: false,
        };
        sim.record_deaths(sim.state.time);
        let first = sim.sample();
        sim.series.push(first);
        Ok(sim)
    }

    pub fn state(&self) -> &NetworkState {
        &self.state
    }

    pub fn maintenance(&self) -> &MaintenanceState {
        &self.maint
    }

    pub fn series(&self) -> &[MetricsSample] {
        &self.series
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn finished(&self) -> bool {
        self.ended || self.state.time >= self.config.max_steps
    }

    /// Current metrics. Coverage is recomputed only when the reachable set
    /// changed since the last call.
    pub fn sample(&mut self) -> MetricsSample {
        let reachable: Vec<NodeId> = sink_reachable(&self.state).into_iter().collect();
        let (comm, sensing) = match &self.coverage_cache {
            Some((key, c, s)) if *key == reachable => (*c, *s),
            _ => {
                let pts: Vec<Point> = reachable.iter().map(|&id| self.state.position(id)).collect();
                let exec = self.config.execution;
                let c = comm_coverage_of(&pts, self.state.radio.comm_radius, &self.grid, exec);
                let s = sensing_coverage_of(
                    &pts,
                    self.state.radio.sensing_radius,
                    &self.config.sensing,
                    &self.grid,
                    exec,
                );
                self.coverage_cache = Some((reachable.clone(), c, s));
                (c, s)
            }
        };
        MetricsSample {
            time: self.state.time,
            alive: self.state.alive_count(),
            sink_reachable: reachable.len(),
            comm_coverage: comm,
            sensing_coverage: sensing,
        }
    }

    fn record_deaths(&mut self, step: u64) {
        for node in &self.state.nodes {
            if !node.is_alive() {
                self.death_times.entry(node.id).or_insert(step);
            }
        }
    }

    /// Every alive relay sends one data packet up its parent chain. Each hop
    /// charges the sender `tx_energy` and the receiver `rx_energy`; a packet
    /// stops where a node dies or cannot pay.
    fn traffic(&mut self) -> (u64, u64) {
        let bits = self.state.energy.data_packet_bits;
        let energy = self.state.energy;
        let rx = rx_energy(&energy, bits);
        let origins: Vec<NodeId> = self.state.topology.relays().collect();
        let (mut sent, mut delivered) = (0u64, 0u64);
        for origin in origins {
            if !self.state.is_alive(origin) {
                continue;
            }
            sent += 1;
            let mut cur = origin;
            loop {
                if cur == SINK {
                    delivered += 1;
                    break;
                }
                let Some(&next) = self.state.topology.parent.get(&cur) else {
                    break;
                };
                let hop = self.state.dist(cur, next);
                let tx = tx_energy(&energy, bits, hop).expect("hop distances are non-negative");
                if !self.state.charge(cur, tx) || !self.state.is_alive(next) {
                    break;
                }
                if !self.state.charge(next, rx) {
                    break;
                }
                cur = next;
            }
        }
        (sent, delivered * bits)
    }

    fn run_maintenance(&mut self) -> Result<Option<MaintenanceAction>> {
        let Some(strategy) = self.maint.strategy.as_mut() else {
            return Ok(None);
        };
        let action = maintain(strategy, &mut self.state, &self.ctor)?;
        self.events.push(MaintenanceEvent {
            step: self.state.time + 1,
            action,
        });
        Ok(Some(action))
    }

    fn live_relays(&self) -> usize {
        self.state
            .topology
            .relays()
            .filter(|&id| self.state.is_alive(id))
            .count()
    }

    pub fn step(&mut self) -> Result<StepReport> {
        if self.finished() {
            return Err(SimError::domain("the run has already finished"));
        }
        if !self.state.is_alive(SINK) {
            return Err(SimError::SinkDead);
        }

        let (packets_sent, bits_delivered) = self.traffic();
        self.packets_delivered += bits_delivered / self.state.energy.data_packet_bits;
        self.bits_delivered += bits_delivered;

        // Deaths are stamped with the step count reached after this step.
        let completed = self.state.time + 1;
        self.record_deaths(completed);
        self.state.retire_dead();

        let mut maintenance = None;
        if self.maint.strategy.is_some() && should_trigger(&self.maint.policy, &self.state) {
            maintenance = self.run_maintenance()?;
        }
        if self.live_relays() == 0 && self.had_relays {
            if maintenance.is_none() {
                maintenance = self.run_maintenance()?;
            }
            if self.live_relays() == 0 {
                self.ended = true;
            }
        }
        self.had_relays |= self.live_relays() > 0;

        self.record_deaths(completed);
        self.state.retire_dead();
        self.state.time = completed;

        let due = self.state.time % self.config.metrics_stride == 0;
        let sample = if due || self.ended {
            let s = self.sample();
            self.series.push(s);
            Some(s)
        } else {
            None
        };

        Ok(StepReport {
            sample,
            maintenance,
            packets_sent,
            bits_delivered,
            ended: self.ended,
        })
    }

    pub fn into_result(self) -> RunResult {
        let last = self.series.last().copied();
        RunResult {
            totals: RunTotals {
                steps: self.state.time,
                terminated_early: self.ended,
                final_alive: self.state.alive_count(),
                final_sink_reachable: last.map_or(0, |s| s.sink_reachable),
                energy_spent: self.state.energy_ledger,
                packets_delivered: self.packets_delivered,
                bits_delivered: self.bits_delivered,
            },
            series: self.series,
            death_times: self.death_times,
            maintenance_events: self.events,
        }
    }
}

/// Initializes and steps until `max_steps` or until the network can no
/// longer deliver anything to the sink.
pub fn run(config: &SimConfig) -> Result<RunResult> {
    let mut sim = Simulation::new(config.clone())?;
    while !sim.finished() {
        sim.step()?;
    }
    Ok(sim.into_result())
}
