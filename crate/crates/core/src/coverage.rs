//! Per-step performance metrics: alive nodes, nodes reachable from the sink,
//! and grid-sampled communication and sensing coverage.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};
use crate::model::{distance, DeploymentArea, NetworkState, NodeId, Point, Role, SensingParams, SINK};
use crate::parallel::{map_ordered, Execution};

/// Sample lattice at the centers of square cells tiling the deployment area.
/// Cells on the right and top border are clipped to the area; their sample
/// point is the center of the clipped cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageGrid {
    pub cell_size: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl CoverageGrid {
    pub const DEFAULT_CELL: f64 = 4.0;

    pub fn new(area: &DeploymentArea, cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(SimError::config("grid_cell", "cell size must be finite and > 0"));
        }
        area.validate()?;
        Ok(CoverageGrid {
            cell_size,
            xs: centers(area.width, cell_size),
            ys: centers(area.height, cell_size),
        })
    }

    pub fn cols(&self) -> usize {
        self.xs.len()
    }

    pub fn rows(&self) -> usize {
        self.ys.len()
    }

    pub fn len(&self) -> usize {
        self.xs.len() * self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        self.ys
            .iter()
            .flat_map(move |&y| self.xs.iter().map(move |&x| Point::new(x, y)))
    }

    /// Column indices whose x lies within `[lo, hi]`, padded by one cell.
    fn col_span(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let c = self.cell_size;
        let first = ((lo / c).floor() - 1.0).max(0.0) as usize;
        let last = (((hi / c).ceil() + 1.0).max(0.0) as usize).min(self.xs.len());
        first.min(last)..last
    }
}

fn centers(extent: f64, cell: f64) -> Vec<f64> {
    let count = (extent / cell).ceil() as usize;
    (0..count)
        .map(|i| {
            let lo = i as f64 * cell;
            let hi = ((i + 1) as f64 * cell).min(extent);
            (lo + hi) / 2.0
        })
        .collect()
}

/// One time step's metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsSample {
    pub time: u64,
    pub alive: usize,
    pub sink_reachable: usize,
    pub comm_coverage: f64,
    pub sensing_coverage: f64,
}

/// Detection probability of a sensor with nominal radius `r` for an event at
/// distance `x`: 1 inside `r - r_u`, `exp(-λ·α^β)` with `α = x - (r - r_u)`
/// up to `r + r_u`, and 0 beyond.
pub fn sense_probability(sp: &SensingParams, r: f64, x: f64) -> f64 {
    let inner = r - sp.uncertainty_radius;
    let outer = r + sp.uncertainty_radius;
    if x <= inner {
        1.0
    } else if x <= outer {
        let alpha = x - inner;
        (-sp.lambda * alpha.powf(sp.beta)).exp()
    } else {
        0.0
    }
}

/// `1 - Π(1 - p_i)` over `sensors` (in the given order) at `at`.
pub fn detection_probability(sp: &SensingParams, r: f64, sensors: &[Point], at: Point) -> f64 {
    let miss: f64 = sensors
        .iter()
        .map(|s| 1.0 - sense_probability(sp, r, distance(*s, at)))
        .product();
    1.0 - miss
}

pub fn alive_count(state: &NetworkState) -> usize {
    state.alive_count()
}

/// Breadth-first closure from the sink over alive active nodes, linking
/// nodes at most `R` apart. Returns the visited ids (sink included).
pub fn sink_reachable(state: &NetworkState) -> BTreeSet<NodeId> {
    let radius = state.radio.comm_radius;
    let members: Vec<NodeId> = state
        .nodes
        .iter()
        .filter(|n| n.is_alive() && matches!(n.role, Role::Active | Role::Sink))
        .map(|n| n.id)
        .collect();

    let mut visited = BTreeSet::new();
    if !state.is_alive(SINK) {
        return visited;
    }
    visited.insert(SINK);
    let mut queue = VecDeque::from([SINK]);
    while let Some(cur) = queue.pop_front() {
        let here = state.position(cur);
        for &m in &members {
            if !visited.contains(&m) && distance(here, state.position(m)) <= radius {
                visited.insert(m);
                queue.push_back(m);
            }
        }
    }
    visited
}

fn reachable_positions(state: &NetworkState) -> Vec<Point> {
    sink_reachable(state)
        .into_iter()
        .map(|id| state.position(id))
        .collect()
}

/// Fraction of grid points within `R` of a sink-reachable node.
pub fn comm_coverage(state: &NetworkState, grid: &CoverageGrid) -> f64 {
    comm_coverage_of(&reachable_positions(state), state.radio.comm_radius, grid, Execution::default())
}

/// Fraction of grid points where sink-reachable sensors jointly reach the
/// detection threshold.
pub fn sensing_coverage(state: &NetworkState, sp: &SensingParams, grid: &CoverageGrid) -> f64 {
    sensing_coverage_of(
        &reachable_positions(state),
        state.radio.sensing_radius,
        sp,
        grid,
        Execution::default(),
    )
}

/// Fraction of grid points within `radius` (closed disk) of any of `nodes`.
pub fn comm_coverage_of(nodes: &[Point], radius: f64, grid: &CoverageGrid, exec: Execution) -> f64 {
    if grid.is_empty() {
        return 0.0;
    }
    let rows: Vec<usize> = (0..grid.rows()).collect();
    let counts = map_ordered(exec, &rows, |&j| {
        let y = grid.ys[j];
        let mut hit = vec![false; grid.cols()];
        for n in nodes {
            let dy = (n.y - y).abs();
            if dy > radius {
                continue;
            }
            let half = (radius * radius - dy * dy).max(0.0).sqrt();
            for i in grid.col_span(n.x - half, n.x + half) {
                if !hit[i] && distance(*n, Point::new(grid.xs[i], y)) <= radius {
                    hit[i] = true;
                }
            }
        }
        hit.iter().filter(|&&h| h).count() as u64
    });
    counts.iter().sum::<u64>() as f64 / grid.len() as f64
}

/// Fraction of grid points whose combined detection probability from
/// `sensors` is at least the detection threshold. Per point the miss
/// probabilities are multiplied in the order of `sensors`.
pub fn sensing_coverage_of(
    sensors: &[Point],
    r: f64,
    sp: &SensingParams,
    grid: &CoverageGrid,
    exec: Execution,
) -> f64 {
    if grid.is_empty() || sensors.is_empty() {
        return 0.0;
    }
    let reach = r + sp.uncertainty_radius;
    let threshold = sp.detection_threshold;
    let rows: Vec<usize> = (0..grid.rows()).collect();
    let counts = map_ordered(exec, &rows, |&j| {
        let y = grid.ys[j];
        let mut miss = vec![1.0f64; grid.cols()];
        for s in sensors {
            let dy = (s.y - y).abs();
            if dy > reach {
                continue;
            }
            let half = (reach * reach - dy * dy).max(0.0).sqrt();
            for i in grid.col_span(s.x - half, s.x + half) {
                let p = sense_probability(sp, r, distance(*s, Point::new(grid.xs[i], y)));
                if p > 0.0 {
                    miss[i] *= 1.0 - p;
                }
            }
        }
        miss.iter().filter(|&&m| 1.0 - m >= threshold).count() as u64
    });
    counts.iter().sum::<u64>() as f64 / grid.len() as f64
}

/// All four metrics for the current state.
pub fn sample(state: &NetworkState, sp: &SensingParams, grid: &CoverageGrid, exec: Execution) -> MetricsSample {
    let reachable = reachable_positions(state);
    MetricsSample {
        time: state.time,
        alive: state.alive_count(),
        sink_reachable: reachable.len(),
        comm_coverage: comm_coverage_of(&reachable, state.radio.comm_radius, grid, exec),
        sensing_coverage: sensing_coverage_of(&reachable, state.radio.sensing_radius, sp, grid, exec),
    }
}
