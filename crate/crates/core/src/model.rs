//! Domain types for planning instances, plus structural validation.
//!
//! All quantities are in internal units: bytes, bytes/second, seconds,
//! meters. Ids are 1-based and contiguous, matching how base stations and
//! tasks are labeled in instance files and reports.

use serde::{Deserialize, Serialize};

use crate::linkgraph::{build_link_graph, LinkModelConfig};

/// 1-based base-station id.
pub type BsId = usize;
/// 1-based task id.
pub type TaskId = usize;

/// A base station: position, antenna interfaces, optional co-located edge
/// server, and optional wired cloud attachment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: BsId,
    pub x_m: f64,
    pub y_m: f64,
    /// Number of mmWave antenna interfaces (>= 1).
    pub interfaces: usize,
    pub has_server: bool,
    /// Edge-server storage in bytes; meaningful only when `has_server`.
    pub storage_capacity: f64,
    pub cloud_attached: bool,
}

impl BaseStation {
    /// Usable storage: zero unless a server is co-located.
    pub fn effective_capacity(&self) -> f64 {
        if self.has_server {
            self.storage_capacity
        } else {
            0.0
        }
    }
}

/// An unsplittable user task collected by its origin base station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    /// Size in bytes.
    pub size: f64,
    /// Origin base station (one-hot initial location).
    pub origin: BsId,
    /// Operator priority weight; weights sum to 1 across the task set.
    pub weight: f64,
}

/// Sparse symmetric link-rate override, in bytes/second.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateOverride {
    pub n: BsId,
    pub m: BsId,
    pub rate: f64,
}

/// A full planning input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub base_stations: Vec<BaseStation>,
    pub tasks: Vec<Task>,
    /// Fixed latency of every wired BS-to-cloud connection, seconds.
    pub cloud_latency: f64,
    /// Saturation coefficient xi in (0, 1]: per-link allocations may use at
    /// most this fraction of capacity.
    pub saturation: f64,
    pub link_model: LinkModelConfig,
    /// Pinned link rates applied on top of the modeled rates.
    #[serde(default)]
    pub rate_overrides: Vec<RateOverride>,
}

impl Instance {
    pub fn n_bs(&self) -> usize {
        self.base_stations.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// Base station by 1-based id. Panics on out-of-range ids; use
    /// [`validate_instance`] first for untrusted data.
    pub fn bs(&self, id: BsId) -> &BaseStation {
        &self.base_stations[id - 1]
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id - 1]
    }

    pub fn cloud_bs_ids(&self) -> Vec<BsId> {
        self.base_stations
            .iter()
            .filter(|b| b.cloud_attached)
            .map(|b| b.id)
            .collect()
    }

    pub fn server_bs_ids(&self) -> Vec<BsId> {
        self.base_stations
            .iter()
            .filter(|b| b.has_server)
            .map(|b| b.id)
            .collect()
    }

    /// Rescales every weight so the task set sums to exactly 1.
    /// No-op on an empty task set or an all-zero weight vector.
    pub fn normalize_weights(&mut self) {
        let total: f64 = self.tasks.iter().map(|t| t.weight).sum();
        if total > 0.0 {
            for t in &mut self.tasks {
                t.weight /= total;
            }
        }
    }

    /// Copy with every task size multiplied by `factor`.
    pub fn scale_tasks(&self, factor: f64) -> Instance {
        let mut out = self.clone();
        for t in &mut out.tasks {
            t.size *= factor;
        }
        out
    }

    /// Copy with every base station given `count` interfaces.
    pub fn with_interfaces(&self, count: usize) -> Instance {
        let mut out = self.clone();
        for b in &mut out.base_stations {
            b.interfaces = count;
        }
        out
    }

    /// Copy with server capacities scaled by `factor`. A factor of zero
    /// removes the servers entirely (a zero-capacity server cannot host
    /// anything and would be structurally invalid).
    pub fn with_capacity_factor(&self, factor: f64) -> Instance {
        let mut out = self.clone();
        for b in &mut out.base_stations {
            if b.has_server {
                b.storage_capacity *= factor;
                if factor == 0.0 {
                    b.has_server = false;
                    b.storage_capacity = 0.0;
                }
            }
        }
        out
    }
}

/// A structural invariant violated by an instance.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InstanceViolation {
    #[error("instance has no base stations")]
    EmptyNetwork,
    #[error("base station ids are not contiguous 1..N")]
    NonContiguousBsIds,
    #[error("base station {0} has a non-finite position")]
    NonFinitePosition(BsId),
    #[error("base stations {0} and {1} share a position")]
    CoincidentBs(BsId, BsId),
    #[error("base station {0} has zero interfaces")]
    NoInterfaces(BsId),
    #[error("base station {0} has a server with non-positive capacity")]
    NonPositiveCapacity(BsId),
    #[error("no base station is cloud-attached")]
    NoCloudAttachment,
    #[error("task ids are not contiguous 1..B")]
    NonContiguousTaskIds,
    #[error("task {0} originates at unknown base station {1}")]
    DanglingOrigin(TaskId, BsId),
    #[error("task {0} has non-positive size")]
    NonPositiveSize(TaskId),
    #[error("task {0} has a negative weight")]
    NegativeWeight(TaskId),
    #[error("task weights sum to {0}, expected 1")]
    WeightsNotNormalized(f64),
    #[error("link model is invalid: {0}")]
    BadLinkModel(String),
    #[error("rate override references pair ({0}, {1}) outside the network")]
    DanglingOverride(BsId, BsId),
    #[error("task {0} cannot reach any server or cloud-attached BS")]
    UnreachableTask(TaskId),
}

/// Checks every structural invariant the optimization assumes.
/// Returns all violations found; an empty list means the instance is valid.
pub fn validate_instance(inst: &Instance) -> Vec<InstanceViolation> {
    use InstanceViolation::*;
    let mut out = Vec::new();
    let n = inst.n_bs();

    if n == 0 {
        out.push(EmptyNetwork);
        return out;
    }
    if inst
        .base_stations
        .iter()
        .enumerate()
        .any(|(i, b)| b.id != i + 1)
    {
        out.push(NonContiguousBsIds);
    }
    for b in &inst.base_stations {
        if !b.x_m.is_finite() || !b.y_m.is_finite() {
            out.push(NonFinitePosition(b.id));
        }
        if b.interfaces == 0 {
            out.push(NoInterfaces(b.id));
        }
        if b.has_server && !(b.storage_capacity > 0.0) {
            out.push(NonPositiveCapacity(b.id));
        }
    }
    for a in &inst.base_stations {
        for b in &inst.base_stations {
            if a.id < b.id && a.x_m == b.x_m && a.y_m == b.y_m {
                out.push(CoincidentBs(a.id, b.id));
            }
        }
    }
    if !inst.base_stations.iter().any(|b| b.cloud_attached) {
        out.push(NoCloudAttachment);
    }

    if inst
        .tasks
        .iter()
        .enumerate()
        .any(|(i, t)| t.id != i + 1)
    {
        out.push(NonContiguousTaskIds);
    }
    for t in &inst.tasks {
        if t.origin == 0 || t.origin > n {
            out.push(DanglingOrigin(t.id, t.origin));
        }
        if !(t.size > 0.0) {
            out.push(NonPositiveSize(t.id));
        }
        if t.weight < 0.0 {
            out.push(NegativeWeight(t.id));
        }
    }
    if !inst.tasks.is_empty() {
        let total: f64 = inst.tasks.iter().map(|t| t.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            out.push(WeightsNotNormalized(total));
        }
    }

    if let Err(e) = inst.link_model.check() {
        out.push(BadLinkModel(e));
    }
    for o in &inst.rate_overrides {
        if o.n == 0 || o.n > n || o.m == 0 || o.m > n || o.n == o.m {
            out.push(DanglingOverride(o.n, o.m));
        }
    }

    // Reachability: every task must be able to reach a server or a
    // cloud-attached BS in the feasibility graph. Skipped when earlier
    // violations make the graph ill-defined.
    if out.is_empty() {
        match build_link_graph(inst) {
            Ok(g) => {
                for t in &inst.tasks {
                    if !reaches_service(inst, &g, t.origin) {
                        out.push(UnreachableTask(t.id));
                    }
                }
            }
            Err(e) => out.push(BadLinkModel(e.to_string())),
        }
    }

    out
}

/// BFS over the feasibility graph from `origin` looking for any BS that can
/// serve a task (server or cloud attachment).
fn reaches_service(inst: &Instance, g: &crate::linkgraph::LinkGraph, origin: BsId) -> bool {
    let n = inst.n_bs();
    let mut seen = vec![false; n + 1];
    let mut queue = std::collections::VecDeque::new();
    seen[origin] = true;
    queue.push_back(origin);
    while let Some(cur) = queue.pop_front() {
        let bs = inst.bs(cur);
        if bs.has_server || bs.cloud_attached {
            return true;
        }
        for next in 1..=n {
            if !seen[next] && g.delta(cur, next) {
                seen[next] = true;
                queue.push_back(next);
            }
        }
    }
    false
}
