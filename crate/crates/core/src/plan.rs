//! Solved decision state: established links, per-task routes, serving
//! assignments, and bandwidth allocations, plus full feasibility validation.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::linkgraph::{InterfaceLink, LinkGraph};
use crate::model::{BsId, Instance, TaskId};

/// Where a task is processed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ServingLocation {
    Bs(BsId),
    Cloud,
}

impl std::fmt::Display for ServingLocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ServingLocation::Bs(id) => write!(f, "BS {id}"),
            ServingLocation::Cloud => write!(f, "Cloud"),
        }
    }
}

/// One task's routing decision: the ordered mmWave path from its origin,
/// the serving location, and the cloud entry BS for cloud-served tasks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskRoute {
    pub path: Vec<InterfaceLink>,
    pub assignment: ServingLocation,
    pub cloud_entry: Option<BsId>,
}

impl TaskRoute {
    pub fn hops(&self) -> usize {
        self.path.len()
    }

    /// BS at the end of the mmWave path (the origin for empty paths).
    pub fn terminal(&self, origin: BsId) -> BsId {
        self.path.last().map_or(origin, |l| l.to)
    }
}

/// A complete plan: established directed interface links plus one route per
/// task (indexed in task order).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub links: Vec<InterfaceLink>,
    pub routes: Vec<TaskRoute>,
}

impl Plan {
    pub fn route(&self, task: TaskId) -> &TaskRoute {
        &self.routes[task - 1]
    }

    /// Tasks traversing each established link, in task order.
    pub fn link_users(&self) -> BTreeMap<InterfaceLink, Vec<TaskId>> {
        let mut map: BTreeMap<InterfaceLink, Vec<TaskId>> = BTreeMap::new();
        for l in &self.links {
            map.insert(*l, Vec::new());
        }
        for (idx, route) in self.routes.iter().enumerate() {
            for l in &route.path {
                if let Some(users) = map.get_mut(l) {
                    users.push(idx + 1);
                }
            }
        }
        map
    }
}

/// Per-task per-link bandwidth fractions, with per-task path rates for
/// minimum-rate allocations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    /// (link, task) -> fraction of the link's capacity, in (0, 1].
    pub rho: BTreeMap<(InterfaceLink, TaskId), f64>,
    /// Task -> guaranteed path rate in bytes/second; present only for
    /// minimum-rate allocations.
    pub psi: Option<BTreeMap<TaskId, f64>>,
}

impl Allocation {
    pub fn rho_for(&self, link: &InterfaceLink, task: TaskId) -> Option<f64> {
        self.rho.get(&(*link, task)).copied()
    }
}

/// A feasibility rule violated by a plan.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanViolation {
    #[error("plan has {0} routes for {1} tasks")]
    RouteCountMismatch(usize, usize),
    #[error("link {0} is not a candidate link of the instance")]
    UnknownLink(InterfaceLink),
    #[error("link {0} is listed more than once")]
    DuplicateLink(InterfaceLink),
    #[error("more than one link established from BS {0} to BS {1}")]
    PairMultiLink(BsId, BsId),
    #[error("interface {1} of BS {0} is used by more than one link")]
    InterfaceReuse(BsId, usize),
    #[error("task {0} uses link {1} which is not established")]
    TaskLinkNotEstablished(TaskId, InterfaceLink),
    #[error("established link {0} carries no task")]
    RedundantLink(InterfaceLink),
    #[error("task {0}'s path does not start at its origin")]
    PathOriginMismatch(TaskId),
    #[error("task {0}'s path is not a connected chain")]
    PathBroken(TaskId),
    #[error("task {0}'s path revisits a BS")]
    PathNotSimple(TaskId),
    #[error("task {0} is assigned to BS {1} which has no server")]
    ServerColocation(TaskId, BsId),
    #[error("task {0} is assigned to BS {1} but its path ends at BS {2}")]
    ServeWithoutArrival(TaskId, BsId, BsId),
    #[error("server at BS {0} is over capacity: {1} > {2} bytes")]
    ServerOverCapacity(BsId, f64, f64),
    #[error("task {0} is cloud-served but has no cloud entry")]
    MissingCloudEntry(TaskId),
    #[error("task {0} has a cloud entry but is not cloud-served")]
    SpuriousCloudEntry(TaskId),
    #[error("task {0}'s cloud entry BS {1} is not cloud-attached")]
    CloudEntryNotAttached(TaskId, BsId),
    #[error("task {0}'s cloud entry BS {1} is not where its path ends")]
    CloudEntryWithoutArrival(TaskId, BsId),
}

/// Checks a plan against every feasibility rule of the model: interface
/// uniqueness and unidirectionality, link/task association, per-task path
/// integrity (the binary flow-conservation form), server co-location and
/// capacity, cloud reachability, and one assignment per task.
///
/// Returns every violation found; an empty list means the plan is feasible.
pub fn validate_plan(inst: &Instance, g: &LinkGraph, plan: &Plan) -> Vec<PlanViolation> {
    use PlanViolation::*;
    let mut out = Vec::new();

    if plan.routes.len() != inst.n_tasks() {
        out.push(RouteCountMismatch(plan.routes.len(), inst.n_tasks()));
        return out;
    }

    let candidates: BTreeSet<InterfaceLink> = g.candidate_links.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut pair_count: BTreeMap<(BsId, BsId), usize> = BTreeMap::new();
    let mut interface_use: BTreeMap<(BsId, usize), usize> = BTreeMap::new();
    for l in &plan.links {
        if !candidates.contains(l) {
            out.push(UnknownLink(*l));
            continue;
        }
        if !seen.insert(*l) {
            out.push(DuplicateLink(*l));
            continue;
        }
        *pair_count.entry((l.from, l.to)).or_default() += 1;
        *interface_use.entry((l.from, l.from_if)).or_default() += 1;
        *interface_use.entry((l.to, l.to_if)).or_default() += 1;
    }
    for ((n, m), c) in &pair_count {
        if *c > 1 {
            out.push(PairMultiLink(*n, *m));
        }
    }
    for ((bs, ifc), c) in &interface_use {
        if *c > 1 {
            out.push(InterfaceReuse(*bs, *ifc));
        }
    }

    let established: BTreeSet<InterfaceLink> = plan.links.iter().copied().collect();
    let mut used_links: BTreeSet<InterfaceLink> = BTreeSet::new();

    for task in &inst.tasks {
        let route = plan.route(task.id);
        let mut path_ok = true;

        for l in &route.path {
            if !established.contains(l) {
                out.push(TaskLinkNotEstablished(task.id, *l));
                path_ok = false;
            }
            used_links.insert(*l);
        }

        if let Some(first) = route.path.first() {
            if first.from != task.origin {
                out.push(PathOriginMismatch(task.id));
                path_ok = false;
            }
        }
        for pair in route.path.windows(2) {
            if pair[0].to != pair[1].from {
                out.push(PathBroken(task.id));
                path_ok = false;
                break;
            }
        }
        if path_ok {
            let mut visited = BTreeSet::new();
            visited.insert(task.origin);
            for l in &route.path {
                if !visited.insert(l.to) {
                    out.push(PathNotSimple(task.id));
                    break;
                }
            }
        }

        let terminal = route.terminal(task.origin);
        match route.assignment {
            ServingLocation::Bs(bs) => {
                if bs == 0 || bs > inst.n_bs() {
                    out.push(ServeWithoutArrival(task.id, bs, terminal));
                } else {
                    if !inst.bs(bs).has_server {
                        out.push(ServerColocation(task.id, bs));
                    }
                    if bs != terminal {
                        out.push(ServeWithoutArrival(task.id, bs, terminal));
                    }
                }
                if route.cloud_entry.is_some() {
                    out.push(SpuriousCloudEntry(task.id));
                }
            }
            ServingLocation::Cloud => match route.cloud_entry {
                None => out.push(MissingCloudEntry(task.id)),
                Some(entry) => {
                    if entry == 0 || entry > inst.n_bs() || !inst.bs(entry).cloud_attached {
                        out.push(CloudEntryNotAttached(task.id, entry));
                    }
                    if entry != terminal {
                        out.push(CloudEntryWithoutArrival(task.id, entry));
                    }
                }
            },
        }
    }

    for l in &plan.links {
        if !used_links.contains(l) {
            out.push(RedundantLink(*l));
        }
    }

    for bs in &inst.base_stations {
        let load: f64 = inst
            .tasks
            .iter()
            .filter(|t| plan.route(t.id).assignment == ServingLocation::Bs(bs.id))
            .map(|t| t.size)
            .sum();
        let cap = bs.effective_capacity();
        if load > cap + 1e-6 {
            out.push(ServerOverCapacity(bs.id, load, cap));
        }
    }

    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkgraph::build_link_graph;
    use crate::testutil::two_bs_instance;

    fn relay_plan() -> (Instance, LinkGraph, Plan) {
        let inst = two_bs_instance();
        let g = build_link_graph(&inst).unwrap();
        let link = InterfaceLink {
            from: 1,
            from_if: 1,
            to: 2,
            to_if: 1,
        };
        let plan = Plan {
            links: vec![link],
            routes: vec![TaskRoute {
                path: vec![link],
                assignment: ServingLocation::Bs(2),
                cloud_entry: None,
            }],
        };
        (inst, g, plan)
    }

    #[test]
    fn valid_relay_plan_passes() {
        let (inst, g, plan) = relay_plan();
        assert!(validate_plan(&inst, &g, &plan).is_empty());
    }

    #[test]
    fn serverless_assignment_is_flagged() {
        let (mut inst, g, mut plan) = relay_plan();
        inst.base_stations[1].has_server = false;
        plan.routes[0].assignment = ServingLocation::Bs(2);
        let v = validate_plan(&inst, &g, &plan);
        assert!(v
            .iter()
            .any(|x| matches!(x, PlanViolation::ServerColocation(1, 2))));
    }

    #[test]
    fn interface_reuse_is_flagged() {
        let (mut inst, _, mut plan) = relay_plan();
        for b in &mut inst.base_stations {
            b.interfaces = 2;
        }
        let g = build_link_graph(&inst).unwrap();
        // Second link reusing interface 1 of BS 1 in the other direction.
        let back = InterfaceLink {
            from: 2,
            from_if: 2,
            to: 1,
            to_if: 1,
        };
        plan.links.push(back);
        plan.routes[0].path = vec![plan.links[0]];
        let v = validate_plan(&inst, &g, &plan);
        assert!(v
            .iter()
            .any(|x| matches!(x, PlanViolation::InterfaceReuse(1, 1))));
        // The extra link also carries no task.
        assert!(v
            .iter()
            .any(|x| matches!(x, PlanViolation::RedundantLink(_))));
    }

    #[test]
    fn cloud_route_requires_entry() {
        let (inst, g, mut plan) = relay_plan();
        plan.routes[0].assignment = ServingLocation::Cloud;
        let v = validate_plan(&inst, &g, &plan);
        assert!(v
            .iter()
            .any(|x| matches!(x, PlanViolation::MissingCloudEntry(1))));
    }

    #[test]
    fn over_capacity_is_flagged() {
        let (mut inst, g, plan) = relay_plan();
        inst.tasks[0].size = inst.base_stations[1].storage_capacity * 2.0;
        let v = validate_plan(&inst, &g, &plan);
        assert!(v
            .iter()
            .any(|x| matches!(x, PlanViolation::ServerOverCapacity(2, _, _))));
    }
}
