//! Exhaustive oracle for tiny instances: enumerates every per-task
//! (destination, simple path) option, joins them under the interface,
//! pairing, and capacity rules, and evaluates the equal-share objective.
//! Completely independent of the LP machinery, so it can certify the
//! branch-and-bound solver.

use std::collections::{BTreeMap, BTreeSet};

use super::branch_bound::{SolveOutcome, SolveStatus};
use super::reduced::lift_interfaces;
use crate::linkgraph::LinkGraph;
use crate::model::{BsId, Instance};
use crate::plan::{Plan, ServingLocation, TaskRoute};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BruteForceError {
    #[error("enumeration would visit about {0} combinations, budget is {1}")]
    TooLarge(u128, u128),
}

/// One candidate routing for a task.
#[derive(Debug, Clone)]
struct TaskOption {
    /// Directed pair-level path from the origin.
    path: Vec<(BsId, BsId)>,
    assignment: ServingLocation,
    cloud_entry: Option<BsId>,
}

/// Enumerates all interface-matching topologies, per-task simple paths and
/// assignments, and returns the exact equal-share optimum. Rejects
/// instances whose option product exceeds `budget` combinations.
pub fn brute_force_plan(
    inst: &Instance,
    g: &LinkGraph,
    budget: u128,
) -> Result<SolveOutcome, BruteForceError> {
    let n_tasks = inst.n_tasks();
    let options: Vec<Vec<TaskOption>> = inst
        .tasks
        .iter()
        .map(|t| enumerate_options(inst, g, t.origin))
        .collect();

    let mut combos: u128 = 1;
    for o in &options {
        combos = combos.saturating_mul(o.len().max(1) as u128);
        if combos > budget {
            return Err(BruteForceError::TooLarge(combos, budget));
        }
    }

    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut choice = vec![0usize; n_tasks];
    search(inst, g, &options, 0, &mut choice, &mut best);

    let Some((value, picks)) = best else {
        return Ok(SolveOutcome {
            status: SolveStatus::Infeasible,
            plan: None,
            objective_value: None,
            nodes_explored: 0,
        });
    };

    // Materialize the winning combination as an interface-level plan.
    let mut used: BTreeSet<(BsId, BsId)> = BTreeSet::new();
    for (b, &pick) in picks.iter().enumerate() {
        for &e in &options[b][pick].path {
            used.insert(e);
        }
    }
    let interfaces: Vec<usize> = inst.base_stations.iter().map(|b| b.interfaces).collect();
    let lifted = lift_interfaces(&used, &interfaces)
        .expect("degree-checked combination must lift to interfaces");
    let mut links: Vec<_> = lifted.values().copied().collect();
    links.sort();
    let routes: Vec<TaskRoute> = picks
        .iter()
        .enumerate()
        .map(|(b, &pick)| {
            let opt = &options[b][pick];
            TaskRoute {
                path: opt.path.iter().map(|e| lifted[e]).collect(),
                assignment: opt.assignment,
                cloud_entry: opt.cloud_entry,
            }
        })
        .collect();

    Ok(SolveOutcome {
        status: SolveStatus::Optimal,
        plan: Some(Plan { links, routes }),
        objective_value: Some(value),
        nodes_explored: 0,
    })
}

/// All (destination, simple path) options for a task at `origin`:
/// serving at the origin, serving at any reachable server BS, or departing
/// to the cloud at any reachable cloud-attached BS.
fn enumerate_options(inst: &Instance, g: &LinkGraph, origin: BsId) -> Vec<TaskOption> {
    let mut out = Vec::new();
    if inst.bs(origin).has_server {
        out.push(TaskOption {
            path: Vec::new(),
            assignment: ServingLocation::Bs(origin),
            cloud_entry: None,
        });
    }
    if inst.bs(origin).cloud_attached {
        out.push(TaskOption {
            path: Vec::new(),
            assignment: ServingLocation::Cloud,
            cloud_entry: Some(origin),
        });
    }
    // DFS over simple pair paths, recording an option at every BS that can
    // serve or forward to the cloud.
    let mut path: Vec<(BsId, BsId)> = Vec::new();
    let mut visited: BTreeSet<BsId> = [origin].into();
    dfs_options(inst, g, origin, &mut path, &mut visited, &mut out);
    out
}

fn dfs_options(
    inst: &Instance,
    g: &LinkGraph,
    cur: BsId,
    path: &mut Vec<(BsId, BsId)>,
    visited: &mut BTreeSet<BsId>,
    out: &mut Vec<TaskOption>,
) {
    for next in 1..=inst.n_bs() {
        if visited.contains(&next) || !g.delta(cur, next) {
            continue;
        }
        path.push((cur, next));
        visited.insert(next);
        if inst.bs(next).has_server {
            out.push(TaskOption {
                path: path.clone(),
                assignment: ServingLocation::Bs(next),
                cloud_entry: None,
            });
        }
        if inst.bs(next).cloud_attached {
            out.push(TaskOption {
                path: path.clone(),
                assignment: ServingLocation::Cloud,
                cloud_entry: Some(next),
            });
        }
        dfs_options(inst, g, next, path, visited, out);
        visited.remove(&next);
        path.pop();
    }
}

fn search(
    inst: &Instance,
    g: &LinkGraph,
    options: &[Vec<TaskOption>],
    task: usize,
    choice: &mut Vec<usize>,
    best: &mut Option<(f64, Vec<usize>)>,
) {
    if task == options.len() {
        if let Some(value) = evaluate(inst, g, options, choice) {
            let better = match best {
                None => true,
                Some((b, _)) => value < *b - 1e-15,
            };
            if better {
                *best = Some((value, choice.clone()));
            }
        }
        return;
    }
    for pick in 0..options[task].len() {
        choice[task] = pick;
        // Partial pruning: capacity and degree feasibility on the chosen
        // prefix (latency cannot be bounded incrementally because later
        // tasks raise the share counts of earlier ones).
        if partial_feasible(inst, options, choice, task + 1) {
            search(inst, g, options, task + 1, choice, best);
        }
    }
}

fn partial_feasible(
    inst: &Instance,
    options: &[Vec<TaskOption>],
    choice: &[usize],
    upto: usize,
) -> bool {
    let mut load: BTreeMap<BsId, f64> = BTreeMap::new();
    let mut used: BTreeSet<(BsId, BsId)> = BTreeSet::new();
    for b in 0..upto {
        let opt = &options[b][choice[b]];
        if let ServingLocation::Bs(n) = opt.assignment {
            let l = load.entry(n).or_default();
            *l += inst.tasks[b].size;
            if *l > inst.bs(n).effective_capacity() + 1e-6 {
                return false;
            }
        }
        for &e in &opt.path {
            used.insert(e);
        }
    }
    let mut degree: BTreeMap<BsId, usize> = BTreeMap::new();
    for &(n, m) in &used {
        *degree.entry(n).or_default() += 1;
        *degree.entry(m).or_default() += 1;
    }
    degree
        .iter()
        .all(|(&n, &d)| d <= inst.bs(n).interfaces)
}

/// Equal-share weighted total of a full combination, or None if infeasible.
fn evaluate(
    inst: &Instance,
    g: &LinkGraph,
    options: &[Vec<TaskOption>],
    choice: &[usize],
) -> Option<f64> {
    if !partial_feasible(inst, options, choice, choice.len()) {
        return None;
    }
    let mut share: BTreeMap<(BsId, BsId), usize> = BTreeMap::new();
    for (b, &pick) in choice.iter().enumerate() {
        for &e in &options[b][pick].path {
            *share.entry(e).or_default() += 1;
        }
    }
    let mut total = 0.0;
    for (b, &pick) in choice.iter().enumerate() {
        let opt = &options[b][pick];
        let task = &inst.tasks[b];
        let mut lat = 0.0;
        for &(n, m) in &opt.path {
            lat += share[&(n, m)] as f64 * task.size / g.rate(n, m);
        }
        if opt.assignment == ServingLocation::Cloud {
            lat += inst.cloud_latency;
        }
        total += task.weight * lat;
    }
    Some(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkgraph::build_link_graph;
    use crate::plan::validate_plan;
    use crate::testutil::two_bs_instance;

    #[test]
    fn neighbor_server_beats_cloud_relay() {
        // Origin has no server; the neighbor hosts both a server and the
        // cloud hookup. By hand: serving there costs L/R, relaying onward
        // to the cloud costs L/R + theta, so the server wins.
        let inst = two_bs_instance();
        let g = build_link_graph(&inst).unwrap();
        let out = brute_force_plan(&inst, &g, 1_000_000).unwrap();
        let expect = inst.tasks[0].size / g.rate(1, 2);
        assert!((out.objective_value.unwrap() - expect).abs() < 1e-12);
        let plan = out.plan.unwrap();
        assert_eq!(plan.routes[0].assignment, ServingLocation::Bs(2));
        assert!(validate_plan(&inst, &g, &plan).is_empty());

        // With the server too small, the cloud is the only choice.
        let mut tight = inst.clone();
        tight.tasks[0].size = tight.base_stations[1].storage_capacity * 2.0;
        let out = brute_force_plan(&tight, &g, 1_000_000).unwrap();
        let expect = tight.tasks[0].size / g.rate(1, 2) + tight.cloud_latency;
        assert!((out.objective_value.unwrap() - expect).abs() < 1e-12);
        assert_eq!(
            out.plan.unwrap().routes[0].assignment,
            ServingLocation::Cloud
        );
    }

    #[test]
    fn local_servers_everywhere_cost_nothing() {
        let mut inst = two_bs_instance();
        for b in &mut inst.base_stations {
            b.has_server = true;
            b.storage_capacity = 1e12;
        }
        let g = build_link_graph(&inst).unwrap();
        let out = brute_force_plan(&inst, &g, 1_000_000).unwrap();
        assert_eq!(out.objective_value.unwrap(), 0.0);
    }

    #[test]
    fn budget_guard_rejects_large_instances() {
        let inst = two_bs_instance();
        let g = build_link_graph(&inst).unwrap();
        assert!(matches!(
            brute_force_plan(&inst, &g, 1),
            Err(BruteForceError::TooLarge(_, 1))
        ));
    }
}
