//! Best-first LP-based branch-and-bound over the reduced transcription.
//!
//! Node selection is best-bound with deeper nodes winning ties (so equal
//! bounds dive toward incumbents); branching is most-fractional with ties
//! broken by larger objective coefficient, then lowest index. The whole
//! search is deterministic for a fixed instance and node budget.

use std::collections::BinaryHeap;
use std::rc::Rc;
use std::time::{Duration, Instant};

use super::model::MilpModel;
use super::reduced::{build_reduced, extract_plan, ReducedProblem};
use super::simplex::{solve_lp, LinearProgram, LpStatus, SimplexError};
use crate::plan::Plan;

/// Search budget. With no limits the tree is exhausted and the result is
/// exact. Node-limited runs are deterministic; wall-clock limits are not.
#[derive(Debug, Clone, Copy, Default)]
pub struct SolveLimits {
    pub node_limit: Option<u64>,
    pub time_limit: Option<Duration>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SolveStatus {
    Optimal,
    /// Search stopped at a limit; `gap` is (incumbent - bound) / incumbent,
    /// infinite when no incumbent was found.
    TimeLimitWithGap(f64),
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    pub plan: Option<Plan>,
    /// Weighted total latency of the plan under equal-share bandwidth.
    pub objective_value: Option<f64>,
    pub nodes_explored: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolveError {
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error("search produced an integral point that does not form a plan")]
    ExtractionFailed,
}

/// Periodic search telemetry for progress streaming.
#[derive(Debug, Clone, Copy)]
pub struct Progress {
    pub nodes: u64,
    pub best_bound: f64,
    pub incumbent: Option<f64>,
    pub gap: Option<f64>,
}

const INT_TOL: f64 = 1e-6;

struct FixChain {
    var: usize,
    value: f64,
    parent: Option<Rc<FixChain>>,
}

struct Node {
    bound: f64,
    depth: u32,
    seq: u64,
    fix: Option<Rc<FixChain>>,
}

impl Node {
    fn key(&self) -> NodeKey {
        NodeKey {
            bound: self.bound,
            depth: self.depth,
            seq: self.seq,
        }
    }
}

#[derive(PartialEq)]
struct NodeKey {
    bound: f64,
    depth: u32,
    seq: u64,
}

impl Eq for NodeKey {}

impl Ord for NodeKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // BinaryHeap pops the maximum; invert so the pop order is lowest
        // bound, then deepest, then earliest created.
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for NodeKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

struct HeapEntry {
    key: NodeKey,
    node: Node,
}

impl PartialEq for HeapEntry {
    fn eq(&self, other: &Self) -> bool {
        self.key == other.key
    }
}
impl Eq for HeapEntry {}
impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.key.cmp(&other.key)
    }
}
impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn apply_fixings(lp: &LinearProgram, fix: &Option<Rc<FixChain>>) -> (Vec<f64>, Vec<f64>) {
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    let mut cur = fix.clone();
    while let Some(c) = cur {
        lower[c.var] = c.value;
        upper[c.var] = c.value;
        cur = c.parent.clone();
    }
    (lower, upper)
}

fn solve_node(
    rp: &ReducedProblem,
    fix: &Option<Rc<FixChain>>,
) -> Result<Option<(f64, Vec<f64>)>, SimplexError> {
    let (lower, upper) = apply_fixings(&rp.lp, fix);
    let mut lp = rp.lp.clone();
    lp.lower = lower;
    lp.upper = upper;
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(Some((sol.objective, sol.x))),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(SimplexError::NumericalStall(sol.iterations)),
    }
}

/// Picks the branching variable: most fractional, ties broken by larger
/// objective coefficient, then lowest index.
fn pick_branch_var(rp: &ReducedProblem, x: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64, f64)> = None;
    for &j in &rp.branch_vars {
        let f = x[j] - x[j].floor();
        let frac = f.min(1.0 - f);
        if frac <= INT_TOL {
            continue;
        }
        let coef = rp.lp.cost[j].abs();
        let replace = match best {
            None => true,
            Some((bj, bfrac, bcoef)) => {
                frac > bfrac + 1e-12
                    || ((frac - bfrac).abs() <= 1e-12
                        && (coef > bcoef + 1e-12
                            || ((coef - bcoef).abs() <= 1e-12 && j < bj)))
            }
        };
        if replace {
            best = Some((j, frac, coef));
        }
    }
    best.map(|(j, _, _)| j)
}

pub fn solve_p1(model: &MilpModel, limits: &SolveLimits) -> Result<SolveOutcome, SolveError> {
    solve_p1_with_progress(model, limits, &mut |_| {})
}

pub fn solve_p1_with_progress(
    model: &MilpModel,
    limits: &SolveLimits,
    progress: &mut dyn FnMut(&Progress),
) -> Result<SolveOutcome, SolveError> {
    let rp = build_reduced(&model.context);
    let start = Instant::now();
    let mut heap: BinaryHeap<HeapEntry> = BinaryHeap::new();
    let mut incumbent: Option<(f64, Plan)> = None;

    let mut nodes_explored: u64 = 0;
    let root = Node {
        bound: f64::NEG_INFINITY,
        depth: 0,
        seq: 0,
        fix: None,
    };
    // Node selection: best-first over the heap, but each popped node is
    // explored by a bounded local depth-first sub-search so dead-end dives
    // backtrack locally and complete solutions actually materialize. The
    // local budget is unlimited until the first incumbent exists (there is
    // nothing to prune against anyway), then small.
    let mut heap_local: Vec<Node> = Vec::new();
    heap.push(HeapEntry {
        key: root.key(),
        node: root,
    });
    let mut seq: u64 = 1;

    let mut limit_hit = false;
    let mut root_feasible = false;
    'outer: while let Some(entry) = heap.pop() {
        let top = entry.node;
        if let Some((inc, _)) = &incumbent {
            if top.bound >= inc - 1e-10 * (1.0 + inc.abs()) {
                continue; // pruned by bound
            }
        }

        heap_local.clear();
        heap_local.push(top);
        let mut local_solves: u64 = 0;
        const LOCAL_BUDGET: u64 = 64;

        while let Some(mut node) = heap_local.pop() {
            if let Some((inc, _)) = &incumbent {
                if node.bound >= inc - 1e-10 * (1.0 + inc.abs()) {
                    continue;
                }
                if local_solves >= LOCAL_BUDGET {
                    heap.push(HeapEntry {
                        key: node.key(),
                        node,
                    });
                    continue;
                }
            }

            // Plunge one child chain, stacking the siblings locally.
            loop {
                if let Some(n) = limits.node_limit {
                    if nodes_explored >= n {
                        limit_hit = true;
                    }
                }
                if let Some(t) = limits.time_limit {
                    if start.elapsed() >= t {
                        limit_hit = true;
                    }
                }
                if limit_hit && nodes_explored > 0 {
                    heap.push(HeapEntry {
                        key: node.key(),
                        node,
                    });
                    break 'outer;
                }

                let Some((value, x)) = solve_node(&rp, &node.fix)? else {
                    break;
                };
                nodes_explored += 1;
                local_solves += 1;
                root_feasible = true;
                // Bounds are monotone along any branch; guard against noise.
                let value = value.max(node.bound);

                if nodes_explored % 32 == 0 {
                    let local_bound = heap_local
                        .iter()
                        .map(|n| n.bound)
                        .fold(value, f64::min);
                    let best_bound = open_bound(&heap, Some(local_bound));
                    let inc = incumbent.as_ref().map(|(v, _)| *v);
                    progress(&Progress {
                        nodes: nodes_explored,
                        best_bound,
                        incumbent: inc,
                        gap: inc.map(|i| gap_of(i, best_bound)),
                    });
                }

                if let Some((inc, _)) = &incumbent {
                    if value >= *inc - 1e-10 * (1.0 + inc.abs()) {
                        break; // dive pruned
                    }
                }
                match pick_branch_var(&rp, &x) {
                    None => {
                        // Integral point: lift it to a plan. Cleaning
                        // circulation away can only lower the objective, so
                        // the cleaned value is a valid incumbent value.
                        let (plan, objective) = extract_plan(&rp, &model.context, &x)
                            .ok_or(SolveError::ExtractionFailed)?;
                        let better = match &incumbent {
                            None => true,
                            Some((inc, _)) => objective < *inc - 1e-12 * (1.0 + inc.abs()),
                        };
                        if better {
                            incumbent = Some((objective, plan));
                        }
                        break;
                    }
                    Some(j) => {
                        // Assignment variables round at 1/2; link and
                        // routing variables dive down unless clearly
                        // committed, since zeroing lets the flow divert
                        // while rounding up walks into interface and
                        // capacity conflicts.
                        let frac = x[j] - x[j].floor();
                        let threshold = if rp.is_assignment_var(j) { 0.5 } else { 0.8 };
                        let near = if frac >= threshold { 1.0 } else { 0.0 };
                        let sibling = Node {
                            bound: value,
                            depth: node.depth + 1,
                            seq,
                            fix: Some(Rc::new(FixChain {
                                var: j,
                                value: 1.0 - near,
                                parent: node.fix.clone(),
                            })),
                        };
                        seq += 1;
                        heap_local.push(sibling);
                        node = Node {
                            bound: value,
                            depth: node.depth + 1,
                            seq,
                            fix: Some(Rc::new(FixChain {
                                var: j,
                                value: near,
                                parent: node.fix.clone(),
                            })),
                        };
                        seq += 1;
                    }
                }
            }
            if !root_feasible {
                // Root LP infeasible: no routing exists at all.
                return Ok(SolveOutcome {
                    status: SolveStatus::Infeasible,
                    plan: None,
                    objective_value: None,
                    nodes_explored: nodes_explored.max(1),
                });
            }
        }
    }

    if limit_hit {
        // Account for any nodes still parked in the local stack so the
        // reported bound stays valid.
        for n in heap_local.drain(..) {
            heap.push(HeapEntry {
                key: n.key(),
                node: n,
            });
        }
        let best_bound = heap
            .peek()
            .map(|e| e.key.bound)
            .unwrap_or(f64::INFINITY);
        let (plan, objective, gap) = match incumbent {
            Some((value, plan)) => {
                let gap = gap_of(value, best_bound);
                (Some(plan), Some(value), gap)
            }
            None => (None, None, f64::INFINITY),
        };
        return Ok(SolveOutcome {
            status: SolveStatus::TimeLimitWithGap(gap),
            plan,
            objective_value: objective,
            nodes_explored,
        });
    }

    match incumbent {
        Some((value, plan)) => Ok(SolveOutcome {
            status: SolveStatus::Optimal,
            plan: Some(plan),
            objective_value: Some(value),
            nodes_explored,
        }),
        None => Ok(SolveOutcome {
            status: SolveStatus::Infeasible,
            plan: None,
            objective_value: None,
            nodes_explored,
        }),
    }
}

fn open_bound(heap: &BinaryHeap<HeapEntry>, current: Option<f64>) -> f64 {
    let open = heap.peek().map(|e| e.key.bound).unwrap_or(f64::INFINITY);
    match current {
        Some(c) => open.min(c),
        None => open,
    }
}

fn gap_of(incumbent: f64, bound: f64) -> f64 {
    if !bound.is_finite() {
        return 0.0; // tree exhausted while breaking on a limit
    }
    let diff = (incumbent - bound).max(0.0);
    if incumbent.abs() < 1e-12 {
        if diff < 1e-12 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        diff / incumbent.abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkgraph::build_link_graph;
    use crate::milp::model::build_p1;
    use crate::model::Task;
    use crate::plan::{validate_plan, ServingLocation};
    use crate::testutil::{grid_instance, two_bs_instance};
    use crate::units::gb_to_bytes;

    #[test]
    fn single_task_relay_is_optimal() {
        let inst = two_bs_instance();
        let g = build_link_graph(&inst).unwrap();
        let model = build_p1(&inst, &g);
        let out = solve_p1(&model, &SolveLimits::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        let plan = out.plan.unwrap();
        assert!(validate_plan(&inst, &g, &plan).is_empty());
        // Serving at BS 2 over one link beats relaying to the cloud.
        let expect = inst.tasks[0].size / g.rate(1, 2);
        assert!((out.objective_value.unwrap() - expect).abs() < 1e-9);
        assert_eq!(plan.routes[0].assignment, ServingLocation::Bs(2));
    }

    #[test]
    fn local_server_means_zero_latency() {
        let mut inst = grid_instance(3, 2);
        inst.tasks = vec![Task {
            id: 1,
            size: gb_to_bytes(1.0),
            origin: 3,
            weight: 1.0,
        }];
        let g = build_link_graph(&inst).unwrap();
        let model = build_p1(&inst, &g);
        let out = solve_p1(&model, &SolveLimits::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert_eq!(out.objective_value.unwrap(), 0.0);
        let plan = out.plan.unwrap();
        assert!(plan.links.is_empty());
        assert_eq!(plan.routes[0].assignment, ServingLocation::Bs(3));
    }

    #[test]
    fn capacity_forces_cloud() {
        let mut inst = two_bs_instance();
        // Task too large for the edge server; must go to the cloud.
        inst.tasks[0].size = inst.base_stations[1].storage_capacity * 2.0;
        let g = build_link_graph(&inst).unwrap();
        let model = build_p1(&inst, &g);
        let out = solve_p1(&model, &SolveLimits::default()).unwrap();
        let plan = out.plan.unwrap();
        assert_eq!(plan.routes[0].assignment, ServingLocation::Cloud);
        assert_eq!(plan.routes[0].cloud_entry, Some(2));
        let expect = inst.tasks[0].size / g.rate(1, 2) + inst.cloud_latency;
        assert!((out.objective_value.unwrap() - expect).abs() < 1e-9);
    }

    #[test]
    fn infeasible_when_nothing_reachable() {
        // Origin BS with one interface, neighbors out of range: the task
        // cannot reach any server. Root LP must be infeasible.
        let mut inst = two_bs_instance();
        inst.base_stations[1].x_m = 1e6;
        let g = build_link_graph(&inst).unwrap();
        let model = build_p1(&inst, &g);
        let out = solve_p1(&model, &SolveLimits::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Infeasible);
    }
}
