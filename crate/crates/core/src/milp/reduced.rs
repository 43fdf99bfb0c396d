//! Exact symmetry-reduced transcription of the step-1 model.
//!
//! Interface-pair links between the same BS pair are interchangeable: any
//! set of pair-level directed links with per-BS degree at most the
//! interface count lifts to a valid interface assignment, and every
//! interface-level solution projects down to one. The branch-and-bound
//! solver therefore works on one binary per directed BS pair (plus the
//! per-task, serving, and cloud families) and lifts the winner back to
//! interface-level links. This collapses the factorial interface symmetry
//! that would otherwise stall most-fractional branching.

use std::collections::{BTreeMap, BTreeSet};

use super::model::ModelContext;
use super::simplex::{LinearProgram, RowOp};
use crate::linkgraph::InterfaceLink;
use crate::model::BsId;
use crate::plan::{Plan, ServingLocation, TaskRoute};

pub(crate) struct ReducedProblem {
    pub n_tasks: usize,
    pub n_pairs: usize,
    /// Directed feasible BS pairs, in deterministic order.
    pub pairs: Vec<(BsId, BsId)>,
    pub pair_rate: Vec<f64>,
    /// BSs hosting servers, and cloud-attached BSs, in id order.
    pub server_ids: Vec<BsId>,
    pub cloud_ids: Vec<BsId>,
    /// Base LP over the reduced variables.
    pub lp: LinearProgram,
    /// Branchable binary variables: task-link, serving, and cloud families.
    pub branch_vars: Vec<usize>,
    at_off: usize,
    y_off: usize,
    yc_off: usize,
    w_off: usize,
}

impl ReducedProblem {
    pub fn a_task(&self, e: usize, b: usize) -> usize {
        self.at_off + e * self.n_tasks + b
    }
    pub fn y(&self, s: usize, b: usize) -> usize {
        self.y_off + s * self.n_tasks + b
    }
    pub fn y_cloud(&self, b: usize) -> usize {
        self.yc_off + b
    }
    pub fn w(&self, p: usize, b: usize) -> usize {
        self.w_off + p * self.n_tasks + b
    }

    /// Whether a variable is a serving or cloud-departure decision (as
    /// opposed to a link/routing decision).
    pub fn is_assignment_var(&self, j: usize) -> bool {
        j >= self.y_off && j < self.w_off + self.cloud_ids.len() * self.n_tasks
    }
}

pub(crate) fn build_reduced(ctx: &ModelContext) -> ReducedProblem {
    let n_bs = ctx.n_bs;
    let n_tasks = ctx.n_tasks();
    let pairs = ctx.pairs.clone();
    let n_pairs = pairs.len();
    let z_bar = n_tasks as f64;

    let server_ids: Vec<BsId> = (1..=n_bs).filter(|&n| ctx.server_caps[n - 1].is_some()).collect();
    let cloud_ids: Vec<BsId> = (1..=n_bs).filter(|&n| ctx.cloud_attached[n - 1]).collect();

    let a_off = 0;
    let at_off = a_off + n_pairs;
    let y_off = at_off + n_pairs * n_tasks;
    let yc_off = y_off + server_ids.len() * n_tasks;
    let w_off = yc_off + n_tasks;
    let u_off = w_off + cloud_ids.len() * n_tasks;
    let n_vars = u_off + n_pairs * n_tasks;

    let mut cost = vec![0.0; n_vars];
    let mut lower = vec![0.0; n_vars];
    let mut upper = vec![1.0; n_vars];
    let _ = &mut lower;
    for e in 0..n_pairs {
        for b in 0..n_tasks {
            upper[u_off + e * n_tasks + b] = z_bar.max(1.0);
            cost[u_off + e * n_tasks + b] = ctx.weights[b] * ctx.sizes[b] / ctx.pair_rate[e];
        }
    }
    for (pi, _) in cloud_ids.iter().enumerate() {
        for b in 0..n_tasks {
            cost[w_off + pi * n_tasks + b] = ctx.weights[b] * ctx.cloud_latency;
        }
    }

    let mut rows: Vec<(Vec<(usize, f64)>, RowOp, f64)> = Vec::new();

    let server_slot: BTreeMap<BsId, usize> =
        server_ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();
    let cloud_slot: BTreeMap<BsId, usize> =
        cloud_ids.iter().enumerate().map(|(i, &n)| (n, i)).collect();

    // Degree: links incident to a BS fit its interface budget.
    for n in 1..=n_bs {
        let terms: Vec<(usize, f64)> = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| a == n || b == n)
            .map(|(e, _)| (a_off + e, 1.0))
            .collect();
        if !terms.is_empty() {
            rows.push((terms, RowOp::Le, ctx.interfaces[n - 1] as f64));
        }
    }

    // Association, both directions. Task usage is tied to establishment by
    // one aggregated row per link (equivalent at integer points to the
    // per-task form, and far fewer rows); establishment itself joins the
    // branch set since the aggregation no longer pins it at fractional
    // task points.
    for e in 0..n_pairs {
        let mut terms = vec![(a_off + e, -(n_tasks as f64))];
        for b in 0..n_tasks {
            terms.push((at_off + e * n_tasks + b, 1.0));
        }
        rows.push((terms, RowOp::Le, 0.0));
    }
    for e in 0..n_pairs {
        let mut terms = vec![(a_off + e, 1.0)];
        for b in 0..n_tasks {
            terms.push((at_off + e * n_tasks + b, -1.0));
        }
        rows.push((terms, RowOp::Le, 0.0));
    }

    // Flow balance per BS and task.
    for n in 1..=n_bs {
        for b in 0..n_tasks {
            let mut terms: Vec<(usize, f64)> = Vec::new();
            for (e, &(from, to)) in pairs.iter().enumerate() {
                if to == n {
                    terms.push((at_off + e * n_tasks + b, 1.0));
                } else if from == n {
                    terms.push((at_off + e * n_tasks + b, -1.0));
                }
            }
            if let Some(&s) = server_slot.get(&n) {
                terms.push((y_off + s * n_tasks + b, -1.0));
            }
            if let Some(&p) = cloud_slot.get(&n) {
                terms.push((w_off + p * n_tasks + b, -1.0));
            }
            let originates = if ctx.origins[b] == n { 1.0 } else { 0.0 };
            rows.push((terms, RowOp::Eq, -originates));
        }
    }

    // Server capacity and arrival.
    for (s, &n) in server_ids.iter().enumerate() {
        let cap = ctx.server_caps[n - 1].unwrap();
        let terms: Vec<(usize, f64)> = (0..n_tasks)
            .map(|b| (y_off + s * n_tasks + b, ctx.sizes[b]))
            .collect();
        rows.push((terms, RowOp::Le, cap));
        for b in 0..n_tasks {
            let mut terms = vec![(y_off + s * n_tasks + b, 1.0)];
            for (e, &(_, to)) in pairs.iter().enumerate() {
                if to == n {
                    terms.push((at_off + e * n_tasks + b, -1.0));
                }
            }
            let originates = if ctx.origins[b] == n { 1.0 } else { 0.0 };
            rows.push((terms, RowOp::Le, originates));
        }
    }

    // Cloud departure and serving.
    for (p, &nid) in cloud_ids.iter().enumerate() {
        for b in 0..n_tasks {
            let mut terms = vec![(w_off + p * n_tasks + b, 1.0)];
            for (e, &(_, to)) in pairs.iter().enumerate() {
                if to == nid {
                    terms.push((at_off + e * n_tasks + b, -1.0));
                }
            }
            let originates = if ctx.origins[b] == nid { 1.0 } else { 0.0 };
            rows.push((terms, RowOp::Le, originates));
        }
    }
    for b in 0..n_tasks {
        let mut terms = vec![(yc_off + b, 1.0)];
        for (p, _) in cloud_ids.iter().enumerate() {
            terms.push((w_off + p * n_tasks + b, -1.0));
        }
        rows.push((terms, RowOp::Le, 0.0));
    }

    // Serve exactly once.
    for b in 0..n_tasks {
        let mut terms: Vec<(usize, f64)> = server_ids
            .iter()
            .enumerate()
            .map(|(s, _)| (y_off + s * n_tasks + b, 1.0))
            .collect();
        terms.push((yc_off + b, 1.0));
        rows.push((terms, RowOp::Eq, 1.0));
    }

    // Origin departure.
    for b in 0..n_tasks {
        let o = ctx.origins[b];
        let mut terms: Vec<(usize, f64)> = pairs
            .iter()
            .enumerate()
            .filter(|(_, &(from, _))| from == o)
            .map(|(e, _)| (at_off + e * n_tasks + b, 1.0))
            .collect();
        if let Some(&s) = server_slot.get(&o) {
            terms.push((y_off + s * n_tasks + b, 1.0));
        }
        if let Some(&p) = cloud_slot.get(&o) {
            terms.push((w_off + p * n_tasks + b, 1.0));
        }
        rows.push((terms, RowOp::Eq, 1.0));
    }

    // Linearization lower bounds, with the link count substituted in:
    // u >= sum_b' a(e,b') - (1 - a(e,b)) * z_bar. The matching upper caps
    // are redundant under minimization (u has a positive objective and the
    // count never exceeds z_bar), so the LP omits them.
    for e in 0..n_pairs {
        for b in 0..n_tasks {
            let mut terms = vec![(u_off + e * n_tasks + b, 1.0)];
            for b2 in 0..n_tasks {
                let coef = if b2 == b { -1.0 - z_bar } else { -1.0 };
                terms.push((at_off + e * n_tasks + b2, coef));
            }
            rows.push((terms, RowOp::Ge, -z_bar));
        }
    }
    // A task on a link shares it with at least itself, so u >= a. Valid at
    // every integer point and it keeps the relaxation from zeroing the
    // transit cost of fractional routings.
    for e in 0..n_pairs {
        for b in 0..n_tasks {
            rows.push((
                vec![
                    (u_off + e * n_tasks + b, 1.0),
                    (at_off + e * n_tasks + b, -1.0),
                ],
                RowOp::Ge,
                0.0,
            ));
        }
    }

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_vars];
    for (i, (terms, _, _)) in rows.iter().enumerate() {
        for &(j, c) in terms {
            cols[j].push((i, c));
        }
    }
    let lp = LinearProgram {
        n_rows: rows.len(),
        cols,
        cost,
        lower,
        upper,
        row_ops: rows.iter().map(|r| r.1).collect(),
        rhs: rows.iter().map(|r| r.2).collect(),
    };

    let mut branch_vars = Vec::new();
    branch_vars.extend(at_off..at_off + n_pairs * n_tasks);
    branch_vars.extend(y_off..y_off + server_ids.len() * n_tasks);
    branch_vars.extend(yc_off..yc_off + n_tasks);
    branch_vars.extend(w_off..w_off + cloud_ids.len() * n_tasks);
    branch_vars.extend(a_off..a_off + n_pairs);

    ReducedProblem {
        n_tasks,
        n_pairs,
        pairs,
        pair_rate: ctx.pair_rate.clone(),
        server_ids,
        cloud_ids,
        lp,
        branch_vars,
        at_off,
        y_off,
        yc_off,
        w_off,
    }
}

/// Deterministic interface assignment for a set of directed pair links:
/// every link takes the lowest free interface at each endpoint. Feasible
/// whenever per-BS link degrees fit the interface budgets.
pub(crate) fn lift_interfaces(
    used_pairs: &BTreeSet<(BsId, BsId)>,
    interfaces: &[usize],
) -> Option<BTreeMap<(BsId, BsId), InterfaceLink>> {
    let mut next_free = vec![1usize; interfaces.len() + 1];
    let mut out = BTreeMap::new();
    for &(n, m) in used_pairs {
        let i = next_free[n];
        let j = next_free[m];
        if i > interfaces[n - 1] || j > interfaces[m - 1] {
            return None;
        }
        next_free[n] += 1;
        next_free[m] += 1;
        out.insert(
            (n, m),
            InterfaceLink {
                from: n,
                from_if: i,
                to: m,
                to_if: j,
            },
        );
    }
    Some(out)
}

/// Extracts an interface-level plan from an integral reduced point,
/// cleaning any zero-cost circulation away by routing each task along a
/// simple path inside its own link support. Returns the plan and its
/// equal-share hop-by-hop objective.
pub(crate) fn extract_plan(
    rp: &ReducedProblem,
    ctx: &ModelContext,
    x: &[f64],
) -> Option<(Plan, f64)> {
    let n_tasks = rp.n_tasks;
    let mut pair_paths: Vec<Vec<usize>> = Vec::with_capacity(n_tasks);
    let mut assignments: Vec<ServingLocation> = Vec::with_capacity(n_tasks);
    let mut entries: Vec<Option<BsId>> = Vec::with_capacity(n_tasks);

    for b in 0..n_tasks {
        let origin = ctx.origins[b];
        let cloud_served = x[rp.y_cloud(b)] > 0.5;
        let assignment = if cloud_served {
            ServingLocation::Cloud
        } else {
            let s = (0..rp.server_ids.len()).find(|&s| x[rp.y(s, b)] > 0.5)?;
            ServingLocation::Bs(rp.server_ids[s])
        };
        let targets: BTreeSet<BsId> = match assignment {
            ServingLocation::Bs(n) => [n].into(),
            ServingLocation::Cloud => rp
                .cloud_ids
                .iter()
                .enumerate()
                .filter(|(p, _)| x[rp.w(*p, b)] > 0.5)
                .map(|(_, &n)| n)
                .collect(),
        };
        if targets.is_empty() {
            return None;
        }

        // Support edges for this task.
        let support: Vec<usize> = (0..rp.n_pairs)
            .filter(|&e| x[rp.a_task(e, b)] > 0.5)
            .collect();

        // DFS for a simple path from the origin to any target.
        let path = find_simple_path(rp, &support, origin, &targets)?;
        let terminal = path.last().map_or(origin, |&e| rp.pairs[e].1);
        pair_paths.push(path);
        assignments.push(assignment);
        entries.push(match assignment {
            ServingLocation::Cloud => Some(terminal),
            _ => None,
        });
    }

    // Union of used pair links, then one interface assignment for all.
    let used: BTreeSet<(BsId, BsId)> = pair_paths
        .iter()
        .flatten()
        .map(|&e| rp.pairs[e])
        .collect();
    let lifted = lift_interfaces(&used, &ctx.interfaces)?;

    let mut links: Vec<InterfaceLink> = lifted.values().copied().collect();
    links.sort();
    let routes: Vec<TaskRoute> = (0..n_tasks)
        .map(|b| TaskRoute {
            path: pair_paths[b].iter().map(|&e| lifted[&rp.pairs[e]]).collect(),
            assignment: assignments[b],
            cloud_entry: entries[b],
        })
        .collect();
    let plan = Plan { links, routes };

    // Equal-share objective of the cleaned plan.
    let mut z: BTreeMap<(BsId, BsId), usize> = BTreeMap::new();
    for path in &pair_paths {
        for &e in path {
            *z.entry(rp.pairs[e]).or_default() += 1;
        }
    }
    let mut total = 0.0;
    for b in 0..n_tasks {
        let mut lat = 0.0;
        for &e in &pair_paths[b] {
            lat += z[&rp.pairs[e]] as f64 * ctx.sizes[b] / rp.pair_rate[e];
        }
        if assignments[b] == ServingLocation::Cloud {
            lat += ctx.cloud_latency;
        }
        total += ctx.weights[b] * lat;
    }

    Some((plan, total))
}

fn find_simple_path(
    rp: &ReducedProblem,
    support: &[usize],
    origin: BsId,
    targets: &BTreeSet<BsId>,
) -> Option<Vec<usize>> {
    if targets.contains(&origin) {
        return Some(Vec::new());
    }
    let mut stack = vec![(origin, 0usize)];
    let mut path: Vec<usize> = Vec::new();
    let mut visited: BTreeSet<BsId> = [origin].into();
    while let Some((cur, next_idx)) = stack.last_mut() {
        let cur_bs = *cur;
        let mut advanced = false;
        let edges: Vec<usize> = support
            .iter()
            .copied()
            .filter(|&e| rp.pairs[e].0 == cur_bs)
            .collect();
        while *next_idx < edges.len() {
            let e = edges[*next_idx];
            *next_idx += 1;
            let to = rp.pairs[e].1;
            if visited.contains(&to) {
                continue;
            }
            path.push(e);
            if targets.contains(&to) {
                return Some(path);
            }
            visited.insert(to);
            stack.push((to, 0));
            advanced = true;
            break;
        }
        if !advanced {
            stack.pop();
            if let Some(e) = path.pop() {
                visited.remove(&rp.pairs[e].1);
            }
        }
    }
    None
}
