//! Step 2: optimal bandwidth division for a fixed plan.
//!
//! For hop-by-hop transmission each link is independent: minimizing
//! `sum_b w_b / rho_b` under `sum_b rho_b <= xi` has the closed form
//! `rho_b = xi * sqrt(w_b) / sum_b' sqrt(w_b')`. The closed form is the
//! production path; a bisection on the dual multiplier ships alongside it
//! as an independent verifier.
//!
//! For minimum-rate transmission the decision variable is each task's path
//! rate `psi_b`. Giving a task more than its path minimum on any link only
//! burns capacity, so the problem reduces to a separable convex program
//! over `psi` with per-link sum constraints, solved by dual ascent on the
//! link multipliers.

use std::collections::BTreeMap;

use crate::linkgraph::{InterfaceLink, LinkGraph};
use crate::model::{Instance, TaskId};
use crate::plan::{Allocation, Plan};

/// Per-link view of the capacity constraint: who shares the link and with
/// what latency weight.
#[derive(Debug, Clone)]
pub struct LinkLoad {
    pub link: InterfaceLink,
    /// Capacity in bytes/second.
    pub capacity: f64,
    /// (task, weight * size) for every task crossing the link.
    pub users: Vec<(TaskId, f64)>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AllocError {
    #[error("established link {0} has no users")]
    EmptyLink(InterfaceLink),
    #[error("dual ascent failed to converge; KKT residual {residual}")]
    NoConvergence { residual: f64 },
}

/// Floor applied to task weights inside the allocators so zero-weight tasks
/// still receive a positive sliver of bandwidth.
const WEIGHT_FLOOR: f64 = 1e-12;

/// Builds the per-link loads of a plan, in link order.
pub fn link_loads(plan: &Plan, inst: &Instance, g: &LinkGraph) -> Result<Vec<LinkLoad>, AllocError> {
    let mut out = Vec::new();
    for (link, users) in plan.link_users() {
        if users.is_empty() {
            return Err(AllocError::EmptyLink(link));
        }
        out.push(LinkLoad {
            link,
            capacity: g.link_rate(&link),
            users: users
                .iter()
                .map(|&b| {
                    let t = inst.task(b);
                    (b, t.weight.max(WEIGHT_FLOOR) * t.size)
                })
                .collect(),
        });
    }
    Ok(out)
}

/// The step-1 policy: every task on a link gets an equal share, ignoring
/// the saturation margin (shares sum to exactly 1).
pub fn equal_share(plan: &Plan, _inst: &Instance, _g: &LinkGraph) -> Allocation {
    let mut rho = BTreeMap::new();
    for (link, users) in plan.link_users() {
        let share = 1.0 / users.len() as f64;
        for b in users {
            rho.insert((link, b), share);
        }
    }
    Allocation { rho, psi: None }
}

/// Closed-form optimum of one link's allocation problem: shares
/// proportional to the square roots of the latency weights, scaled to xi.
pub fn p2a_link_closed_form(weights: &[f64], xi: f64) -> Vec<f64> {
    let parts: Vec<f64> = weights.iter().map(|w| w.sqrt()).collect();
    let total: f64 = parts.iter().sum();
    let mut rho: Vec<f64> = parts.iter().map(|p| xi * p / total).collect();
    clamp_sum(&mut rho, xi);
    rho
}

/// Bisection on the dual multiplier of the capacity constraint. The
/// stationarity condition gives rho_b = sqrt(w_b / lambda); the multiplier
/// is driven until the shares exactly spend xi.
pub fn p2a_link_bisection(weights: &[f64], xi: f64) -> Vec<f64> {
    let usage = |lambda: f64| -> f64 {
        weights.iter().map(|w| (w / lambda).sqrt()).sum::<f64>() - xi
    };
    // Bracket the root: usage is strictly decreasing in lambda.
    let mut lo = 1e-30;
    let mut hi = 1e30;
    debug_assert!(usage(lo) > 0.0 && usage(hi) < 0.0);
    for _ in 0..200 {
        let mid = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
        if usage(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let lambda = (lo.ln() + hi.ln()).mul_add(0.5, 0.0).exp();
    let mut rho: Vec<f64> = weights.iter().map(|w| (w / lambda).sqrt()).collect();
    clamp_sum(&mut rho, xi);
    rho
}

fn clamp_sum(rho: &mut [f64], xi: f64) {
    // One scaling pass can leave the recomputed sum a few ulps above the
    // budget; repeat until it holds exactly.
    for _ in 0..8 {
        let s: f64 = rho.iter().sum();
        if s <= xi {
            return;
        }
        let f = xi / s;
        for r in rho.iter_mut() {
            *r *= f;
        }
    }
    let s: f64 = rho.iter().sum();
    if s > xi {
        // Pathological rounding; shave the largest share.
        let i = rho
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        rho[i] -= s - xi;
    }
}

fn allocate_p2a_impl(
    plan: &Plan,
    inst: &Instance,
    g: &LinkGraph,
    per_link: impl Fn(&[f64], f64) -> Vec<f64>,
) -> Result<Allocation, AllocError> {
    let xi = inst.saturation;
    let mut rho = BTreeMap::new();
    for load in link_loads(plan, inst, g)? {
        let weights: Vec<f64> = load.users.iter().map(|&(_, w)| w / load.capacity).collect();
        let shares = per_link(&weights, xi);
        for (&(b, _), &s) in load.users.iter().zip(&shares) {
            rho.insert((load.link, b), s);
        }
    }
    Ok(Allocation { rho, psi: None })
}

/// Optimal hop-by-hop allocation, each link solved in closed form.
pub fn allocate_p2a(plan: &Plan, inst: &Instance, g: &LinkGraph) -> Result<Allocation, AllocError> {
    allocate_p2a_impl(plan, inst, g, p2a_link_closed_form)
}

/// Verifier path: same problem solved by bisection on the multiplier.
pub fn allocate_p2a_bisection(
    plan: &Plan,
    inst: &Instance,
    g: &LinkGraph,
) -> Result<Allocation, AllocError> {
    allocate_p2a_impl(plan, inst, g, p2a_link_bisection)
}

const P2B_INTERNAL_TOL: f64 = 1e-10;
const P2B_MAX_ITERATIONS: usize = 10_000;

/// Optimal minimum-rate allocation: dual ascent on per-link multipliers
/// with multiplicative updates and backtracking, then an exact feasibility
/// projection. Tasks served at their origin have no path and receive no
/// allocation entries.
pub fn allocate_p2b(plan: &Plan, inst: &Instance, g: &LinkGraph) -> Result<Allocation, AllocError> {
    let xi = inst.saturation;
    let loads = link_loads(plan, inst, g)?;
    let links: Vec<InterfaceLink> = loads.iter().map(|l| l.link).collect();
    let cap: Vec<f64> = loads.iter().map(|l| xi * l.capacity).collect();
    let link_index: BTreeMap<InterfaceLink, usize> =
        links.iter().enumerate().map(|(i, &l)| (l, i)).collect();

    // Tasks with nonempty paths; beta = weight * size * hops.
    let mut tasks: Vec<TaskId> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for t in &inst.tasks {
        let route = plan.route(t.id);
        if route.path.is_empty() {
            continue;
        }
        tasks.push(t.id);
        beta.push(t.weight.max(WEIGHT_FLOOR) * t.size * route.hops() as f64);
        paths.push(route.path.iter().map(|l| link_index[l]).collect());
    }
    if tasks.is_empty() {
        return Ok(Allocation {
            rho: BTreeMap::new(),
            psi: Some(BTreeMap::new()),
        });
    }

    // Per-link users.
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); links.len()];
    for (ti, path) in paths.iter().enumerate() {
        for &li in path {
            users[li].push(ti);
        }
    }

    // Initialize each multiplier from its link's isolated optimum.
    let mut lambda: Vec<f64> = (0..links.len())
        .map(|li| {
            let s: f64 = users[li].iter().map(|&ti| beta[ti].sqrt()).sum();
            (s / cap[li]).powi(2).max(1e-300)
        })
        .collect();

    let psi_of = |lambda: &[f64]| -> Vec<f64> {
        paths
            .iter()
            .enumerate()
            .map(|(ti, path)| {
                let s: f64 = path.iter().map(|&li| lambda[li]).sum();
                (beta[ti] / s).sqrt()
            })
            .collect()
    };
    let residual_of = |lambda: &[f64], psi: &[f64]| -> f64 {
        let lambda_max = lambda.iter().cloned().fold(0.0_f64, f64::max);
        let mut worst = 0.0_f64;
        for li in 0..links.len() {
            let usage: f64 = users[li].iter().map(|&ti| psi[ti]).sum();
            let ratio = usage / cap[li];
            let primal = (ratio - 1.0).max(0.0);
            // Complementary slackness: an active multiplier must sit on a
            // tight link.
            let comp = (lambda[li] / lambda_max) * (1.0 - ratio).max(0.0);
            worst = worst.max(primal).max(comp);
        }
        worst
    };

    // Cyclic coordinate ascent on the dual: each pass maximizes over one
    // multiplier at a time, exactly, by bisection on the monotone per-link
    // usage equation. The dual value grows monotonically, so no step-size
    // control is needed.
    let mut res = f64::INFINITY;
    for _pass in 0..P2B_MAX_ITERATIONS {
        for li in 0..links.len() {
            // Path weight of each user excluding this link.
            let rest: Vec<(usize, f64)> = users[li]
                .iter()
                .map(|&ti| {
                    let s: f64 = paths[ti]
                        .iter()
                        .filter(|&&l2| l2 != li)
                        .map(|&l2| lambda[l2])
                        .sum();
                    (ti, s)
                })
                .collect();
            let usage_at = |l: f64| -> f64 {
                rest.iter()
                    .map(|&(ti, s)| (beta[ti] / (l + s)).sqrt())
                    .sum()
            };
            if usage_at(0.0) <= cap[li] {
                lambda[li] = 0.0;
                continue;
            }
            let mut lo = 0.0_f64;
            // Isolated optimum is an upper bound: extra path weight only
            // lowers the usage.
            let mut hi = {
                let s: f64 = rest.iter().map(|&(ti, _)| beta[ti].sqrt()).sum();
                (s / cap[li]).powi(2)
            };
            debug_assert!(usage_at(hi) <= cap[li] * (1.0 + 1e-12));
            for _ in 0..128 {
                let mid = 0.5 * (lo + hi);
                if usage_at(mid) > cap[li] {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lambda[li] = hi;
        }
        let psi = psi_of(&lambda);
        res = residual_of(&lambda, &psi);
        if res <= P2B_INTERNAL_TOL {
            break;
        }
    }
    let mut psi = psi_of(&lambda);
    if res > 1e-7 {
        return Err(AllocError::NoConvergence { residual: res });
    }

    // Exact feasibility: scale each task by its worst link overrun, then a
    // final global trim for floating-point dust.
    let mut over = vec![1.0_f64; links.len()];
    for li in 0..links.len() {
        let usage: f64 = users[li].iter().map(|&ti| psi[ti]).sum();
        if usage > cap[li] {
            over[li] = cap[li] / usage;
        }
    }
    for (ti, path) in paths.iter().enumerate() {
        let f = path.iter().map(|&li| over[li]).fold(1.0_f64, f64::min);
        psi[ti] *= f;
    }

    // rho from psi; per-link exact clamp, then psi as the path minimum so
    // psi <= rho * R holds identically.
    let mut rho: BTreeMap<(InterfaceLink, TaskId), f64> = BTreeMap::new();
    for (ti, path) in paths.iter().enumerate() {
        for &li in path {
            rho.insert((links[li], tasks[ti]), psi[ti] / loads[li].capacity);
        }
    }
    for (li, load) in loads.iter().enumerate() {
        let sum: f64 = users[li]
            .iter()
            .map(|&ti| rho[&(load.link, tasks[ti])])
            .sum();
        if sum > xi {
            let f = xi / sum;
            for &ti in &users[li] {
                *rho.get_mut(&(load.link, tasks[ti])).unwrap() *= f;
            }
        }
    }
    let mut psi_map = BTreeMap::new();
    for (ti, path) in paths.iter().enumerate() {
        let p = path
            .iter()
            .map(|&li| rho[&(links[li], tasks[ti])] * loads[li].capacity)
            .fold(f64::INFINITY, f64::min);
        psi_map.insert(tasks[ti], p);
    }

    Ok(Allocation {
        rho,
        psi: Some(psi_map),
    })
}

/// Residual report from checking an allocation against the optimality
/// conditions of its problem (hop-by-hop when `psi` is absent, minimum-rate
/// when present). All residuals are relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub primal: f64,
    pub dual: f64,
    pub stationarity: f64,
    pub complementary: f64,
}

impl KktReport {
    pub fn max_residual(&self) -> f64 {
        self.primal
            .max(self.dual)
            .max(self.stationarity)
            .max(self.complementary)
    }
}

/// Checks primal feasibility, dual feasibility, stationarity, and
/// complementary slackness of an allocation.
pub fn verify_kkt(
    plan: &Plan,
    inst: &Instance,
    g: &LinkGraph,
    alloc: &Allocation,
) -> Result<KktReport, AllocError> {
    match &alloc.psi {
        None => verify_kkt_per_link(plan, inst, g, alloc),
        Some(psi) => verify_kkt_path(plan, inst, g, alloc, psi),
    }
}

fn verify_kkt_per_link(
    plan: &Plan,
    inst: &Instance,
    g: &LinkGraph,
    alloc: &Allocation,
) -> Result<KktReport, AllocError> {
    let xi = inst.saturation;
    let mut primal = 0.0_f64;
    let mut stationarity = 0.0_f64;
    let mut complementary = 0.0_f64;
    for load in link_loads(plan, inst, g)? {
        let mut sum = 0.0;
        let mut grads = Vec::new();
        for &(b, w) in &load.users {
            let r = alloc.rho_for(&load.link, b).unwrap_or(0.0);
            sum += r;
            // Stationarity: w_b / rho_b^2 equal across the link's users.
            grads.push((w / load.capacity) / (r * r));
        }
        primal = primal.max((sum - xi) / xi);
        let lambda = grads.iter().sum::<f64>() / grads.len() as f64;
        for gk in &grads {
            stationarity = stationarity.max((gk - lambda).abs() / lambda);
        }
        // lambda > 0 always here, so the capacity must be tight.
        complementary = complementary.max((xi - sum).max(0.0) / xi);
    }
    Ok(KktReport {
        primal: primal.max(0.0),
        dual: 0.0,
        stationarity,
        complementary,
    })
}

fn verify_kkt_path(
    plan: &Plan,
    inst: &Instance,
    g: &LinkGraph,
    _alloc: &Allocation,
    psi: &BTreeMap<TaskId, f64>,
) -> Result<KktReport, AllocError> {
    let xi = inst.saturation;
    let loads = link_loads(plan, inst, g)?;
    let links: Vec<InterfaceLink> = loads.iter().map(|l| l.link).collect();
    let cap: Vec<f64> = loads.iter().map(|l| xi * l.capacity).collect();
    let link_index: BTreeMap<InterfaceLink, usize> =
        links.iter().enumerate().map(|(i, &l)| (l, i)).collect();

    let mut tasks = Vec::new();
    let mut beta = Vec::new();
    let mut paths: Vec<Vec<usize>> = Vec::new();
    for t in &inst.tasks {
        let route = plan.route(t.id);
        if route.path.is_empty() {
            continue;
        }
        tasks.push(t.id);
        beta.push(t.weight.max(WEIGHT_FLOOR) * t.size * route.hops() as f64);
        paths.push(route.path.iter().map(|l| link_index[l]).collect());
    }
    if tasks.is_empty() {
        return Ok(KktReport {
            primal: 0.0,
            dual: 0.0,
            stationarity: 0.0,
            complementary: 0.0,
        });
    }

    let psi_v: Vec<f64> = tasks.iter().map(|b| psi[b]).collect();
    let usage: Vec<f64> = (0..links.len())
        .map(|li| {
            paths
                .iter()
                .enumerate()
                .filter(|(_, p)| p.contains(&li))
                .map(|(ti, _)| psi_v[ti])
                .sum()
        })
        .collect();

    let mut primal = 0.0_f64;
    for li in 0..links.len() {
        primal = primal.max((usage[li] - cap[li]) / cap[li]);
    }

    // Recover multipliers supported on the tight links by least squares on
    // the stationarity system, then measure the worst violations.
    let tight: Vec<usize> = (0..links.len())
        .filter(|&li| usage[li] >= cap[li] * (1.0 - 1e-6))
        .collect();
    let k = tight.len();
    let grad: Vec<f64> = (0..tasks.len())
        .map(|ti| beta[ti] / (psi_v[ti] * psi_v[ti]))
        .collect();

    let lambda_tight = if k == 0 {
        Vec::new()
    } else {
        // Normal equations A^T A x = A^T g with A[t][k] = 1 when tight link
        // k lies on task t's path.
        let mut ata = vec![0.0; k * k];
        let mut atg = vec![0.0; k];
        for (ti, path) in paths.iter().enumerate() {
            let cols: Vec<usize> = tight
                .iter()
                .enumerate()
                .filter(|(_, &li)| path.contains(&li))
                .map(|(c, _)| c)
                .collect();
            for &c1 in &cols {
                atg[c1] += grad[ti];
                for &c2 in &cols {
                    ata[c1 * k + c2] += 1.0;
                }
            }
        }
        // Ridge for rank deficiency; the regularization is far below the
        // residual tolerance.
        for d in 0..k {
            ata[d * k + d] += 1e-12;
        }
        solve_spd(&mut ata, &mut atg, k);
        atg
    };

    let mut lambda = vec![0.0_f64; links.len()];
    for (c, &li) in tight.iter().enumerate() {
        lambda[li] = lambda_tight[c];
    }
    let lambda_max = lambda.iter().cloned().fold(1e-300_f64, f64::max);

    let mut dual = 0.0_f64;
    for &l in &lambda {
        dual = dual.max((-l).max(0.0) / lambda_max);
    }
    let mut stationarity = 0.0_f64;
    for (ti, path) in paths.iter().enumerate() {
        let s: f64 = path.iter().map(|&li| lambda[li]).sum();
        stationarity = stationarity.max((s - grad[ti]).abs() / grad[ti]);
    }
    let mut complementary = 0.0_f64;
    for li in 0..links.len() {
        let slack = (cap[li] - usage[li]).max(0.0) / cap[li];
        complementary = complementary.max(lambda[li].max(0.0) / lambda_max * slack);
    }

    Ok(KktReport {
        primal: primal.max(0.0),
        dual,
        stationarity,
        complementary,
    })
}

/// In-place Cholesky-free SPD solve (Gaussian elimination with partial
/// pivoting); k is tiny here.
fn solve_spd(a: &mut [f64], b: &mut [f64], k: usize) {
    for col in 0..k {
        let mut piv = col;
        for r in col + 1..k {
            if a[r * k + col].abs() > a[piv * k + col].abs() {
                piv = r;
            }
        }
        if a[piv * k + col].abs() < 1e-300 {
            continue;
        }
        if piv != col {
            for c in 0..k {
                a.swap(col * k + c, piv * k + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * k + col];
        for c in col..k {
            a[col * k + c] /= d;
        }
        b[col] /= d;
        for r in 0..k {
            if r != col {
                let f = a[r * k + col];
                if f != 0.0 {
                    for c in col..k {
                        a[r * k + c] -= f * a[col * k + c];
                    }
                    b[r] -= f * b[col];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linkgraph::build_link_graph;
    use crate::model::Task;
    use crate::plan::{ServingLocation, TaskRoute};
    use crate::testutil::two_bs_instance;

    #[test]
    fn single_user_gets_everything() {
        let rho = p2a_link_closed_form(&[2.5], 0.9);
        assert_eq!(rho, vec![0.9]);
    }

    #[test]
    fn sqrt_proportional_rule() {
        // w = (1, 4): shares (1/3, 2/3). Verified against a fine grid
        // search over the simplex in the bisection test below.
        let rho = p2a_link_closed_form(&[1.0, 4.0], 1.0);
        assert!((rho[0] - 1.0 / 3.0).abs() < 1e-12);
        assert!((rho[1] - 2.0 / 3.0).abs() < 1e-12);

        // Grid oracle: objective 1/r1 + 4/r2 over r1 + r2 = 1.
        let mut best = (f64::INFINITY, 0.0);
        for i in 1..10_000 {
            let r1 = i as f64 / 10_000.0;
            let obj = 1.0 / r1 + 4.0 / (1.0 - r1);
            if obj < best.0 {
                best = (obj, r1);
            }
        }
        assert!((best.1 - 1.0 / 3.0).abs() < 2e-4);
        let obj_cf = 1.0 / rho[0] + 4.0 / rho[1];
        assert!(obj_cf <= best.0 + 1e-9);
    }

    #[test]
    fn equal_weights_match_equal_share() {
        let rho = p2a_link_closed_form(&[2.0, 2.0, 2.0], 1.0);
        for r in rho {
            assert!((r - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn bisection_agrees_with_closed_form() {
        let cases: Vec<Vec<f64>> = vec![
            vec![1.0],
            vec![1.0, 4.0],
            vec![0.3, 0.3, 0.9, 2.7],
            vec![1e-6, 1.0, 1e3],
        ];
        for w in cases {
            for xi in [0.8, 0.95, 1.0] {
                let a = p2a_link_closed_form(&w, xi);
                let b = p2a_link_bisection(&w, xi);
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() <= 1e-9 * x.max(*y));
                }
            }
        }
    }

    fn shared_path_setup() -> (Instance, crate::linkgraph::LinkGraph, Plan) {
        // 1 -> 2 -> 3 line; task 1 travels both hops, task 2 the second.
        let mut inst = two_bs_instance();
        inst.base_stations.push(crate::model::BaseStation {
            id: 3,
            x_m: 200.0,
            y_m: 0.0,
            interfaces: 2,
            has_server: true,
            storage_capacity: 1e12,
            cloud_attached: false,
        });
        inst.base_stations[0].interfaces = 2;
        inst.base_stations[1].interfaces = 2;
        inst.base_stations[1].has_server = false;
        inst.tasks = vec![
            Task { id: 1, size: 1e9, origin: 1, weight: 0.5 },
            Task { id: 2, size: 1e9, origin: 2, weight: 0.5 },
        ];
        let g = build_link_graph(&inst).unwrap();
        let l12 = InterfaceLink { from: 1, from_if: 1, to: 2, to_if: 1 };
        let l23 = InterfaceLink { from: 2, from_if: 2, to: 3, to_if: 1 };
        let plan = Plan {
            links: vec![l12, l23],
            routes: vec![
                TaskRoute {
                    path: vec![l12, l23],
                    assignment: ServingLocation::Bs(3),
                    cloud_entry: None,
                },
                TaskRoute {
                    path: vec![l23],
                    assignment: ServingLocation::Bs(3),
                    cloud_entry: None,
                },
            ],
        };
        (inst, g, plan)
    }

    #[test]
    fn p2b_single_task_saturates_bottleneck() {
        let (mut inst, g, mut plan) = shared_path_setup();
        inst.tasks.pop();
        plan.routes.pop();
        inst.tasks[0].weight = 1.0;
        let alloc = allocate_p2b(&plan, &inst, &g).unwrap();
        let psi = alloc.psi.as_ref().unwrap()[&1];
        let bottleneck = g.rate(1, 2).min(g.rate(2, 3)) * inst.saturation;
        assert!((psi - bottleneck).abs() < 1e-6 * bottleneck);
        let report = verify_kkt(&plan, &inst, &g, &alloc).unwrap();
        assert!(report.max_residual() <= 1e-7, "{report:?}");
    }

    #[test]
    fn p2b_symmetric_single_link_splits_evenly() {
        // Two tasks of equal weighted volume on one shared link get half
        // the usable capacity each.
        let (mut inst, g, mut plan) = shared_path_setup();
        let l23 = plan.links[1];
        plan.links = vec![l23];
        inst.tasks[0].origin = 2;
        plan.routes[0] = TaskRoute {
            path: vec![l23],
            assignment: ServingLocation::Bs(3),
            cloud_entry: None,
        };
        let alloc = allocate_p2b(&plan, &inst, &g).unwrap();
        let psi = alloc.psi.as_ref().unwrap();
        let half = inst.saturation * g.link_rate(&l23) / 2.0;
        assert!((psi[&1] - half).abs() <= 1e-6 * half);
        assert!((psi[&2] - half).abs() <= 1e-6 * half);
    }

    #[test]
    fn p2b_two_tasks_match_grid_oracle() {
        let (inst, g, plan) = shared_path_setup();
        let alloc = allocate_p2b(&plan, &inst, &g).unwrap();
        let psi = alloc.psi.as_ref().unwrap();
        let report = verify_kkt(&plan, &inst, &g, &alloc).unwrap();
        assert!(report.max_residual() <= 1e-7, "{report:?}");

        // 2-D grid over the shared-link polytope psi1 + psi2 <= xi * R23,
        // psi1 <= xi * R12.
        let xi = inst.saturation;
        let (r12, r23) = (g.rate(1, 2), g.rate(2, 3));
        let (b1, b2) = (0.5 * 1e9 * 2.0, 0.5 * 1e9 * 1.0);
        let obj = |p1: f64, p2: f64| b1 / p1 + b2 / p2;
        let mut best = f64::INFINITY;
        let steps = 2000;
        for i in 1..steps {
            let p1 = (xi * r23) * i as f64 / steps as f64;
            if p1 > xi * r12 {
                break;
            }
            let p2 = xi * r23 - p1;
            if p2 <= 0.0 {
                continue;
            }
            best = best.min(obj(p1, p2));
        }
        let got = obj(psi[&1], psi[&2]);
        assert!(got <= best + best * 2e-3, "got {got}, grid best {best}");
    }

    #[test]
    fn perturbed_allocation_fails_kkt() {
        let (inst, g, plan) = shared_path_setup();
        let mut alloc = allocate_p2a(&plan, &inst, &g).unwrap();
        let report = verify_kkt(&plan, &inst, &g, &alloc).unwrap();
        assert!(report.max_residual() <= 1e-8, "{report:?}");

        let key = *alloc.rho.keys().next().unwrap();
        *alloc.rho.get_mut(&key).unwrap() *= 1.01;
        let report = verify_kkt(&plan, &inst, &g, &alloc).unwrap();
        assert!(
            report.primal > 1e-7 || report.stationarity > 1e-7,
            "{report:?}"
        );
    }

    #[test]
    fn capacity_exact_for_both_solvers() {
        let (inst, g, plan) = shared_path_setup();
        for alloc in [
            allocate_p2a(&plan, &inst, &g).unwrap(),
            allocate_p2b(&plan, &inst, &g).unwrap(),
        ] {
            for (link, users) in plan.link_users() {
                let sum: f64 = users
                    .iter()
                    .filter_map(|&b| alloc.rho_for(&link, b))
                    .sum();
                assert!(sum <= inst.saturation);
            }
            // Path rates never promise more than any link delivers.
            if let Some(psi) = &alloc.psi {
                for (b, &rate) in psi {
                    for l in &plan.route(*b).path {
                        let granted = alloc.rho_for(l, *b).unwrap() * g.link_rate(l);
                        assert!(rate <= granted * (1.0 + 1e-12));
                    }
                }
            }
        }
    }
}
