//! The step-1 MILP: variables, linear rows, and the linearized equal-share
//! objective. The builder emits the complete model; solvers may exploit
//! provably redundant structure but the model itself stays faithful so it
//! can be introspected and exported.

use std::collections::BTreeMap;

use crate::linkgraph::{InterfaceLink, LinkGraph};
use crate::model::{BsId, Instance, TaskId};
use crate::plan::{Plan, ServingLocation};

/// Variable identity within the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarRef {
    /// Link established.
    X(InterfaceLink),
    /// Task routed over link.
    XTask(InterfaceLink, TaskId),
    /// Task served at BS.
    YBs(BsId, TaskId),
    /// Task served in the cloud.
    YCloud(TaskId),
    /// Task departs to the cloud through BS.
    W(BsId, TaskId),
    /// Number of tasks sharing the link (continuous).
    Z(InterfaceLink),
    /// Linearization product of XTask and Z (continuous).
    U(InterfaceLink, TaskId),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct VarDef {
    pub var: VarRef,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    pub objective: f64,
}

/// Which feasibility rule a row encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstraintTag {
    /// At most one link per ordered BS pair.
    PairSingleLink,
    /// Each interface joins at most one link, in one direction.
    InterfaceSingleUse,
    /// A task may only use established links.
    TaskOnEstablishedLink,
    /// An established link must carry at least one task.
    LinkCarriesTask,
    /// Per-BS, per-task unit flow balance.
    FlowBalance,
    /// Serving requires a co-located server.
    ServeRequiresServer,
    /// Server storage capacity.
    ServerCapacity,
    /// Serving requires the task to arrive (or originate) there.
    ServeRequiresArrival,
    /// Cloud departure requires arrival at the wired BS.
    CloudDepartRequiresArrival,
    /// Cloud serving requires a cloud departure.
    CloudServeRequiresDepart,
    /// Every task is served exactly once.
    ServeExactlyOnce,
    /// Every task leaves its origin, is served there, or departs to cloud.
    OriginDeparture,
    /// Z equals the number of tasks on the link.
    LinkTaskCount,
    /// U <= Zbar * XTask.
    LinearizationCapActive,
    /// U <= Z.
    LinearizationCapCount,
    /// U >= Z - (1 - XTask) * Zbar.
    LinearizationLower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub tag: ConstraintTag,
    pub name: String,
    pub terms: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// Slim copy of the instance data the solvers need, so a built model is
/// self-sufficient.
#[derive(Debug, Clone)]
pub struct ModelContext {
    pub n_bs: usize,
    pub interfaces: Vec<usize>,
    pub origins: Vec<BsId>,
    pub sizes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Per BS: storage in bytes for server BSs, None otherwise.
    pub server_caps: Vec<Option<f64>>,
    pub cloud_attached: Vec<bool>,
    pub cloud_latency: f64,
    /// Ordered feasible directed BS pairs and their rates.
    pub pairs: Vec<(BsId, BsId)>,
    pub pair_rate: Vec<f64>,
}

impl ModelContext {
    pub fn n_tasks(&self) -> usize {
        self.origins.len()
    }

    pub fn pair_index(&self, n: BsId, m: BsId) -> Option<usize> {
        self.pairs.iter().position(|&p| p == (n, m))
    }
}

/// The built step-1 model.
#[derive(Debug, Clone)]
pub struct MilpModel {
    pub vars: Vec<VarDef>,
    pub rows: Vec<Row>,
    pub context: ModelContext,
    index: BTreeMap<VarRef, usize>,
    /// Upper bound used in the linearization rows (the task count).
    pub z_bar: f64,
}

impl MilpModel {
    pub fn var_index(&self, var: VarRef) -> Option<usize> {
        self.index.get(&var).copied()
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn count_family(&self, f: impl Fn(&VarRef) -> bool) -> usize {
        self.vars.iter().filter(|v| f(&v.var)).count()
    }

    pub fn candidate_links(&self) -> Vec<InterfaceLink> {
        self.vars
            .iter()
            .filter_map(|v| match v.var {
                VarRef::X(l) => Some(l),
                _ => None,
            })
            .collect()
    }

    /// Embeds a plan as a point over the model's variables: X/XTask/Y/W from
    /// the plan, Z as the per-link task count, U as XTask * Z.
    pub fn plan_to_point(&self, plan: &Plan) -> Vec<f64> {
        let mut x = vec![0.0; self.vars.len()];
        let users = plan.link_users();
        for (idx, vd) in self.vars.iter().enumerate() {
            match vd.var {
                VarRef::X(l) => {
                    if plan.links.contains(&l) {
                        x[idx] = 1.0;
                    }
                }
                VarRef::XTask(l, b) => {
                    if plan.route(b).path.contains(&l) {
                        x[idx] = 1.0;
                    }
                }
                VarRef::YBs(n, b) => {
                    if plan.route(b).assignment == ServingLocation::Bs(n) {
                        x[idx] = 1.0;
                    }
                }
                VarRef::YCloud(b) => {
                    if plan.route(b).assignment == ServingLocation::Cloud {
                        x[idx] = 1.0;
                    }
                }
                VarRef::W(p, b) => {
                    if plan.route(b).cloud_entry == Some(p) {
                        x[idx] = 1.0;
                    }
                }
                VarRef::Z(l) => {
                    x[idx] = users.get(&l).map_or(0.0, |u| u.len() as f64);
                }
                VarRef::U(l, b) => {
                    if plan.route(b).path.contains(&l) {
                        x[idx] = users.get(&l).map_or(0.0, |u| u.len() as f64);
                    }
                }
            }
        }
        x
    }

    /// Evaluates every row at a point; returns (row index, violation).
    pub fn violated_rows(&self, point: &[f64], tol: f64) -> Vec<(usize, f64)> {
        let mut out = Vec::new();
        for (i, row) in self.rows.iter().enumerate() {
            let lhs: f64 = row.terms.iter().map(|&(j, c)| c * point[j]).sum();
            let viol = match row.sense {
                RowSense::Le => lhs - row.rhs,
                RowSense::Ge => row.rhs - lhs,
                RowSense::Eq => (lhs - row.rhs).abs(),
            };
            if viol > tol {
                out.push((i, viol));
            }
        }
        out
    }

    /// Objective value at a point.
    pub fn objective_at(&self, point: &[f64]) -> f64 {
        self.vars
            .iter()
            .enumerate()
            .map(|(j, v)| v.objective * point[j])
            .sum()
    }
}

/// Builds the linearized fixed-equal-share problem over the instance's
/// candidate links.
pub fn build_p1(inst: &Instance, g: &LinkGraph) -> MilpModel {
    let n_bs = inst.n_bs();
    let n_tasks = inst.n_tasks();
    let links: Vec<InterfaceLink> = g.candidate_links.clone();
    let z_bar = n_tasks as f64;
    let theta = inst.cloud_latency;

    let mut vars: Vec<VarDef> = Vec::new();
    let mut index: BTreeMap<VarRef, usize> = BTreeMap::new();
    let push = |vars: &mut Vec<VarDef>,
                    index: &mut BTreeMap<VarRef, usize>,
                    var: VarRef,
                    kind: VarKind,
                    upper: f64,
                    objective: f64| {
        index.insert(var, vars.len());
        vars.push(VarDef {
            var,
            kind,
            lower: 0.0,
            upper,
            objective,
        });
    };

    for &l in &links {
        push(&mut vars, &mut index, VarRef::X(l), VarKind::Binary, 1.0, 0.0);
    }
    for &l in &links {
        for b in 1..=n_tasks {
            push(
                &mut vars,
                &mut index,
                VarRef::XTask(l, b),
                VarKind::Binary,
                1.0,
                0.0,
            );
        }
    }
    for n in 1..=n_bs {
        for b in 1..=n_tasks {
            push(
                &mut vars,
                &mut index,
                VarRef::YBs(n, b),
                VarKind::Binary,
                1.0,
                0.0,
            );
        }
    }
    for b in 1..=n_tasks {
        push(
            &mut vars,
            &mut index,
            VarRef::YCloud(b),
            VarKind::Binary,
            1.0,
            0.0,
        );
    }
    for p in inst.cloud_bs_ids() {
        for b in 1..=n_tasks {
            let w = inst.task(b).weight;
            push(
                &mut vars,
                &mut index,
                VarRef::W(p, b),
                VarKind::Binary,
                1.0,
                w * theta,
            );
        }
    }
    for &l in &links {
        push(
            &mut vars,
            &mut index,
            VarRef::Z(l),
            VarKind::Continuous,
            z_bar,
            0.0,
        );
    }
    for &l in &links {
        let rate = g.link_rate(&l);
        for b in 1..=n_tasks {
            let t = inst.task(b);
            push(
                &mut vars,
                &mut index,
                VarRef::U(l, b),
                VarKind::Continuous,
                z_bar,
                t.weight * t.size / rate,
            );
        }
    }

    let iv = |var: VarRef| -> usize { *index.get(&var).unwrap() };
    let mut rows: Vec<Row> = Vec::new();

    // At most one established link per ordered feasible BS pair.
    for (n, m) in g.feasible_pairs() {
        let terms: Vec<(usize, f64)> = links
            .iter()
            .filter(|l| l.from == n && l.to == m)
            .map(|&l| (iv(VarRef::X(l)), 1.0))
            .collect();
        rows.push(Row {
            tag: ConstraintTag::PairSingleLink,
            name: format!("pair_{n}_{m}"),
            terms,
            sense: RowSense::Le,
            rhs: 1.0,
        });
    }

    // Each interface joins at most one link, in either role.
    for n in 1..=n_bs {
        for i in 1..=inst.bs(n).interfaces {
            let terms: Vec<(usize, f64)> = links
                .iter()
                .filter(|l| (l.from == n && l.from_if == i) || (l.to == n && l.to_if == i))
                .map(|&l| (iv(VarRef::X(l)), 1.0))
                .collect();
            if terms.is_empty() {
                continue;
            }
            rows.push(Row {
                tag: ConstraintTag::InterfaceSingleUse,
                name: format!("ifc_{n}_{i}"),
                terms,
                sense: RowSense::Le,
                rhs: 1.0,
            });
        }
    }

    // Task-link association, both directions.
    for &l in &links {
        for b in 1..=n_tasks {
            rows.push(Row {
                tag: ConstraintTag::TaskOnEstablishedLink,
                name: format!("assoc_{}_{}_{}_{}_t{}", l.from, l.from_if, l.to, l.to_if, b),
                terms: vec![(iv(VarRef::XTask(l, b)), 1.0), (iv(VarRef::X(l)), -1.0)],
                sense: RowSense::Le,
                rhs: 0.0,
            });
        }
    }
    for &l in &links {
        let mut terms = vec![(iv(VarRef::X(l)), 1.0)];
        for b in 1..=n_tasks {
            terms.push((iv(VarRef::XTask(l, b)), -1.0));
        }
        rows.push(Row {
            tag: ConstraintTag::LinkCarriesTask,
            name: format!("carries_{}_{}_{}_{}", l.from, l.from_if, l.to, l.to_if),
            terms,
            sense: RowSense::Le,
            rhs: 0.0,
        });
    }

    // Unit flow balance per BS and task:
    // inflow + originates = served + outflow + cloud departure.
    for n in 1..=n_bs {
        for b in 1..=n_tasks {
            let mut terms: Vec<(usize, f64)> = Vec::new();
            for &l in &links {
                if l.to == n {
                    terms.push((iv(VarRef::XTask(l, b)), 1.0));
                } else if l.from == n {
                    terms.push((iv(VarRef::XTask(l, b)), -1.0));
                }
            }
            terms.push((iv(VarRef::YBs(n, b)), -1.0));
            if inst.bs(n).cloud_attached {
                terms.push((iv(VarRef::W(n, b)), -1.0));
            }
            let originates = if inst.task(b).origin == n { 1.0 } else { 0.0 };
            rows.push(Row {
                tag: ConstraintTag::FlowBalance,
                name: format!("flow_{n}_t{b}"),
                terms,
                sense: RowSense::Eq,
                rhs: -originates,
            });
        }
    }

    // Server rows.
    for n in 1..=n_bs {
        let server = inst.bs(n).has_server;
        for b in 1..=n_tasks {
            rows.push(Row {
                tag: ConstraintTag::ServeRequiresServer,
                name: format!("srv_{n}_t{b}"),
                terms: vec![(iv(VarRef::YBs(n, b)), 1.0)],
                sense: RowSense::Le,
                rhs: if server { 1.0 } else { 0.0 },
            });
        }
    }
    for n in 1..=n_bs {
        let terms: Vec<(usize, f64)> = (1..=n_tasks)
            .map(|b| (iv(VarRef::YBs(n, b)), inst.task(b).size))
            .collect();
        if terms.is_empty() {
            continue;
        }
        rows.push(Row {
            tag: ConstraintTag::ServerCapacity,
            name: format!("cap_{n}"),
            terms,
            sense: RowSense::Le,
            rhs: inst.bs(n).effective_capacity(),
        });
    }
    for n in 1..=n_bs {
        for b in 1..=n_tasks {
            let mut terms = vec![(iv(VarRef::YBs(n, b)), 1.0)];
            for &l in &links {
                if l.to == n {
                    terms.push((iv(VarRef::XTask(l, b)), -1.0));
                }
            }
            let originates = if inst.task(b).origin == n { 1.0 } else { 0.0 };
            rows.push(Row {
                tag: ConstraintTag::ServeRequiresArrival,
                name: format!("arr_{n}_t{b}"),
                terms,
                sense: RowSense::Le,
                rhs: originates,
            });
        }
    }

    // Cloud rows.
    for p in inst.cloud_bs_ids() {
        for b in 1..=n_tasks {
            let mut terms = vec![(iv(VarRef::W(p, b)), 1.0)];
            for &l in &links {
                if l.to == p {
                    terms.push((iv(VarRef::XTask(l, b)), -1.0));
                }
            }
            let originates = if inst.task(b).origin == p { 1.0 } else { 0.0 };
            rows.push(Row {
                tag: ConstraintTag::CloudDepartRequiresArrival,
                name: format!("wdep_{p}_t{b}"),
                terms,
                sense: RowSense::Le,
                rhs: originates,
            });
        }
    }
    for b in 1..=n_tasks {
        let mut terms = vec![(iv(VarRef::YCloud(b)), 1.0)];
        for p in inst.cloud_bs_ids() {
            terms.push((iv(VarRef::W(p, b)), -1.0));
        }
        rows.push(Row {
            tag: ConstraintTag::CloudServeRequiresDepart,
            name: format!("csrv_t{b}"),
            terms,
            sense: RowSense::Le,
            rhs: 0.0,
        });
    }

    // Completeness: every task served exactly once.
    for b in 1..=n_tasks {
        let mut terms: Vec<(usize, f64)> = (1..=n_bs)
            .map(|n| (iv(VarRef::YBs(n, b)), 1.0))
            .collect();
        terms.push((iv(VarRef::YCloud(b)), 1.0));
        rows.push(Row {
            tag: ConstraintTag::ServeExactlyOnce,
            name: format!("one_t{b}"),
            terms,
            sense: RowSense::Eq,
            rhs: 1.0,
        });
    }

    // Origin departure: leave the origin, serve there, or go to cloud.
    for b in 1..=n_tasks {
        let o = inst.task(b).origin;
        let mut terms: Vec<(usize, f64)> = links
            .iter()
            .filter(|l| l.from == o)
            .map(|&l| (iv(VarRef::XTask(l, b)), 1.0))
            .collect();
        terms.push((iv(VarRef::YBs(o, b)), 1.0));
        if inst.bs(o).cloud_attached {
            terms.push((iv(VarRef::W(o, b)), 1.0));
        }
        rows.push(Row {
            tag: ConstraintTag::OriginDeparture,
            name: format!("origin_t{b}"),
            terms,
            sense: RowSense::Eq,
            rhs: 1.0,
        });
    }

    // Z definition and the four-row linearization of XTask * Z.
    for &l in &links {
        let mut terms = vec![(iv(VarRef::Z(l)), 1.0)];
        for b in 1..=n_tasks {
            terms.push((iv(VarRef::XTask(l, b)), -1.0));
        }
        rows.push(Row {
            tag: ConstraintTag::LinkTaskCount,
            name: format!("zdef_{}_{}_{}_{}", l.from, l.from_if, l.to, l.to_if),
            terms,
            sense: RowSense::Eq,
            rhs: 0.0,
        });
    }
    for &l in &links {
        for b in 1..=n_tasks {
            let lname = format!("{}_{}_{}_{}_t{}", l.from, l.from_if, l.to, l.to_if, b);
            rows.push(Row {
                tag: ConstraintTag::LinearizationCapActive,
                name: format!("ucap1_{lname}"),
                terms: vec![
                    (iv(VarRef::U(l, b)), 1.0),
                    (iv(VarRef::XTask(l, b)), -z_bar),
                ],
                sense: RowSense::Le,
                rhs: 0.0,
            });
            rows.push(Row {
                tag: ConstraintTag::LinearizationCapCount,
                name: format!("ucap2_{lname}"),
                terms: vec![(iv(VarRef::U(l, b)), 1.0), (iv(VarRef::Z(l)), -1.0)],
                sense: RowSense::Le,
                rhs: 0.0,
            });
            rows.push(Row {
                tag: ConstraintTag::LinearizationLower,
                name: format!("ulow_{lname}"),
                terms: vec![
                    (iv(VarRef::U(l, b)), 1.0),
                    (iv(VarRef::Z(l)), -1.0),
                    (iv(VarRef::XTask(l, b)), -z_bar),
                ],
                sense: RowSense::Ge,
                rhs: -z_bar,
            });
        }
    }

    let context = ModelContext {
        n_bs,
        interfaces: inst.base_stations.iter().map(|b| b.interfaces).collect(),
        origins: inst.tasks.iter().map(|t| t.origin).collect(),
        sizes: inst.tasks.iter().map(|t| t.size).collect(),
        weights: inst.tasks.iter().map(|t| t.weight).collect(),
        server_caps: inst
            .base_stations
            .iter()
            .map(|b| if b.has_server { Some(b.storage_capacity) } else { None })
            .collect(),
        cloud_attached: inst.base_stations.iter().map(|b| b.cloud_attached).collect(),
        cloud_latency: theta,
        pairs: g.feasible_pairs(),
        pair_rate: g
            .feasible_pairs()
            .iter()
            .map(|&(n, m)| g.rate(n, m))
            .collect(),
    };

    MilpModel {
        vars,
        rows,
        context,
        index,
        z_bar,
    }
}
