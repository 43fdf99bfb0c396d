//! End-to-end orchestration: evaluate plans under both latency metrics,
//! run the two-step approach, and drive the sweep experiments.

use serde::{Deserialize, Serialize};

use crate::bwalloc::{allocate_p2a, allocate_p2b, equal_share, AllocError};
use crate::linkgraph::{InterfaceLink, LinkGraph};
use crate::milp::{
    build_p1, solve_p1_with_progress, Progress, SolveError, SolveLimits, SolveOutcome,
    SolveStatus,
};
use crate::model::{validate_instance, BsId, Instance, InstanceViolation, TaskId};
use crate::plan::{Allocation, Plan, ServingLocation};

/// Which transmission model drives the step-2 allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// Hop-by-hop (store-and-forward): latency is the sum of per-link times.
    Hbh,
    /// Minimum-rate (decode-and-forward): latency is hops x size / path rate.
    MinR,
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Policy::Hbh => write!(f, "hbh"),
            Policy::MinR => write!(f, "minR"),
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hbh" => Ok(Policy::Hbh),
            "minR" | "minr" => Ok(Policy::MinR),
            other => Err(format!("unknown policy '{other}', expected hbh or minR")),
        }
    }
}

/// Latency of one task under both metrics, plus its routing facts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskLatency {
    pub id: TaskId,
    /// Bytes.
    pub size: f64,
    pub origin: BsId,
    pub assignment: ServingLocation,
    pub path: Vec<InterfaceLink>,
    pub hops: usize,
    pub latency_hbh: f64,
    pub latency_minr: f64,
}

/// Per-task latencies and the weighted totals under one allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub tasks: Vec<TaskLatency>,
    pub total_hbh: f64,
    pub total_minr: f64,
}

impl LatencyReport {
    pub fn total(&self, policy: Policy) -> f64 {
        match policy {
            Policy::Hbh => self.total_hbh,
            Policy::MinR => self.total_minr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("allocation has no entry for task {task} on link {link}")]
    MissingAllocation { link: InterfaceLink, task: TaskId },
}

/// Evaluates a plan under an allocation, computing both metrics per task:
/// hop-by-hop sums the per-link times; minimum-rate divides by the path
/// bottleneck (psi when present, else the path minimum of rho * R). The
/// cloud latency is added exactly once for cloud-served tasks.
pub fn evaluate(
    plan: &Plan,
    inst: &Instance,
    g: &LinkGraph,
    alloc: &Allocation,
) -> Result<LatencyReport, EvalError> {
    let mut tasks = Vec::with_capacity(inst.n_tasks());
    let mut total_hbh = 0.0;
    let mut total_minr = 0.0;
    for t in &inst.tasks {
        let route = plan.route(t.id);
        let cloud = route.assignment == ServingLocation::Cloud;
        let theta = if cloud { inst.cloud_latency } else { 0.0 };

        let mut hbh = 0.0;
        let mut bottleneck = f64::INFINITY;
        for l in &route.path {
            let rho = alloc
                .rho_for(l, t.id)
                .ok_or(EvalError::MissingAllocation { link: *l, task: t.id })?;
            let rate = rho * g.link_rate(l);
            hbh += t.size / rate;
            bottleneck = bottleneck.min(rate);
        }
        if let Some(psi) = &alloc.psi {
            if let Some(&p) = psi.get(&t.id) {
                bottleneck = p;
            }
        }
        let minr = if route.path.is_empty() {
            0.0
        } else {
            route.hops() as f64 * t.size / bottleneck
        };

        let latency_hbh = hbh + theta;
        let latency_minr = minr + theta;
        total_hbh += t.weight * latency_hbh;
        total_minr += t.weight * latency_minr;
        tasks.push(TaskLatency {
            id: t.id,
            size: t.size,
            origin: t.origin,
            assignment: route.assignment,
            path: route.path.clone(),
            hops: route.hops(),
            latency_hbh,
            latency_minr,
        });
    }
    Ok(LatencyReport {
        tasks,
        total_hbh,
        total_minr,
    })
}

/// Hop-by-hop view of an evaluation.
pub fn evaluate_hbh(
    plan: &Plan,
    inst: &Instance,
    g: &LinkGraph,
    alloc: &Allocation,
) -> Result<LatencyReport, EvalError> {
    evaluate(plan, inst, g, alloc)
}

/// Minimum-rate view of an evaluation.
pub fn evaluate_minr(
    plan: &Plan,
    inst: &Instance,
    g: &LinkGraph,
    alloc: &Allocation,
) -> Result<LatencyReport, EvalError> {
    evaluate(plan, inst, g, alloc)
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("instance is invalid: {0:?}")]
    InvalidInstance(Vec<InstanceViolation>),
    #[error("link graph: {0}")]
    LinkGraph(String),
    #[error("no routing plan exists for this instance")]
    Unservable,
    #[error("search hit its limit before finding any feasible plan (gap unbounded)")]
    NoIncumbent,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Alloc(#[from] AllocError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Everything produced by one two-step run.
#[derive(Debug, Clone)]
pub struct TwoStepResult {
    pub policy: Policy,
    pub outcome: SolveOutcome,
    pub plan: Plan,
    pub equal_share_alloc: Allocation,
    pub equal_share_report: LatencyReport,
    pub optimized_alloc: Allocation,
    pub optimized_report: LatencyReport,
}

/// Solves step 1, then optimizes bandwidth under the chosen policy and
/// evaluates both the fixed equal-share baseline and the optimized
/// allocation.
pub fn run_two_step(
    inst: &Instance,
    policy: Policy,
    limits: &SolveLimits,
) -> Result<TwoStepResult, PipelineError> {
    run_two_step_with_progress(inst, policy, limits, &mut |_| {})
}

pub fn run_two_step_with_progress(
    inst: &Instance,
    policy: Policy,
    limits: &SolveLimits,
    progress: &mut dyn FnMut(&Progress),
) -> Result<TwoStepResult, PipelineError> {
    let violations = validate_instance(inst);
    if !violations.is_empty() {
        return Err(PipelineError::InvalidInstance(violations));
    }
    let g = inst.link_graph().map_err(PipelineError::LinkGraph)?;
    let model = build_p1(inst, &g);
    let outcome = solve_p1_with_progress(&model, limits, progress)?;
    let plan = match (&outcome.status, outcome.plan.clone()) {
        (SolveStatus::Infeasible, _) => return Err(PipelineError::Unservable),
        (_, None) => return Err(PipelineError::NoIncumbent),
        (_, Some(p)) => p,
    };

    let equal_share_alloc = equal_share(&plan, inst, &g);
    let equal_share_report = evaluate(&plan, inst, &g, &equal_share_alloc)?;
    let optimized_alloc = match policy {
        Policy::Hbh => allocate_p2a(&plan, inst, &g)?,
        Policy::MinR => allocate_p2b(&plan, inst, &g)?,
    };
    let optimized_report = evaluate(&plan, inst, &g, &optimized_alloc)?;

    Ok(TwoStepResult {
        policy,
        outcome,
        plan,
        equal_share_alloc,
        equal_share_report,
        optimized_alloc,
        optimized_report,
    })
}

/// One row of the task-volume sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeSweepRow {
    pub scale_percent: f64,
    pub equal_share_total: f64,
    pub optimized_total: f64,
    /// Optimality gap when the solver stopped at a limit; None when exact.
    pub gap: Option<f64>,
}

/// Re-solves the full two-step pipeline with every task size scaled to
/// `scale/100`, reporting totals under the chosen policy's metric.
/// Assignments may flip between edge and cloud as sizes grow, so step 1 is
/// re-run per scale point.
pub fn sweep_task_size(
    inst: &Instance,
    scale_percents: &[f64],
    policy: Policy,
    limits: &SolveLimits,
) -> Result<Vec<SizeSweepRow>, PipelineError> {
    let mut out = Vec::with_capacity(scale_percents.len());
    for &scale in scale_percents {
        assert!(scale > 0.0, "scale percentages must be positive");
        let scaled = inst.scale_tasks(scale / 100.0);
        let result = run_two_step(&scaled, policy, limits)?;
        out.push(SizeSweepRow {
            scale_percent: scale,
            equal_share_total: result.equal_share_report.total(policy),
            optimized_total: result.optimized_report.total(policy),
            gap: match result.outcome.status {
                SolveStatus::TimeLimitWithGap(g) => Some(g),
                _ => None,
            },
        });
    }
    Ok(out)
}

/// One row of the infrastructure sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfraSweepRow {
    pub interfaces: usize,
    pub capacity_factor: f64,
    pub equal_share_total: f64,
    pub optimized_total: f64,
    pub cloud_served: usize,
    pub tasks: usize,
    /// Optimality gap when the solver stopped at a limit; None when exact.
    pub gap: Option<f64>,
}

/// Re-derives the instance for every (interface count, capacity factor)
/// combination and runs the pipeline. A capacity factor of zero removes
/// the edge servers, forcing every task to the cloud.
pub fn sweep_infrastructure(
    inst: &Instance,
    interface_counts: &[usize],
    capacity_factors: &[f64],
    policy: Policy,
    limits: &SolveLimits,
) -> Result<Vec<InfraSweepRow>, PipelineError> {
    let mut out = Vec::new();
    for &ifc in interface_counts {
        assert!(ifc >= 1, "interface counts must be at least 1");
        for &factor in capacity_factors {
            let derived = inst.with_interfaces(ifc).with_capacity_factor(factor);
            let result = run_two_step(&derived, policy, limits)?;
            let cloud_served = result
                .plan
                .routes
                .iter()
                .filter(|r| r.assignment == ServingLocation::Cloud)
                .count();
            out.push(InfraSweepRow {
                interfaces: ifc,
                capacity_factor: factor,
                equal_share_total: result.equal_share_report.total(policy),
                optimized_total: result.optimized_report.total(policy),
                cloud_served,
                tasks: inst.n_tasks(),
                gap: match result.outcome.status {
                    SolveStatus::TimeLimitWithGap(g) => Some(g),
                    _ => None,
                },
            });
        }
    }
    Ok(out)
}
