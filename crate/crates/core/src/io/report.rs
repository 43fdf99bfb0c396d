//! Result serialization: plans and allocations as versioned JSON, latency
//! reports as JSON plus a comma-separated table in the style of the
//! serving-details tables (task, size, initial location, path, latency).

use serde::{Deserialize, Serialize};

use crate::linkgraph::InterfaceLink;
use crate::milp::{SolveOutcome, SolveStatus};
use crate::model::Instance;
use crate::pipeline::{LatencyReport, Policy, TwoStepResult};
use crate::plan::{Allocation, Plan, ServingLocation, TaskRoute};
use crate::units::{bytes_per_sec_to_gbps, bytes_to_gb, fmt_sig, gbps_to_bytes_per_sec};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("json: {0}")]
    Json(String),
    #[error("unsupported schema_version {0}, expected {SCHEMA_VERSION}")]
    SchemaVersion(u32),
}

// ---------------------------------------------------------------- plans --

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub schema_version: u32,
    pub links: Vec<LinkRef>,
    pub routes: Vec<RouteFile>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LinkRef {
    pub n: usize,
    pub i: usize,
    pub m: usize,
    pub j: usize,
}

impl From<InterfaceLink> for LinkRef {
    fn from(l: InterfaceLink) -> Self {
        LinkRef {
            n: l.from,
            i: l.from_if,
            m: l.to,
            j: l.to_if,
        }
    }
}

impl From<LinkRef> for InterfaceLink {
    fn from(r: LinkRef) -> Self {
        InterfaceLink {
            from: r.n,
            from_if: r.i,
            to: r.m,
            to_if: r.j,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RouteFile {
    pub task: usize,
    pub path: Vec<LinkRef>,
    /// "cloud" or a BS id rendered as a number.
    pub assignment: AssignmentFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud_entry: Option<usize>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AssignmentFile {
    Bs(usize),
    Cloud(CloudTag),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudTag {
    Cloud,
}

pub fn plan_to_json(plan: &Plan) -> Result<String, ReportError> {
    let file = PlanFile {
        schema_version: SCHEMA_VERSION,
        links: plan.links.iter().map(|&l| l.into()).collect(),
        routes: plan
            .routes
            .iter()
            .enumerate()
            .map(|(i, r)| RouteFile {
                task: i + 1,
                path: r.path.iter().map(|&l| l.into()).collect(),
                assignment: match r.assignment {
                    ServingLocation::Bs(n) => AssignmentFile::Bs(n),
                    ServingLocation::Cloud => AssignmentFile::Cloud(CloudTag::Cloud),
                },
                cloud_entry: r.cloud_entry,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).map_err(|e| ReportError::Json(e.to_string()))
}

pub fn plan_from_json(text: &str) -> Result<Plan, ReportError> {
    let file: PlanFile =
        serde_json::from_str(text).map_err(|e| ReportError::Json(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(ReportError::SchemaVersion(file.schema_version));
    }
    let mut routes: Vec<(usize, TaskRoute)> = file
        .routes
        .iter()
        .map(|r| {
            (
                r.task,
                TaskRoute {
                    path: r.path.iter().map(|&l| l.into()).collect(),
                    assignment: match r.assignment {
                        AssignmentFile::Bs(n) => ServingLocation::Bs(n),
                        AssignmentFile::Cloud(_) => ServingLocation::Cloud,
                    },
                    cloud_entry: r.cloud_entry,
                },
            )
        })
        .collect();
    routes.sort_by_key(|(task, _)| *task);
    Ok(Plan {
        links: file.links.iter().map(|&l| l.into()).collect(),
        routes: routes.into_iter().map(|(_, r)| r).collect(),
    })
}

// ---------------------------------------------------------- allocations --

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AllocationFile {
    pub schema_version: u32,
    pub rho: Vec<RhoEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi: Option<Vec<PsiEntry>>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RhoEntry {
    pub link: LinkRef,
    pub task: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PsiEntry {
    pub task: usize,
    pub rate_gbps: f64,
}

pub fn allocation_to_json(alloc: &Allocation) -> Result<String, ReportError> {
    let file = AllocationFile {
        schema_version: SCHEMA_VERSION,
        rho: alloc
            .rho
            .iter()
            .map(|(&(l, task), &fraction)| RhoEntry {
                link: l.into(),
                task,
                fraction,
            })
            .collect(),
        psi: alloc.psi.as_ref().map(|psi| {
            psi.iter()
                .map(|(&task, &rate)| PsiEntry {
                    task,
                    rate_gbps: bytes_per_sec_to_gbps(rate),
                })
                .collect()
        }),
    };
    serde_json::to_string_pretty(&file).map_err(|e| ReportError::Json(e.to_string()))
}

pub fn allocation_from_json(text: &str) -> Result<Allocation, ReportError> {
    let file: AllocationFile =
        serde_json::from_str(text).map_err(|e| ReportError::Json(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(ReportError::SchemaVersion(file.schema_version));
    }
    Ok(Allocation {
        rho: file
            .rho
            .iter()
            .map(|e| ((e.link.into(), e.task), e.fraction))
            .collect(),
        psi: file.psi.map(|entries| {
            entries
                .iter()
                .map(|e| (e.task, gbps_to_bytes_per_sec(e.rate_gbps)))
                .collect()
        }),
    })
}

// -------------------------------------------------------------- reports --

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub policy: Policy,
    pub status: StatusFile,
    pub nodes_explored: u64,
    pub tasks: Vec<TaskRow>,
    pub totals: Totals,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StatusFile {
    Optimal,
    TimeLimitWithGap { gap: f64 },
    Infeasible,
}

impl From<&SolveStatus> for StatusFile {
    fn from(s: &SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => StatusFile::Optimal,
            SolveStatus::TimeLimitWithGap(g) => StatusFile::TimeLimitWithGap { gap: *g },
            SolveStatus::Infeasible => StatusFile::Infeasible,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskRow {
    pub task: usize,
    pub size_gb: f64,
    pub origin: usize,
    /// Rendered path, e.g. "2(2)→3(1) 6(3)→Cloud"; "*" for local serving.
    pub path: String,
    pub hops: usize,
    pub latency_hbh_s: f64,
    pub latency_minr_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Totals {
    pub equal_share_hbh: f64,
    pub equal_share_minr: f64,
    pub optimized_hbh: f64,
    pub optimized_minr: f64,
}

/// Renders a task's path the way the serving-details table does: mmWave
/// hops as `n(i)→m(j)`, a final wired hop `p(I+1)→Cloud` for cloud-served
/// tasks, and `*` for tasks served where they originate.
pub fn render_path(inst: &Instance, route_path: &[InterfaceLink], entry: Option<usize>) -> String {
    let mut parts: Vec<String> = route_path.iter().map(|l| l.to_string()).collect();
    if let Some(p) = entry {
        // The wired connection is drawn as one interface past the mmWave
        // budget of the entry BS.
        parts.push(format!("{}({})→Cloud", p, inst.bs(p).interfaces + 1));
    }
    if parts.is_empty() {
        "*".into()
    } else {
        parts.join(" ")
    }
}

pub fn report_file(inst: &Instance, result: &TwoStepResult) -> ReportFile {
    let outcome: &SolveOutcome = &result.outcome;
    let opt: &LatencyReport = &result.optimized_report;
    ReportFile {
        schema_version: SCHEMA_VERSION,
        policy: result.policy,
        status: (&outcome.status).into(),
        nodes_explored: outcome.nodes_explored,
        tasks: opt
            .tasks
            .iter()
            .map(|t| TaskRow {
                task: t.id,
                size_gb: bytes_to_gb(t.size),
                origin: t.origin,
                path: render_path(
                    inst,
                    &t.path,
                    result.plan.route(t.id).cloud_entry,
                ),
                hops: t.hops,
                latency_hbh_s: t.latency_hbh,
                latency_minr_s: t.latency_minr,
            })
            .collect(),
        totals: Totals {
            equal_share_hbh: result.equal_share_report.total_hbh,
            equal_share_minr: result.equal_share_report.total_minr,
            optimized_hbh: result.optimized_report.total_hbh,
            optimized_minr: result.optimized_report.total_minr,
        },
    }
}

pub fn report_to_json(file: &ReportFile) -> Result<String, ReportError> {
    serde_json::to_string_pretty(file).map_err(|e| ReportError::Json(e.to_string()))
}

pub fn report_from_json(text: &str) -> Result<ReportFile, ReportError> {
    let file: ReportFile =
        serde_json::from_str(text).map_err(|e| ReportError::Json(e.to_string()))?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(ReportError::SchemaVersion(file.schema_version));
    }
    Ok(file)
}

/// Comma-separated serving-details table. Task sizes and latencies use
/// two decimals (matching the reference table layout); the trailing total
/// rows carry six significant digits.
pub fn report_to_csv(file: &ReportFile) -> String {
    let mut out = String::from("task,size_gb,origin,path,latency_s\n");
    for row in &file.tasks {
        let latency = match file.policy {
            Policy::Hbh => row.latency_hbh_s,
            Policy::MinR => row.latency_minr_s,
        };
        out.push_str(&format!(
            "{},{:.2},{},{},{:.2}\n",
            row.task, row.size_gb, row.origin, row.path, latency
        ));
    }
    out.push_str(&format!(
        "total_equal_share_hbh,,,,{}\n",
        fmt_sig(file.totals.equal_share_hbh, 6)
    ));
    out.push_str(&format!(
        "total_equal_share_minr,,,,{}\n",
        fmt_sig(file.totals.equal_share_minr, 6)
    ));
    out.push_str(&format!(
        "total_optimized_hbh,,,,{}\n",
        fmt_sig(file.totals.optimized_hbh, 6)
    ));
    out.push_str(&format!(
        "total_optimized_minr,,,,{}\n",
        fmt_sig(file.totals.optimized_minr, 6)
    ));
    out
}

/// CSV for the task-volume sweep. The gap column is empty for rows the
/// solver proved optimal.
pub fn size_sweep_to_csv(rows: &[crate::pipeline::SizeSweepRow]) -> String {
    let mut out = String::from("scale_percent,equal_share_total_s,optimized_total_s,gap\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_sig(r.scale_percent, 6),
            fmt_sig(r.equal_share_total, 6),
            fmt_sig(r.optimized_total, 6),
            r.gap.map(|g| fmt_sig(g, 6)).unwrap_or_default()
        ));
    }
    out
}

/// CSV for the infrastructure sweep.
pub fn infra_sweep_to_csv(rows: &[crate::pipeline::InfraSweepRow]) -> String {
    let mut out = String::from(
        "interfaces,capacity_factor,equal_share_total_s,optimized_total_s,cloud_served,tasks,gap\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.interfaces,
            fmt_sig(r.capacity_factor, 6),
            fmt_sig(r.equal_share_total, 6),
            fmt_sig(r.optimized_total, 6),
            r.cloud_served,
            r.tasks,
            r.gap.map(|g| fmt_sig(g, 6)).unwrap_or_default()
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::SolveLimits;
    use crate::pipeline::run_two_step;
    use crate::testutil::two_bs_instance;

    #[test]
    fn plan_and_allocation_round_trip() {
        let inst = two_bs_instance();
        let result = run_two_step(&inst, Policy::MinR, &SolveLimits::default()).unwrap();
        let plan_json = plan_to_json(&result.plan).unwrap();
        let plan = plan_from_json(&plan_json).unwrap();
        assert_eq!(plan, result.plan);

        let alloc_json = allocation_to_json(&result.optimized_alloc).unwrap();
        let alloc = allocation_from_json(&alloc_json).unwrap();
        assert_eq!(alloc.rho, result.optimized_alloc.rho);
    }

    #[test]
    fn report_totals_round_trip_exactly() {
        let inst = two_bs_instance();
        let result = run_two_step(&inst, Policy::Hbh, &SolveLimits::default()).unwrap();
        let file = report_file(&inst, &result);
        let json = report_to_json(&file).unwrap();
        let back = report_from_json(&json).unwrap();
        assert_eq!(back.totals.optimized_hbh, file.totals.optimized_hbh);
        assert_eq!(back.totals.equal_share_minr, file.totals.equal_share_minr);
    }

    #[test]
    fn csv_has_header_and_total_rows() {
        let inst = two_bs_instance();
        let result = run_two_step(&inst, Policy::Hbh, &SolveLimits::default()).unwrap();
        let csv = report_to_csv(&report_file(&inst, &result));
        assert!(csv.starts_with("task,size_gb,origin,path,latency_s\n"));
        assert!(csv.contains("total_optimized_hbh"));
        // One data row for the single task.
        assert!(csv.lines().count() >= 6);
    }

    #[test]
    fn empty_report_is_header_only_plus_totals() {
        let file = ReportFile {
            schema_version: SCHEMA_VERSION,
            policy: Policy::Hbh,
            status: StatusFile::Optimal,
            nodes_explored: 1,
            tasks: vec![],
            totals: Totals {
                equal_share_hbh: 0.0,
                equal_share_minr: 0.0,
                optimized_hbh: 0.0,
                optimized_minr: 0.0,
            },
        };
        let csv = report_to_csv(&file);
        assert_eq!(csv.lines().count(), 5); // header + 4 totals
    }
}
