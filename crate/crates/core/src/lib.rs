//! Minimum-latency task-offloading planner for mmWave mesh backhaul
//! networks with heterogeneous edge servers and a remote cloud.
//!
//! The planner works in two steps. Step 1 solves an exact mixed-integer
//! program (with a fixed equal-share bandwidth assumption) that jointly
//! picks the backhaul topology, each task's routing path, and the serving
//! location (edge server or cloud). Step 2 keeps those decisions fixed and
//! optimally re-divides link bandwidth among the tasks, either per link
//! (hop-by-hop transmission) or per path (minimum-rate transmission).
//!
//! Entry points:
//! - [`model`]: instances, plans, and validation.
//! - [`linkgraph`]: feasibility and capacity from BS geometry.
//! - [`milp`]: the step-1 model builder, LP relaxation, branch-and-bound
//!   solver, and brute-force oracle.
//! - [`bwalloc`]: the step-2 bandwidth allocators and KKT verifier.
//! - [`pipeline`]: end-to-end runs, latency evaluation, and sweeps.
//! - [`io`]: instance files, reports, and graph export.
//! - [`generate`]: seeded scenario synthesis.

pub mod bwalloc;
pub mod generate;
pub mod io;
pub mod linkgraph;
pub mod milp;
pub mod model;
pub mod pipeline;
pub mod plan;
pub mod units;

#[doc(hidden)]
pub mod testutil;

pub use linkgraph::{build_link_graph, override_rates, InterfaceLink, LinkGraph, LinkModelConfig};
pub use model::{validate_instance, BaseStation, BsId, Instance, InstanceViolation, Task, TaskId};
pub use plan::{validate_plan, Allocation, Plan, PlanViolation, ServingLocation, TaskRoute};
