//! File formats: TOML instance files, JSON plans/allocations/reports, CSV
//! tables, and DOT topology export. All formats are versioned and
//! byte-deterministic for fixed inputs.

mod dot;
mod instance;
mod report;

pub use dot::export_dot;
pub use instance::{
    from_instance, load_instance_str, parse_instance_file, serialize_instance_file, to_instance,
    BaseStationSection, InstanceFile, InstanceFileError, LinkModelSection, MetaSection,
    RateOverrideSection, ServerSection, TaskSection, SCHEMA_VERSION,
};
pub use report::{
    allocation_from_json, allocation_to_json, infra_sweep_to_csv, plan_from_json, plan_to_json,
    render_path, report_file, report_from_json, report_to_csv, report_to_json, size_sweep_to_csv,
    AllocationFile, PlanFile, ReportError, ReportFile, StatusFile, TaskRow, Totals,
};
