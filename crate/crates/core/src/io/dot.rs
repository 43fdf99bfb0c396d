//! DOT export of a solved topology: server BSs as circles, plain BSs as
//! squares, cloud-attached BSs flagged with a doubled border and an
//! asterisk, established links as labeled edges with task counts.

use crate::model::Instance;
use crate::plan::Plan;
use crate::units::bytes_to_gb;

/// Byte-deterministic DOT text. Every exported edge corresponds to an
/// established link of the plan.
pub fn export_dot(plan: &Plan, inst: &Instance) -> String {
    let mut out = String::from("digraph plan {\n  rankdir=LR;\n");
    for bs in &inst.base_stations {
        let shape = if bs.has_server { "circle" } else { "box" };
        let mut label = format!("BS{}", bs.id);
        if bs.cloud_attached {
            label.push('*');
        }
        if bs.has_server {
            label.push_str(&format!("\\n{} GB", bytes_to_gb(bs.storage_capacity)));
        }
        let peripheries = if bs.cloud_attached { 2 } else { 1 };
        out.push_str(&format!(
            "  bs{} [shape={shape} peripheries={peripheries} label=\"{label}\"];\n",
            bs.id
        ));
    }
    let users = plan.link_users();
    for link in &plan.links {
        let count = users.get(link).map_or(0, |u| u.len());
        out.push_str(&format!(
            "  bs{} -> bs{} [label=\"{} ×{}\"];\n",
            link.from, link.to, link, count
        ));
    }
    out.push_str("}\n");
    out
}
