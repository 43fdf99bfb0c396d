//! Feasible-link structure and link capacities derived from BS geometry.
//!
//! Feasibility and rates are symmetric per BS pair; candidate links are
//! directed interface pairs (n, i, m, j). The physical rate model is a
//! pluggable reference-distance power law with an explicit override hook so
//! experiments can pin exact rates.

use serde::{Deserialize, Serialize};

use crate::model::{BsId, Instance};

/// Parameters of the link-rate model. Rates in bytes/second, distances in
/// meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModelConfig {
    /// Links longer than this are infeasible regardless of rate.
    pub max_range_m: f64,
    /// Modeled rate at the reference distance (and closer).
    pub rate_at_reference: f64,
    pub reference_distance_m: f64,
    pub path_loss_exponent: f64,
    /// Links whose modeled (or overridden) rate falls below this are
    /// infeasible.
    pub rate_floor: f64,
}

impl LinkModelConfig {
    pub fn check(&self) -> Result<(), String> {
        if !(self.max_range_m > 0.0) {
            return Err("max_range_m must be positive".into());
        }
        if !(self.rate_at_reference > 0.0) {
            return Err("rate_at_reference must be positive".into());
        }
        if !(self.reference_distance_m > 0.0) {
            return Err("reference_distance_m must be positive".into());
        }
        if self.reference_distance_m > self.max_range_m {
            return Err("reference_distance_m must not exceed max_range_m".into());
        }
        if !(self.path_loss_exponent > 0.0) {
            return Err("path_loss_exponent must be positive".into());
        }
        if !(self.rate_floor > 0.0) {
            return Err("rate_floor must be positive".into());
        }
        Ok(())
    }

    /// Modeled rate at the given distance: the reference rate up to the
    /// reference distance, then a power-law falloff.
    pub fn rate_at(&self, distance_m: f64) -> f64 {
        if distance_m <= self.reference_distance_m {
            self.rate_at_reference
        } else {
            self.rate_at_reference
                * (self.reference_distance_m / distance_m).powf(self.path_loss_exponent)
        }
    }
}

/// A directed interface-pair link (n, i, m, j): data flows from interface
/// `from_if` of BS `from` into interface `to_if` of BS `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct InterfaceLink {
    pub from: BsId,
    pub from_if: usize,
    pub to: BsId,
    pub to_if: usize,
}

impl std::fmt::Display for InterfaceLink {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}({})→{}({})",
            self.from, self.from_if, self.to, self.to_if
        )
    }
}

/// Feasibility flags and rates for every BS pair, plus the enumeration of
/// candidate directed interface-pair links.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGraph {
    n: usize,
    delta: Vec<bool>,
    rate: Vec<f64>,
    rate_floor: f64,
    pub candidate_links: Vec<InterfaceLink>,
}

impl LinkGraph {
    pub fn n_bs(&self) -> usize {
        self.n
    }

    /// Whether a link between BSs `a` and `b` can be established.
    pub fn delta(&self, a: BsId, b: BsId) -> bool {
        self.delta[(a - 1) * self.n + (b - 1)]
    }

    /// Capacity of the (a, b) pair in bytes/second; 0 where infeasible.
    pub fn rate(&self, a: BsId, b: BsId) -> f64 {
        self.rate[(a - 1) * self.n + (b - 1)]
    }

    pub fn link_rate(&self, l: &InterfaceLink) -> f64 {
        self.rate(l.from, l.to)
    }

    /// Ordered feasible directed BS pairs (n, m), n != m.
    pub fn feasible_pairs(&self) -> Vec<(BsId, BsId)> {
        let mut out = Vec::new();
        for a in 1..=self.n {
            for b in 1..=self.n {
                if a != b && self.delta(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    fn rebuild_candidates(&mut self, interfaces: &[usize]) {
        self.candidate_links.clear();
        for a in 1..=self.n {
            for i in 1..=interfaces[a - 1] {
                for b in 1..=self.n {
                    if a == b || !self.delta(a, b) {
                        continue;
                    }
                    for j in 1..=interfaces[b - 1] {
                        self.candidate_links.push(InterfaceLink {
                            from: a,
                            from_if: i,
                            to: b,
                            to_if: j,
                        });
                    }
                }
            }
        }
        self.candidate_links.sort();
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinkGraphError {
    #[error("base stations {0} and {1} are coincident")]
    CoincidentBs(BsId, BsId),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OverrideError {
    #[error("override table is {0}x{1}, expected {2}x{2}")]
    ShapeMismatch(usize, usize, usize),
    #[error("override table is asymmetric at ({0}, {1})")]
    Asymmetric(BsId, BsId),
    #[error("override assigns a rate to infeasible pair ({0}, {1})")]
    InfeasiblePair(BsId, BsId),
}

/// Computes feasibility and rates from geometry: a pair is feasible when it
/// is within range and its modeled rate clears the floor.
pub fn build_link_graph(inst: &Instance) -> Result<LinkGraph, LinkGraphError> {
    let n = inst.n_bs();
    let cfg = &inst.link_model;
    let mut delta = vec![false; n * n];
    let mut rate = vec![0.0; n * n];
    for a in 1..=n {
        for b in (a + 1)..=n {
            let (ba, bb) = (inst.bs(a), inst.bs(b));
            let d = ((ba.x_m - bb.x_m).powi(2) + (ba.y_m - bb.y_m).powi(2)).sqrt();
            if d == 0.0 {
                return Err(LinkGraphError::CoincidentBs(a, b));
            }
            let r = cfg.rate_at(d);
            if d <= cfg.max_range_m && r >= cfg.rate_floor {
                for (x, y) in [(a, b), (b, a)] {
                    delta[(x - 1) * n + (y - 1)] = true;
                    rate[(x - 1) * n + (y - 1)] = r;
                }
            }
        }
    }
    let interfaces: Vec<usize> = inst.base_stations.iter().map(|b| b.interfaces).collect();
    let mut g = LinkGraph {
        n,
        delta,
        rate,
        rate_floor: cfg.rate_floor,
        candidate_links: Vec::new(),
    };
    g.rebuild_candidates(&interfaces);
    Ok(g)
}

/// Replaces the rate matrix with an explicit table (bytes/second), keeping
/// the existing feasibility structure. Entries below the rate floor remove
/// the link; entries on infeasible pairs are rejected.
pub fn override_rates(
    g: &LinkGraph,
    inst: &Instance,
    table: &[Vec<f64>],
) -> Result<LinkGraph, OverrideError> {
    let n = g.n;
    if table.len() != n || table.iter().any(|row| row.len() != n) {
        let rows = table.len();
        let cols = table.first().map_or(0, |r| r.len());
        return Err(OverrideError::ShapeMismatch(rows, cols, n));
    }
    for a in 1..=n {
        for b in 1..=n {
            let v = table[a - 1][b - 1];
            if v != table[b - 1][a - 1] {
                return Err(OverrideError::Asymmetric(a, b));
            }
            if a != b && v != 0.0 && !g.delta(a, b) {
                return Err(OverrideError::InfeasiblePair(a, b));
            }
        }
    }
    let mut out = g.clone();
    for a in 1..=n {
        for b in 1..=n {
            if a == b {
                continue;
            }
            let idx = (a - 1) * n + (b - 1);
            let v = table[a - 1][b - 1];
            if g.delta(a, b) {
                if v >= g.rate_floor {
                    out.rate[idx] = v;
                } else {
                    out.delta[idx] = false;
                    out.rate[idx] = 0.0;
                }
            }
        }
    }
    let interfaces: Vec<usize> = inst.base_stations.iter().map(|b| b.interfaces).collect();
    out.rebuild_candidates(&interfaces);
    Ok(out)
}

/// Builds the dense symmetric table for [`override_rates`] from the graph's
/// current rates plus sparse per-pair overrides.
pub fn apply_sparse_overrides(
    g: &LinkGraph,
    inst: &Instance,
) -> Result<LinkGraph, OverrideError> {
    if inst.rate_overrides.is_empty() {
        return Ok(g.clone());
    }
    let n = g.n;
    let mut table: Vec<Vec<f64>> = (1..=n)
        .map(|a| (1..=n).map(|b| if a == b { 0.0 } else { g.rate(a, b) }).collect())
        .collect();
    for o in &inst.rate_overrides {
        table[o.n - 1][o.m - 1] = o.rate;
        table[o.m - 1][o.n - 1] = o.rate;
    }
    override_rates(g, inst, &table)
}

impl Instance {
    /// The instance's link graph with any rate overrides applied.
    pub fn link_graph(&self) -> Result<LinkGraph, String> {
        let g = build_link_graph(self).map_err(|e| e.to_string())?;
        apply_sparse_overrides(&g, self).map_err(|e| e.to_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{grid_instance, two_bs_instance};

    #[test]
    fn rate_at_reference_distance() {
        let inst = two_bs_instance(); // BSs exactly reference_distance apart
        let g = build_link_graph(&inst).unwrap();
        assert_eq!(g.rate(1, 2), inst.link_model.rate_at_reference);
        assert!(g.delta(1, 2));
    }

    #[test]
    fn out_of_range_pair_has_no_candidates() {
        let mut inst = two_bs_instance();
        inst.base_stations[1].x_m = inst.link_model.max_range_m * 2.0;
        let g = build_link_graph(&inst).unwrap();
        assert!(!g.delta(1, 2));
        assert!(g.candidate_links.is_empty());
    }

    #[test]
    fn candidate_count_three_bs_two_interfaces() {
        // 3 BSs all mutually in range, I = 2: 6 ordered pairs x 2 x 2
        // interface choices = 24 directed interface pairs. Cross-checked by
        // explicit enumeration.
        let inst = grid_instance(3, 2);
        let g = build_link_graph(&inst).unwrap();
        assert_eq!(g.candidate_links.len(), 24);

        let mut brute = Vec::new();
        for n in 1..=3usize {
            for m in 1..=3usize {
                if n == m {
                    continue;
                }
                for i in 1..=2usize {
                    for j in 1..=2usize {
                        brute.push(InterfaceLink {
                            from: n,
                            from_if: i,
                            to: m,
                            to_if: j,
                        });
                    }
                }
            }
        }
        brute.sort();
        assert_eq!(g.candidate_links, brute);
    }

    #[test]
    fn override_is_idempotent_on_identity() {
        let inst = grid_instance(3, 2);
        let g = build_link_graph(&inst).unwrap();
        let table: Vec<Vec<f64>> = (1..=3)
            .map(|a| {
                (1..=3)
                    .map(|b| if a == b { 0.0 } else { g.rate(a, b) })
                    .collect()
            })
            .collect();
        let g2 = override_rates(&g, &inst, &table).unwrap();
        assert_eq!(g, g2);
    }

    #[test]
    fn override_below_floor_removes_link() {
        let inst = grid_instance(3, 2);
        let g = build_link_graph(&inst).unwrap();
        let mut table: Vec<Vec<f64>> = (1..=3)
            .map(|a| {
                (1..=3)
                    .map(|b| if a == b { 0.0 } else { g.rate(a, b) })
                    .collect()
            })
            .collect();
        table[1][2] = inst.link_model.rate_floor / 2.0;
        table[2][1] = table[1][2];
        let g2 = override_rates(&g, &inst, &table).unwrap();
        assert!(!g2.delta(2, 3));
        assert!(g2
            .candidate_links
            .iter()
            .all(|l| !(l.from == 2 && l.to == 3) && !(l.from == 3 && l.to == 2)));
    }

    #[test]
    fn override_shape_mismatch() {
        let inst = grid_instance(3, 2);
        let g = build_link_graph(&inst).unwrap();
        let table = vec![vec![0.0; 2]; 2];
        assert!(matches!(
            override_rates(&g, &inst, &table),
            Err(OverrideError::ShapeMismatch(2, 2, 3))
        ));
    }

    #[test]
    fn coincident_bs_is_an_error() {
        let mut inst = two_bs_instance();
        inst.base_stations[1].x_m = inst.base_stations[0].x_m;
        inst.base_stations[1].y_m = inst.base_stations[0].y_m;
        assert!(matches!(
            build_link_graph(&inst),
            Err(LinkGraphError::CoincidentBs(1, 2))
        ));
    }
}
