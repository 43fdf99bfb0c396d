//! LP relaxation of the full step-1 model, with partial fixings of the
//! binary families. This is the bound engine the tiny-scale tests compare
//! against; the branch-and-bound solver runs the same simplex over a
//! symmetry-reduced transcription.

use std::collections::BTreeMap;

use super::model::{MilpModel, RowSense, VarKind, VarRef};
use super::simplex::{solve_lp, LinearProgram, LpStatus, RowOp, SimplexError};

/// Partial assignment of binary variables.
#[derive(Debug, Clone, Default)]
pub struct Fixings {
    values: BTreeMap<VarRef, f64>,
}

impl Fixings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fix(&mut self, var: VarRef, value: f64) -> &mut Self {
        self.values.insert(var, value);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (&VarRef, &f64)> {
        self.values.iter()
    }

    /// Fixes every binary variable to its value in a full point (used to
    /// check a candidate plan against the relaxation).
    pub fn from_binary_point(model: &MilpModel, point: &[f64]) -> Self {
        let mut f = Fixings::new();
        for (j, vd) in model.vars.iter().enumerate() {
            if vd.kind == VarKind::Binary {
                f.fix(vd.var, point[j].round());
            }
        }
        f
    }
}

#[derive(Debug, Clone)]
pub enum RelaxOutcome {
    Solved { value: f64, point: Vec<f64> },
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RelaxError {
    #[error("fixing targets non-binary variable {0:?}")]
    NonBinaryFixing(String),
    #[error("fixing value {0} is not 0 or 1")]
    NonBinaryValue(f64),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

pub(crate) fn sense_to_op(s: RowSense) -> RowOp {
    match s {
        RowSense::Le => RowOp::Le,
        RowSense::Eq => RowOp::Eq,
        RowSense::Ge => RowOp::Ge,
    }
}

/// Lowers the model rows verbatim into computational form.
pub(crate) fn model_to_lp(model: &MilpModel) -> LinearProgram {
    let n = model.n_vars();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (i, row) in model.rows.iter().enumerate() {
        for &(j, c) in &row.terms {
            cols[j].push((i, c));
        }
    }
    LinearProgram {
        n_rows: model.rows.len(),
        cols,
        cost: model.vars.iter().map(|v| v.objective).collect(),
        lower: model.vars.iter().map(|v| v.lower).collect(),
        upper: model.vars.iter().map(|v| v.upper).collect(),
        row_ops: model.rows.iter().map(|r| sense_to_op(r.sense)).collect(),
        rhs: model.rows.iter().map(|r| r.rhs).collect(),
    }
}

/// Solves the LP with all binaries relaxed to [0, 1] and the given fixings
/// applied as tight bounds.
pub fn solve_lp_relaxation(
    model: &MilpModel,
    fixings: &Fixings,
) -> Result<RelaxOutcome, RelaxError> {
    let mut lp = model_to_lp(model);
    for (var, &value) in fixings.iter() {
        let Some(j) = model.var_index(*var) else {
            return Err(RelaxError::NonBinaryFixing(format!("{var:?}")));
        };
        if model.vars[j].kind != VarKind::Binary {
            return Err(RelaxError::NonBinaryFixing(format!("{var:?}")));
        }
        if value != 0.0 && value != 1.0 {
            return Err(RelaxError::NonBinaryValue(value));
        }
        lp.lower[j] = value;
        lp.upper[j] = value;
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(RelaxOutcome::Solved {
            value: sol.objective,
            point: sol.x,
        }),
        LpStatus::Infeasible => Ok(RelaxOutcome::Infeasible),
        // Every variable in the model is box-bounded, so the relaxation
        // cannot be unbounded.
        LpStatus::Unbounded => Err(RelaxError::Simplex(SimplexError::NumericalStall(
            sol.iterations,
        ))),
    }
}
