//! Self-contained bounded-variable primal simplex.
//!
//! Solves `min c.x  s.t.  a_i.x (<=|=|>=) b_i,  l <= x <= u` with a dense
//! explicit basis inverse, product-form updates, periodic refactorization,
//! and a two-phase start (artificial columns minimized in phase 1).
//! Dantzig pricing with a mandatory Bland's-rule fallback guards against
//! cycling.
//!
//! Problem sizes here are at most a few thousand rows, where a dense basis
//! inverse is simple and fast enough; sparsity is exploited only in the
//! constraint columns.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowOp {
    Le,
    Eq,
    Ge,
}

/// A linear program in computational form. `cols[j]` holds the sparse
/// column of variable `j`; bounds may be infinite on one side.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    pub n_rows: usize,
    pub cols: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub row_ops: Vec<RowOp>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    /// Values of the structural variables (empty unless Optimal).
    pub x: Vec<f64>,
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimplexError {
    #[error("simplex stalled after {0} iterations despite Bland's rule")]
    NumericalStall(u64),
    #[error("basis became numerically singular")]
    SingularBasis,
}

const EPS: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const PIVOT_TOL: f64 = 1e-8;
const REFACTOR_EVERY: u64 = 256;
const MAX_ITERATIONS: u64 = 200_000;
const DEGENERATE_STREAK_FOR_BLAND: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

struct Tableau {
    m: usize,
    ncols: usize,
    n_struct: usize,
    cols: Vec<Vec<(usize, f64)>>,
    cost: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    rhs: Vec<f64>,
    state: Vec<VarState>,
    basis: Vec<usize>,
    /// Dense basis inverse, row-major m x m.
    binv: Vec<f64>,
    /// Values of the basic variables, by row.
    xb: Vec<f64>,
    iterations: u64,
    pivots_since_refactor: u64,
    bland: bool,
    degenerate_streak: u32,
}

impl Tableau {
    fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic(r) => self.xb[r],
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
        }
    }

    /// w = B^-1 * A_j for a sparse column.
    fn ftran(&self, j: usize, w: &mut [f64]) {
        w.fill(0.0);
        for &(row, coef) in &self.cols[j] {
            if coef == 0.0 {
                continue;
            }
            let m = self.m;
            for i in 0..m {
                w[i] += coef * self.binv[i * m + row];
            }
        }
    }

    /// y = (B^-1)^T * c_B, i.e. y_k = sum_i c_B[i] * binv[i][k].
    fn btran_costs(&self, phase1: bool, y: &mut [f64]) {
        let m = self.m;
        y.fill(0.0);
        for i in 0..m {
            let cb = self.var_cost(self.basis[i], phase1);
            if cb == 0.0 {
                continue;
            }
            let row = &self.binv[i * m..(i + 1) * m];
            for k in 0..m {
                y[k] += cb * row[k];
            }
        }
    }

    fn var_cost(&self, j: usize, phase1: bool) -> f64 {
        if phase1 {
            if j >= self.n_struct + self.m_slack_count() {
                1.0
            } else {
                0.0
            }
        } else {
            self.cost[j]
        }
    }

    fn m_slack_count(&self) -> usize {
        self.m
    }

    /// Recomputes the basis inverse and basic values from scratch.
    fn refactorize(&mut self) -> Result<(), SimplexError> {
        let m = self.m;
        // Gauss-Jordan on [B | I].
        let mut mat = vec![0.0; m * 2 * m];
        for (i, &j) in self.basis.iter().enumerate() {
            for &(row, coef) in &self.cols[j] {
                mat[row * 2 * m + i] = coef;
            }
        }
        for i in 0..m {
            mat[i * 2 * m + m + i] = 1.0;
        }
        for col in 0..m {
            // Partial pivoting.
            let mut best = col;
            let mut best_abs = mat[col * 2 * m + col].abs();
            for r in (col + 1)..m {
                let a = mat[r * 2 * m + col].abs();
                if a > best_abs {
                    best_abs = a;
                    best = r;
                }
            }
            if best_abs < 1e-12 {
                return Err(SimplexError::SingularBasis);
            }
            if best != col {
                for k in 0..2 * m {
                    mat.swap(col * 2 * m + k, best * 2 * m + k);
                }
            }
            let piv = mat[col * 2 * m + col];
            for k in 0..2 * m {
                mat[col * 2 * m + k] /= piv;
            }
            for r in 0..m {
                if r == col {
                    continue;
                }
                let f = mat[r * 2 * m + col];
                if f == 0.0 {
                    continue;
                }
                for k in 0..2 * m {
                    mat[r * 2 * m + k] -= f * mat[col * 2 * m + k];
                }
            }
        }
        for i in 0..m {
            for k in 0..m {
                self.binv[i * m + k] = mat[i * 2 * m + m + k];
            }
        }
        self.recompute_xb();
        self.pivots_since_refactor = 0;
        Ok(())
    }

    /// xb = B^-1 (rhs - N x_N).
    fn recompute_xb(&mut self) {
        let m = self.m;
        let mut r = self.rhs.clone();
        for j in 0..self.ncols {
            match self.state[j] {
                VarState::Basic(_) => {}
                _ => {
                    let v = self.nonbasic_value(j);
                    if v != 0.0 {
                        for &(row, coef) in &self.cols[j] {
                            r[row] -= coef * v;
                        }
                    }
                }
            }
        }
        for i in 0..m {
            let mut acc = 0.0;
            let row = &self.binv[i * m..(i + 1) * m];
            for k in 0..m {
                acc += row[k] * r[k];
            }
            self.xb[i] = acc;
        }
    }

    fn objective(&self, phase1: bool) -> f64 {
        let mut obj = 0.0;
        for j in 0..self.ncols {
            let v = match self.state[j] {
                VarState::Basic(r) => self.xb[r],
                VarState::AtLower => self.lower[j],
                VarState::AtUpper => self.upper[j],
            };
            obj += self.var_cost(j, phase1) * v;
        }
        obj
    }

    /// Runs primal simplex with the given objective until optimality.
    fn optimize(&mut self, phase1: bool) -> Result<LpStatus, SimplexError> {
        let m = self.m;
        let mut y = vec![0.0; m];
        let mut w = vec![0.0; m];
        loop {
            if self.iterations >= MAX_ITERATIONS {
                return Err(SimplexError::NumericalStall(self.iterations));
            }
            self.btran_costs(phase1, &mut y);

            // Pricing: most negative rate of change, or Bland's rule
            // (lowest eligible index) when anti-cycling is engaged.
            let mut enter: Option<(usize, f64, bool)> = None; // (var, score, increase)
            for j in 0..self.ncols {
                let (at_lower, eligible) = match self.state[j] {
                    VarState::Basic(_) => continue,
                    VarState::AtLower => (true, self.upper[j] > self.lower[j]),
                    VarState::AtUpper => (false, self.upper[j] > self.lower[j]),
                };
                if !eligible {
                    continue;
                }
                let mut d = self.var_cost(j, phase1);
                for &(row, coef) in &self.cols[j] {
                    d -= y[row] * coef;
                }
                let improving = if at_lower { d < -EPS } else { d > EPS };
                if !improving {
                    continue;
                }
                let score = d.abs();
                if self.bland {
                    enter = Some((j, score, at_lower));
                    break;
                }
                match enter {
                    Some((_, best, _)) if best >= score => {}
                    _ => enter = Some((j, score, at_lower)),
                }
            }

            let Some((q, _, increase)) = enter else {
                return Ok(LpStatus::Optimal);
            };

            self.ftran(q, &mut w);

            // Ratio test: step length before the entering variable's own
            // opposite bound or some basic variable hits a bound. Two-pass:
            // find the tightest step, then take the largest pivot among the
            // near-ties to keep the basis well conditioned.
            let t = if increase { 1.0 } else { -1.0 };
            let own_range = self.upper[q] - self.lower[q];
            let mut blocks: Vec<(usize, f64, f64)> = Vec::new(); // (row, room, |dir|)
            let mut theta = own_range; // may be +inf
            for i in 0..m {
                let dir = -t * w[i]; // movement of basic i per unit step
                let room = if dir > PIVOT_TOL {
                    let u = self.upper[self.basis[i]];
                    if !u.is_finite() {
                        continue;
                    }
                    ((u - self.xb[i]) / dir).max(0.0)
                } else if dir < -PIVOT_TOL {
                    let l = self.lower[self.basis[i]];
                    if !l.is_finite() {
                        continue;
                    }
                    ((self.xb[i] - l) / -dir).max(0.0)
                } else {
                    continue;
                };
                theta = theta.min(room);
                blocks.push((i, room, dir.abs()));
            }
            let leaving: Option<usize> = if theta >= own_range {
                theta = own_range;
                None // bound flip
            } else if self.bland {
                // Anti-cycling discipline: lowest variable index among the
                // minimum-ratio candidates, no pivot-size preference.
                blocks
                    .iter()
                    .filter(|&&(_, room, _)| room <= theta + EPS)
                    .min_by_key(|&&(i, _, _)| self.basis[i])
                    .map(|&(i, _, _)| i)
            } else {
                blocks
                    .iter()
                    .filter(|&&(_, room, _)| room <= theta + EPS)
                    .max_by(|a, b| {
                        a.2.total_cmp(&b.2)
                            .then(self.basis[b.0].cmp(&self.basis[a.0]))
                    })
                    .map(|&(i, _, _)| i)
            };

            if theta.is_infinite() {
                // A bounded-feasibility phase cannot have a true ray; an
                // infinite step on a stale factorization is noise.
                if self.pivots_since_refactor > 0 {
                    self.refactorize()?;
                    self.iterations += 1;
                    continue;
                }
                return Ok(LpStatus::Unbounded);
            }

            self.degenerate_streak = if theta <= EPS {
                self.degenerate_streak + 1
            } else {
                0
            };
            if self.degenerate_streak >= DEGENERATE_STREAK_FOR_BLAND {
                self.bland = true;
            } else if theta > EPS {
                self.bland = false;
            }

            match leaving {
                None => {
                    // Bound flip: q moves across its range, basis unchanged.
                    for i in 0..m {
                        self.xb[i] -= t * theta * w[i];
                    }
                    self.state[q] = if increase {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                }
                Some(r) => {
                    let pivot = w[r];
                    if pivot.abs() < PIVOT_TOL {
                        // Numerically bad pivot; refactorize and retry.
                        self.refactorize()?;
                        self.iterations += 1;
                        continue;
                    }
                    let leave_var = self.basis[r];
                    let new_q_val = self.nonbasic_value(q) + t * theta;
                    for i in 0..m {
                        self.xb[i] -= t * theta * w[i];
                    }
                    // Departing variable ends at whichever bound it hit.
                    let dir = -t * w[r];
                    self.state[leave_var] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.basis[r] = q;
                    self.state[q] = VarState::Basic(r);
                    self.xb[r] = new_q_val;

                    // Product-form update of the dense inverse.
                    let minv = self.m;
                    let (head, tail) = (r * minv, (r + 1) * minv);
                    for k in head..tail {
                        self.binv[k] /= pivot;
                    }
                    for i in 0..minv {
                        if i == r {
                            continue;
                        }
                        let f = w[i];
                        if f == 0.0 {
                            continue;
                        }
                        for k in 0..minv {
                            self.binv[i * minv + k] -= f * self.binv[head + k];
                        }
                    }
                    self.pivots_since_refactor += 1;
                    if self.pivots_since_refactor >= REFACTOR_EVERY {
                        self.refactorize()?;
                    }
                }
            }
            self.iterations += 1;
        }
    }
}


/// Solves the LP. Column layout inside: structurals, then one slack per
/// row, then one artificial per row (artificials are fixed to zero unless
/// phase 1 needs them).
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, SimplexError> {
    let m = lp.n_rows;
    let n = lp.cost.len();
    debug_assert_eq!(lp.cols.len(), n);

    for j in 0..n {
        if lp.lower[j] > lp.upper[j] {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::INFINITY,
                x: Vec::new(),
                iterations: 0,
            });
        }
    }

    // Row equilibration with powers of two: exact in binary floating point,
    // and it keeps mixed-unit rows (bytes next to unit coefficients) from
    // swamping the pricing tolerances.
    let mut row_scale = vec![1.0f64; m];
    for col in &lp.cols {
        for &(i, c) in col {
            row_scale[i] = row_scale[i].max(c.abs());
        }
    }
    for s in &mut row_scale {
        *s = if *s > 0.0 { s.log2().round().exp2() } else { 1.0 };
    }

    let ncols = n + 2 * m;
    let mut cols: Vec<Vec<(usize, f64)>> = Vec::with_capacity(ncols);
    for col in &lp.cols {
        cols.push(
            col.iter()
                .map(|&(i, c)| (i, c / row_scale[i]))
                .collect(),
        );
    }
    let mut cost = lp.cost.clone();
    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();

    // Slacks: row becomes a.x + s = b.
    for (i, op) in lp.row_ops.iter().enumerate() {
        cols.push(vec![(i, 1.0)]);
        cost.push(0.0);
        match op {
            RowOp::Le => {
                lower.push(0.0);
                upper.push(f64::INFINITY);
            }
            RowOp::Ge => {
                lower.push(f64::NEG_INFINITY);
                upper.push(0.0);
            }
            RowOp::Eq => {
                lower.push(0.0);
                upper.push(0.0);
            }
        }
    }

    // Initial nonbasic values for structurals and slacks; residual decides
    // each row's starting basic variable.
    let mut state = vec![VarState::AtLower; ncols];
    for j in 0..n + m {
        state[j] = if lower[j].is_finite() {
            VarState::AtLower
        } else {
            VarState::AtUpper
        };
    }

    let rhs_scaled: Vec<f64> = lp
        .rhs
        .iter()
        .zip(&row_scale)
        .map(|(r, s)| r / s)
        .collect();
    let mut residual = rhs_scaled.clone();
    for j in 0..n {
        let v = match state[j] {
            VarState::AtLower => lower[j],
            _ => upper[j],
        };
        if v != 0.0 {
            for &(row, coef) in &cols[j] {
                residual[row] -= coef * v;
            }
        }
    }

    let mut basis = Vec::with_capacity(m);
    let mut xb = vec![0.0; m];
    let mut need_phase1 = false;

    for i in 0..m {
        let slack = n + i;
        let r = residual[i];
        // Can the slack alone absorb the residual?
        let fits = r >= lower[slack] - FEAS_TOL && r <= upper[slack] + FEAS_TOL;
        // Artificial column for this row: sign chosen so its value is >= 0.
        if fits {
            basis.push(slack);
            state[slack] = VarState::Basic(i);
            xb[i] = r;
            cols.push(vec![(i, 1.0)]);
            cost.push(0.0);
            lower.push(0.0);
            upper.push(0.0);
            state[n + m + i] = VarState::AtLower;
        } else {
            // Put the slack at its nearest bound, artificial covers the rest.
            let sval = if r < lower[slack] {
                lower[slack]
            } else {
                upper[slack]
            };
            state[slack] = if sval == lower[slack] {
                VarState::AtLower
            } else {
                VarState::AtUpper
            };
            let gap = r - sval;
            let sign = if gap >= 0.0 { 1.0 } else { -1.0 };
            cols.push(vec![(i, sign)]);
            cost.push(0.0);
            lower.push(0.0);
            upper.push(f64::INFINITY);
            basis.push(n + m + i);
            state[n + m + i] = VarState::Basic(i);
            xb[i] = gap.abs();
            need_phase1 = true;
        }
    }

    let mut t = Tableau {
        m,
        ncols,
        n_struct: n,
        cols,
        cost,
        lower,
        upper,
        rhs: rhs_scaled,
        state,
        basis,
        binv: identity(m),
        xb,
        iterations: 0,
        pivots_since_refactor: 0,
        bland: false,
        degenerate_streak: 0,
    };
    // Initial basis columns are +-unit vectors; build the exact inverse.
    for i in 0..m {
        let j = t.basis[i];
        let sign = t.cols[j][0].1;
        t.binv[i * m + i] = 1.0 / sign;
    }

    if need_phase1 {
        match t.optimize(true)? {
            LpStatus::Optimal => {}
            // Phase 1 is bounded below by zero, so this cannot happen.
            LpStatus::Unbounded => return Err(SimplexError::NumericalStall(t.iterations)),
            LpStatus::Infeasible => unreachable!(),
        }
        t.refactorize()?;
        if t.objective(true) > FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                objective: f64::INFINITY,
                x: Vec::new(),
                iterations: t.iterations,
            });
        }
    }

    // Freeze artificials at zero for phase 2. Basic artificials at value
    // zero are harmless: their bounds pin them there.
    for j in n + m..t.ncols {
        t.upper[j] = 0.0;
        t.lower[j] = 0.0;
    }

    let status = t.optimize(false)?;
    if status == LpStatus::Unbounded {
        return Ok(LpSolution {
            status,
            objective: f64::NEG_INFINITY,
            x: Vec::new(),
            iterations: t.iterations,
        });
    }
    t.refactorize()?;

    let mut x = vec![0.0; n];
    for (j, xj) in x.iter_mut().enumerate() {
        *xj = t.nonbasic_value(j);
    }
    let objective = lp
        .cost
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum::<f64>();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective,
        x,
        iterations: t.iterations,
    })
}

fn identity(m: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * m];
    for i in 0..m {
        out[i * m + i] = 1.0;
    }
    out
}
