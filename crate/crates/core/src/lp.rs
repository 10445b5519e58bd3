//! Dense bounded-variable simplex.
//!
//! Bounds are handled implicitly: a nonbasic column sits at its lower or
//! upper bound and the ratio test considers bound flips. Every row gets a
//! logical column (`a·x + r = b`) whose bounds encode the relation, so the
//! dual value of a row is read straight off the logical's reduced cost.
//!
//! The tableau is kept explicitly (`B⁻¹[A | I]`). The problems this crate
//! solves have at most a few hundred rows, and the explicit tableau makes
//! the dual simplex used for branch-and-bound warm starts trivial.

use thiserror::Error;

/// Primal feasibility tolerance.
pub const FEAS_TOL: f64 = 1e-7;
/// Reduced-cost optimality tolerance.
pub const OPT_TOL: f64 = 1e-7;
/// Smallest pivot element accepted.
pub const PIVOT_TOL: f64 = 1e-11;
/// Entries below this are treated as zero in ratio tests.
const DROP_TOL: f64 = 1e-9;
/// Consecutive degenerate pivots before falling back to Bland's rule.
const DEGENERATE_STREAK: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `min c·x` subject to row constraints and `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LinearRow>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a column and returns its index.
    pub fn add_var(&mut self, cost: f64, lower: f64, upper: f64) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.rows.push(LinearRow {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Malformed(format!(
                "{} objective entries but {} lower / {} upper bounds",
                n,
                self.lower.len(),
                self.upper.len()
            )));
        }
        for j in 0..n {
            let (l, u) = (self.lower[j], self.upper[j]);
            if !l.is_finite() || !u.is_finite() || !self.objective[j].is_finite() {
                return Err(LpError::Malformed(format!("column {j} has a non-finite bound or cost")));
            }
            if l > u + FEAS_TOL {
                return Err(LpError::Malformed(format!("column {j} has lower {l} > upper {u}")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::Malformed(format!("row {i} has a non-finite rhs")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(LpError::Malformed(format!("row {i} references column {j}")));
                }
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound by `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for row in &self.rows {
            let lhs: f64 = row.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.relation {
                Relation::Le => lhs - row.rhs,
                Relation::Ge => row.rhs - lhs,
                Relation::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Structural values; empty unless optimal.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Row duals `y` with `c - Aᵀy` the reduced costs; empty unless optimal.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
}

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    let mut simplex = Simplex::new(lp)?;
    let status = simplex.solve()?;
    Ok(simplex.solution(status))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColState {
    Basic,
    AtLower,
    AtUpper,
}

/// Outcome of a warm-started reoptimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reopt {
    Optimal,
    Infeasible,
    /// The dual bound reached the supplied cutoff before primal feasibility.
    CutOff,
}

/// A simplex tableau that can be re-solved after bound changes.
#[derive(Debug, Clone)]
pub struct Simplex {
    m: usize,
    n: usize,
    ncol: usize,
    /// Row-major `m × ncol` tableau.
    tab: Vec<f64>,
    rhs: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    cost: Vec<f64>,
    orig_cost: Vec<f64>,
    d: Vec<f64>,
    x: Vec<f64>,
    state: Vec<ColState>,
    basis: Vec<usize>,
    obj: f64,
    iterations: usize,
    max_iterations: usize,
    art_start: usize,
    scratch: Vec<usize>,
    row_map: Vec<usize>,
    orig_rows: usize,
}

impl Simplex {
    /// Builds the initial tableau: structurals at a bound, logicals or
    /// artificials basic.
    pub fn new(lp: &LinearProgram) -> Result<Self, LpError> {
        lp.check()?;
        let n = lp.num_vars();
        let row_map: Vec<usize> = (0..lp.rows.len())
            .filter(|&i| {
                let r = &lp.rows[i];
                r.coeffs.iter().any(|&(_, a)| a != 0.0) || !trivially_satisfied(r)
            })
            .collect();
        let rows: Vec<&LinearRow> = row_map.iter().map(|&i| &lp.rows[i]).collect();
        let m = rows.len();

        let mut lo = Vec::with_capacity(n + 2 * m);
        let mut up = Vec::with_capacity(n + 2 * m);
        lo.extend_from_slice(&lp.lower);
        up.extend_from_slice(&lp.upper);
        for r in &rows {
            let (l, u) = match r.relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lo.push(l);
            up.push(u);
        }

        let mut x = vec![0.0; n + m];
        x[..n].copy_from_slice(&lp.lower);

        // Residual of each row with structurals at their lower bounds.
        let mut resid = Vec::with_capacity(m);
        for r in &rows {
            let lhs: f64 = r.coeffs.iter().map(|&(j, a)| a * x[j]).sum();
            resid.push(r.rhs - lhs);
        }
        let mut art_rows = Vec::new();
        for (i, &rho) in resid.iter().enumerate() {
            let (l, u) = (lo[n + i], up[n + i]);
            if rho < l - FEAS_TOL || rho > u + FEAS_TOL {
                art_rows.push(i);
            }
        }
        let na = art_rows.len();
        let ncol = n + m + na;
        lo.extend(std::iter::repeat(0.0).take(na));
        up.extend(std::iter::repeat(f64::INFINITY).take(na));
        x.extend(std::iter::repeat(0.0).take(na));

        let mut tab = vec![0.0; m * ncol];
        let mut rhs = vec![0.0; m];
        let mut basis = vec![0; m];
        let mut state = vec![ColState::AtLower; ncol];
        let mut art_of_row = vec![usize::MAX; m];
        for (k, &i) in art_rows.iter().enumerate() {
            art_of_row[i] = n + m + k;
        }
        for (i, r) in rows.iter().enumerate() {
            let row = &mut tab[i * ncol..(i + 1) * ncol];
            for &(j, a) in &r.coeffs {
                row[j] += a;
            }
            row[n + i] = 1.0;
            rhs[i] = r.rhs;
            let rho = resid[i];
            if art_of_row[i] == usize::MAX {
                basis[i] = n + i;
                state[n + i] = ColState::Basic;
                x[n + i] = rho;
            } else {
                // Logical parks at its (finite) bound nearest zero; the
                // artificial absorbs the rest with a sign making it ≥ 0.
                let logical_at = 0.0;
                x[n + i] = logical_at;
                state[n + i] = if lo[n + i] == f64::NEG_INFINITY {
                    ColState::AtUpper
                } else {
                    ColState::AtLower
                };
                let gap = rho - logical_at;
                let s = if gap >= 0.0 { 1.0 } else { -1.0 };
                let a = art_of_row[i];
                row[a] = s;
                for v in row.iter_mut() {
                    *v *= s;
                }
                rhs[i] *= s;
                basis[i] = a;
                state[a] = ColState::Basic;
                x[a] = gap.abs();
            }
        }

        let mut orig_cost = vec![0.0; ncol];
        orig_cost[..n].copy_from_slice(&lp.objective);
        let max_iterations = 200 * (m + n) + 5_000;
        let mut s = Self {
            m,
            n,
            ncol,
            tab,
            rhs,
            lo,
            up,
            cost: vec![0.0; ncol],
            orig_cost,
            d: vec![0.0; ncol],
            x,
            state,
            basis,
            obj: 0.0,
            iterations: 0,
            max_iterations,
            art_start: n + m,
            scratch: Vec::with_capacity(ncol),
            row_map,
            orig_rows: lp.rows.len(),
        };
        for j in s.art_start..s.ncol {
            s.cost[j] = 1.0;
        }
        s.price_all();
        Ok(s)
    }

    pub fn num_rows(&self) -> usize {
        self.m
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn objective(&self) -> f64 {
        self.obj
    }

    /// Current structural values.
    pub fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    /// Two-phase solve from the initial basis.
    pub fn solve(&mut self) -> Result<LpStatus, LpError> {
        if self.ncol > self.art_start {
            match self.primal()? {
                PrimalEnd::Optimal => {}
                PrimalEnd::Unbounded => {
                    return Err(LpError::NumericalBreakdown("phase 1 reported unbounded".into()))
                }
            }
            self.recompute_basics();
            let infeas: f64 = (self.art_start..self.ncol).map(|j| self.x[j]).sum();
            if infeas > FEAS_TOL * (1.0 + self.m as f64).sqrt() {
                return Ok(LpStatus::Infeasible);
            }
            self.end_phase_one()?;
        }
        self.cost.copy_from_slice(&self.orig_cost);
        self.price_all();
        match self.primal()? {
            PrimalEnd::Optimal => {
                self.recompute_basics();
                self.obj = self.current_objective();
                Ok(LpStatus::Optimal)
            }
            PrimalEnd::Unbounded => Ok(LpStatus::Unbounded),
        }
    }

    /// Changes the bounds of structural `j` on an optimal tableau; call
    /// [`Simplex::reoptimize`] afterwards.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        assert!(j < self.n, "only structural bounds can change");
        self.lo[j] = lower;
        self.up[j] = upper;
        match self.state[j] {
            ColState::Basic => {}
            st => {
                let target = if st == ColState::AtUpper { upper } else { lower };
                let delta = target - self.x[j];
                if delta != 0.0 {
                    self.x[j] = target;
                    for i in 0..self.m {
                        let a = self.tab[i * self.ncol + j];
                        if a != 0.0 {
                            self.x[self.basis[i]] -= a * delta;
                        }
                    }
                    self.obj = self.current_objective();
                }
            }
        }
    }

    /// Dual simplex from a dual-feasible basis, then a primal cleanup pass.
    pub fn reoptimize(&mut self, cutoff: Option<f64>) -> Result<Reopt, LpError> {
        self.obj = self.current_objective();
        loop {
            if let Some(c) = cutoff {
                if self.obj >= c {
                    return Ok(Reopt::CutOff);
                }
            }
            self.bump()?;
            // Leaving row: largest bound violation, ties to lowest row.
            let mut leave = None;
            let mut worst = FEAS_TOL;
            for i in 0..self.m {
                let b = self.basis[i];
                let v = (self.lo[b] - self.x[b]).max(self.x[b] - self.up[b]);
                if v > worst {
                    worst = v;
                    leave = Some(i);
                }
            }
            let Some(r) = leave else { break };
            let b = self.basis[r];
            let below = self.x[b] < self.lo[b];
            let target = if below { self.lo[b] } else { self.up[b] };

            let row = &self.tab[r * self.ncol..(r + 1) * self.ncol];
            let mut enter = None;
            let mut best = f64::INFINITY;
            for q in 0..self.ncol {
                let st = self.state[q];
                if st == ColState::Basic || self.lo[q] == self.up[q] {
                    continue;
                }
                let a = row[q];
                if a.abs() <= DROP_TOL {
                    continue;
                }
                // Increasing x_q moves x_b by -a.
                let ok = match (st, below) {
                    (ColState::AtLower, true) => a < 0.0,
                    (ColState::AtUpper, true) => a > 0.0,
                    (ColState::AtLower, false) => a > 0.0,
                    (ColState::AtUpper, false) => a < 0.0,
                    _ => false,
                };
                if !ok {
                    continue;
                }
                let ratio = self.d[q].abs() / a.abs();
                if ratio < best - 1e-12 {
                    best = ratio;
                    enter = Some(q);
                }
            }
            let Some(q) = enter else {
                return Ok(Reopt::Infeasible);
            };
            let a = self.tab[r * self.ncol + q];
            if a.abs() < PIVOT_TOL {
                return Err(LpError::NumericalBreakdown(format!("dual pivot {a:e}")));
            }
            let delta = (self.x[b] - target) / a;
            self.move_nonbasic(q, delta);
            self.x[b] = target;
            self.state[b] = if below { ColState::AtLower } else { ColState::AtUpper };
            self.pivot(r, q);
            self.obj = self.current_objective();
        }
        match self.primal()? {
            PrimalEnd::Optimal => {
                self.recompute_basics();
                self.obj = self.current_objective();
                Ok(Reopt::Optimal)
            }
            PrimalEnd::Unbounded => Err(LpError::NumericalBreakdown(
                "bounded problem became unbounded".into(),
            )),
        }
    }

    pub fn solution(&self, status: LpStatus) -> LpSolution {
        if status != LpStatus::Optimal {
            return LpSolution {
                status,
                values: Vec::new(),
                objective: f64::NAN,
                duals: Vec::new(),
                iterations: self.iterations,
            };
        }
        LpSolution {
            status,
            values: self.x[..self.n].to_vec(),
            objective: self.obj,
            duals: {
                let mut y = vec![0.0; self.orig_rows];
                for (i, &orig) in self.row_map.iter().enumerate() {
                    y[orig] = -self.d[self.n + i];
                }
                y
            },
            iterations: self.iterations,
        }
    }

    fn bump(&mut self) -> Result<(), LpError> {
        self.iterations += 1;
        if self.iterations > self.max_iterations {
            return Err(LpError::IterationLimit(self.max_iterations));
        }
        Ok(())
    }

    fn current_objective(&self) -> f64 {
        self.cost.iter().zip(&self.x).map(|(c, v)| c * v).sum()
    }

    /// Reduced costs from scratch: `d = c - c_Bᵀ T`.
    fn price_all(&mut self) {
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.tab[i * self.ncol..(i + 1) * self.ncol];
                for (dj, a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for i in 0..self.m {
            self.d[self.basis[i]] = 0.0;
        }
        self.obj = self.current_objective();
    }

    /// `x_B = B⁻¹b - Σ_N (B⁻¹A_j) x_j`.
    fn recompute_basics(&mut self) {
        for i in 0..self.m {
            let row = &self.tab[i * self.ncol..(i + 1) * self.ncol];
            // B⁻¹b is row i of the logical block applied to the original rhs,
            // which the tableau tracks in `rhs` under the same row operations.
            let mut v = self.rhs[i];
            for j in 0..self.ncol {
                if self.state[j] != ColState::Basic && row[j] != 0.0 {
                    v -= row[j] * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn move_nonbasic(&mut self, q: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.x[q] += delta;
        for i in 0..self.m {
            let a = self.tab[i * self.ncol + q];
            if a != 0.0 {
                self.x[self.basis[i]] -= a * delta;
            }
        }
    }

    fn primal(&mut self) -> Result<PrimalEnd, LpError> {
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= DEGENERATE_STREAK;
            let Some((q, dir)) = self.choose_entering(bland) else {
                return Ok(PrimalEnd::Optimal);
            };
            self.bump()?;

            // Ratio test.
            let mut theta = self.up[q] - self.lo[q];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.m {
                let a = dir * self.tab[i * self.ncol + q];
                if a.abs() <= DROP_TOL {
                    continue;
                }
                let b = self.basis[i];
                let (limit, to_lower) = if a > 0.0 {
                    if self.lo[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    (((self.x[b] - self.lo[b]) / a).max(0.0), true)
                } else {
                    if self.up[b] == f64::INFINITY {
                        continue;
                    }
                    (((self.up[b] - self.x[b]) / -a).max(0.0), false)
                };
                // Strictly smaller step wins; exact ties go to the lowest
                // variable index. A tie with the bound flip keeps the flip.
                let take = match leave {
                    None => limit < theta - 1e-12,
                    Some((r, _)) => {
                        limit < theta - 1e-12 || (limit <= theta + 1e-12 && b < self.basis[r])
                    }
                };
                if take {
                    theta = theta.min(limit);
                    leave = Some((i, to_lower));
                }
            }
            if theta == f64::INFINITY {
                return Ok(PrimalEnd::Unbounded);
            }
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.move_nonbasic(q, dir * theta);
            match leave {
                None => {
                    // Bound flip.
                    self.state[q] = if dir > 0.0 { ColState::AtUpper } else { ColState::AtLower };
                    self.x[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
                }
                Some((r, to_lower)) => {
                    let b = self.basis[r];
                    let piv = self.tab[r * self.ncol + q];
                    if piv.abs() < PIVOT_TOL {
                        return Err(LpError::NumericalBreakdown(format!("primal pivot {piv:e}")));
                    }
                    self.x[b] = if to_lower { self.lo[b] } else { self.up[b] };
                    self.state[b] = if to_lower { ColState::AtLower } else { ColState::AtUpper };
                    self.pivot(r, q);
                }
            }
            self.obj = self.current_objective();
        }
    }

    /// Dantzig pricing, ties to the lowest index; Bland's rule when stalling.
    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = OPT_TOL;
        for j in 0..self.ncol {
            let st = self.state[j];
            if st == ColState::Basic || self.lo[j] == self.up[j] {
                continue;
            }
            let dj = self.d[j];
            let (score, dir) = match st {
                ColState::AtLower => (-dj, 1.0),
                ColState::AtUpper => (dj, -1.0),
                ColState::Basic => unreachable!(),
            };
            if score > best_score {
                if bland {
                    return Some((j, dir));
                }
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let ncol = self.ncol;
        let piv = self.tab[r * ncol + q];
        let inv = 1.0 / piv;
        {
            let row = &mut self.tab[r * ncol..(r + 1) * ncol];
            for v in row.iter_mut() {
                *v *= inv;
            }
            row[q] = 1.0;
        }
        self.rhs[r] *= inv;
        self.scratch.clear();
        for j in 0..ncol {
            if self.tab[r * ncol + j] != 0.0 {
                self.scratch.push(j);
            }
        }
        let (before, rest) = self.tab.split_at_mut(r * ncol);
        let (prow, after) = rest.split_at_mut(ncol);
        let prhs = self.rhs[r];
        for (i, row) in before
            .chunks_exact_mut(ncol)
            .enumerate()
            .chain(after.chunks_exact_mut(ncol).enumerate().map(|(k, c)| (k + r + 1, c)))
        {
            let f = row[q];
            if f != 0.0 {
                for &j in &self.scratch {
                    row[j] -= f * prow[j];
                }
                row[q] = 0.0;
                self.rhs[i] -= f * prhs;
            }
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in &self.scratch {
                self.d[j] -= f * prow[j];
            }
            self.d[q] = 0.0;
        }
        let old = self.basis[r];
        self.basis[r] = q;
        self.state[q] = ColState::Basic;
        if self.state[old] == ColState::Basic {
            self.state[old] = ColState::AtLower;
        }
    }

    /// Fixes artificials at zero, pivots basic ones out where possible and
    /// drops the rest of the artificial block.
    fn end_phase_one(&mut self) -> Result<(), LpError> {
        for r in 0..self.m {
            let b = self.basis[r];
            if b < self.art_start {
                continue;
            }
            let row = &self.tab[r * self.ncol..(r + 1) * self.ncol];
            let mut best = None;
            let mut mag = 1e-7;
            for (j, &a) in row.iter().enumerate().take(self.art_start) {
                if self.state[j] != ColState::Basic && a.abs() > mag {
                    mag = a.abs();
                    best = Some(j);
                }
            }
            if let Some(q) = best {
                // Degenerate pivot: x_b is (numerically) zero.
                let delta = self.x[b] / self.tab[r * self.ncol + q];
                self.move_nonbasic(q, delta);
                self.x[b] = 0.0;
                self.state[b] = ColState::AtLower;
                self.pivot(r, q);
            }
        }
        let keep: Vec<usize> = (0..self.ncol)
            .filter(|&j| j < self.art_start || self.state[j] == ColState::Basic)
            .collect();
        if keep.len() < self.ncol {
            let new_ncol = keep.len();
            let mut tab = vec![0.0; self.m * new_ncol];
            for i in 0..self.m {
                for (k, &j) in keep.iter().enumerate() {
                    tab[i * new_ncol + k] = self.tab[i * self.ncol + j];
                }
            }
            let mut remap = vec![usize::MAX; self.ncol];
            for (k, &j) in keep.iter().enumerate() {
                remap[j] = k;
            }
            let pick = |v: &Vec<f64>| keep.iter().map(|&j| v[j]).collect::<Vec<_>>();
            self.lo = pick(&self.lo);
            self.up = pick(&self.up);
            self.cost = pick(&self.cost);
            self.orig_cost = pick(&self.orig_cost);
            self.d = pick(&self.d);
            self.x = pick(&self.x);
            self.state = keep.iter().map(|&j| self.state[j]).collect();
            for b in self.basis.iter_mut() {
                *b = remap[*b];
            }
            self.tab = tab;
            self.ncol = new_ncol;
        }
        for j in self.art_start..self.ncol {
            self.lo[j] = 0.0;
            self.up[j] = 0.0;
            self.x[j] = 0.0;
        }
        Ok(())
    }
}

enum PrimalEnd {
    Optimal,
    Unbounded,
}

fn trivially_satisfied(r: &LinearRow) -> bool {
    match r.relation {
        Relation::Le => r.rhs >= -FEAS_TOL,
        Relation::Ge => r.rhs <= FEAS_TOL,
        Relation::Eq => r.rhs.abs() <= FEAS_TOL,
    }
}
