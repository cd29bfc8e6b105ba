//! Dense two-phase primal simplex.
//!
//! Problems are stated as `minimize c·x` subject to equality rows, `≤` rows and
//! per-variable bounds (either side may be infinite). Internally every
//! variable is shifted, reflected or split so that the tableau only carries
//! nonnegative columns, and pivoting follows Bland's rule so degenerate
//! problems terminate.

use thiserror::Error;

/// Primal feasibility tolerance on reported solutions.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Reduced-cost threshold for entering columns.
pub const OPTIMALITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("constraint {row} has {got} coefficients, problem has {expected} variables")]
    Dimension {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("variable {0} has lower bound above upper bound")]
    EmptyBounds(usize),
    #[error("non-finite coefficient in problem data")]
    NonFinite,
    #[error("iteration limit of {0} pivots reached")]
    IterationLimit(usize),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarBound {
    pub lower: f64,
    pub upper: f64,
}

impl VarBound {
    pub const NONNEG: VarBound = VarBound {
        lower: 0.0,
        upper: f64::INFINITY,
    };
    pub const FREE: VarBound = VarBound {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn at_most(upper: f64) -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper,
        }
    }

    pub fn at_least(lower: f64) -> Self {
        Self {
            lower,
            upper: f64::INFINITY,
        }
    }

    pub fn between(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }
}

#[derive(Debug, Clone)]
pub struct LpProblem {
    objective: Vec<f64>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    le_rows: Vec<Vec<f64>>,
    le_rhs: Vec<f64>,
    bounds: Vec<VarBound>,
}

impl LpProblem {
    /// New minimization problem; all variables start out nonnegative.
    pub fn minimize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            bounds: vec![VarBound::NONNEG; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn set_bound(&mut self, var: usize, bound: VarBound) {
        self.bounds[var] = bound;
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.eq_rows.push(coeffs);
        self.eq_rhs.push(rhs);
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.le_rows.push(coeffs);
        self.le_rhs.push(rhs);
    }

    pub fn add_ge(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.add_le(coeffs.into_iter().map(|c| -c).collect(), -rhs);
    }

    /// Adds `Σ coeff·x[var] = rhs` from sparse terms.
    pub fn add_eq_terms(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let row = self.dense(terms);
        self.add_eq(row, rhs);
    }

    /// Adds `Σ coeff·x[var] ≤ rhs` from sparse terms.
    pub fn add_le_terms(&mut self, terms: &[(usize, f64)], rhs: f64) {
        let row = self.dense(terms);
        self.add_le(row, rhs);
    }

    fn dense(&self, terms: &[(usize, f64)]) -> Vec<f64> {
        let mut row = vec![0.0; self.num_vars()];
        for &(j, c) in terms {
            row[j] += c;
        }
        row
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |r: &[f64]| r.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let mut worst: f64 = 0.0;
        for (r, b) in self.eq_rows.iter().zip(&self.eq_rhs) {
            worst = worst.max((dot(r) - b).abs());
        }
        for (r, b) in self.le_rows.iter().zip(&self.le_rhs) {
            worst = worst.max(dot(r) - b);
        }
        for (v, bd) in x.iter().zip(&self.bounds) {
            worst = worst.max(bd.lower - v).max(v - bd.upper);
        }
        worst
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let rows = self.eq_rows.iter().chain(&self.le_rows);
        for (i, r) in rows.enumerate() {
            if r.len() != n {
                return Err(LpError::Dimension {
                    row: i,
                    got: r.len(),
                    expected: n,
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(LpError::NonFinite);
            }
        }
        let finite = |v: &f64| v.is_finite();
        if !self.objective.iter().all(finite)
            || !self.eq_rhs.iter().all(finite)
            || !self.le_rhs.iter().all(finite)
        {
            return Err(LpError::NonFinite);
        }
        for (j, b) in self.bounds.iter().enumerate() {
            if b.lower.is_nan() || b.upper.is_nan() || b.lower > b.upper {
                return Err(LpError::EmptyBounds(j));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn solution(&self) -> Option<&[f64]> {
        match self {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }

    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }
}

/// How an original variable is recovered from tableau columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// x = offset + col
    Shift { col: usize, offset: f64 },
    /// x = offset - col
    Reflect { col: usize, offset: f64 },
    /// x = pos - neg
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    width: usize,
    /// `rows x (width + 1)`, last column holds the right-hand side.
    cells: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * (self.width + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width)
    }

    fn pivot(&mut self, r: usize, c: usize, cost: &mut [f64]) {
        let stride = self.width + 1;
        let p = self.at(r, c);
        for k in 0..stride {
            self.cells[r * stride + k] /= p;
        }
        self.cells[r * stride + c] = 1.0;
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.cells[i * stride + c];
            if f == 0.0 {
                continue;
            }
            for k in 0..stride {
                self.cells[i * stride + k] -= f * self.cells[r * stride + k];
            }
            self.cells[i * stride + c] = 0.0;
        }
        let f = cost[c];
        if f != 0.0 {
            for k in 0..stride {
                cost[k] -= f * self.cells[r * stride + k];
            }
            cost[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn remove_row(&mut self, r: usize) {
        let stride = self.width + 1;
        self.cells.drain(r * stride..(r + 1) * stride);
        self.basis.remove(r);
        self.rows -= 1;
    }

    /// Runs Bland-rule simplex on `cost` (reduced costs, last entry is the
    /// negated objective value) over the columns flagged in `active`.
    fn optimize(&mut self, cost: &mut [f64], active: &[bool], limit: usize) -> Result<bool, LpError> {
        for _ in 0..limit {
            let entering = (0..self.width).find(|&j| active[j] && cost[j] < -OPTIMALITY_TOL);
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, c);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leave = match leave {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                        if ratio < bratio && !tie
                            || tie && self.basis[r] < self.basis[br]
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c, cost),
            }
            if !cost[self.width].is_finite() {
                return Err(LpError::NumericalBreakdown("non-finite objective".into()));
            }
        }
        Err(LpError::IterationLimit(limit))
    }
}

/// Solves the problem. Identical input always yields identical output.
pub fn solve_lp(problem: &LpProblem) -> Result<LpOutcome, LpError> {
    problem.validate()?;
    let n = problem.num_vars();

    // Column layout for the structural variables.
    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut bound_rows: Vec<(usize, f64)> = Vec::new();
    for b in &problem.bounds {
        match (b.lower.is_finite(), b.upper.is_finite()) {
            (true, _) => {
                maps.push(VarMap::Shift {
                    col: ncols,
                    offset: b.lower,
                });
                if b.upper.is_finite() {
                    bound_rows.push((ncols, b.upper - b.lower));
                }
                ncols += 1;
            }
            (false, true) => {
                maps.push(VarMap::Reflect {
                    col: ncols,
                    offset: b.upper,
                });
                ncols += 1;
            }
            (false, false) => {
                maps.push(VarMap::Split {
                    pos: ncols,
                    neg: ncols + 1,
                });
                ncols += 2;
            }
        }
    }

    // Translate a constraint row into tableau columns, folding offsets into rhs.
    let translate = |row: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; ncols];
        let mut rhs = rhs;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, offset } => {
                    out[col] += a;
                    rhs -= a * offset;
                }
                VarMap::Reflect { col, offset } => {
                    out[col] -= a;
                    rhs -= a * offset;
                }
                VarMap::Split { pos, neg } => {
                    out[pos] += a;
                    out[neg] -= a;
                }
            }
        }
        (out, rhs)
    };

    let mut eqs: Vec<(Vec<f64>, f64)> = problem
        .eq_rows
        .iter()
        .zip(&problem.eq_rhs)
        .map(|(r, &b)| translate(r, b))
        .collect();
    let mut les: Vec<(Vec<f64>, f64)> = problem
        .le_rows
        .iter()
        .zip(&problem.le_rhs)
        .map(|(r, &b)| translate(r, b))
        .collect();
    for &(col, ub) in &bound_rows {
        let mut r = vec![0.0; ncols];
        r[col] = 1.0;
        les.push((r, ub));
    }

    let nslack = les.len();
    let m = eqs.len() + nslack;
    // Columns: structural | slacks | artificials (one per row that needs it).
    let slack0 = ncols;
    let mut needs_art = Vec::with_capacity(m);
    let mut rows: Vec<(Vec<f64>, Option<f64>, f64)> = Vec::with_capacity(m);
    for (r, b) in eqs.drain(..) {
        rows.push((r, None, b));
    }
    for (r, b) in les.drain(..) {
        rows.push((r, Some(1.0), b));
    }
    for (r, slack, b) in rows.iter_mut() {
        if *b < 0.0 {
            r.iter_mut().for_each(|v| *v = -*v);
            *b = -*b;
            if let Some(s) = slack.as_mut() {
                *s = -*s;
            }
        }
        needs_art.push(!matches!(slack, Some(s) if *s > 0.0));
    }
    let nart = needs_art.iter().filter(|&&x| x).count();
    let width = ncols + nslack + nart;
    let art0 = ncols + nslack;

    let stride = width + 1;
    let mut cells = vec![0.0; m * stride];
    let mut basis = vec![0usize; m];
    let mut next_art = art0;
    let mut slack_idx = slack0;
    for (i, (r, slack, b)) in rows.iter().enumerate() {
        cells[i * stride..i * stride + ncols].copy_from_slice(r);
        if let Some(s) = slack {
            cells[i * stride + slack_idx] = *s;
            if !needs_art[i] {
                basis[i] = slack_idx;
            }
            slack_idx += 1;
        }
        if needs_art[i] {
            cells[i * stride + next_art] = 1.0;
            basis[i] = next_art;
            next_art += 1;
        }
        cells[i * stride + width] = *b;
    }
    let mut tab = Tableau {
        rows: m,
        width,
        cells,
        basis,
    };
    let limit = 50_000 + 200 * (m + width);

    // Phase 1: minimize the sum of artificials.
    if nart > 0 {
        let mut cost = vec![0.0; stride];
        for c in cost.iter_mut().take(width).skip(art0) {
            *c = 1.0;
        }
        for i in 0..tab.rows {
            if tab.basis[i] >= art0 {
                for k in 0..stride {
                    cost[k] -= tab.at(i, k);
                }
            }
        }
        let active = vec![true; width];
        tab.optimize(&mut cost, &active, limit)?;
        let infeasibility = -cost[width];
        let scale = 1.0 + rows.iter().map(|(_, _, b)| b.abs()).fold(0.0, f64::max);
        if infeasibility > FEASIBILITY_TOL * scale {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining artificials out of the basis or drop redundant rows.
        let mut r = 0;
        while r < tab.rows {
            if tab.basis[r] < art0 {
                r += 1;
                continue;
            }
            let replacement = (0..art0)
                .filter(|&j| tab.at(r, j).abs() > 1e-9)
                .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()));
            match replacement {
                Some(c) => {
                    let mut dummy = vec![0.0; stride];
                    tab.pivot(r, c, &mut dummy);
                    r += 1;
                }
                None => tab.remove_row(r),
            }
        }
    }

    // Phase 2 over structural and slack columns.
    let mut cost = vec![0.0; stride];
    for (j, &c) in problem.objective.iter().enumerate() {
        match maps[j] {
            VarMap::Shift { col, .. } => cost[col] += c,
            VarMap::Reflect { col, .. } => cost[col] -= c,
            VarMap::Split { pos, neg } => {
                cost[pos] += c;
                cost[neg] -= c;
            }
        }
    }
    for i in 0..tab.rows {
        let cb = cost[tab.basis[i]];
        if cb != 0.0 {
            for k in 0..stride {
                cost[k] -= cb * tab.at(i, k);
            }
        }
    }
    let active: Vec<bool> = (0..width).map(|j| j < art0).collect();
    if !tab.optimize(&mut cost, &active, limit)? {
        return Ok(LpOutcome::Unbounded);
    }

    let mut colval = vec![0.0; width];
    for i in 0..tab.rows {
        colval[tab.basis[i]] = tab.rhs(i).max(0.0);
    }
    let x: Vec<f64> = maps
        .iter()
        .map(|m| match *m {
            VarMap::Shift { col, offset } => offset + colval[col],
            VarMap::Reflect { col, offset } => offset - colval[col],
            VarMap::Split { pos, neg } => colval[pos] - colval[neg],
        })
        .collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(LpError::NumericalBreakdown("non-finite solution".into()));
    }
    let violation = problem.max_violation(&x);
    let magnitude = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if violation > 1e-7 * magnitude {
        return Err(LpError::NumericalBreakdown(format!(
            "solution violates constraints by {violation:e}"
        )));
    }
    let value = problem
        .objective
        .iter()
        .zip(&x)
        .map(|(c, v)| c * v)
        .sum();
    Ok(LpOutcome::Optimal { x, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn value(p: &LpProblem) -> f64 {
        solve_lp(p).unwrap().value().expect("optimal")
    }

    #[test]
    fn single_lower_bound() {
        let mut p = LpProblem::minimize(vec![1.0]);
        p.add_ge(vec![1.0], 1.0);
        assert!((value(&p) - 1.0).abs() < 1e-12);

        let mut p = LpProblem::minimize(vec![1.0]);
        p.set_bound(0, VarBound::at_least(1.0));
        assert!((value(&p) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_corner() {
        let mut p = LpProblem::minimize(vec![-1.0, -1.0]);
        p.add_le(vec![1.0, 1.0], 1.0);
        assert!((value(&p) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_bounds_are_infeasible() {
        let mut p = LpProblem::minimize(vec![1.0]);
        p.add_le(vec![1.0], -1.0);
        assert_eq!(solve_lp(&p).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_direction_detected() {
        let mut p = LpProblem::minimize(vec![-1.0, 0.0]);
        p.add_le(vec![-1.0, 1.0], 1.0);
        assert_eq!(solve_lp(&p).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn free_variables() {
        // min |x - 3| modelled with a free x and epigraph t.
        let mut p = LpProblem::minimize(vec![0.0, 1.0]);
        p.set_bound(0, VarBound::FREE);
        p.add_le(vec![1.0, -1.0], 3.0);
        p.add_le(vec![-1.0, -1.0], -3.0);
        let out = solve_lp(&p).unwrap();
        let x = out.solution().unwrap();
        assert!((x[0] - 3.0).abs() < 1e-9);
        assert!(out.value().unwrap().abs() < 1e-9);

        // Free variable that must go negative.
        let mut p = LpProblem::minimize(vec![1.0]);
        p.set_bound(0, VarBound::between(-5.0, 2.0));
        assert!((value(&p) + 5.0).abs() < 1e-12);
        let mut p = LpProblem::minimize(vec![-1.0]);
        p.set_bound(0, VarBound::at_most(-2.0));
        assert!((value(&p) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LpProblem::minimize(vec![1.0, 2.0]);
        p.add_eq(vec![1.0, 1.0], 1.0);
        p.add_eq(vec![2.0, 2.0], 2.0);
        let out = solve_lp(&p).unwrap();
        assert!((out.value().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_instance_terminates() {
        // Beale's classic cycling example for the largest-coefficient rule.
        let mut p = LpProblem::minimize(vec![-0.75, 150.0, -0.02, 6.0]);
        p.add_le(vec![0.25, -60.0, -0.04, 9.0], 0.0);
        p.add_le(vec![0.5, -90.0, -0.02, 3.0], 0.0);
        p.add_le(vec![0.0, 0.0, 1.0, 0.0], 1.0);
        assert!((value(&p) + 0.05).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let mut p = LpProblem::minimize(vec![1.0, 1.0]);
        p.add_le(vec![1.0], 1.0);
        assert!(matches!(solve_lp(&p), Err(LpError::Dimension { .. })));
    }

    #[test]
    fn deterministic_output() {
        let mut p = LpProblem::minimize(vec![1.0, -2.0, 0.5]);
        p.add_le(vec![1.0, 1.0, 1.0], 4.0);
        p.add_eq(vec![1.0, -1.0, 0.0], -1.0);
        let a = solve_lp(&p).unwrap();
        let b = solve_lp(&p).unwrap();
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
