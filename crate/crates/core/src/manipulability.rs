//! Whether an observation channel `(A, B)` can hide a relay manipulation.
//!
//! `(A, B)` is manipulable when some balanced `Υ` with nonpositive
//! off-diagonal entries and a positive diagonal entry satisfies `BΥA = 0`;
//! then `Φ′ = I − Υ/max_j Υ_jj` is an attack the node cannot tell apart from
//! a faithful relay.

use crate::error::{Error, Result};
use crate::linalg::{left_nullspace_basis, rank, rref, DEFAULT_RANK_TOL};
use crate::lp::{solve_lp, LpOutcome, LpProblem, VarBound};
use crate::matrix::{l1_norm, RealMatrix};
use crate::stochastic::StochasticMatrix;

/// LP optimal values above this are treated as positive.
pub const ZERO_GATE: f64 = 1e-6;

/// Relative tolerance on the ratio test in the null-space procedure.
pub const RATIO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Algorithm1,
    Algorithm2,
    Both,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Algorithm1 => "algorithm1",
            Method::Algorithm2 => "algorithm2",
            Method::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DpvSearch {
    Found,
    NotFound,
}

#[derive(Debug, Clone)]
pub struct ManipulabilityVerdict {
    pub manipulable: bool,
    pub lp_optimal_value: f64,
    pub witness: Option<RealMatrix>,
    pub induced_attack: Option<StochasticMatrix>,
    pub method: Method,
    pub dpv_found: Option<bool>,
}

fn check_pair(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<()> {
    if b.cols() != a.rows() {
        return Err(Error::Dimension(format!(
            "B has {} columns but A has {} rows",
            b.cols(),
            a.rows()
        )));
    }
    Ok(())
}

/// Solves the certification LP over free `λ, ν ∈ R^|U|` and
/// `Ω ∈ R^{|X1| x |Y1|}`:
///
/// ```text
/// min  Σ_k λ_k − ν_k − [AΩB]_kk
/// s.t. 1 − λ_k ≤ 0
///      ν_k + [AΩB]_kk − λ_k ≤ 0
///      ν_k + [AΩB]_kl ≤ 0          (k ≠ l)
/// ```
///
/// Returns the optimal value and whether it is positive.
pub fn check_algorithm1(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<(f64, bool)> {
    check_pair(a, b)?;
    let (nu, nx, ny) = (a.rows(), a.cols(), b.rows());
    let lam = |k: usize| k;
    let nuv = |k: usize| nu + k;
    let om = |x: usize, y: usize| 2 * nu + x * ny + y;
    let nvars = 2 * nu + nx * ny;

    // [AΩB]_kl = Σ_{x,y} A[k][x] Ω[x][y] B[y][l]
    let aob = |k: usize, l: usize, sign: f64| -> Vec<(usize, f64)> {
        let mut terms = Vec::new();
        for x in 0..nx {
            for y in 0..ny {
                let c = a[(k, x)] * b[(y, l)];
                if c != 0.0 {
                    terms.push((om(x, y), sign * c));
                }
            }
        }
        terms
    };

    let mut obj = vec![0.0; nvars];
    for k in 0..nu {
        obj[lam(k)] += 1.0;
        obj[nuv(k)] -= 1.0;
        for (v, c) in aob(k, k, -1.0) {
            obj[v] += c;
        }
    }
    let mut lp = LpProblem::minimize(obj);
    for v in 0..nvars {
        lp.set_bound(v, VarBound::FREE);
    }
    for k in 0..nu {
        lp.add_le_terms(&[(lam(k), -1.0)], -1.0);
        let mut t = aob(k, k, 1.0);
        t.push((nuv(k), 1.0));
        t.push((lam(k), -1.0));
        lp.add_le_terms(&t, 0.0);
        for l in (0..nu).filter(|&l| l != k) {
            let mut t = aob(k, l, 1.0);
            t.push((nuv(k), 1.0));
            lp.add_le_terms(&t, 0.0);
        }
    }
    match solve_lp(&lp)? {
        LpOutcome::Optimal { value, .. } => Ok((value, value > ZERO_GATE)),
        LpOutcome::Infeasible => Err(Error::Certification(
            "certification LP is infeasible".into(),
        )),
        LpOutcome::Unbounded => Err(Error::Certification(
            "certification LP is unbounded".into(),
        )),
    }
}

/// Searches for a manipulation witness one diagonal entry at a time:
/// maximize `Υ_kk` subject to `BΥA = 0`, zero column sums, `Υ_kl ≤ 0` off
/// the diagonal and `Υ_kk ≤ 1`. Returns the first `Υ` whose optimum is
/// positive.
pub fn find_witness(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<Option<RealMatrix>> {
    check_pair(a, b)?;
    let (nu, nx, ny) = (a.rows(), a.cols(), b.rows());
    let ups = |i: usize, j: usize| i * nu + j;

    let witness_lp = |k: usize| {
        let mut obj = vec![0.0; nu * nu];
        obj[ups(k, k)] = -1.0;
        let mut lp = LpProblem::minimize(obj);
        for i in 0..nu {
            for j in 0..nu {
                // Balance and the off-diagonal sign already force 0 ≤ Υ_jj
                // and Υ_ij ≥ −1; stating them keeps every variable bounded.
                let bound = if i == j {
                    VarBound::between(0.0, 1.0)
                } else {
                    VarBound::between(-1.0, 0.0)
                };
                lp.set_bound(ups(i, j), bound);
            }
        }
        for y in 0..ny {
            for x in 0..nx {
                let mut terms = Vec::new();
                for i in 0..nu {
                    for j in 0..nu {
                        let c = b[(y, i)] * a[(j, x)];
                        if c != 0.0 {
                            terms.push((ups(i, j), c));
                        }
                    }
                }
                lp.add_eq_terms(&terms, 0.0);
            }
        }
        for j in 0..nu {
            let terms: Vec<_> = (0..nu).map(|i| (ups(i, j), 1.0)).collect();
            lp.add_eq_terms(&terms, 0.0);
        }
        lp
    };

    for k in 0..nu {
        match solve_lp(&witness_lp(k))? {
            LpOutcome::Optimal { x, value } if -value > ZERO_GATE => {
                return Ok(Some(tidy_witness(nu, &x)));
            }
            LpOutcome::Optimal { .. } => {}
            other => {
                return Err(Error::Certification(format!(
                    "witness LP for diagonal {k} returned {other:?}"
                )))
            }
        }
    }
    Ok(None)
}

/// Snaps solver noise: tiny entries to zero, off-diagonals to `≤ 0`, and the
/// diagonal to exactly balance its column.
fn tidy_witness(nu: usize, x: &[f64]) -> RealMatrix {
    let mut u = RealMatrix::from_fn(nu, nu, |i, j| {
        let v = x[i * nu + j];
        if v.abs() < 1e-12 || (i != j && v > 0.0) {
            0.0
        } else {
            v
        }
    });
    for j in 0..nu {
        let off: f64 = (0..nu).filter(|&i| i != j).map(|i| u[(i, j)]).sum();
        u[(j, j)] = -off;
    }
    u
}

/// `Φ′ = I − Υ / max_j Υ_jj`.
pub fn witness_to_attack(upsilon: &RealMatrix) -> Result<StochasticMatrix> {
    let (r, c) = upsilon.shape();
    if r != c || r == 0 {
        return Err(Error::Dimension(format!("witness must be square, got {r}x{c}")));
    }
    let d = (0..r).map(|j| upsilon[(j, j)]).fold(f64::NEG_INFINITY, f64::max);
    if !(d > 0.0) {
        return Err(Error::Certification(
            "witness has no positive diagonal entry".into(),
        ));
    }
    let scale = upsilon.max_abs().max(1.0);
    for j in 0..c {
        let sum: f64 = upsilon.column(j).iter().sum();
        if sum.abs() > 1e-8 * scale {
            return Err(Error::Certification(format!(
                "witness column {j} sums to {sum}, expected 0"
            )));
        }
        for i in (0..r).filter(|&i| i != j) {
            if upsilon[(i, j)] > 1e-10 * scale {
                return Err(Error::Certification(format!(
                    "witness entry [{i}][{j}] is positive off the diagonal"
                )));
            }
        }
    }
    let phi = RealMatrix::identity(r).sub(&upsilon.scale(1.0 / d))?;
    StochasticMatrix::from_numerical(phi, 1e-8)
}

/// Looks for a normalized double-polarized vector (one positive entry, one
/// negative entry, zeros elsewhere) in the left null space of `A`.
pub fn dpv_search_algorithm2(a: &StochasticMatrix) -> DpvSearch {
    let u = a.rows();
    let n = u - rank(a, DEFAULT_RANK_TOL);
    if n == 0 {
        return DpvSearch::NotFound;
    }
    if n == u - 1 {
        return DpvSearch::Found;
    }
    let basis = left_nullspace_basis(a, DEFAULT_RANK_TOL);
    let reduced = rref(&basis, DEFAULT_RANK_TOL).reduced;
    // (I  Ῡ): row i of Ῡ is `reduced` row i past the first n columns.
    let tail: Vec<Vec<f64>> = (0..n).map(|i| reduced.row(i)[n..].to_vec()).collect();
    let is_zero = |v: f64| v.abs() <= DEFAULT_RANK_TOL * reduced.max_abs().max(1.0);

    for row in &tail {
        let nonzero: Vec<f64> = row.iter().copied().filter(|&v| !is_zero(v)).collect();
        if nonzero.len() == 1 && nonzero[0] < 0.0 {
            return DpvSearch::Found;
        }
    }
    for i in 0..n {
        for j in (0..n).filter(|&j| j != i) {
            if positively_proportional(&tail[i], &tail[j], is_zero) {
                return DpvSearch::Found;
            }
        }
    }
    DpvSearch::NotFound
}

fn positively_proportional(p: &[f64], q: &[f64], is_zero: impl Fn(f64) -> bool) -> bool {
    let mut ratio: Option<f64> = None;
    for (&x, &y) in p.iter().zip(q) {
        match (is_zero(x), is_zero(y)) {
            (true, true) => continue,
            (false, false) => {
                let r = x / y;
                if r <= 0.0 {
                    return false;
                }
                match ratio {
                    None => ratio = Some(r),
                    Some(c) if ((r - c) / c).abs() <= RATIO_TOL => {}
                    Some(_) => return false,
                }
            }
            _ => return false,
        }
    }
    ratio.is_some()
}

/// Runs the LP test and the witness search, plus the null-space procedure
/// when `B` has full column rank, and insists that they agree.
pub fn certify(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<ManipulabilityVerdict> {
    check_pair(a, b)?;
    let (value, lp_says) = check_algorithm1(a, b)?;
    let witness = find_witness(a, b)?;
    if lp_says != witness.is_some() {
        return Err(Error::Consistency(format!(
            "LP value {value:e} says manipulable={lp_says}, witness search found {}",
            if witness.is_some() { "a witness" } else { "none" }
        )));
    }
    let full_rank_b = rank(b, DEFAULT_RANK_TOL) == b.cols();
    let dpv_found = if full_rank_b {
        let found = dpv_search_algorithm2(a) == DpvSearch::Found;
        if found != lp_says {
            return Err(Error::Consistency(format!(
                "LP value {value:e} says manipulable={lp_says}, null-space search says {found}"
            )));
        }
        Some(found)
    } else {
        None
    };
    let induced_attack = witness.as_ref().map(witness_to_attack).transpose()?;
    if let Some(w) = &witness {
        let leak = l1_norm(&b.matmul(w)?.matmul(a)?);
        if leak > ZERO_GATE {
            return Err(Error::Consistency(format!("witness leaks ‖BΥA‖₁ = {leak:e}")));
        }
    }
    Ok(ManipulabilityVerdict {
        manipulable: lp_says,
        lp_optimal_value: value,
        witness,
        induced_attack,
        method: if full_rank_b { Method::Both } else { Method::Algorithm1 },
        dpv_found,
    })
}
