//! Column-stochastic matrices and the vector sign-pattern predicates used to
//! reason about null spaces of observation channels.
//!
//! Every conditional pmf is stored with entry `(i, j) = P(output_i | input_j)`,
//! so columns sum to one.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpOutcome, LpProblem, VarBound};
use crate::matrix::{vector_l1, RealMatrix};

pub const DEFAULT_TOL: f64 = 1e-9;

pub fn is_column_stochastic(m: &RealMatrix, tol: f64) -> bool {
    if m.as_slice().iter().any(|&v| !(v >= -tol && v <= 1.0 + tol)) {
        return false;
    }
    (0..m.cols()).all(|j| {
        let s: f64 = (0..m.rows()).map(|i| m[(i, j)]).sum();
        (s - 1.0).abs() <= tol
    })
}

/// A validated column-stochastic matrix.
#[derive(Clone, PartialEq)]
pub struct StochasticMatrix(RealMatrix);

impl StochasticMatrix {
    pub fn new(m: RealMatrix) -> Result<Self> {
        Self::with_tolerance(m, DEFAULT_TOL)
    }

    pub fn with_tolerance(m: RealMatrix, tol: f64) -> Result<Self> {
        if let Some(detail) = stochasticity_violation(&m, tol) {
            return Err(Error::NotStochastic {
                what: format!("{}x{} matrix", m.rows(), m.cols()),
                detail,
            });
        }
        Ok(Self(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(RealMatrix::from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self(RealMatrix::identity(n))
    }

    /// Clamps round-off (entries within `tol` of `[0, 1]`) and renormalizes
    /// columns before validating. Used on LP output.
    pub fn from_numerical(m: RealMatrix, tol: f64) -> Result<Self> {
        let mut m = m;
        for j in 0..m.cols() {
            for i in 0..m.rows() {
                let v = m[(i, j)];
                if v < 0.0 && v >= -tol {
                    m[(i, j)] = 0.0;
                }
            }
            let s: f64 = (0..m.rows()).map(|i| m[(i, j)]).sum();
            if s > 0.0 && (s - 1.0).abs() <= tol {
                for i in 0..m.rows() {
                    m[(i, j)] /= s;
                }
            }
        }
        Self::with_tolerance(m, tol)
    }

    pub fn matrix(&self) -> &RealMatrix {
        &self.0
    }

    pub fn into_inner(self) -> RealMatrix {
        self.0
    }

    /// Product of two conditional pmfs, itself a conditional pmf.
    pub fn compose(&self, inner: &StochasticMatrix) -> Result<StochasticMatrix> {
        let p = self.0.matmul(&inner.0)?;
        Ok(Self(p))
    }

    /// `‖self − I‖₁`; requires a square matrix.
    pub fn distance_from_identity(&self) -> f64 {
        let n = self.0.rows();
        debug_assert_eq!(n, self.0.cols());
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let id = if i == j { 1.0 } else { 0.0 };
                total += (self.0[(i, j)] - id).abs();
            }
        }
        total
    }
}

impl Deref for StochasticMatrix {
    type Target = RealMatrix;

    fn deref(&self) -> &RealMatrix {
        &self.0
    }
}

impl std::fmt::Debug for StochasticMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Stochastic{:?}", self.0)
    }
}

/// Describes why `m` is not column-stochastic, naming the first bad entry or
/// column. Column reports use the form `[.][j]`.
pub fn stochasticity_violation(m: &RealMatrix, tol: f64) -> Option<String> {
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let v = m[(i, j)];
            if !(v >= -tol && v <= 1.0 + tol) {
                return Some(format!("entry [{i}][{j}] = {v} outside [0, 1]"));
            }
        }
    }
    for j in 0..m.cols() {
        let s: f64 = (0..m.rows()).map(|i| m[(i, j)]).sum();
        if (s - 1.0).abs() > tol {
            return Some(format!("column [.][{j}] sums to {s}"));
        }
    }
    None
}

pub fn is_normalized(v: &[f64], tol: f64) -> bool {
    (vector_l1(v) - 1.0).abs() <= tol
}

pub fn is_balanced(v: &[f64], tol: f64) -> bool {
    v.iter().sum::<f64>().abs() <= tol
}

fn check_polarization_args(b: f64, eps: f64) {
    assert!(
        (0.0..=b).contains(&eps),
        "polarization requires 0 <= eps <= b (got b = {b}, eps = {eps})"
    );
}

/// `(b, eps)`-polarized at `j`: `v[j] ≥ b` and every other entry `≤ eps`.
pub fn is_polarized(v: &[f64], b: f64, eps: f64, j: usize, tol: f64) -> bool {
    check_polarization_args(b, eps);
    v.iter().enumerate().all(|(i, &x)| {
        if i == j {
            x >= b - tol
        } else {
            x <= eps + tol
        }
    })
}

/// `(b, eps)`-double polarized at `(j, k)`: `v[j] ≥ b`, `v[k] ≤ −b`, and every
/// other entry within `[−eps, eps]`.
pub fn is_double_polarized(v: &[f64], b: f64, eps: f64, j: usize, k: usize, tol: f64) -> bool {
    check_polarization_args(b, eps);
    if j == k {
        return false;
    }
    v.iter().enumerate().all(|(i, &x)| {
        if i == j {
            x >= b - tol
        } else if i == k {
            x <= -b + tol
        } else {
            x.abs() <= eps + tol
        }
    })
}

/// An `n x cols` matrix (`n ≤ cols`) whose diagonal is at least `b`, whose
/// off-diagonal entries within the leading `n x n` block vanish, and whose
/// remaining entries are at most `eps`.
pub fn is_diagonal_polarized(m: &RealMatrix, b: f64, eps: f64, tol: f64) -> bool {
    check_polarization_args(b, eps);
    let n = m.rows();
    if n > m.cols() {
        return false;
    }
    for i in 0..n {
        for j in 0..m.cols() {
            let x = m[(i, j)];
            let ok = if i == j {
                x >= b - tol
            } else if j < n {
                x.abs() <= tol
            } else {
                x <= eps + tol
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Constants of `A` that bound the extremal entries of normalized null-space
/// vectors of `A` and `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConstants {
    /// Smallest row sum of `A`.
    pub a_big_min: f64,
    pub a_min: f64,
    pub b_min: f64,
    pub u_size: usize,
    pub x1_size: usize,
    pub y1_size: usize,
}

pub fn channel_constants(a: &StochasticMatrix, y1_size: usize) -> Result<ChannelConstants> {
    let (u_size, x1_size) = a.shape();
    let mut a_big_min = f64::INFINITY;
    for i in 0..u_size {
        let s: f64 = a.row(i).iter().sum();
        if s <= 0.0 {
            return Err(Error::AlphabetReduction { row: i });
        }
        a_big_min = a_big_min.min(s);
    }
    let u = u_size as f64;
    Ok(ChannelConstants {
        a_big_min,
        a_min: a_big_min / (u * (x1_size as f64 + a_big_min)),
        b_min: 1.0 / (u * (y1_size as f64 + 1.0)),
        u_size,
        x1_size,
        y1_size,
    })
}

/// `a_min² / (1 + n / a_min)`.
pub fn a_tilde(a_min: f64, n: usize) -> f64 {
    a_min * a_min / (1.0 + n as f64 / a_min)
}

/// Upper limit on the dependence slack `eps_s`: the minimum over
/// `n = 1..|U|−1` of
/// `a² ã_n / { a² [1 + (a ã_n / 2)^n] + n (1 + a) ã_n² / 2 + a ã_n }`.
pub fn epsilon_s_max(a_min: f64, u_size: usize) -> f64 {
    let a = a_min;
    (1..u_size)
        .map(|n| {
            let at = a_tilde(a, n);
            let denom = a * a * (1.0 + (a * at / 2.0).powi(n as i32))
                + n as f64 * (1.0 + a) * at * at / 2.0
                + a * at;
            a * a * at / denom
        })
        .fold(f64::INFINITY, f64::min)
}

/// Whether `v` lies within L1 distance `eps_s` of the span of the rows of
/// `basis`, decided by minimizing `‖v − Σ c_i basis_i‖₁` exactly.
pub fn is_epsilon_dependent(v: &[f64], basis: &RealMatrix, eps_s: f64) -> Result<bool> {
    Ok(epsilon_dependence_residual(v, basis)? <= eps_s + 1e-12)
}

/// `min_c ‖v − Σ c_i basis_i‖₁`.
pub fn epsilon_dependence_residual(v: &[f64], basis: &RealMatrix) -> Result<f64> {
    let dim = v.len();
    if basis.rows() > 0 && basis.cols() != dim {
        return Err(Error::Dimension(format!(
            "vector of length {dim} against basis rows of length {}",
            basis.cols()
        )));
    }
    let k = basis.rows();
    // Variables: c (free, k) then t (dim) with t ≥ |v − cᵀ basis|.
    let mut objective = vec![0.0; k + dim];
    objective[k..].iter_mut().for_each(|x| *x = 1.0);
    let mut lp = LpProblem::minimize(objective);
    for i in 0..k {
        lp.set_bound(i, VarBound::FREE);
    }
    for (d, &vd) in v.iter().enumerate() {
        let mut terms: Vec<(usize, f64)> = (0..k).map(|i| (i, basis[(i, d)])).collect();
        terms.push((k + d, -1.0));
        lp.add_le_terms(&terms, vd);
        let mut neg: Vec<(usize, f64)> = (0..k).map(|i| (i, -basis[(i, d)])).collect();
        neg.push((k + d, -1.0));
        lp.add_le_terms(&neg, -vd);
    }
    match solve_lp(&lp)? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        other => Err(Error::Certification(format!(
            "L1 residual program returned {other:?}"
        ))),
    }
}

/// Identity `‖Φ − I‖₁ = 2(n − trace Φ)` for square column-stochastic `Φ`.
pub fn identity_distance_via_trace(phi: &StochasticMatrix) -> f64 {
    2.0 * (phi.rows() as f64 - phi.trace())
}
