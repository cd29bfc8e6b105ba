//! Rank, reduced row echelon form, null spaces and orthogonal projectors.
//!
//! Rank decisions use singular values with the relative threshold
//! `tol * max(1, sigma_max)`; null spaces and projectors come from the same
//! decomposition so that their dimensions always agree with [`rank`].

use nalgebra::DMatrix;

use crate::matrix::{vector_l1, RealMatrix};

pub const DEFAULT_RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct RrefResult {
    /// Reduced matrix with pivot columns moved to the front, so its leading
    /// `rank x rank` block is the identity.
    pub reduced: RealMatrix,
    /// `reduced` column `k` is column `column_permutation[k]` of the input.
    pub column_permutation: Vec<usize>,
    pub rank: usize,
}

fn to_dmatrix(m: &RealMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows(), m.cols(), m.as_slice())
}

struct Decomposition {
    singular: Vec<f64>,
    /// Right singular vectors as rows (`k x cols`).
    v_t: DMatrix<f64>,
}

/// SVD of `m` padded with zero rows so that `v_t` spans all of `R^cols`.
fn decompose(m: &RealMatrix) -> Decomposition {
    let (r, c) = m.shape();
    let padded_rows = r.max(c);
    let mut d = DMatrix::<f64>::zeros(padded_rows, c);
    d.view_mut((0, 0), (r, c)).copy_from(&to_dmatrix(m));
    let svd = d.svd(false, true);
    let singular = svd.singular_values.iter().copied().collect();
    Decomposition {
        singular,
        v_t: svd.v_t.expect("requested v_t"),
    }
}

fn threshold(singular: &[f64], tol: f64) -> f64 {
    let smax = singular.iter().copied().fold(0.0, f64::max);
    tol * smax.max(1.0)
}

pub fn rank(m: &RealMatrix, tol: f64) -> usize {
    if m.rows() == 0 || m.cols() == 0 {
        return 0;
    }
    let d = decompose(m);
    let thr = threshold(&d.singular, tol);
    d.singular.iter().filter(|&&s| s > thr).count()
}

/// Gauss-Jordan elimination with partial row pivoting; pivot columns are
/// then permuted to the front.
pub fn rref(m: &RealMatrix, tol: f64) -> RrefResult {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let scale = a.max_abs().max(1.0);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (best, mag) = (r..rows)
            .map(|i| (i, a[(i, c)].abs()))
            .fold((r, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if mag <= tol * scale {
            for i in r..rows {
                a[(i, c)] = 0.0;
            }
            continue;
        }
        if best != r {
            for j in 0..cols {
                let tmp = a[(r, j)];
                a[(r, j)] = a[(best, j)];
                a[(best, j)] = tmp;
            }
        }
        let p = a[(r, c)];
        for j in 0..cols {
            a[(r, j)] /= p;
        }
        for i in 0..rows {
            if i == r {
                continue;
            }
            let f = a[(i, c)];
            if f != 0.0 {
                for j in 0..cols {
                    a[(i, j)] -= f * a[(r, j)];
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    for v in 0..rows * cols {
        let (i, j) = (v / cols, v % cols);
        if a[(i, j)].abs() <= tol * scale {
            a[(i, j)] = 0.0;
        }
    }
    let mut perm = pivots.clone();
    perm.extend((0..cols).filter(|c| !pivots.contains(c)));
    let reduced = RealMatrix::from_fn(rows, cols, |i, k| a[(i, perm[k])]);
    RrefResult {
        reduced,
        column_permutation: perm,
        rank: pivots.len(),
    }
}

/// Scales to unit L1 norm and flips the sign so the first nonzero entry is
/// positive.
fn canonicalize(v: &mut [f64]) {
    let norm = vector_l1(v);
    if norm == 0.0 {
        return;
    }
    let sign = v
        .iter()
        .find(|x| x.abs() > 1e-12 * norm)
        .map_or(1.0, |x| x.signum());
    v.iter_mut().for_each(|x| *x *= sign / norm);
}

/// Right null space of `m` as L1-normalized vectors.
fn null_vectors(m: &RealMatrix, tol: f64) -> Vec<Vec<f64>> {
    let c = m.cols();
    if c == 0 {
        return Vec::new();
    }
    if m.rows() == 0 {
        return (0..c)
            .map(|i| (0..c).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
    }
    let d = decompose(m);
    let thr = threshold(&d.singular, tol);
    (0..c)
        .filter(|&k| d.singular[k] <= thr)
        .map(|k| {
            let mut v: Vec<f64> = (0..c).map(|j| d.v_t[(k, j)]).collect();
            canonicalize(&mut v);
            v
        })
        .collect()
}

/// Rows span `{υ : υ·a = 0}`; each row has unit L1 norm.
pub fn left_nullspace_basis(a: &RealMatrix, tol: f64) -> RealMatrix {
    let vecs = null_vectors(&a.transpose(), tol);
    let n = a.rows();
    RealMatrix::from_fn(vecs.len(), n, |i, j| vecs[i][j])
}

/// Columns span `{ω : b·ω = 0}`; each column has unit L1 norm.
pub fn right_nullspace_basis(b: &RealMatrix, tol: f64) -> RealMatrix {
    let vecs = null_vectors(b, tol);
    RealMatrix::from_fn(b.cols(), vecs.len(), |i, j| vecs[j][i])
}

/// Orthogonal projector onto the row space of `a` (`cols x cols`).
pub fn row_space_projector(a: &RealMatrix) -> RealMatrix {
    let n = a.cols();
    if a.rows() == 0 || n == 0 {
        return RealMatrix::zeros(n, n);
    }
    let d = decompose(a);
    let thr = threshold(&d.singular, DEFAULT_RANK_TOL);
    let keep: Vec<usize> = (0..d.singular.len()).filter(|&k| d.singular[k] > thr).collect();
    RealMatrix::from_fn(n, n, |i, j| keep.iter().map(|&k| d.v_t[(k, i)] * d.v_t[(k, j)]).sum())
}

/// Orthogonal projector onto the column space of `b` (`rows x rows`).
pub fn column_space_projector(b: &RealMatrix) -> RealMatrix {
    let n = b.rows();
    if b.cols() == 0 || n == 0 {
        return RealMatrix::zeros(n, n);
    }
    // Column space of b is the row space of its transpose.
    row_space_projector(&b.transpose())
}
