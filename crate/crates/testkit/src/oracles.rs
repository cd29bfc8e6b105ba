//! Slow, independent answers to the questions the library solves with LPs.

use itertools::Itertools;
use nalgebra::{DMatrix, DVector};
use relay_sentinel::StochasticMatrix;

/// `min c·x` over `{x : G x ≤ h}` by enumerating every basic solution.
/// `None` when no vertex is feasible. Assumes the region is bounded.
pub fn vertex_enumeration_min(c: &[f64], g: &[Vec<f64>], h: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut best: Option<f64> = None;
    for active in (0..g.len()).combinations(n) {
        let m = DMatrix::from_fn(n, n, |r, k| g[active[r]][k]);
        let rhs = DVector::from_iterator(n, active.iter().map(|&r| h[r]));
        let Some(x) = m.clone().lu().solve(&rhs) else {
            continue;
        };
        if (&m * &x - &rhs).amax() > 1e-9 || m.determinant().abs() < 1e-12 {
            continue;
        }
        let feasible = g.iter().zip(h).all(|(row, &hi)| {
            row.iter().zip(x.iter()).map(|(a, b)| a * b).sum::<f64>() <= hi + 1e-9
        });
        if feasible {
            let v: f64 = c.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
    }
    best
}

/// Grid search for the estimator on a 2x2 channel with invertible `A` and
/// `B` (so both projectors are the identity and `Γ̃ = BΦA`): the largest
/// `‖Φ − I‖₁` over grid points `Φ` with `‖BΦA − Γ̂‖₁ ≤ mu`.
pub fn grid_estimator_2x2(
    gamma_hat: &StochasticMatrix,
    a: &StochasticMatrix,
    b: &StochasticMatrix,
    mu: f64,
    step: f64,
) -> Option<f64> {
    assert_eq!(a.shape(), (2, 2));
    assert_eq!(b.shape(), (2, 2));
    let k = (1.0 / step).round() as usize;
    let mut best: Option<f64> = None;
    for si in 0..=k {
        for ti in 0..=k {
            let (s, t) = (si as f64 * step, ti as f64 * step);
            let phi = StochasticMatrix::from_rows(&[[1.0 - s, t], [s, 1.0 - t]]).unwrap();
            let seen = b.compose(&phi).unwrap().compose(a).unwrap();
            let dist = relay_sentinel::matrix::l1_norm(&seen.sub(gamma_hat).unwrap());
            if dist <= mu + 1e-12 {
                let stat = 2.0 * (s + t);
                best = Some(best.map_or(stat, |x: f64| x.max(stat)));
            }
        }
    }
    best
}
