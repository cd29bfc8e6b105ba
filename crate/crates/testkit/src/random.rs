use rand::Rng;
use rand_distr::{Distribution, Exp1};
use relay_sentinel::channel::{trial_rng, TraceRng};
use relay_sentinel::linalg::{rank, DEFAULT_RANK_TOL};
use relay_sentinel::{RealMatrix, StochasticMatrix};

pub fn rng(seed: u64) -> TraceRng {
    trial_rng(seed, 0)
}

/// Each column drawn from the symmetric Dirichlet(1) distribution.
pub fn dirichlet_stochastic<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> StochasticMatrix {
    let mut m = RealMatrix::zeros(rows, cols);
    for j in 0..cols {
        let draws: Vec<f64> = (0..rows).map(|_| Exp1.sample(rng)).collect();
        let s: f64 = draws.iter().sum();
        for (i, d) in draws.into_iter().enumerate() {
            m[(i, j)] = d / s;
        }
    }
    StochasticMatrix::from_numerical(m, 1e-9).expect("normalized columns")
}

/// `rows x cols` stochastic matrix whose rows `i` and `i+1` are equal, so
/// `e_i − e_{i+1}` is in its left null space.
pub fn split_row_stochastic<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> StochasticMatrix {
    assert!(rows >= 2);
    let base = dirichlet_stochastic(rng, rows - 1, cols);
    let i = rng.gen_range(0..rows - 1);
    let m = RealMatrix::from_fn(rows, cols, |r, c| {
        if r < i {
            base[(r, c)]
        } else if r <= i + 1 {
            base[(i, c)] / 2.0
        } else {
            base[(r - 1, c)]
        }
    });
    StochasticMatrix::new(m).expect("split keeps column sums")
}

/// Random `(A, B)` pair with `|U| = u`; about a third of the `A`s have two
/// equal rows.
pub fn random_channel<R: Rng>(
    rng: &mut R,
    u: usize,
    x1: usize,
    y1: usize,
) -> (StochasticMatrix, StochasticMatrix) {
    let a = if u >= 2 && rng.gen_bool(1.0 / 3.0) {
        split_row_stochastic(rng, u, x1)
    } else {
        dirichlet_stochastic(rng, u, x1)
    };
    (a, dirichlet_stochastic(rng, y1, u))
}

/// Square `B` with full column rank.
pub fn full_rank_square<R: Rng>(rng: &mut R, n: usize) -> StochasticMatrix {
    loop {
        let b = dirichlet_stochastic(rng, n, n);
        if rank(&b, DEFAULT_RANK_TOL) == n {
            return b;
        }
    }
}

/// Random unit-L1 combination of the rows of `basis`.
pub fn random_combination<R: Rng>(rng: &mut R, basis: &RealMatrix) -> Vec<f64> {
    let coeffs: Vec<f64> = (0..basis.rows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut v: Vec<f64> = (0..basis.cols())
        .map(|j| (0..basis.rows()).map(|i| coeffs[i] * basis[(i, j)]).sum())
        .collect();
    let n: f64 = v.iter().map(|x| x.abs()).sum();
    v.iter_mut().for_each(|x| *x /= n);
    v
}
