//! Randomized property suites. Each returns a report instead of panicking so
//! the acceptance run can print one line per suite.

use rand::Rng;
use relay_sentinel::detector::estimate_attack;
use relay_sentinel::linalg::{left_nullspace_basis, right_nullspace_basis, DEFAULT_RANK_TOL};
use relay_sentinel::lp::{solve_lp, LpOutcome, LpProblem, VarBound};
use relay_sentinel::manipulability::{
    check_algorithm1, dpv_search_algorithm2, find_witness, witness_to_attack, DpvSearch,
};
use relay_sentinel::matrix::l1_norm;
use relay_sentinel::stochastic::{channel_constants, identity_distance_via_trace};
use relay_sentinel::{RealMatrix, StochasticMatrix};

use crate::oracles::{grid_estimator_2x2, vertex_enumeration_min};
use crate::random::{
    dirichlet_stochastic, full_rank_square, random_channel, random_combination, rng,
};

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
    pub detail: String,
}

impl SuiteReport {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            cases: 0,
            failures: Vec::new(),
            detail: String::new(),
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(what());
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{}/{} cases ok", self.cases - self.failures.len(), self.cases);
        if !self.detail.is_empty() {
            s.push_str("; ");
            s.push_str(&self.detail);
        }
        if let Some(f) = self.failures.first() {
            s.push_str("; first failure: ");
            s.push_str(f);
        }
        s
    }
}

/// Random bounded LPs `min c·x, Gx ≤ h, 0 ≤ x ≤ 5` against vertex enumeration.
pub fn lp_vs_vertex_oracle(seed: u64, count: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("lp-vs-vertex-oracle");
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for case in 0..count {
        let n = r.gen_range(1..=8);
        let m = r.gen_range(1..=6);
        let c: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let g: Vec<Vec<f64>> = (0..m)
            .map(|_| (0..n).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let h: Vec<f64> = (0..m).map(|_| r.gen_range(0.5..2.0)).collect();

        let mut lp = LpProblem::minimize(c.clone());
        for j in 0..n {
            lp.set_bound(j, VarBound::between(0.0, 5.0));
        }
        for (row, &hi) in g.iter().zip(&h) {
            lp.add_le(row.clone(), hi);
        }

        let mut g_full = g.clone();
        let mut h_full = h.clone();
        for j in 0..n {
            let e = |s: f64| (0..n).map(|k| if k == j { s } else { 0.0 }).collect::<Vec<_>>();
            g_full.push(e(1.0));
            h_full.push(5.0);
            g_full.push(e(-1.0));
            h_full.push(0.0);
        }
        let oracle = vertex_enumeration_min(&c, &g_full, &h_full);
        match (solve_lp(&lp), oracle) {
            (Ok(LpOutcome::Optimal { value, .. }), Some(o)) => {
                worst = worst.max((value - o).abs());
                rep.check((value - o).abs() <= 1e-6, || {
                    format!("case {case}: simplex {value} vs vertices {o}")
                });
            }
            (got, o) => rep.check(false, || format!("case {case}: simplex {got:?} vs vertices {o:?}")),
        }
    }
    rep.detail = format!("max |diff| {worst:.1e}");
    rep
}

/// Estimator LP against a 0.05 grid search on random invertible 2x2 channels.
pub fn estimator_vs_grid(seed: u64, count: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("estimator-vs-grid");
    let mut r = rng(seed);
    let step = 0.05;
    let mut worst = 0.0f64;
    while rep.cases < count {
        let a = dirichlet_stochastic(&mut r, 2, 2);
        let b = dirichlet_stochastic(&mut r, 2, 2);
        let det = |m: &StochasticMatrix| m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        if det(&a).abs() < 0.2 || det(&b).abs() < 0.2 {
            continue;
        }
        // A grid attack, seen through a slightly perturbed channel.
        let s = r.gen_range(0..=4) as f64 * step;
        let t = r.gen_range(0..=4) as f64 * step;
        let phi = StochasticMatrix::from_rows(&[[1.0 - s, t], [s, 1.0 - t]]).unwrap();
        let clean = b.compose(&phi).unwrap().compose(&a).unwrap();
        let noise = dirichlet_stochastic(&mut r, 2, 2);
        let eps = r.gen_range(0.0..0.05);
        let g = StochasticMatrix::from_numerical(
            clean.scale(1.0 - eps).add(&noise.scale(eps)).unwrap(),
            1e-9,
        )
        .unwrap();
        let mu = l1_norm(&g.sub(&clean).unwrap()) + r.gen_range(0.05..0.3);

        let case = rep.cases;
        let oracle = grid_estimator_2x2(&g, &a, &b, mu, step).expect("planted attack is on the grid");
        match estimate_attack(&g, &a, &b, mu) {
            Ok(est) if est.feasible => {
                let lp = est.phi_hat.distance_from_identity();
                worst = worst.max(lp - oracle);
                rep.check(lp >= oracle - 1e-7 && lp - oracle <= 0.1, || {
                    format!("case {case}: LP {lp} vs grid {oracle}")
                });
            }
            other => rep.check(false, || format!("case {case}: estimator returned {other:?}")),
        }
    }
    rep.detail = format!("max LP − grid {worst:.3}");
    rep
}

/// Extremal-element bounds for normalized null-space vectors of random `A`
/// (left) and `B` (right). `count` vectors of each kind.
pub fn null_space_bounds(seed: u64, count: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("null-space-extremal-bounds");
    let mut r = rng(seed);
    let extremes = |v: &[f64]| {
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        (max, min)
    };
    let mut slack_a = f64::INFINITY;
    let mut slack_b = f64::INFINITY;
    for i in 0..count {
        let u = r.gen_range(3..=6);
        let x1 = r.gen_range(1..u);
        let y1 = r.gen_range(1..u);
        let a = dirichlet_stochastic(&mut r, u, x1);
        let b = dirichlet_stochastic(&mut r, y1, u);
        let k = channel_constants(&a, y1).unwrap();

        let left = left_nullspace_basis(&a, DEFAULT_RANK_TOL);
        let v = random_combination(&mut r, &left);
        let resid = l1_norm(&RealMatrix::row_vector(&v).matmul(&a).unwrap());
        let (max, min) = extremes(&v);
        slack_a = slack_a.min(max - k.a_min).min(-min - k.a_min);
        rep.check(resid < 1e-9 && max >= k.a_min && min <= -k.a_min, || {
            format!("left vector {i}: max {max}, min {min}, a_min {}", k.a_min)
        });

        let right = right_nullspace_basis(&b, DEFAULT_RANK_TOL);
        let w = random_combination(&mut r, &right.transpose());
        let sum: f64 = w.iter().sum();
        let (max, min) = extremes(&w);
        slack_b = slack_b.min(max - k.b_min).min(-min - k.b_min);
        rep.check(sum.abs() <= 1e-8 && max >= k.b_min && min <= -k.b_min, || {
            format!("right vector {i}: sum {sum}, max {max}, min {min}, b_min {}", k.b_min)
        });
    }
    rep.detail = format!("min slack over a_min {slack_a:.3}, over b_min {slack_b:.3}");
    rep
}

/// `‖Φ − I‖₁ = 2(|U| − tr Φ)` on random stochastic matrices.
pub fn trace_identity(seed: u64, count: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("trace-identity");
    let mut r = rng(seed);
    for i in 0..count {
        let n = r.gen_range(1..=8);
        let phi = dirichlet_stochastic(&mut r, n, n);
        let direct = l1_norm(&phi.sub(&RealMatrix::identity(n)).unwrap());
        let via = identity_distance_via_trace(&phi);
        rep.check((direct - via).abs() <= 1e-12, || format!("matrix {i}: {direct} vs {via}"));
    }
    rep
}

fn witness_valid(a: &StochasticMatrix, b: &StochasticMatrix, w: &RealMatrix) -> Result<(), String> {
    let n = w.rows();
    for j in 0..n {
        let sum: f64 = w.column(j).iter().sum();
        if sum.abs() > 1e-8 {
            return Err(format!("column {j} sums to {sum}"));
        }
        for i in (0..n).filter(|&i| i != j) {
            if w[(i, j)] > 1e-10 {
                return Err(format!("entry [{i}][{j}] = {}", w[(i, j)]));
            }
        }
    }
    let leak = l1_norm(&b.matmul(w).unwrap().matmul(a).unwrap());
    if leak > 1e-6 {
        return Err(format!("‖BΥA‖₁ = {leak}"));
    }
    let phi = witness_to_attack(w).map_err(|e| e.to_string())?;
    if phi.distance_from_identity() <= 0.0 {
        return Err("induced attack is the identity".into());
    }
    let ba = b.compose(a).unwrap();
    let hidden = b.compose(&phi).unwrap().compose(a).unwrap();
    let gap = l1_norm(&hidden.sub(&ba).unwrap());
    if gap > 1e-6 {
        return Err(format!("‖BΦ′A − BA‖₁ = {gap}"));
    }
    Ok(())
}

/// LP certification against the per-diagonal witness search.
pub fn algorithm1_vs_witness(seed: u64, count: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("algorithm1-vs-witness");
    let mut r = rng(seed);
    let mut manipulable = 0;
    for i in 0..count {
        let u = r.gen_range(2..=5);
        let x1 = r.gen_range(1..=u);
        let y1 = r.gen_range(1..=u);
        let (a, b) = random_channel(&mut r, u, x1, y1);
        let outcome = (|| -> Result<bool, String> {
            let (value, lp) = check_algorithm1(&a, &b).map_err(|e| e.to_string())?;
            let w = find_witness(&a, &b).map_err(|e| e.to_string())?;
            if lp != w.is_some() {
                return Err(format!("LP value {value:e} vs witness {:?}", w.is_some()));
            }
            if let Some(w) = &w {
                witness_valid(&a, &b, w)?;
            }
            Ok(lp)
        })();
        match outcome {
            Ok(m) => {
                manipulable += m as usize;
                rep.check(true, String::new);
            }
            Err(e) => rep.check(false, || format!("channel {i} ({u}x{x1}, {y1}x{u}): {e}")),
        }
    }
    rep.detail = format!("{manipulable} manipulable");
    rep
}

/// LP certification against the null-space procedure when `B` is full rank.
pub fn algorithm1_vs_algorithm2(seed: u64, count: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("algorithm1-vs-algorithm2");
    let mut r = rng(seed);
    let mut found = 0;
    for i in 0..count {
        let u = r.gen_range(2..=5);
        let x1 = r.gen_range(1..u);
        let (a, _) = random_channel(&mut r, u, x1, u);
        let b = full_rank_square(&mut r, u);
        match check_algorithm1(&a, &b) {
            Ok((value, lp)) => {
                let alg2 = dpv_search_algorithm2(&a) == DpvSearch::Found;
                found += alg2 as usize;
                rep.check(lp == alg2, || {
                    format!("channel {i} ({u}x{x1}): LP value {value:e}, null-space search {alg2}")
                });
            }
            Err(e) => rep.check(false, || format!("channel {i}: {e}")),
        }
    }
    rep.detail = format!("{found} with a double-polarized null vector");
    rep
}

/// Enlarging `mu` never lowers the estimator's statistic.
pub fn estimator_monotone_in_mu(seed: u64, count: usize) -> SuiteReport {
    let mut rep = SuiteReport::new("estimator-monotone-in-mu");
    let mut r = rng(seed);
    for i in 0..count {
        let u = r.gen_range(2..=4);
        let x1 = r.gen_range(1..=u);
        let y1 = r.gen_range(1..=u);
        let a = dirichlet_stochastic(&mut r, u, x1);
        let b = dirichlet_stochastic(&mut r, y1, u);
        let g = dirichlet_stochastic(&mut r, y1, x1);
        let clean = b.compose(&a).unwrap();
        let g = StochasticMatrix::from_numerical(clean.scale(0.9).add(&g.scale(0.1)).unwrap(), 1e-9)
            .unwrap();
        let mu = r.gen_range(0.01..0.2);
        let res = estimate_attack(&g, &a, &b, mu).and_then(|lo| {
            estimate_attack(&g, &a, &b, 2.0 * mu).map(|hi| {
                (lo.phi_hat.distance_from_identity(), hi.phi_hat.distance_from_identity())
            })
        });
        match res {
            Ok((lo, hi)) => rep.check(hi >= lo - 1e-7, || format!("instance {i}: {lo} at mu, {hi} at 2mu")),
            Err(e) => rep.check(false, || format!("instance {i}: {e}")),
        }
    }
    rep
}
