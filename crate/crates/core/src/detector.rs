//! Node-side detection from the symbols it sent and the symbols it heard back.
//!
//! The estimator maximizes `‖Φ̂ − I‖₁` over every attack channel that is
//! consistent (within `mu`, measured on the identifiable part of the
//! observation) with the empirical channel. Because every column of a
//! stochastic `Φ̂` sums to one, `‖Φ̂ − I‖₁ = 2(|U| − tr Φ̂)`, so the
//! maximization is a single LP that minimizes the trace.

use crate::channel::SymbolTrace;
use crate::error::{Error, Result};
use crate::linalg::{column_space_projector, row_space_projector};
use crate::lp::{solve_lp, LpOutcome, LpProblem};
use crate::matrix::{l1_norm, RealMatrix};
use crate::stochastic::StochasticMatrix;

/// Tolerance used when cleaning the LP solution back into a stochastic matrix.
pub const SOLUTION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Clean,
    Malicious,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Clean => "clean",
            Verdict::Malicious => "malicious",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DetectorConfig {
    /// `p(u | x1)`, `|U| x |X1|`.
    pub a: StochasticMatrix,
    /// `p(y1 | v)`, `|Y1| x |U|`.
    pub b: StochasticMatrix,
    pub mu: f64,
    pub delta: f64,
}

impl DetectorConfig {
    pub fn new(a: StochasticMatrix, b: StochasticMatrix, mu: f64, delta: f64) -> Result<Self> {
        if b.cols() != a.rows() {
            return Err(Error::Dimension(format!(
                "B has {} columns but A has {} rows",
                b.cols(),
                a.rows()
            )));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        Ok(Self { a, b, mu, delta })
    }

    pub fn u_size(&self) -> usize {
        self.a.rows()
    }

    pub fn x1_size(&self) -> usize {
        self.a.cols()
    }

    pub fn y1_size(&self) -> usize {
        self.b.rows()
    }
}

#[derive(Debug, Clone)]
pub struct Histogram {
    pub gamma_hat: StochasticMatrix,
    /// `x1` symbols that never occurred; their columns are uniform.
    pub unseen_x1_columns: Vec<usize>,
}

/// `Γ̂[y][x] = count(y, x) / count(x)`.
pub fn conditional_histogram(
    x1: &SymbolTrace,
    y1: &SymbolTrace,
    x1_size: usize,
    y1_size: usize,
) -> Result<Histogram> {
    if x1.len() != y1.len() {
        return Err(Error::LengthMismatch {
            left: x1.len(),
            right: y1.len(),
        });
    }
    if x1.is_empty() {
        return Err(Error::InvalidArgument("empty trace".into()));
    }
    if x1_size == 0 || y1_size == 0 {
        return Err(Error::InvalidArgument("alphabets must be nonempty".into()));
    }
    x1.check_alphabet(x1_size)?;
    y1.check_alphabet(y1_size)?;
    let mut counts = RealMatrix::zeros(y1_size, x1_size);
    let mut totals = vec![0usize; x1_size];
    for (&x, &y) in x1.iter().zip(y1.iter()) {
        counts[(y, x)] += 1.0;
        totals[x] += 1;
    }
    let unseen: Vec<usize> = (0..x1_size).filter(|&x| totals[x] == 0).collect();
    let g = RealMatrix::from_fn(y1_size, x1_size, |y, x| {
        if totals[x] == 0 {
            1.0 / y1_size as f64
        } else {
            counts[(y, x)] / totals[x] as f64
        }
    });
    Ok(Histogram {
        gamma_hat: StochasticMatrix::with_tolerance(g, 1e-12)?,
        unseen_x1_columns: unseen,
    })
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub phi_hat: StochasticMatrix,
    /// The consistent observation channel found alongside `phi_hat`;
    /// `None` when the feasible set is empty.
    pub gamma_tilde: Option<StochasticMatrix>,
    pub feasible: bool,
}

/// Precomputed projectors for one `(A, B)` pair.
#[derive(Debug, Clone)]
pub struct Estimator {
    a: StochasticMatrix,
    b: StochasticMatrix,
    pi_a: RealMatrix,
    pi_b: RealMatrix,
}

impl Estimator {
    pub fn new(a: &StochasticMatrix, b: &StochasticMatrix) -> Result<Self> {
        if b.cols() != a.rows() {
            return Err(Error::Dimension(format!(
                "B has {} columns but A has {} rows",
                b.cols(),
                a.rows()
            )));
        }
        Ok(Self {
            a: a.clone(),
            b: b.clone(),
            pi_a: row_space_projector(a),
            pi_b: column_space_projector(b),
        })
    }

    pub fn pi_a(&self) -> &RealMatrix {
        &self.pi_a
    }

    pub fn pi_b(&self) -> &RealMatrix {
        &self.pi_b
    }

    /// `Π_B M Π_A`.
    pub fn project(&self, m: &RealMatrix) -> Result<RealMatrix> {
        self.pi_b.matmul(m)?.matmul(&self.pi_a)
    }

    /// Solves the trace-minimizing LP. `mu = 0` is accepted here (the set
    /// then contains only exact matches); detector configs require `mu > 0`.
    pub fn estimate(&self, gamma_hat: &StochasticMatrix, mu: f64) -> Result<Estimate> {
        let (nu, nx, ny) = (self.a.rows(), self.a.cols(), self.b.rows());
        if gamma_hat.shape() != (ny, nx) {
            return Err(Error::Dimension(format!(
                "histogram is {}x{}, expected {ny}x{nx}",
                gamma_hat.rows(),
                gamma_hat.cols()
            )));
        }
        if !(mu >= 0.0 && mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be nonnegative, got {mu}")));
        }
        let phi = |i: usize, j: usize| i * nu + j;
        let off_g = nu * nu;
        let gt = |y: usize, x: usize| off_g + y * nx + x;
        let off_t = off_g + ny * nx;
        let t = |y: usize, x: usize| off_t + y * nx + x;
        let nvars = off_t + ny * nx;

        let mut obj = vec![0.0; nvars];
        for k in 0..nu {
            obj[phi(k, k)] = 1.0;
        }
        let mut lp = LpProblem::minimize(obj);

        let (pa, pb) = (&self.pi_a, &self.pi_b);
        let (a, b) = (self.a.matrix(), self.b.matrix());
        let target = self.project(gamma_hat)?;
        // Coefficient of Γ̃[y'][x'] in [Π_B Γ̃ Π_A]_{y,x} is PB[y][y'] PA[x'][x].
        let projected_terms = |y: usize, x: usize, sign: f64| -> Vec<(usize, f64)> {
            let mut terms = Vec::with_capacity(ny * nx);
            for yp in 0..ny {
                for xp in 0..nx {
                    let c = pb[(y, yp)] * pa[(xp, x)];
                    if c != 0.0 {
                        terms.push((gt(yp, xp), sign * c));
                    }
                }
            }
            terms
        };

        for y in 0..ny {
            for x in 0..nx {
                let mut terms = projected_terms(y, x, -1.0);
                for i in 0..nu {
                    for j in 0..nu {
                        let c = b[(y, i)] * a[(j, x)];
                        if c != 0.0 {
                            terms.push((phi(i, j), c));
                        }
                    }
                }
                lp.add_eq_terms(&terms, 0.0);

                let c = target[(y, x)];
                let mut upper = projected_terms(y, x, 1.0);
                upper.push((t(y, x), -1.0));
                lp.add_le_terms(&upper, c);
                let mut lower = projected_terms(y, x, -1.0);
                lower.push((t(y, x), -1.0));
                lp.add_le_terms(&lower, -c);
            }
        }
        for j in 0..nu {
            let terms: Vec<_> = (0..nu).map(|i| (phi(i, j), 1.0)).collect();
            lp.add_eq_terms(&terms, 1.0);
        }
        for x in 0..nx {
            let terms: Vec<_> = (0..ny).map(|y| (gt(y, x), 1.0)).collect();
            lp.add_eq_terms(&terms, 1.0);
        }
        let slack: Vec<_> = (0..ny * nx).map(|k| (off_t + k, 1.0)).collect();
        lp.add_le_terms(&slack, mu);

        match solve_lp(&lp)? {
            LpOutcome::Optimal { x, .. } => {
                let phi_hat = RealMatrix::from_row_major(nu, nu, x[..off_g].to_vec())?;
                let gamma_tilde = RealMatrix::from_row_major(ny, nx, x[off_g..off_t].to_vec())?;
                Ok(Estimate {
                    phi_hat: StochasticMatrix::from_numerical(phi_hat, SOLUTION_TOL)?,
                    gamma_tilde: Some(StochasticMatrix::from_numerical(gamma_tilde, SOLUTION_TOL)?),
                    feasible: true,
                })
            }
            LpOutcome::Infeasible => Ok(Estimate {
                phi_hat: StochasticMatrix::identity(nu),
                gamma_tilde: None,
                feasible: false,
            }),
            // The trace of a stochastic matrix is bounded below by zero.
            LpOutcome::Unbounded => Err(Error::Lp(crate::lp::LpError::NumericalBreakdown(
                "estimator LP reported unbounded".into(),
            ))),
        }
    }

    /// How far `est` is from satisfying the feasible-set constraints:
    /// `‖Π_B(Γ̃ − Γ̂)Π_A‖₁ + ‖BΦ̂A − Π_BΓ̃Π_A‖₁`. Zero for the infeasible
    /// fallback. A valid estimate has residual at most `mu` (plus rounding).
    pub fn membership_residual(&self, gamma_hat: &StochasticMatrix, est: &Estimate) -> Result<f64> {
        let Some(gt) = &est.gamma_tilde else {
            return Ok(0.0);
        };
        let fit = l1_norm(&self.project(&gt.sub(gamma_hat)?)?);
        let observed = self.b.matmul(&est.phi_hat)?.matmul(&self.a)?;
        let eq = l1_norm(&observed.sub(&self.project(gt)?)?);
        Ok(fit + eq)
    }
}

pub fn estimate_attack(
    gamma_hat: &StochasticMatrix,
    a: &StochasticMatrix,
    b: &StochasticMatrix,
    mu: f64,
) -> Result<Estimate> {
    Estimator::new(a, b)?.estimate(gamma_hat, mu)
}

/// `‖Φ̂ − I‖₁`.
pub fn decision_statistic(phi_hat: &StochasticMatrix) -> f64 {
    phi_hat.distance_from_identity()
}

pub fn detect(statistic: f64, delta: f64) -> Verdict {
    if statistic > delta {
        Verdict::Malicious
    } else {
        Verdict::Clean
    }
}

#[derive(Debug, Clone)]
pub struct DetectionReport {
    pub gamma_hat: StochasticMatrix,
    pub phi_hat: StochasticMatrix,
    pub gamma_tilde: Option<StochasticMatrix>,
    pub statistic: f64,
    pub feasible: bool,
    pub verdict: Verdict,
    pub unseen_x1_columns: Vec<usize>,
    pub membership_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Detector {
    config: DetectorConfig,
    estimator: Estimator,
}

impl Detector {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        let estimator = Estimator::new(&config.a, &config.b)?;
        Ok(Self { config, estimator })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn estimator(&self) -> &Estimator {
        &self.estimator
    }

    pub fn run(&self, x1: &SymbolTrace, y1: &SymbolTrace) -> Result<DetectionReport> {
        let cfg = &self.config;
        let hist = conditional_histogram(x1, y1, cfg.x1_size(), cfg.y1_size())?;
        let est = self.estimator.estimate(&hist.gamma_hat, cfg.mu)?;
        let membership_residual = self.estimator.membership_residual(&hist.gamma_hat, &est)?;
        let statistic = decision_statistic(&est.phi_hat);
        Ok(DetectionReport {
            gamma_hat: hist.gamma_hat,
            phi_hat: est.phi_hat,
            gamma_tilde: est.gamma_tilde,
            statistic,
            feasible: est.feasible,
            verdict: detect(statistic, cfg.delta),
            unseen_x1_columns: hist.unseen_x1_columns,
            membership_residual,
        })
    }
}

pub fn run_detection(
    config: &DetectorConfig,
    x1: &SymbolTrace,
    y1: &SymbolTrace,
) -> Result<DetectionReport> {
    Detector::new(config.clone())?.run(x1, y1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{simulate_downlink, simulate_uplink, trial_rng, MacModel, SourcePmf};

    fn motivating_a() -> StochasticMatrix {
        StochasticMatrix::from_rows(&[[0.5, 0.0], [0.5, 0.5], [0.0, 0.5]]).unwrap()
    }

    fn higher_order_a() -> StochasticMatrix {
        let t = 1.0 / 3.0;
        StochasticMatrix::from_rows(&[
            [t, 0.0, 0.0],
            [t, t, 0.0],
            [t, t, t],
            [0.0, t, t],
            [0.0, 0.0, t],
        ])
        .unwrap()
    }

    fn counter_b() -> StochasticMatrix {
        StochasticMatrix::from_rows(&[
            [1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.5, 0.0, 0.3, 0.2],
            [0.0, 0.0, 0.5, 0.2, 0.3],
            [0.0, 0.3, 0.2, 0.5, 0.0],
            [0.0, 0.2, 0.3, 0.0, 0.5],
        ])
        .unwrap()
    }

    #[test]
    fn histogram_by_hand() {
        let x: SymbolTrace = vec![0, 0, 1, 0].into();
        let y: SymbolTrace = vec![0, 1, 0, 0].into();
        let h = conditional_histogram(&x, &y, 2, 2).unwrap();
        let c0 = h.gamma_hat.column(0);
        assert!((c0[0] - 2.0 / 3.0).abs() < 1e-15 && (c0[1] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(h.gamma_hat.column(1), vec![1.0, 0.0]);
        assert!(h.unseen_x1_columns.is_empty());
    }

    #[test]
    fn histogram_unseen_columns_are_uniform() {
        let x: SymbolTrace = vec![0; 5].into();
        let h = conditional_histogram(&x, &x, 3, 3).unwrap();
        assert_eq!(h.gamma_hat.column(0), vec![1.0, 0.0, 0.0]);
        assert_eq!(h.gamma_hat.column(2), vec![1.0 / 3.0; 3]);
        assert_eq!(h.unseen_x1_columns, vec![1, 2]);
        let short: SymbolTrace = vec![0].into();
        assert!(conditional_histogram(&x, &short, 3, 3).is_err());
    }

    #[test]
    fn histogram_converges_on_clean_motivating_channel() {
        let p = SourcePmf::uniform(2);
        let mut rng = trial_rng(2024, 0);
        let up = simulate_uplink(&MacModel::adder(2, 2), &p, &p, 100_000, &mut rng).unwrap();
        let y = simulate_downlink(&StochasticMatrix::identity(3), &up.u, &mut rng).unwrap();
        let h = conditional_histogram(&up.x1, &y, 2, 3).unwrap();
        assert!(l1_norm(&h.gamma_hat.sub(&motivating_a()).unwrap()) < 0.02);
    }

    #[test]
    fn identity_channel_with_exact_observation() {
        let i2 = StochasticMatrix::identity(2);
        let est = estimate_attack(&i2, &i2, &i2, 0.0).unwrap();
        assert!(est.feasible);
        assert!(decision_statistic(&est.phi_hat) < 1e-9);

        // Here Φ̂ = Γ̃ and ‖Γ̃ − I‖₁ ≤ mu, so the maximum is mu itself.
        let est = estimate_attack(&i2, &i2, &i2, 0.3).unwrap();
        assert!((decision_statistic(&est.phi_hat) - 0.3).abs() < 1e-9);
    }

    #[test]
    fn motivating_channel_exact_limit_is_clean() {
        let a = motivating_a();
        let b = StochasticMatrix::identity(3);
        let est = estimate_attack(&a, &a, &b, 0.0).unwrap();
        assert!(est.feasible);
        assert!(decision_statistic(&est.phi_hat) < 1e-8);
        assert_eq!(detect(decision_statistic(&est.phi_hat), 0.004), Verdict::Clean);
    }

    #[test]
    fn counter_example_exact_limit_hides_attack() {
        let a = higher_order_a();
        let b = counter_b();
        let ba = b.compose(&a).unwrap();
        let est = estimate_attack(&ba, &a, &b, 0.0).unwrap();
        assert!(est.feasible);
        assert!(decision_statistic(&est.phi_hat) >= 6.0 - 1e-7);
    }

    #[test]
    fn infeasible_falls_back_to_identity() {
        // Γ̂ far from anything B Φ A can produce, with no slack.
        let a = StochasticMatrix::identity(2);
        let b = StochasticMatrix::from_rows(&[[1.0, 1.0], [0.0, 0.0]]).unwrap();
        let g = StochasticMatrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        let est = estimate_attack(&g, &a, &b, 0.01).unwrap();
        assert!(!est.feasible);
        assert_eq!(est.phi_hat, StochasticMatrix::identity(2));
        assert_eq!(decision_statistic(&est.phi_hat), 0.0);
    }

    #[test]
    fn verdict_threshold() {
        assert_eq!(detect(0.0, 1e-9), Verdict::Clean);
        assert_eq!(detect(0.07, 0.065), Verdict::Malicious);
        assert_eq!(detect(0.065, 0.065), Verdict::Clean);
    }

    #[test]
    fn config_validation() {
        let a = motivating_a();
        let b = StochasticMatrix::identity(3);
        assert!(DetectorConfig::new(a.clone(), b.clone(), 0.0, 0.1).is_err());
        assert!(DetectorConfig::new(a.clone(), b.clone(), 0.1, -1.0).is_err());
        assert!(DetectorConfig::new(a, StochasticMatrix::identity(2), 0.1, 0.1).is_err());
    }

    #[test]
    fn end_to_end_report_is_consistent() {
        let p = SourcePmf::uniform(2);
        let mut rng = trial_rng(8, 3);
        let up = simulate_uplink(&MacModel::adder(2, 2), &p, &p, 10_000, &mut rng).unwrap();
        let b = StochasticMatrix::identity(3);
        let y = simulate_downlink(&b, &up.u, &mut rng).unwrap();
        let cfg = DetectorConfig::new(motivating_a(), b, 0.1, 0.065).unwrap();
        let r = run_detection(&cfg, &up.x1, &y).unwrap();
        assert!(r.feasible);
        assert!((r.statistic - r.phi_hat.distance_from_identity()).abs() < 1e-12);
        assert!(r.membership_residual <= cfg.mu + 1e-6);
    }
}
