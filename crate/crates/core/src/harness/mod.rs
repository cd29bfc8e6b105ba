//! Seeded Monte Carlo experiments: one trial simulates a full block, runs the
//! detector at node 1 and records both the decision statistic and the true
//! distance of the realized attack channel from the identity.

mod presets;

pub use presets::{
    counter_example_b, counter_example_upsilon, figure_curves, higher_order_a, higher_order_b,
    higher_order_phis, motivating_a, motivating_phis, preset, Curve, FIGURES, PAPER_TRIALS,
    DEFAULT_TRIALS,
};

use rand::SeedableRng;
use rayon::prelude::*;

use crate::attack::{apply_attack, changed_fraction, extract_attack_channel, truth_statistic, AttackSpec};
use crate::channel::{
    marginalize_mac, simulate_downlink, simulate_uplink, trial_seed, MacModel, SourcePmf,
    SymbolTrace, TraceRng,
};
use crate::detector::{Detector, DetectorConfig};
use crate::error::{Error, Result};
use crate::stochastic::StochasticMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub p1: SourcePmf,
    pub p2: SourcePmf,
    pub mac: MacModel,
    /// Broadcast marginal `p(y1 | v)`.
    pub b: StochasticMatrix,
    pub attack: AttackSpec,
    pub n: usize,
    pub mu: f64,
    pub delta: f64,
    pub trials: usize,
    pub master_seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidArgument("N must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidArgument(format!("mu must be positive, got {}", self.mu)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "delta must be positive, got {}",
                self.delta
            )));
        }
        let u = self.mac.u_size();
        if self.b.cols() != u {
            return Err(Error::Dimension(format!(
                "broadcast marginal has {} columns, relay alphabet has {u} symbols",
                self.b.cols()
            )));
        }
        self.attack.validate(u)?;
        marginalize_mac(&self.mac, &self.p2)?;
        if self.p1.len() != self.mac.x1_size() {
            return Err(Error::Dimension(format!(
                "MAC expects |X1| = {}, p1 has {} entries",
                self.mac.x1_size(),
                self.p1.len()
            )));
        }
        Ok(())
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    /// The `A = p(u | x1)` the detector at node 1 works with.
    pub fn a(&self) -> Result<StochasticMatrix> {
        marginalize_mac(&self.mac, &self.p2)
    }

    pub fn detector_config(&self) -> Result<DetectorConfig> {
        DetectorConfig::new(self.a()?, self.b.clone(), self.mu, self.delta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial_index: usize,
    /// Decision statistic `‖Φ̂ − I‖₁`.
    pub statistic: f64,
    /// `‖Φ^N − I‖₁` of the realized relay behaviour.
    pub truth_stat: f64,
    pub feasible: bool,
    pub seed_used: u64,
    /// Fraction of relay symbols changed in this block.
    pub changed_fraction: f64,
    pub membership_residual: f64,
}

/// Symbol traces of one simulated block.
#[derive(Debug, Clone)]
pub struct TrialTraces {
    pub x1: SymbolTrace,
    pub u: SymbolTrace,
    pub v: SymbolTrace,
    pub y1: SymbolTrace,
}

/// A scenario with its detector prepared once for all trials.
#[derive(Debug, Clone)]
pub struct Experiment {
    scenario: Scenario,
    detector: Detector,
}

impl Experiment {
    pub fn new(scenario: Scenario) -> Result<Self> {
        scenario.validate()?;
        let detector = Detector::new(scenario.detector_config()?)?;
        Ok(Self { scenario, detector })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn detector(&self) -> &Detector {
        &self.detector
    }

    pub fn simulate(&self, trial_index: usize) -> Result<(u64, TrialTraces)> {
        let s = &self.scenario;
        let seed = trial_seed(s.master_seed, trial_index as u64);
        let mut rng = TraceRng::seed_from_u64(seed);
        let up = simulate_uplink(&s.mac, &s.p1, &s.p2, s.n, &mut rng)?;
        let v = apply_attack(&s.attack, &up.u, &mut rng)?;
        let y1 = simulate_downlink(&s.b, &v, &mut rng)?;
        Ok((
            seed,
            TrialTraces {
                x1: up.x1,
                u: up.u,
                v,
                y1,
            },
        ))
    }

    pub fn run_trial(&self, trial_index: usize) -> Result<TrialResult> {
        let (seed, t) = self.simulate(trial_index)?;
        let ac = extract_attack_channel(&t.u, &t.v, self.scenario.mac.u_size())?;
        let report = self.detector.run(&t.x1, &t.y1)?;
        Ok(TrialResult {
            trial_index,
            statistic: report.statistic,
            truth_stat: truth_statistic(&ac),
            feasible: report.feasible,
            seed_used: seed,
            changed_fraction: changed_fraction(&t.u, &t.v),
            membership_residual: report.membership_residual,
        })
    }

    /// All trials, in parallel, ordered by trial index.
    pub fn run(&self) -> Result<Vec<TrialResult>> {
        (0..self.scenario.trials)
            .into_par_iter()
            .map(|i| self.run_trial(i))
            .collect()
    }

    pub fn run_serial(&self) -> Result<Vec<TrialResult>> {
        (0..self.scenario.trials).map(|i| self.run_trial(i)).collect()
    }
}

pub fn run_trial(s: &Scenario, trial_index: usize) -> Result<TrialResult> {
    Experiment::new(s.clone())?.run_trial(trial_index)
}

pub fn run_experiment(s: &Scenario) -> Result<Vec<TrialResult>> {
    Experiment::new(s.clone())?.run()
}

pub fn run_experiment_serial(s: &Scenario) -> Result<Vec<TrialResult>> {
    Experiment::new(s.clone())?.run_serial()
}

/// Sorted values paired with `i/n`.
pub fn empirical_cdf(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("empirical cdf of an empty sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    Ok(v.into_iter()
        .enumerate()
        .map(|(i, x)| (x, (i + 1) as f64 / n))
        .collect())
}

/// Fraction of `values` at or below `x`.
pub fn cdf_at(values: &[f64], x: f64) -> f64 {
    values.iter().filter(|&&v| v <= x).count() as f64 / values.len() as f64
}

pub fn statistics(results: &[TrialResult]) -> Vec<f64> {
    results.iter().map(|r| r.statistic).collect()
}

/// `(false_alarm, miss)`: the share of null statistics above `delta` and
/// the share of alternative statistics at or below it.
pub fn error_rates(null: &[f64], alt: &[f64], delta: f64) -> Result<(f64, f64)> {
    if null.is_empty() || alt.is_empty() {
        return Err(Error::InvalidArgument("error rates need nonempty samples".into()));
    }
    Ok((1.0 - cdf_at(null, delta), cdf_at(alt, delta)))
}

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) − F_b(x)|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("KS statistic needs nonempty samples".into()));
    }
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(d)
}

/// Smallest achievable `max(false_alarm, miss)` over all thresholds.
pub fn best_threshold(null: &[f64], alt: &[f64]) -> Result<(f64, f64, f64)> {
    let mut candidates: Vec<f64> = null.iter().chain(alt).copied().collect();
    candidates.push(0.0);
    candidates.sort_by(f64::total_cmp);
    let mut best = (f64::NAN, f64::INFINITY, f64::INFINITY);
    for &t in &candidates {
        let (fa, miss) = error_rates(null, alt, t)?;
        if fa.max(miss) < best.1.max(best.2) {
            best = (t, fa, miss);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone)]
pub struct CurveResult {
    pub label: String,
    pub scenario: Scenario,
    pub results: Vec<TrialResult>,
}

/// Runs every curve of a figure. `trials` overrides the preset count.
pub fn run_figure(name: &str, trials: Option<usize>) -> Result<Vec<CurveResult>> {
    figure_curves(name)?
        .into_iter()
        .map(|c| {
            let scenario = match trials {
                Some(t) => c.scenario.with_trials(t),
                None => c.scenario,
            };
            let results = run_experiment(&scenario)?;
            Ok(CurveResult {
                label: c.label,
                scenario,
                results,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRateRow {
    pub label: String,
    pub delta: f64,
    pub false_alarm: f64,
    pub miss: f64,
}

/// Error rates of each malicious curve against the first (faithful) curve.
pub fn figure_error_rates(curves: &[CurveResult]) -> Result<Vec<ErrorRateRow>> {
    let Some((null, rest)) = curves.split_first() else {
        return Err(Error::InvalidArgument("figure has no curves".into()));
    };
    let null_stats = statistics(&null.results);
    rest.iter()
        .map(|c| {
            let delta = c.scenario.delta;
            let (false_alarm, miss) = error_rates(&null_stats, &statistics(&c.results), delta)?;
            Ok(ErrorRateRow {
                label: c.label.clone(),
                delta,
                false_alarm,
                miss,
            })
        })
        .collect()
}
