//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::fs;
use std::process::{Command, ExitCode, Stdio};
use std::time::Instant;

use relay_sentinel::harness::{
    best_threshold, counter_example_b, error_rates, figure_curves, higher_order_a, higher_order_b,
    ks_statistic, motivating_a, run_experiment, run_figure, statistics, CurveResult,
};
use relay_sentinel::manipulability::{check_algorithm1, dpv_search_algorithm2, DpvSearch};
use relay_sentinel::stochastic::channel_constants;
use relay_sentinel::{certify, Method, StochasticMatrix};
use relay_sentinel_testkit::suites;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
        }
    }
}

/// Residuals of every feasible detector run, checked under criterion 9.
#[derive(Default)]
struct Membership {
    runs: usize,
    infeasible: usize,
    violations: Vec<String>,
}

impl Membership {
    fn record(&mut self, tag: &str, curves: &[CurveResult]) {
        for c in curves {
            let mu = c.scenario.mu;
            for r in &c.results {
                self.runs += 1;
                if !r.feasible {
                    self.infeasible += 1;
                } else if r.membership_residual > mu + 1e-6 {
                    self.violations.push(format!(
                        "{tag}/{} trial {}: residual {:.3e} > mu {mu}",
                        c.label, r.trial_index, r.membership_residual
                    ));
                }
            }
        }
    }
}

fn separation(curves: &[CurveResult], delta: f64) -> Outcome {
    let null = statistics(&curves[0].results);
    let mut pass = true;
    let mut parts = Vec::new();
    for c in &curves[1..] {
        let (fa, miss) = error_rates(&null, &statistics(&c.results), delta).unwrap();
        pass &= fa <= 0.05 && miss <= 0.05;
        parts.push(format!("{}: fa {:.3} miss {:.3}", c.label, fa, miss));
    }
    let median = |v: &[f64]| {
        let mut v = v.to_vec();
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let medians: Vec<String> = curves
        .iter()
        .map(|c| format!("{} {:.4}", c.label, median(&statistics(&c.results))))
        .collect();
    Outcome::new(
        pass,
        format!("delta {delta}; {}; median D: {}", parts.join(", "), medians.join(", ")),
    )
}

fn criterion1() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let channels = [
        ("counter-example", higher_order_a(), counter_example_b()),
        ("higher-order", higher_order_a(), higher_order_b()),
        ("motivating", motivating_a(), StochasticMatrix::identity(3)),
    ];
    for (name, a, b) in channels {
        let t = Instant::now();
        let v = certify(&a, &b).expect("certify");
        let secs = t.elapsed().as_secs_f64();
        let ok = match name {
            "counter-example" => v.manipulable && (v.lp_optimal_value - 3.0).abs() <= 1e-6,
            "higher-order" => !v.manipulable && v.lp_optimal_value.abs() <= 1e-6,
            _ => {
                let (_, alg1) = check_algorithm1(&a, &b).unwrap();
                let alg2 = dpv_search_algorithm2(&a) == DpvSearch::Found;
                !v.manipulable && !alg1 && !alg2 && v.method == Method::Both && v.dpv_found == Some(false)
            }
        };
        pass &= ok && secs < 1.0;
        parts.push(format!(
            "{name}: value {:.3e} manipulable {} ({:.3}s)",
            v.lp_optimal_value, v.manipulable, secs
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn criterion2() -> Outcome {
    let k = channel_constants(&motivating_a(), 3).unwrap();
    let pass = (k.a_big_min - 0.5).abs() <= 1e-12
        && (k.a_min - 1.0 / 15.0).abs() <= 1e-12
        && (k.b_min - 1.0 / 12.0).abs() <= 1e-12;
    Outcome::new(
        pass,
        format!("A_min {} a_min {} b_min {}", k.a_big_min, k.a_min, k.b_min),
    )
}

fn criterion5(curves: &[CurveResult]) -> Outcome {
    let null = statistics(&curves[0].results);
    let alt = statistics(&curves[3].results);
    let (t, fa, miss) = best_threshold(&null, &alt).unwrap();
    Outcome::new(
        fa.max(miss) > 0.2,
        format!("best threshold {t:.4}: fa {fa:.3} miss {miss:.3}"),
    )
}

fn criterion6(curves: &[CurveResult]) -> Outcome {
    let stats = statistics(&curves[0].results);
    let above = stats.iter().filter(|&&d| d > 0.07).count() as f64 / stats.len() as f64;
    let feasible = curves[0].results.iter().filter(|r| r.feasible).count();
    Outcome::new(
        (0.43..=0.57).contains(&above),
        format!(
            "Pr(D > 0.07) = {above:.3} over {} trials ({feasible} feasible)",
            stats.len()
        ),
    )
}

fn criterion8(curves: &[CurveResult]) -> Outcome {
    let ks = ks_statistic(&statistics(&curves[0].results), &statistics(&curves[1].results)).unwrap();
    let r = &curves[1].results;
    let changed = r.iter().map(|t| t.changed_fraction).sum::<f64>() / r.len() as f64;
    Outcome::new(
        ks < 0.15,
        format!(
            "KS {ks:.3}; changed fraction {changed:.4} (stated 5/9 = {:.4}, derived 6/9 = {:.4})",
            5.0 / 9.0,
            6.0 / 9.0
        ),
    )
}

fn criterion9(m: &Membership) -> Outcome {
    let reports = [
        suites::lp_vs_vertex_oracle(901, 200),
        suites::estimator_vs_grid(902, 100),
        suites::null_space_bounds(903, 1000),
        suites::trace_identity(904, 1000),
        suites::algorithm1_vs_witness(905, 100),
        suites::algorithm1_vs_algorithm2(906, 100),
    ];
    let mut pass = m.violations.is_empty();
    let mut parts = Vec::new();
    for r in &reports {
        pass &= r.passed();
        parts.push(format!("{} [{}]", r.name, r.summary()));
    }
    parts.push(format!(
        "membership: {} runs, {} infeasible, {} violations{}",
        m.runs,
        m.infeasible,
        m.violations.len(),
        m.violations.first().map(|v| format!(" (first: {v})")).unwrap_or_default()
    ));
    Outcome::new(pass, parts.join("; "))
}

fn criterion10() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let bin = env!("CARGO_BIN_EXE_relay-sentinel");
    let mut mismatched = Vec::new();
    for name in ["fig3a", "fig3b", "fig3c", "fig3d", "fig5a", "fig5b"] {
        let mut outputs = Vec::new();
        for k in 0..2 {
            let path = dir.path().join(format!("{name}_{k}.csv"));
            let ok = Command::new(bin)
                .env_remove("RELAY_SENTINEL_SEED")
                .args(["simulate", "--preset", name, "--trials", "12", "-o"])
                .arg(&path)
                .status()
                .map(|s| s.success())
                .unwrap_or(false);
            outputs.push(if ok { fs::read(&path).ok() } else { None });
        }
        if outputs[0].is_none() || outputs[0] != outputs[1] {
            mismatched.push(format!("simulate {name}"));
        }
    }
    let mut dirs = Vec::new();
    for k in 0..2 {
        let out = dir.path().join(format!("repro_{k}"));
        let ok = Command::new(bin)
            .env_remove("RELAY_SENTINEL_SEED")
            .args(["reproduce", "fig3a", "--trials", "20", "-o"])
            .arg(&out)
            .stdout(Stdio::null())
            .status()
            .map(|s| s.success())
            .unwrap_or(false);
        dirs.push((ok, out));
    }
    for file in ["fig3a_phi1.csv", "fig3a_phi4.csv", "fig3a_error_rates.csv"] {
        let a = fs::read(dirs[0].1.join(file)).ok();
        let b = fs::read(dirs[1].1.join(file)).ok();
        if !dirs[0].0 || !dirs[1].0 || a.is_none() || a != b {
            mismatched.push(format!("reproduce {file}"));
        }
    }
    Outcome::new(
        mismatched.is_empty(),
        if mismatched.is_empty() {
            "6 simulate presets and 3 reproduce files byte-identical across runs".to_string()
        } else {
            format!("differing: {}", mismatched.join(", "))
        },
    )
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

fn main() -> ExitCode {
    let mut membership = Membership::default();
    let mut lines = Vec::new();
    let mut report = |id: u32, title: &str, o: Outcome, secs: f64| {
        let line = format!(
            "{} criterion {id} ({title}): {} [{secs:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        println!("{line}");
        lines.push(o.pass);
    };

    let (o, s) = timed(criterion1);
    report(1, "channel certification", o, s);
    let (o, s) = timed(criterion2);
    report(2, "channel constants", o, s);

    let (fig3b, s) = timed(|| run_figure("fig3b", Some(300)).unwrap());
    membership.record("fig3b", &fig3b);
    report(3, "separation at N=1e4", separation(&fig3b, 0.065), s);

    let (fig3c, s) = timed(|| run_figure("fig3c", Some(100)).unwrap());
    membership.record("fig3c", &fig3c);
    report(4, "separation at N=1e5", separation(&fig3c, 0.004), s);

    let (fig3a, s) = timed(|| run_figure("fig3a", Some(300)).unwrap());
    membership.record("fig3a", &fig3a);
    report(5, "weak separation at N=1e3", criterion5(&fig3a), s);

    let (fig3d, s) = timed(|| {
        let c = figure_curves("fig3d").unwrap().swap_remove(3);
        let scenario = c.scenario.with_trials(200);
        vec![CurveResult {
            label: c.label,
            results: run_experiment(&scenario).unwrap(),
            scenario,
        }]
    });
    membership.record("fig3d", &fig3d);
    report(6, "non-ergodic gated attack", criterion6(&fig3d), s);

    let (fig5a, s) = timed(|| run_figure("fig5a", Some(100)).unwrap());
    membership.record("fig5a", &fig5a);
    report(7, "higher-order separation", separation(&fig5a, 0.07), s);

    let (fig5b, s) = timed(|| run_figure("fig5b", Some(200)).unwrap());
    membership.record("fig5b", &fig5b);
    report(8, "counter-example indistinguishability", criterion8(&fig5b), s);

    let (o, s) = timed(|| criterion9(&membership));
    report(9, "property suites", o, s);
    let (o, s) = timed(criterion10);
    report(10, "determinism", o, s);

    let failed = lines.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
