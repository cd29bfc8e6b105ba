use relay_sentinel::harness::{figure_curves, preset};
use relay_sentinel::harness::{run_experiment, run_experiment_serial, statistics};

#[test]
fn clean_blocks_are_feasible_at_moderate_mu() {
    let s = preset("fig3b:phi1").unwrap().with_trials(60).with_seed(77);
    let s = relay_sentinel::Scenario { mu: 0.2, ..s };
    let results = run_experiment(&s).unwrap();
    assert!(results.iter().all(|r| r.feasible));
    assert!(results.iter().all(|r| r.truth_stat == 0.0 && r.changed_fraction == 0.0));
}

#[test]
fn every_estimate_is_a_member_of_its_set() {
    for fig in ["fig3a", "fig5b"] {
        for c in figure_curves(fig).unwrap() {
            let mu = c.scenario.mu;
            for r in run_experiment(&c.scenario.with_trials(10)).unwrap() {
                if r.feasible {
                    assert!(r.membership_residual <= mu + 1e-6, "{fig} {}: {}", c.label, r.membership_residual);
                }
            }
        }
    }
}

#[test]
fn parallel_and_serial_runs_agree() {
    let s = preset("fig3a").unwrap().with_trials(16);
    assert_eq!(run_experiment(&s).unwrap(), run_experiment_serial(&s).unwrap());
}

#[test]
fn seed_changes_the_outcome() {
    let s = preset("fig3a").unwrap().with_trials(8);
    let a = statistics(&run_experiment(&s).unwrap());
    let b = statistics(&run_experiment(&s.clone().with_seed(s.master_seed + 1000)).unwrap());
    assert_ne!(a, b);
}

#[test]
fn attacks_raise_the_statistic_at_large_n() {
    let curves = figure_curves("fig3c").unwrap();
    let mean = |i: usize| {
        let r = run_experiment(&curves[i].scenario.clone().with_trials(6)).unwrap();
        statistics(&r).iter().sum::<f64>() / r.len() as f64
    };
    let clean = mean(0);
    assert!(mean(1) > clean, "phi2 should look worse than the faithful relay");
}
