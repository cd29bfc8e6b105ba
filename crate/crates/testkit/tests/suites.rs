use relay_sentinel_testkit::suites::*;

fn assert_ok(rep: SuiteReport) {
    println!("{}: {}", rep.name, rep.summary());
    assert!(rep.passed(), "{}: {:?}", rep.name, rep.failures);
}

#[test]
fn simplex_matches_vertex_enumeration() {
    assert_ok(lp_vs_vertex_oracle(11, 60));
}

#[test]
fn estimator_matches_grid_search() {
    assert_ok(estimator_vs_grid(12, 30));
}

#[test]
fn null_space_vectors_respect_extremal_bounds() {
    assert_ok(null_space_bounds(13, 200));
}

#[test]
fn identity_distance_is_a_trace() {
    assert_ok(trace_identity(14, 200));
}

#[test]
fn lp_certificate_agrees_with_witness_search() {
    assert_ok(algorithm1_vs_witness(15, 40));
}

#[test]
fn lp_certificate_agrees_with_null_space_search() {
    assert_ok(algorithm1_vs_algorithm2(16, 40));
}

#[test]
fn larger_mu_never_lowers_the_statistic() {
    assert_ok(estimator_monotone_in_mu(17, 20));
}
