mod common;

const CASES: usize = 1000;

#[test]
fn shapelet_distance_matches_scan() {
    common::check_shapelet_distance(CASES, 1).unwrap();
}

#[test]
fn dft_matches_quadratic_dft() {
    common::check_dft(CASES, 2).unwrap();
}

#[test]
fn lowpass_matches_naive_inverse() {
    common::check_lowpass(CASES, 3).unwrap();
}

#[test]
fn nearest_neighbor_matches_scan() {
    common::check_nearest_neighbor(CASES, 4).unwrap();
}

#[test]
fn f_score_matches_anova() {
    common::check_f_score(CASES, 5).unwrap();
}
