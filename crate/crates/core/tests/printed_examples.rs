mod common;

use common::printed;

#[test]
fn unit_square_incidence() {
    printed::unit_square_incidence();
}

#[test]
fn unit_square_maps() {
    printed::unit_square_maps();
}

#[test]
fn unit_square_pfq_is_particular_plus_cycles() {
    printed::unit_square_pfq_is_particular_plus_cycles();
}

#[test]
fn two_by_one_incidence() {
    printed::two_by_one_incidence();
}

#[test]
fn two_by_one_edge_inputs() {
    printed::two_by_one_edge_inputs();
}

#[test]
fn two_by_one_mixed_causality() {
    printed::two_by_one_mixed_causality();
}

#[test]
fn mixed_output_matrix_matches_its_definition() {
    printed::mixed_output_matrix_matches_its_definition();
}

