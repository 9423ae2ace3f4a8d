//! Finite-difference gradient checks, one test per op family.

mod common;

use common::grad;

#[test]
fn conv2d() {
    grad::conv2d();
}

#[test]
fn maxpool2d() {
    grad::maxpool2d();
}

#[test]
fn batchnorm_train() {
    grad::batchnorm_train();
}

#[test]
fn dense() {
    grad::dense();
}

#[test]
fn activations_and_dropout() {
    grad::activations_and_dropout();
}

#[test]
fn losses_and_penalty() {
    grad::losses_and_penalty();
}

#[test]
fn network_end_to_end() {
    grad::network_end_to_end();
}
