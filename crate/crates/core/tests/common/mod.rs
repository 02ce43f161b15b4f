#![allow(dead_code)]

use erm_lab_core::instances::{
    default_dimension, default_threshold, generate, normalize, GenerateParams, Planted, ProblemKind,
    VectorPairInstance,
};

pub fn bhcp(n: usize, planted: Planted, seed: u64) -> VectorPairInstance {
    let d = default_dimension(n);
    generate(&GenerateParams { kind: ProblemKind::Bhcp, n, d, t: Some(default_threshold(d)), planted, seed })
        .unwrap()
        .instance
}

pub fn ovp(n: usize, planted: Planted, seed: u64) -> VectorPairInstance {
    let d = default_dimension(n);
    generate(&GenerateParams { kind: ProblemKind::Ovp, n, d, t: None, planted, seed }).unwrap().instance
}

pub fn ovp_normalized(n: usize, planted: Planted, seed: u64) -> VectorPairInstance {
    normalize(&ovp(n, planted, seed)).unwrap()
}
