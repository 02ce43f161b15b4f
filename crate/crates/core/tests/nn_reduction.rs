mod common;

use common::ovp_normalized;
use erm_lab_core::instances::Planted;
use erm_lab_core::nn::*;
use erm_lab_core::oracles::solve_ovp;
use erm_lab_core::{Answer, Interval, PrecisionPolicy};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;

const P: u32 = 512;

fn erm(n: usize, planted: Planted, seed: u64, loss: NiceLoss, kind: ActivationKind) -> ErmMatrixInstance {
    let inst = ovp_normalized(n, planted, seed);
    let act = activation_thresholds(kind, DEFAULT_T, n, P).unwrap();
    build_layer_matrix(&inst, &loss, &act).unwrap()
}

#[test]
fn matrix_matches_network() {
    for seed in 0..6 {
        for kind in [ActivationKind::Relu, ActivationKind::Sigmoid] {
            let e = erm(6, Planted::Random, seed, NiceLoss::hinge(), kind);
            for (i, ex) in e.network.examples.iter().enumerate() {
                for (j, w) in e.network.weights.iter().enumerate() {
                    let pre: Vec<Interval> = ex.iter().zip(w).map(|(x, y)| x * y).collect();
                    let out = e.activation.s(&Interval::sum(P, &pre));
                    assert!(out.overlaps(e.m.get(i, j)), "row {i} col {j}");
                }
            }
        }
    }
}

#[test]
fn matrix_shape_and_labels() {
    let e = erm(5, Planted::Yes, 1, NiceLoss::logistic(), ActivationKind::Relu);
    assert_eq!(e.m.rows(), 15);
    assert_eq!(e.labels.iter().filter(|&&y| y < 0).count(), 5);
    let s_v1 = e.activation.s(&e.activation.v1);
    for i in 0..5 {
        assert!(e.m.get(5 + i, i).overlaps(&s_v1));
    }
}

#[test]
fn objective_is_midpoint_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for loss in [NiceLoss::hinge(), NiceLoss::logistic()] {
        let e = erm(5, Planted::Random, 4, loss, ActivationKind::Sigmoid);
        for _ in 0..50 {
            let x: Vec<f64> = (0..5).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let y: Vec<f64> = (0..5).map(|_| rng.gen_range(-50.0..50.0)).collect();
            let iv = |v: &[f64]| v.iter().map(|&t| Interval::from_f64(P, t)).collect::<Vec<_>>();
            let fx = e.objective(&iv(&x)).unwrap();
            let fy = e.objective(&iv(&y)).unwrap();
            let mid: Vec<Interval> = iv(&x).iter().zip(iv(&y)).map(|(a, b)| (a + &b).div_int(2).unwrap()).collect();
            let fm = e.objective(&mid).unwrap();
            let avg = (&fx + &fy).div_int(2).unwrap();
            assert!(fm.lo() <= avg.hi());
        }
    }
}

#[test]
fn zero_matrix_value_is_rows_times_l0() {
    let mut e = erm(4, Planted::No, 2, NiceLoss::logistic(), ActivationKind::Relu);
    e.m = e.m.map(|_| Interval::zero(P));
    let v = e.objective(&vec![Interval::from_f64(P, 3.0); 4]).unwrap();
    assert!(v.contains_f64(12.0));
}

#[test]
fn one_by_one_hinge() {
    let loss = NiceLoss::hinge();
    for a in [0.0, 0.5, 1.0, 2.0] {
        let v = loss.eval(&Interval::from_f64(128, a));
        assert!(v.contains_f64((1.0f64 - a).max(0.0)));
    }
}

#[test]
fn certificate_and_minimum_bounds() {
    for n in [4usize, 6, 8] {
        for seed in 0..3 {
            for loss in [NiceLoss::hinge(), NiceLoss::logistic()] {
                for kind in [ActivationKind::Relu, ActivationKind::Sigmoid] {
                    for planted in [Planted::Yes, Planted::No] {
                        let inst = ovp_normalized(n, planted, seed);
                        let r = nn_report(&inst, &loss, kind, DEFAULT_T, P).unwrap();
                        let l0 = loss.l_at_zero(P);
                        let tenth = l0.div_int(10).unwrap();
                        if solve_ovp(&inst).unwrap().has_pair {
                            let cap = &l0.mul_int(3 * n as i64 - 1) + &tenth;
                            assert!(r.certificate_value.hi() <= cap.lo());
                        } else {
                            let floor = &l0.mul_int(3 * n as i64) - &tenth;
                            assert!(r.minimum.lo() >= floor.hi());
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn large_entries_hit_the_barrier() {
    let n = 6;
    for loss in [NiceLoss::hinge(), NiceLoss::logistic()] {
        let e = erm(n, Planted::No, 5, loss.clone(), ActivationKind::Relu);
        let ln_n = Interval::from_int(P, n as i64).ln().unwrap();
        let four_n = loss.l_at_zero(P).mul_int(4 * n as i64);
        for exp in [DEFAULT_T as i64 + 2, 1_000_000] {
            let big = ln_n.mul_int(exp).exp();
            for j in 0..n {
                for sign in [1i64, -1] {
                    let mut alpha = vec![Interval::zero(P); n];
                    alpha[j] = big.mul_int(sign);
                    assert!(e.objective(&alpha).unwrap().lo() > four_n.hi());
                }
            }
        }
    }
}

#[test]
fn solver_bounds_enclose_each_other() {
    for loss in [NiceLoss::hinge(), NiceLoss::logistic()] {
        let e = erm(6, Planted::Yes, 8, loss, ActivationKind::Sigmoid);
        let start = vec![Float::with_val(P, 1); 6];
        let tol = Float::with_val(P, Float::i_exp(1, -200));
        let s = solve_final_layer(&e, &start, &tol).unwrap();
        assert!(s.converged);
        assert!(s.lower_bound.lo() <= s.objective.hi());
        let at = e.objective(&s.alpha).unwrap();
        assert!(at.overlaps(&s.objective));
    }
}

#[test]
fn distinguisher_matches_oracle() {
    let policy = PrecisionPolicy::new(P, 4096);
    for n in [4usize, 8, 12] {
        for seed in 0..2 {
            for planted in [Planted::Yes, Planted::No] {
                let inst = ovp_normalized(n, planted, 100 + seed);
                let truth = Answer::from_bool(solve_ovp(&inst).unwrap().has_pair);
                for loss in [NiceLoss::hinge(), NiceLoss::logistic()] {
                    let v = nn_distinguisher(&inst, &loss, ActivationKind::Relu, DEFAULT_T, &policy).unwrap();
                    assert_eq!(v.answer, truth);
                }
            }
        }
    }
}

#[test]
fn unnormalized_input_rejected() {
    let inst = common::ovp(4, Planted::Yes, 1);
    let act = activation_thresholds(ActivationKind::Relu, DEFAULT_T, 4, P).unwrap();
    assert!(build_layer_matrix(&inst, &NiceLoss::hinge(), &act).is_err());
}

#[test]
fn sigmoid_level_is_n_to_minus_t() {
    for n in [3usize, 10, 24] {
        let a = activation_thresholds(ActivationKind::Sigmoid, 4, n, 256).unwrap();
        let want = Interval::one(256).div(&Interval::from_int(256, (n as i64).pow(4))).unwrap();
        assert!(a.s(&a.v1).overlaps(&want));
        let mid = (&a.v0 + &a.v2).div_int(2).unwrap();
        assert!(mid.overlaps(&a.v1));
    }
}
