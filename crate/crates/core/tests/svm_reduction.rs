mod common;

use common::bhcp;
use erm_lab_core::instances::{Planted, VectorPairInstance};
use erm_lab_core::kernels::KernelParams;
use erm_lab_core::oracles::solve_bhcp;
use erm_lab_core::svm::*;
use erm_lab_core::{Answer, Interval, PrecisionPolicy};
use rug::Float;

fn policy(inst: &VectorPairInstance) -> PrecisionPolicy {
    let n = inst.n();
    PrecisionPolicy::for_depth(100.0 * (n as f64).ln(), inst.threshold().unwrap(), 1 << 20)
}

fn params(inst: &VectorPairInstance) -> KernelParams {
    KernelParams::standard(inst.n(), policy(inst).start_bits).unwrap()
}

#[test]
fn gap_lemmas_and_bounded_duals() {
    for n in [4usize, 6, 8] {
        for seed in 0..3 {
            for planted in [Planted::Yes, Planted::No] {
                let inst = bhcp(n, planted, seed);
                let params = params(&inst);
                let t = inst.threshold().unwrap() as u64;
                let g = svm_gap(&inst, &params, &SvmVariant::HardMargin).unwrap();
                let two_tol = g.tol.mul_int(2);
                if solve_bhcp(&inst).unwrap().has_pair {
                    let floor = &params.at_distance(t - 1).div_int(4).unwrap() - &two_tol;
                    assert!(g.gap.lo() >= floor.hi());
                } else {
                    let n6 = (n as i64).pow(6);
                    let cap = &params.at_distance(t).mul_int(200 * n6) + &two_tol;
                    assert!(g.gap.hi() <= cap.lo());
                }
                let upper = &Interval::from_int(params.prec(), n as i64) + &g.tol;
                let lower = &Interval::from_ratio(params.prec(), 1, 2) - &g.tol;
                for sol in &g.solutions[..2] {
                    for a in &sol.alpha {
                        assert!(a.lo() >= lower.lo() && a.hi() <= upper.hi());
                    }
                }
                for sol in &g.solutions {
                    let primal = sol.primal_value.as_ref().unwrap();
                    let diff = (primal - &sol.dual_value).abs();
                    assert!(diff.hi() <= two_tol.hi());
                }
            }
        }
    }
}

#[test]
fn swapping_sides_keeps_the_gap() {
    for variant in [SvmVariant::HardMargin, SvmVariant::Bias] {
        let inst = bhcp(5, Planted::Yes, 4);
        let mut swapped = inst.clone();
        std::mem::swap(&mut swapped.a, &mut swapped.b);
        let params = params(&inst);
        let g1 = svm_gap(&inst, &params, &variant).unwrap();
        let g2 = svm_gap(&swapped, &params, &variant).unwrap();
        let slack = g1.tol.mul_int(4);
        assert!((&g1.gap - &g2.gap).abs().lo() <= slack.hi());
    }
}

/// Projection onto `{a >= 0, y'a = 0}` by bisection on the multiplier.
fn project(z: &[f64], y: &[f64]) -> Vec<f64> {
    let f = |tau: f64| -> f64 { z.iter().zip(y).map(|(zi, yi)| yi * (zi - tau * yi).max(0.0)).sum() };
    let (mut lo, mut hi) = (-1e6, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = 0.5 * (lo + hi);
    z.iter().zip(y).map(|(zi, yi)| (zi - tau * yi).max(0.0)).collect()
}

fn reference_bias_value(q: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = y.len();
    let lip: f64 = q.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let step = 1.0 / lip;
    let mut a = vec![0.0; n];
    for _ in 0..200_000 {
        let g: Vec<f64> = (0..n).map(|i| 1.0 - (0..n).map(|j| q[i][j] * a[j]).sum::<f64>()).collect();
        let z: Vec<f64> = (0..n).map(|i| a[i] + step * g[i]).collect();
        a = project(&z, y);
    }
    let quad: f64 = (0..n).map(|i| (0..n).map(|j| a[i] * q[i][j] * a[j]).sum::<f64>()).sum();
    a.iter().sum::<f64>() - 0.5 * quad
}

#[test]
fn bias_solver_matches_reference() {
    let c = Interval::from_f64(128, 1.5);
    let params = KernelParams::from_c(c).unwrap();
    for seed in 0..4 {
        let inst = bhcp(3, Planted::Random, seed);
        let [s1, _, s3] = build_three_svms(&inst, &params).unwrap();
        for svm in [s1, s3] {
            let bias = build_bias_instance(&svm, 1).unwrap();
            let q = bias.label_gram().unwrap();
            let qf: Vec<Vec<f64>> = (0..q.rows()).map(|i| (0..q.cols()).map(|j| q.get(i, j).mid_f64()).collect()).collect();
            let y: Vec<f64> = bias.labels.iter().map(|&v| v as f64).collect();
            let reference = reference_bias_value(&qf, &y);
            let tol = Interval::from_f64(128, 1e-12);
            let got = solve_bias_reduced(&bias, &tol).unwrap().dual_value.mid_f64();
            assert!((2.0 * got - reference).abs() < 1e-6 * reference.max(1.0), "{got} vs {reference}");
        }
    }
}

#[test]
fn soft_margin_requires_small_lambda() {
    assert!(check_lambda(&rug::Rational::from((1, 64)), 4, DEFAULT_K_BOX).is_ok());
    assert!(check_lambda(&rug::Rational::from((1, 10)), 4, DEFAULT_K_BOX).is_err());
}

#[test]
fn single_point_has_value_half() {
    let p = KernelParams::standard(4, 128).unwrap();
    let s = SvmInstance::new(vec![vec![0, 1, 1]], vec![-1], p).unwrap();
    let sol = solve_dual(&s, &Interval::from_f64(128, 1e-25)).unwrap();
    assert!(sol.dual_value.contains_f64(0.5));
    assert!(sol.alpha[0].contains_f64(1.0));
}

#[test]
fn distinguishers_match_oracle() {
    for n in [4usize, 7, 10] {
        for planted in [Planted::Yes, Planted::No] {
            let inst = bhcp(n, planted, 40 + n as u64);
            let truth = Answer::from_bool(solve_bhcp(&inst).unwrap().has_pair);
            let params = params(&inst);
            for variant in [SvmVariant::HardMargin, SvmVariant::Bias, SvmVariant::soft_default(n, DEFAULT_K_BOX)] {
                let v = svm_distinguisher(&inst, &params, &variant, &policy(&inst)).unwrap();
                assert_eq!(v.answer, truth, "{:?}", variant.reduction());
            }
        }
    }
}

#[test]
fn projection_is_feasible() {
    let p = project(&[1.0, -2.0, 0.5, 3.0], &[1.0, -1.0, 1.0, -1.0]);
    let s: f64 = p.iter().zip([1.0, -1.0, 1.0, -1.0]).map(|(a, y)| a * y).sum();
    assert!(s.abs() < 1e-9 && p.iter().all(|&a| a >= 0.0));
    let _ = Float::with_val(64, 0);
}
