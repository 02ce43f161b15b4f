//! Acceptance run: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use erm_lab::{bench_scaling, render_report, run_suite, ExperimentConfig, ReportFormat};
use erm_lab_core::gradient::{count_from_gradient, loss_gradient_at_zero, total_loss, Gadget};
use erm_lab_core::instances::{
    default_dimension, default_threshold, generate, normalize, GenerateParams, Planted, ProblemKind, VectorPairInstance,
};
use erm_lab_core::kernels::{gram, self_gram, KernelParams};
use erm_lab_core::kpca::{case_separation_holds, centered_trace, centered_trace_direct};
use erm_lab_core::krr::{almost_identity_closure, binomial_inverse_check, krr_report};
use erm_lab_core::linalg::{certified_inverse, IntervalMatrix};
use erm_lab_core::nn::{nn_report, ActivationKind, NiceLoss, DEFAULT_T, NN_MIN_PRECISION};
use erm_lab_core::oracles::{count_orthogonal_pairs, solve_bhcp, solve_ovp};
use erm_lab_core::precision::{classify, Side};
use erm_lab_core::svm::{svm_gap, SvmVariant};
use erm_lab_core::{Interval, PrecisionPolicy, Reduction, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;

const SIZES: [usize; 6] = [4, 8, 12, 16, 20, 24];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn instance(kind: ProblemKind, n: usize, planted: Planted, seed: u64) -> Result<VectorPairInstance> {
    let d = default_dimension(n);
    let t = (kind == ProblemKind::Bhcp).then(|| default_threshold(d));
    Ok(generate(&GenerateParams { kind, n, d, t, planted, seed })?.instance)
}

fn start_bits(n: usize, t: usize) -> u32 {
    PrecisionPolicy::for_depth(100.0 * (n as f64).ln(), t, 1 << 20).start_bits
}

fn oracle_agreement() -> Result<Outcome> {
    let cfg = ExperimentConfig {
        n_values: (4..=24).step_by(2).collect(),
        trials: 10,
        seed: 1_000_003,
        ..Default::default()
    };
    let start = Instant::now();
    let report = run_suite(&cfg)?;
    let elapsed = start.elapsed();
    let mut bad = Vec::new();
    for s in &report.aggregate.per_reduction {
        let undecidable_ok = s.undecidable as f64 <= 0.02 * s.trials as f64;
        if s.trials < 100 || s.disagreed > 0 || s.failed > 0 || !undecidable_ok {
            bad.push(format!("{} ({} agree of {}, {} undecidable, {} failed)", s.reduction, s.agreed, s.trials, s.undecidable, s.failed));
        }
    }
    let a = &report.aggregate;
    let pass = bad.is_empty() && elapsed <= Duration::from_secs(30 * 60) && report.aggregate.per_reduction.len() == Reduction::ALL.len();
    outcome(
        pass,
        format!(
            "{} reductions x {} trials, {}/{} decided agree, {} undecidable, {} failed, {:.0} s{}",
            a.per_reduction.len(),
            a.trials / a.per_reduction.len().max(1),
            a.agreed,
            a.decided,
            a.undecidable,
            a.failed,
            elapsed.as_secs_f64(),
            if bad.is_empty() { String::new() } else { format!("; bad: {}", bad.join(", ")) }
        ),
    )
}

struct SvmChecks {
    gap_ok: usize,
    bounded_ok: usize,
    primal_dual_ok: usize,
    total: usize,
}

fn svm_checks() -> Result<SvmChecks> {
    let mut c = SvmChecks { gap_ok: 0, bounded_ok: 0, primal_dual_ok: 0, total: 0 };
    for &n in &SIZES {
        for seed in 0..4u64 {
            let planted = if seed % 2 == 0 { Planted::Yes } else { Planted::No };
            let inst = instance(ProblemKind::Bhcp, n, planted, 500 + seed)?;
            let t = inst.threshold()?;
            let params = KernelParams::standard(n, start_bits(n, t))?;
            let p = params.prec();
            let g = svm_gap(&inst, &params, &SvmVariant::HardMargin)?;
            let two_tol = g.tol.mul_int(2);
            let gap_ok = if solve_bhcp(&inst)?.has_pair {
                let floor = &params.at_distance(t as u64 - 1).div_int(4)? - &two_tol;
                g.gap.lo() >= floor.hi()
            } else {
                let cap = &params.at_distance(t as u64).mul_int(200 * (n as i64).pow(6)) + &two_tol;
                g.gap.hi() <= cap.lo()
            };
            let lower = &Interval::from_ratio(p, 1, 2) - &g.tol;
            let upper = &Interval::from_int(p, n as i64) + &g.tol;
            let bounded = g.solutions[..2]
                .iter()
                .all(|s| s.alpha.iter().all(|a| a.lo() >= lower.lo() && a.hi() <= upper.hi()));
            let pd = g.solutions.iter().all(|s| {
                s.primal_value.as_ref().is_some_and(|pv| (pv - &s.dual_value).abs().hi() <= two_tol.hi())
            });
            c.total += 1;
            c.gap_ok += gap_ok as usize;
            c.bounded_ok += bounded as usize;
            c.primal_dual_ok += pd as usize;
        }
    }
    Ok(c)
}

fn kpca_identity() -> Result<Outcome> {
    let mut agree = 0;
    let mut total = 0;
    for k in 0..50u64 {
        let n = 2 + (k as usize % 7);
        let inst = instance(ProblemKind::Bhcp, n, Planted::Random, 900 + k)?;
        let params = KernelParams::standard(n, 512)?;
        let mut all = inst.a.clone();
        all.extend(inst.b.iter().cloned());
        for kmat in [self_gram(&all, &params)?.into_matrix(), self_gram(&inst.a, &KernelParams::from_c(Interval::from_f64(512, 0.5))?)?.into_matrix()] {
            total += 1;
            agree += centered_trace_direct(&kmat)?.overlaps(&centered_trace(&kmat)?) as usize;
        }
    }
    let mut sep = 0;
    for n in 2..=64 {
        sep += case_separation_holds(&KernelParams::standard(n, 256)?, n)? as usize;
    }
    outcome(agree == total && sep == 63, format!("trace identity {agree}/{total} matrices (50 instances, n <= 8); separation Delta >= n^10 delta at C = 100 ln n for {sep}/63 sizes"))
}

fn krr_checks() -> Result<Outcome> {
    let mut within = 0;
    let mut total = 0;
    for &n in &SIZES {
        for seed in 0..2u64 {
            let planted = if seed == 0 { Planted::Yes } else { Planted::No };
            let inst = instance(ProblemKind::Bhcp, n, planted, 700 + seed)?;
            let params = KernelParams::standard(n, start_bits(n, inst.threshold()?))?;
            let r = krr_report(&inst, &params)?;
            let cross = gram(&inst.a, &inst.b, &params)?.entry_sum();
            total += 1;
            within += ((&r.s_hat - &cross).abs().lo() <= r.slack.hi()) as usize;
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut binom = 0;
    for k in 0..100 {
        let n = 3 + k % 4;
        let x = IntervalMatrix::from_fn(n, n, |i, j| Interval::from_f64(256, rng.gen_range(-1.0..1.0) + if i == j { 2.0 * n as f64 } else { 0.0 }));
        let y = IntervalMatrix::from_fn(n, n, |_, _| Interval::from_f64(256, rng.gen_range(-0.5..0.5)));
        binom += binomial_inverse_check(&x, &y)? as usize;
    }
    let mut closure = 0;
    for k in 0..100 {
        let n = 2 + k % 10;
        let eps = 0.5 / n as f64 * rng.gen_range(0.05..1.0);
        let m = IntervalMatrix::from_fn(n, n, |i, j| if i == j { Interval::one(256) } else { Interval::from_f64(256, rng.gen_range(-eps..eps)) });
        let bound = almost_identity_closure(&Interval::from_f64(256, eps), n)?;
        let dev = certified_inverse(&m)?.sub(&IntervalMatrix::identity(n, 256))?;
        closure += dev.entries().iter().all(|v| v.mag() <= *bound.hi()) as usize;
    }
    outcome(
        within == total && binom == 100 && closure == 100,
        format!("estimate within slack {within}/{total}; binomial inverse {binom}/100; almost-identity bound {closure}/100"),
    )
}

fn nn_checks() -> Result<Outcome> {
    let (mut yes_ok, mut yes, mut no_ok, mut no, mut sep_ok, mut runs) = (0, 0, 0, 0, 0, 0);
    for &n in &SIZES {
        for seed in 0..4u64 {
            let planted = if seed % 2 == 0 { Planted::Yes } else { Planted::No };
            let inst = normalize(&instance(ProblemKind::Ovp, n, planted, 300 + seed)?)?;
            let has_pair = solve_ovp(&inst)?.has_pair;
            for loss in [NiceLoss::hinge(), NiceLoss::logistic()] {
                for act in [ActivationKind::Relu, ActivationKind::Sigmoid] {
                    let r = nn_report(&inst, &loss, act, DEFAULT_T, NN_MIN_PRECISION)?;
                    let p = r.minimum.prec();
                    let l0 = loss.l_at_zero(p);
                    let tenth = l0.div_int(10)?;
                    if has_pair {
                        yes += 1;
                        yes_ok += (r.certificate_value.hi() <= (&l0.mul_int(3 * n as i64 - 1) + &tenth).lo()) as usize;
                    } else {
                        no += 1;
                        no_ok += (r.minimum.lo() >= (&l0.mul_int(3 * n as i64) - &tenth).hi()) as usize;
                    }
                    let side = classify(&r.minimum, &r.theta);
                    runs += 1;
                    sep_ok += (side == if has_pair { Side::Below } else { Side::Above }) as usize;
                }
            }
        }
    }
    outcome(
        yes_ok == yes && no_ok == no && sep_ok == runs,
        format!("certificate <= (3n-1)l(0)+l(0)/10 on {yes_ok}/{yes}; minimum >= 3n l(0)-l(0)/10 on {no_ok}/{no}; theta separates {sep_ok}/{runs}"),
    )
}

fn gradient_checks() -> Result<Outcome> {
    let p = 256;
    let (mut exact, mut total, mut sig_ok, mut sig) = (0, 0, 0, 0);
    for n in 4..=24usize {
        for seed in 0..3u64 {
            for planted in [Planted::Yes, Planted::No, Planted::Random] {
                let inst = instance(ProblemKind::Ovp, n, planted, 40 * seed + n as u64)?;
                for loss in [NiceLoss::hinge(), NiceLoss::logistic()] {
                    total += 1;
                    exact += (count_from_gradient(&inst, &loss, p)? == count_orthogonal_pairs(&inst)) as usize;
                    let (_, sum) = loss_gradient_at_zero(&inst, &loss, Gadget::Sigmoid, p)?;
                    let lp = loss.l_prime_at_zero(p).abs();
                    sig += 1;
                    sig_ok += if solve_ovp(&inst)?.has_pair {
                        sum.abs().lo() >= lp.div_int(2)?.hi()
                    } else {
                        sum.abs().hi() <= lp.div_int(n as i64)?.lo()
                    } as usize;
                }
            }
        }
    }
    let h = Interval::from_float(Float::with_val(p, Float::i_exp(1, -(p as i32) / 4)));
    let mut fd_ok = 0;
    for seed in 0..20u64 {
        let inst = instance(ProblemKind::Ovp, 6, Planted::Random, 5000 + seed)?;
        let loss = if seed % 2 == 0 { NiceLoss::hinge() } else { NiceLoss::logistic() };
        let gadget = if seed % 4 < 2 { Gadget::Relu } else { Gadget::Sigmoid };
        let (grad, _) = loss_gradient_at_zero(&inst, &loss, gadget, p)?;
        let tol = (&h * &h).mul_int(inst.n() as i64);
        let mut ok = true;
        for j in 0..inst.m() {
            let mut plus = vec![Interval::zero(p); inst.m()];
            let mut minus = plus.clone();
            plus[j] = h.clone();
            minus[j] = -&h;
            let fd = (&total_loss(&inst, &loss, gadget, &plus)? - &total_loss(&inst, &loss, gadget, &minus)?).div(&h.mul_int(2))?;
            ok &= (&fd - &grad[j]).abs().lo() <= tol.hi();
        }
        fd_ok += ok as usize;
    }
    outcome(
        exact == total && sig_ok == sig && fd_ok == 20,
        format!("relu count exact {exact}/{total}; sigmoid bounds {sig_ok}/{sig}; finite differences {fd_ok}/20"),
    )
}

fn determinism() -> Result<Outcome> {
    let cfg = ExperimentConfig::default();
    let strip = |text: String| -> Vec<String> { text.lines().map(|l| l.rsplit_once(',').map_or(l, |x| x.0).to_string()).collect() };
    let a = run_suite(&cfg)?;
    let b = run_suite(&cfg)?;
    let same = strip(render_report(&a, ReportFormat::Csv)?) == strip(render_report(&b, ReportFormat::Csv)?);
    outcome(
        same && a.digest == b.digest,
        format!("default suite ({} trials) twice: csv {} modulo ms, digests {} / {}", a.records.len(), if same { "identical" } else { "differs" }, &a.digest[..12], &b.digest[..12]),
    )
}

fn scaling() -> Result<Outcome> {
    let report = bench_scaling(&ExperimentConfig::default())?;
    let ratios: Vec<f64> = report.scaling.iter().filter_map(|r| r.ratio).collect();
    let pass = !ratios.is_empty() && ratios.iter().all(|r| (3.0..=6.0).contains(r));
    let shown: Vec<String> = report.scaling.iter().map(|r| format!("n={} {:.3} ms", r.n, r.ms_per_run)).collect();
    outcome(pass, format!("{}; ratios {:?}", shown.join(", "), ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()))
}

fn report(id: u8, name: &str, r: Result<Outcome>) -> bool {
    let (pass, detail) = match r {
        Ok(o) => (o.pass, o.detail),
        Err(e) => (false, format!("error: {e}")),
    };
    println!("criterion {id:>2} [{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    pass
}

fn main() -> ExitCode {
    let mut all = true;
    all &= report(1, "oracle agreement", oracle_agreement());
    match svm_checks() {
        Ok(c) => {
            let t = c.total;
            all &= report(2, "svm gap lemmas", outcome(c.gap_ok == t, format!("{}/{t} trials inside the YES/NO gap bounds", c.gap_ok)));
            all &= report(3, "bounded duals", outcome(c.bounded_ok == t, format!("{}/{t} trials with every alpha in [1/2 - tol, n + tol]", c.bounded_ok)));
            all &= report(4, "primal-dual equality", outcome(c.primal_dual_ok == t, format!("{}/{t} trials with |primal - dual| <= 2 tol on all three solves", c.primal_dual_ok)));
        }
        Err(e) => {
            for (id, name) in [(2, "svm gap lemmas"), (3, "bounded duals"), (4, "primal-dual equality")] {
                all &= report(id, name, Err(erm_lab_core::Error::Validation(e.to_string())));
            }
        }
    }
    all &= report(5, "kpca identity", kpca_identity());
    all &= report(6, "krr identity", krr_checks());
    all &= report(7, "nn lemmas", nn_checks());
    all &= report(8, "gradient exactness", gradient_checks());
    all &= report(9, "determinism", determinism());
    all &= report(10, "oracle scaling", scaling());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
