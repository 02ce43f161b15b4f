//! The three-SVM reduction from BHCP, with bias and soft-margin variants.
//!
//! For BHCP sets `A`, `B` the optimal values of the hard-margin SVMs on `A`
//! (labels +1), on `B` (labels -1) and on `A ∪ B` satisfy
//! `val(A,B) - val(A) - val(B) ≈ Σ k(a, b)`, which is at least
//! `exp(-C(t-1))/4` when a close pair exists and tiny otherwise.

use rug::{Float, Rational};

use crate::error::{Error, Result};
use crate::instances::{BitVector, ProblemKind, VectorPairInstance};
use crate::kernels::{gram_signed, KernelParams};
use crate::linalg::IntervalMatrix;
use crate::precision::{Interval, PrecisionPolicy};
use crate::verdict::{decide, Reduction, ReductionVerdict};

/// Sweep cap for the coordinate-ascent solver.
pub const MAX_SWEEPS: usize = 5000;

/// Default soft-margin constant: `lambda = 1 / (K_box n^2)`.
pub const DEFAULT_K_BOX: i64 = 4;

#[derive(Clone, Debug, PartialEq)]
pub struct SvmInstance {
    /// Points over {-1, 0, 1}.
    pub points: Vec<Vec<i8>>,
    pub labels: Vec<i8>,
    pub params: KernelParams,
    pub bias: bool,
    pub lambda: Option<Interval>,
    /// Dual upper bound `1 / (lambda * N)` with `N` the number of points.
    pub box_bound: Option<Interval>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SvmSolution {
    /// Enclosures of the optimal dual coordinates.
    pub alpha: Vec<Interval>,
    /// Enclosure of the optimal dual value.
    pub dual_value: Interval,
    /// Value of a feasible primal point built from the final iterate
    /// (hard margin, no bias only).
    pub primal_value: Option<Interval>,
    /// Largest projected-gradient magnitude at the final iterate, as `[0, r]`.
    pub kkt_residual: Interval,
    pub iterations: usize,
}

fn to_signed(v: &BitVector) -> Vec<i8> {
    (0..v.dim()).map(|i| v.get(i) as i8).collect()
}

impl SvmInstance {
    pub fn new(points: Vec<Vec<i8>>, labels: Vec<i8>, params: KernelParams) -> Result<Self> {
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: points.len(), found: labels.len() });
        }
        if points.is_empty() {
            return Err(Error::Validation("SVM needs at least one point".into()));
        }
        if labels.iter().any(|&y| y != 1 && y != -1) {
            return Err(Error::Validation("labels must be +1 or -1".into()));
        }
        let d = points[0].len();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: p.len() });
        }
        Ok(SvmInstance { points, labels, params, bias: false, lambda: None, box_bound: None })
    }

    pub fn from_bits(points: &[BitVector], label: i8, params: &KernelParams) -> Result<Self> {
        Self::new(points.iter().map(to_signed).collect(), vec![label; points.len()], params.clone())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Turns on the soft-margin box `alpha <= 1 / (lambda N)`.
    pub fn with_lambda(mut self, lambda: &Rational) -> Result<Self> {
        if *lambda <= 0 {
            return Err(Error::Parameter("lambda must be positive".into()));
        }
        let p = self.params.prec();
        let lam = Interval::from_rational(p, lambda);
        let bound = Interval::one(p).div(&lam.mul_int(self.len() as i64))?;
        self.lambda = Some(lam);
        self.box_bound = Some(bound);
        Ok(self)
    }

    /// `Q[i][j] = y_i y_j k(x_i, x_j)`.
    pub fn label_gram(&self) -> Result<IntervalMatrix> {
        let k = gram_signed(&self.points, &self.points, &self.params)?;
        Ok(IntervalMatrix::from_fn(self.len(), self.len(), |i, j| signed(k.get(i, j), self.labels[i] * self.labels[j])))
    }
}

fn signed(x: &Interval, s: i8) -> Interval {
    if s >= 0 {
        x.clone()
    } else {
        -x
    }
}

/// SVM_1 on `A` (+1), SVM_2 on `B` (-1), SVM_3 on `A ∪ B`.
pub fn build_three_svms(inst: &VectorPairInstance, params: &KernelParams) -> Result<[SvmInstance; 3]> {
    if inst.kind != ProblemKind::Bhcp {
        return Err(Error::Validation("the SVM reduction takes a BHCP instance".into()));
    }
    if inst.a.is_empty() || inst.b.is_empty() {
        return Err(Error::Validation("A and B must be non-empty".into()));
    }
    let s1 = SvmInstance::from_bits(&inst.a, 1, params)?;
    let s2 = SvmInstance::from_bits(&inst.b, -1, params)?;
    let mut points = s1.points.clone();
    points.extend(s2.points.iter().cloned());
    let mut labels = s1.labels.clone();
    labels.extend(&s2.labels);
    let s3 = SvmInstance::new(points, labels, params.clone())?;
    Ok([s1, s2, s3])
}

/// `ceil(log2(n)^3)`, at least 1.
pub fn bias_padding(n: usize) -> usize {
    let l = (n.max(1) as f64).log2();
    ((l * l * l) - 1e-9).ceil().max(1.0) as usize
}

/// Appends `pad` ones to every point and adds the mirrored copies
/// `(-x_i, -y_i)`.
pub fn build_bias_instance(svm: &SvmInstance, pad: usize) -> Result<SvmInstance> {
    let mut points: Vec<Vec<i8>> = svm
        .points
        .iter()
        .map(|p| {
            let mut q = p.clone();
            q.extend(std::iter::repeat_n(1, pad));
            q
        })
        .collect();
    let mirrored: Vec<Vec<i8>> = points.iter().map(|p| p.iter().map(|&v| -v).collect()).collect();
    points.extend(mirrored);
    let mut labels = svm.labels.clone();
    labels.extend(svm.labels.iter().map(|&y| -y));
    let mut out = SvmInstance::new(points, labels, svm.params.clone())?;
    out.bias = true;
    Ok(out)
}

/// True when the second half of the points and labels negates the first.
fn is_mirrored(svm: &SvmInstance) -> bool {
    let n = svm.len();
    n.is_multiple_of(2)
        && (0..n / 2).all(|i| {
            svm.labels[i] == -svm.labels[i + n / 2]
                && svm.points[i].iter().zip(&svm.points[i + n / 2]).all(|(&a, &b)| a == -b)
        })
}

/// Reduced matrix `Q - Q'` with `Q'[i][j] = y_i y_j k(x_i, -x_j)`.
fn reduced_gram(svm: &SvmInstance) -> Result<IntervalMatrix> {
    let h = svm.len() / 2;
    let pos = &svm.points[..h];
    let neg = &svm.points[h..];
    let k = gram_signed(pos, pos, &svm.params)?;
    let kx = gram_signed(pos, neg, &svm.params)?;
    Ok(IntervalMatrix::from_fn(h, h, |i, j| {
        let s = svm.labels[i] * svm.labels[j];
        signed(&(k.get(i, j) - kx.get(i, j)), s)
    }))
}

/// Maximizes `1'a - a'Qa/2` over `0 <= a <= upper` to a certified gap of `tol`.
pub fn solve_box_qp(q: &IntervalMatrix, upper: Option<&Interval>, tol: &Interval) -> Result<QpCertificate> {
    let n = q.rows();
    if !q.is_square() || n == 0 {
        return Err(Error::Validation("QP matrix must be square and non-empty".into()));
    }
    let p = q.prec();
    let qm = q.midpoints();
    let cap = upper.map(|u| u.lo().clone());
    let clamp = |v: Float| -> Float {
        let v = if v < 0 { Float::with_val(p, 0) } else { v };
        match &cap {
            Some(c) if v > *c => c.clone(),
            _ => v,
        }
    };

    let mut alpha: Vec<Float> = (0..n).map(|i| clamp(Float::with_val(p, 1) / &qm[i * n + i])).collect();
    let mut qa: Vec<Float> = (0..n)
        .map(|i| {
            let mut s = Float::with_val(p, 0);
            for j in 0..n {
                s += Float::with_val(p, &qm[i * n + j] * &alpha[j]);
            }
            s
        })
        .collect();

    let tol_target = tol.lo().clone();
    let pg_target = {
        let t = Float::with_val(p, &tol_target / (2 * n as u32));
        if t > 0 {
            t.sqrt()
        } else {
            Float::with_val(p, 0)
        }
    };
    let mut best_gap = None;
    for sweep in 1..=MAX_SWEEPS {
        let mut pg_max = Float::with_val(p, 0);
        for i in 0..n {
            let g = Float::with_val(p, 1) - &qa[i];
            let step = Float::with_val(p, &g / &qm[i * n + i]);
            let next = clamp(Float::with_val(p, &alpha[i] + &step));
            let delta = Float::with_val(p, &next - &alpha[i]);
            let moved = Float::with_val(p, delta.abs_ref()) * &qm[i * n + i];
            if moved > pg_max {
                pg_max = moved;
            }
            if !delta.is_zero() {
                for (j, v) in qa.iter_mut().enumerate() {
                    *v += Float::with_val(p, &qm[j * n + i] * &delta);
                }
                alpha[i] = next;
            }
        }
        if pg_max <= pg_target || sweep % 50 == 0 || sweep == MAX_SWEEPS {
            let cert = certify_qp(q, &alpha, upper)?;
            if *cert.gap.hi() <= tol_target {
                return Ok(QpCertificate { iterations: sweep, ..cert });
            }
            best_gap = Some(cert.gap.hi_decimal(6));
        }
    }
    Err(Error::NonConvergence { iterations: MAX_SWEEPS, best_gap: best_gap.unwrap_or_else(|| "unknown".into()) })
}

/// Certified facts about a QP iterate.
#[derive(Clone, Debug, PartialEq)]
pub struct QpCertificate {
    pub alpha: Vec<Float>,
    /// Objective at the iterate.
    pub objective: Interval,
    /// Upper bound on `optimum - objective`.
    pub gap: Interval,
    /// Lower bound on the smallest eigenvalue of `Q`.
    pub mu: Float,
    /// `Q alpha`.
    pub q_alpha: Vec<Interval>,
    pub kkt_residual: Float,
    pub iterations: usize,
}

impl QpCertificate {
    /// Enclosure of the optimal value.
    pub fn value(&self) -> Interval {
        let hi = &self.objective + &self.gap;
        Interval::new(self.objective.lo().clone(), hi.hi().clone()).expect("gap is nonnegative")
    }

    /// Enclosures of the optimal coordinates: `||a - a*||^2 <= 2 gap / mu`.
    pub fn alpha_enclosure(&self) -> Result<Vec<Interval>> {
        let p = self.mu.prec();
        let r2 = self.gap.mul_int(2).div(&Interval::from_float(self.mu.clone()))?;
        let r = Interval::new(Float::with_val(p, 0), r2.hi().clone())?.sqrt()?;
        self.alpha
            .iter()
            .map(|a| {
                let e = Interval::from_float(a.clone()).inflate(r.hi());
                let lo = if *e.lo() < 0 { Float::with_val(p, 0) } else { e.lo().clone() };
                Interval::new(lo, e.hi().clone())
            })
            .collect()
    }
}

/// Bounds the optimality gap of `alpha` by strong concavity.
///
/// With `mu <= lambda_min(Q)`, `f(a + u) <= f(a) + g'u - mu |u|^2 / 2`, and the
/// right side separates over coordinates of the feasible box.
pub fn certify_qp(q: &IntervalMatrix, alpha: &[Float], upper: Option<&Interval>) -> Result<QpCertificate> {
    let n = q.rows();
    let p = q.prec();
    // Gershgorin lower bound on the spectrum
    let mut mu: Option<Float> = None;
    for i in 0..n {
        let off: Vec<Interval> =
            (0..n).filter(|&j| j != i).map(|j| Interval::from_float(q.get(i, j).mag())).collect();
        let r = q.get(i, i) - &Interval::sum(p, &off);
        if mu.as_ref().is_none_or(|m| r.lo() < m) {
            mu = Some(r.lo().clone());
        }
    }
    let mu = mu.unwrap();
    if mu <= 0 {
        return Err(Error::Indefinite("Gershgorin bound does not certify positive definiteness".into()));
    }
    let mu_i = Interval::from_float(mu.clone());

    let a: Vec<Interval> = alpha.iter().map(|v| Interval::from_float(v.clone())).collect();
    let qa = q.mul_vec(&a)?;
    let one = Interval::one(p);
    let half = Interval::from_ratio(p, 1, 2);
    let terms: Vec<Interval> = a.iter().zip(&qa).map(|(ai, qi)| ai * &(&one - &(&half * qi))).collect();
    let objective = Interval::sum(p, &terms);

    let mut gains = Vec::with_capacity(n);
    let mut kkt = Float::with_val(p, 0);
    for i in 0..n {
        let g = &one - &qa[i];
        let lo = -&a[i];
        let hi = upper.map(|u| u - &a[i]);
        let mut gain = Interval::zero(p);
        for end in [g.lo(), g.hi()] {
            let ge = Interval::from_float(end.clone());
            let v = coordinate_gain(&ge, &lo, hi.as_ref(), &mu_i)?;
            gain = gain.max(&v);
        }
        gains.push(gain);

        let at_lower = alpha[i].is_zero();
        let at_upper = upper.is_some_and(|u| alpha[i] >= *u.lo());
        let r = if (at_lower && *g.hi() <= 0) || (at_upper && g.is_nonnegative()) {
            Float::with_val(p, 0)
        } else {
            g.mag()
        };
        if r > kkt {
            kkt = r;
        }
    }
    let gap = Interval::sum(p, &gains).max(&Interval::zero(p));
    Ok(QpCertificate { alpha: alpha.to_vec(), objective, gap, mu, q_alpha: qa, kkt_residual: kkt, iterations: 0 })
}

/// Upper bound on `max g u - mu u^2 / 2` over `u ∈ [lo, hi]` (`hi = ∞` if absent).
fn coordinate_gain(g: &Interval, lo: &Interval, hi: Option<&Interval>, mu: &Interval) -> Result<Interval> {
    let half_mu = mu.div_int(2)?;
    let at = |u: &Interval| -> Interval { &(g * u) - &(&half_mu * &u.square()) };
    let u_star = g.div(mu)?;
    if u_star.hi() <= lo.lo() {
        return Ok(at(lo));
    }
    if let Some(h) = hi {
        if u_star.lo() >= h.hi() {
            return Ok(at(h));
        }
    }
    g.square().div(&mu.mul_int(2))
}

fn solution_from(cert: &QpCertificate, with_primal: bool) -> Result<SvmSolution> {
    let p = cert.mu.prec();
    let primal_value = if with_primal {
        // rescaling by the smallest margin gives a feasible primal point
        let mut m = cert.q_alpha[0].clone();
        for v in &cert.q_alpha[1..] {
            m = m.min(v);
        }
        if m.is_positive() {
            let quad: Vec<Interval> = cert.alpha.iter().zip(&cert.q_alpha).map(|(a, qa)| &Interval::from_float(a.clone()) * qa).collect();
            let w2 = Interval::sum(p, &quad);
            Some(w2.div(&m.square().mul_int(2))?)
        } else {
            None
        }
    } else {
        None
    };
    Ok(SvmSolution {
        alpha: cert.alpha_enclosure()?,
        dual_value: cert.value(),
        primal_value,
        kkt_residual: Interval::new(Float::with_val(p, 0), cert.kkt_residual.clone())?,
        iterations: cert.iterations,
    })
}

/// Solves the dual of `svm` to additive accuracy `tol`.
///
/// Bias instances must be mirrored (as produced by [`build_bias_instance`]);
/// they are solved through [`solve_bias_reduced`].
pub fn solve_dual(svm: &SvmInstance, tol: &Interval) -> Result<SvmSolution> {
    if svm.bias {
        return solve_bias_reduced(svm, tol);
    }
    let q = svm.label_gram()?;
    let cert = solve_box_qp(&q, svm.box_bound.as_ref(), tol)?;
    solution_from(&cert, svm.box_bound.is_none())
}

/// Solves a mirrored bias instance through the symmetric reduced problem
/// `max Σγ - γ'(Q - Q')γ / 2`, whose value is half the full optimum.
///
/// The returned `alpha` holds `γ`; `dual_value` is `V`.
pub fn solve_bias_reduced(svm: &SvmInstance, tol: &Interval) -> Result<SvmSolution> {
    if !svm.bias || !is_mirrored(svm) {
        return Err(Error::Validation("expected a mirrored bias instance".into()));
    }
    let q = reduced_gram(svm)?;
    let cert = solve_box_qp(&q, svm.box_bound.as_ref(), tol)?;
    solution_from(&cert, false)
}

/// Variant of the SVM reduction.
#[derive(Clone, Debug, PartialEq)]
pub enum SvmVariant {
    HardMargin,
    Bias,
    /// Bias instance with the box `alpha <= 1/(lambda N)`.
    SoftMargin { lambda: Rational },
}

impl SvmVariant {
    /// Soft margin with `lambda = 1/(k_box n^2)`.
    pub fn soft_default(n: usize, k_box: i64) -> Self {
        SvmVariant::SoftMargin { lambda: Rational::from((1, k_box * (n * n) as i64)) }
    }

    pub fn reduction(&self) -> Reduction {
        match self {
            SvmVariant::HardMargin => Reduction::Svm,
            SvmVariant::Bias => Reduction::SvmBias,
            SvmVariant::SoftMargin { .. } => Reduction::SvmSoft,
        }
    }
}

/// Everything computed for one run of the three-SVM reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct SvmGap {
    pub solutions: [SvmSolution; 3],
    /// `val(A,B) - val(A) - val(B)`.
    pub gap: Interval,
    /// `exp(-C(t-1)) / 8`.
    pub theta: Interval,
    pub tol: Interval,
}

/// `exp(-C(t-1))`.
pub fn yes_scale(params: &KernelParams, t: usize) -> Interval {
    params.at_distance(t.saturating_sub(1) as u64)
}

/// Builds and solves the three SVMs of `variant` at the precision of `params`.
pub fn svm_gap(inst: &VectorPairInstance, params: &KernelParams, variant: &SvmVariant) -> Result<SvmGap> {
    inst.require_distinct_points()?;
    let t = inst.threshold()?;
    let n = inst.n();
    let scale = yes_scale(params, t);
    let theta = scale.div_int(8)?;
    let tol = scale.div_int(100)?;
    let svms = build_three_svms(inst, params)?;
    let pad = bias_padding(n);
    let solve = |s: &SvmInstance| -> Result<SvmSolution> {
        match variant {
            SvmVariant::HardMargin => solve_dual(s, &tol),
            SvmVariant::Bias => solve_bias_reduced(&build_bias_instance(s, pad)?, &tol),
            SvmVariant::SoftMargin { lambda } => {
                check_lambda(lambda, n, DEFAULT_K_BOX)?;
                solve_bias_reduced(&build_bias_instance(s, pad)?.with_lambda(lambda)?, &tol)
            }
        }
    };
    let [s1, s2, s3] = &svms;
    let solutions = [solve(s1)?, solve(s2)?, solve(s3)?];
    let gap = &(&solutions[2].dual_value - &solutions[0].dual_value) - &solutions[1].dual_value;
    Ok(SvmGap { solutions, gap, theta, tol })
}

/// Soft-margin hardness needs `lambda <= 1/(k_box n^2)`.
pub fn check_lambda(lambda: &Rational, n: usize, k_box: i64) -> Result<()> {
    let bound = Rational::from((1, k_box * (n * n) as i64));
    if *lambda <= 0 || *lambda > bound {
        return Err(Error::Parameter(format!("lambda = {lambda} must lie in (0, 1/(K_box n^2)] = (0, {bound}]")));
    }
    Ok(())
}

/// Decides BHCP: YES iff `val(A,B) - val(A) - val(B)` clears `exp(-C(t-1))/8`.
pub fn svm_distinguisher(
    inst: &VectorPairInstance,
    params: &KernelParams,
    variant: &SvmVariant,
    policy: &PrecisionPolicy,
) -> Result<ReductionVerdict> {
    decide(variant.reduction(), policy, |bits| {
        let g = svm_gap(inst, &params.with_prec(bits)?, variant)?;
        Ok((g.gap, g.theta))
    })
}

/// Soft-margin entry point; `lambda` defaults to `1/(k_box n^2)`.
pub fn soft_margin_distinguisher(
    inst: &VectorPairInstance,
    params: &KernelParams,
    lambda: Option<Rational>,
    k_box: i64,
    policy: &PrecisionPolicy,
) -> Result<ReductionVerdict> {
    let n = inst.n();
    let lambda = lambda.unwrap_or_else(|| Rational::from((1, k_box * (n * n) as i64)));
    check_lambda(&lambda, n, k_box)?;
    svm_distinguisher(inst, params, &SvmVariant::SoftMargin { lambda }, policy)
}
