//! Final-layer neural network ERM built from an OVP instance.
//!
//! The `3n x n` activation matrix `M = [M1; M2; M2]` has `M1[i][j] = Θ(1)`
//! exactly when `a_i ⊥ b_j` and a tiny diagonal `M2`. With labels `+1` on
//! `M1` and the first `M2` copy and `-1` on the second copy, the optimum of
//! `min_α Σ l(y_i (Mα)_i)` is at most `(3n-1) l(0) + o(1)` when an
//! orthogonal pair exists and at least `3n l(0) - o(1)` otherwise.

use std::fmt;
use std::str::FromStr;

use rug::{Float, Rational};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ProblemKind, VectorPairInstance};
use crate::linalg::{cholesky, cholesky_solve, IntervalMatrix};
use crate::lp::simplex;
use crate::precision::{Interval, PrecisionPolicy};
use crate::verdict::{decide, Reduction, ReductionVerdict};

/// Default activation exponent: `S(v1) = n^{-T}`.
pub const DEFAULT_T: u32 = 8;

/// Working precision floor for this module.
pub const NN_MIN_PRECISION: u32 = 512;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Hinge,
    Logistic,
}

impl LossKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::Hinge => "hinge",
            LossKind::Logistic => "logistic",
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hinge" => Ok(LossKind::Hinge),
            "logistic" => Ok(LossKind::Logistic),
            _ => Err(Error::Parameter(format!("unknown loss '{s}'"))),
        }
    }
}

/// `hinge: l(x) = max(0, 1 - x)`, `logistic: l(x) = log2(1 + e^{-x})`.
#[derive(Clone, Debug, PartialEq)]
pub struct NiceLoss {
    pub kind: LossKind,
    pub k_loss: Rational,
}

impl NiceLoss {
    pub fn new(kind: LossKind) -> Self {
        NiceLoss { kind, k_loss: Rational::from(1) }
    }

    pub fn hinge() -> Self {
        Self::new(LossKind::Hinge)
    }

    pub fn logistic() -> Self {
        Self::new(LossKind::Logistic)
    }

    pub fn l_at_zero(&self, prec: u32) -> Interval {
        Interval::one(prec)
    }

    pub fn l_prime_at_zero(&self, prec: u32) -> Interval {
        match self.kind {
            LossKind::Hinge => Interval::from_int(prec, -1),
            LossKind::Logistic => {
                -Interval::one(prec).div(&Interval::ln2(prec).mul_int(2)).expect("ln 2 > 0")
            }
        }
    }

    /// Enclosure of `l(x)`; `l` is non-increasing, so the endpoints swap.
    pub fn eval(&self, x: &Interval) -> Interval {
        let at_hi = self.eval_point(x.hi());
        let at_lo = self.eval_point(x.lo());
        Interval::new(at_hi.lo().clone(), at_lo.hi().clone()).expect("monotone enclosure")
    }

    fn eval_point(&self, x: &Float) -> Interval {
        let p = x.prec();
        let xi = Interval::from_float(x.clone());
        match self.kind {
            LossKind::Hinge => (&Interval::one(p) - &xi).max(&Interval::zero(p)),
            LossKind::Logistic => {
                // ln(1 + e^{-x}) = max(-x, 0) + ln(1 + e^{-|x|})
                let neg_abs = -&xi.abs();
                let tail = neg_abs.exp().ln_1p().expect("e^t > -1");
                let head = (-&xi).max(&Interval::zero(p));
                (&head + &tail).div(&Interval::ln2(p)).expect("ln 2 > 0")
            }
        }
    }

    fn value_f(&self, z: &Float) -> Float {
        let p = z.prec();
        match self.kind {
            LossKind::Hinge => {
                let v = Float::with_val(p, 1 - z);
                if v < 0 {
                    Float::with_val(p, 0)
                } else {
                    v
                }
            }
            LossKind::Logistic => {
                let a = Float::with_val(p, z.abs_ref());
                let tail = Float::with_val(p, -a).exp().ln_1p();
                let head = if *z < 0 { Float::with_val(p, -z) } else { Float::with_val(p, 0) };
                (head + tail) / Float::with_val(p, rug::float::Constant::Log2)
            }
        }
    }

    /// `l'(z)` for logistic, `-1` or `0` subgradient for hinge.
    fn deriv_f(&self, z: &Float) -> Float {
        let p = z.prec();
        match self.kind {
            LossKind::Hinge => Float::with_val(p, if *z < 1 { -1 } else { 0 }),
            LossKind::Logistic => -sigmoid_f(&Float::with_val(p, -z)) / Float::with_val(p, rug::float::Constant::Log2),
        }
    }

    fn second_f(&self, z: &Float) -> Float {
        let p = z.prec();
        let s = sigmoid_f(z);
        let t = Float::with_val(p, 1 - &s);
        s * t / Float::with_val(p, rug::float::Constant::Log2)
    }
}

fn sigmoid_f(x: &Float) -> Float {
    let p = x.prec();
    Float::with_val(p, 1) / (Float::with_val(p, -x).exp() + 1u32)
}

/// Enclosure of `1 / (1 + e^{-x})`.
pub fn sigmoid(x: &Interval) -> Interval {
    let p = x.prec();
    let one = Interval::one(p);
    let at = |v: &Float| -> Interval {
        let e = (-Interval::from_float(v.clone())).exp();
        one.div(&(&one + &e)).expect("1 + e^x > 0")
    };
    Interval::new(at(x.lo()).lo().clone(), at(x.hi()).hi().clone()).expect("monotone enclosure")
}

pub fn relu(x: &Interval) -> Interval {
    x.max(&Interval::zero(x.prec()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ActivationKind {
    Relu,
    Sigmoid,
}

impl ActivationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ActivationKind::Relu => "relu",
            ActivationKind::Sigmoid => "sigmoid",
        }
    }
}

impl FromStr for ActivationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "relu" => Ok(ActivationKind::Relu),
            "sigmoid" => Ok(ActivationKind::Sigmoid),
            _ => Err(Error::Parameter(format!("unknown activation '{s}'"))),
        }
    }
}

impl fmt::Display for ActivationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Activation with the levels `v0 > v1 > v2`, `v1 = (v0 + v2)/2`, `S(v1) = n^{-T}`.
#[derive(Clone, Debug, PartialEq)]
pub struct NiceActivation {
    pub kind: ActivationKind,
    pub t: u32,
    pub v0: Interval,
    pub v1: Interval,
    pub v2: Interval,
    /// Sigmoid offset `v0 - v1`.
    pub offset: Option<Interval>,
}

impl NiceActivation {
    pub fn s(&self, x: &Interval) -> Interval {
        match self.kind {
            ActivationKind::Relu => relu(x),
            ActivationKind::Sigmoid => sigmoid(x),
        }
    }
}

/// Sigmoid offset `ceil((T + 3) ln n + (ln n)^2)`, large enough that
/// `S(v0) = 1 - O(n^{-3})`.
pub fn sigmoid_offset(t: u32, n: usize) -> u64 {
    let l = (n as f64).ln();
    ((t as f64 + 3.0) * l + l * l).ceil() as u64
}

pub fn activation_thresholds(kind: ActivationKind, t: u32, n: usize, prec: u32) -> Result<NiceActivation> {
    if t == 0 {
        return Err(Error::Parameter("activation exponent T must be positive".into()));
    }
    if n < 2 {
        return Err(Error::Parameter("activation thresholds need n >= 2".into()));
    }
    let p = prec;
    let n_t = Interval::from_integer(p, &rug::Integer::from(rug::Integer::u_pow_u(n as u32, t)));
    let one = Interval::one(p);
    Ok(match kind {
        ActivationKind::Relu => {
            let inv = one.div(&n_t)?;
            NiceActivation {
                kind,
                t,
                v0: one.clone(),
                v1: inv.clone(),
                v2: &inv.mul_int(2) - &one,
                offset: None,
            }
        }
        ActivationKind::Sigmoid => {
            let v1 = -(&n_t - &one).ln()?;
            let off = Interval::from_int(p, sigmoid_offset(t, n) as i64);
            NiceActivation { kind, t, v0: &v1 + &off, v2: &v1 - &off, v1, offset: Some(off) }
        }
    })
}

/// The network whose hidden activations on the examples form `M`.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkView {
    /// Unit `j` has weights `[b_j; 1]`.
    pub weights: Vec<Vec<Interval>>,
    /// One example per row of `M`.
    pub examples: Vec<Vec<Interval>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErmMatrixInstance {
    pub m: IntervalMatrix,
    pub labels: Vec<i8>,
    pub loss: NiceLoss,
    pub activation: NiceActivation,
    pub network: NetworkView,
}

impl ErmMatrixInstance {
    pub fn n(&self) -> usize {
        self.m.cols()
    }

    pub fn prec(&self) -> u32 {
        self.m.prec()
    }

    /// `Σ l(y_i (Mα)_i)`.
    pub fn objective(&self, alpha: &[Interval]) -> Result<Interval> {
        let z = self.m.mul_vec(alpha)?;
        let terms: Vec<Interval> = z
            .iter()
            .zip(&self.labels)
            .map(|(zi, &y)| self.loss.eval(&if y > 0 { zi.clone() } else { -zi }))
            .collect();
        Ok(Interval::sum(self.prec(), &terms))
    }

    /// Objective at the point `α = x 1`.
    pub fn objective_at_constant(&self, x: &Interval) -> Result<Interval> {
        self.objective(&vec![x.clone(); self.n()])
    }

    /// `‖α*‖∞ <= 3n l(0) / (min diag M2 - (n-1) max offdiag M2)` for any α
    /// whose objective is at most `3n l(0)` (the value at α = 0).
    pub fn alpha_bound(&self) -> Option<Interval> {
        let n = self.n();
        let p = self.prec();
        let mut diag_lo: Option<Float> = None;
        let mut off_hi = Float::with_val(p, 0);
        for i in 0..n {
            for j in 0..n {
                let e = self.m.get(n + i, j);
                if i == j {
                    if diag_lo.as_ref().is_none_or(|d| e.lo() < d) {
                        diag_lo = Some(e.lo().clone());
                    }
                } else if e.mag() > off_hi {
                    off_hi = e.mag();
                }
            }
        }
        let denom = &Interval::from_float(diag_lo?) - &Interval::from_float(off_hi).mul_int(n as i64 - 1);
        if !denom.is_positive() {
            return None;
        }
        self.loss.l_at_zero(p).mul_int(3 * n as i64).div(&denom).ok()
    }

    /// Weak-duality lower bound on the optimum from weights `ω ∈ [0, 1]^{3n}`.
    ///
    /// Hinge: `Σω - ‖α*‖₁ ‖Aᵀω‖∞`. Logistic: `Σ H₂(ω) - ‖α*‖₁ ‖Aᵀω‖∞ / ln 2`,
    /// with `A = diag(y) M`.
    pub fn dual_lower_bound(&self, weights: &[Float]) -> Result<Interval> {
        let p = self.prec();
        let n = self.n();
        if weights.len() != self.m.rows() {
            return Err(Error::DimensionMismatch { expected: self.m.rows(), found: weights.len() });
        }
        let Some(b) = self.alpha_bound() else {
            return Ok(Interval::zero(p));
        };
        let w: Vec<Interval> = weights
            .iter()
            .map(|v| {
                let c = if *v < 0 { Float::with_val(p, 0) } else if *v > 1 { Float::with_val(p, 1) } else { Float::with_val(p, v) };
                Interval::from_float(c)
            })
            .collect();
        let value = match self.loss.kind {
            LossKind::Hinge => Interval::sum(p, &w),
            LossKind::Logistic => {
                let h: Vec<Interval> = w.iter().map(binary_entropy).collect::<Result<_>>()?;
                Interval::sum(p, &h)
            }
        };
        let mut resid = Float::with_val(p, 0);
        for j in 0..n {
            let terms: Vec<Interval> =
                (0..self.m.rows()).map(|i| &signed(self.m.get(i, j), self.labels[i]) * &w[i]).collect();
            let r = Interval::sum(p, &terms).mag();
            if r > resid {
                resid = r;
            }
        }
        let mut penalty = &Interval::from_float(resid) * &b.mul_int(n as i64);
        if self.loss.kind == LossKind::Logistic {
            penalty = penalty.div(&Interval::ln2(p))?;
        }
        let lb = &value - &penalty;
        Ok(lb.max(&Interval::zero(p)))
    }
}

fn signed(x: &Interval, y: i8) -> Interval {
    if y > 0 {
        x.clone()
    } else {
        -x
    }
}

/// `H₂(p) = -p log2 p - (1-p) log2 (1-p)` for a point `p ∈ [0, 1]`.
pub fn binary_entropy(p: &Interval) -> Result<Interval> {
    let prec = p.prec();
    let one = Interval::one(prec);
    let term = |x: &Interval| -> Result<Interval> {
        if x.hi().is_zero() {
            return Ok(Interval::zero(prec));
        }
        Ok(-&(x * &x.ln()?))
    };
    let q = &one - p;
    (&term(p)? + &term(&q)?).div(&Interval::ln2(prec))
}

/// Builds `M = [M1; M2; M2]` with
/// `M1[i][j] = S(v0 + (v2 - v0) a_iᵀb_j)` and `M2[i][j] = S(v1 + (v2 - v1) b̄_iᵀb_j)`.
pub fn build_layer_matrix(
    inst: &VectorPairInstance,
    loss: &NiceLoss,
    activation: &NiceActivation,
) -> Result<ErmMatrixInstance> {
    if inst.kind != ProblemKind::Ovp {
        return Err(Error::Validation("the network reduction takes an OVP instance".into()));
    }
    if !inst.normalized {
        return Err(Error::Validation("the network reduction needs a normalized instance".into()));
    }
    let n = inst.n();
    if inst.m() != n {
        return Err(Error::Validation("the network reduction needs |A| = |B|".into()));
    }
    let p = activation.v0.prec();
    let d0 = &activation.v2 - &activation.v0;
    let d1 = &activation.v2 - &activation.v1;
    let one = Interval::one(p);

    let mut weights = Vec::with_capacity(n);
    for b in &inst.b {
        let mut w: Vec<Interval> = b.to_bools().iter().map(|&x| Interval::from_int(p, x as i64)).collect();
        w.push(one.clone());
        weights.push(w);
    }
    let mut examples = Vec::with_capacity(3 * n);
    for a in &inst.a {
        let mut e: Vec<Interval> = a.to_bools().iter().map(|&x| if x { d0.clone() } else { Interval::zero(p) }).collect();
        e.push(activation.v0.clone());
        examples.push(e);
    }
    let mut second = Vec::with_capacity(n);
    for b in &inst.b {
        let mut e: Vec<Interval> =
            b.complement().to_bools().iter().map(|&x| if x { d1.clone() } else { Interval::zero(p) }).collect();
        e.push(activation.v1.clone());
        second.push(e);
    }
    examples.extend(second.iter().cloned());
    examples.extend(second);

    // entries depend only on the integer inner product
    let mut cache1: Vec<Option<Interval>> = vec![None; inst.d + 1];
    let mut cache2: Vec<Option<Interval>> = vec![None; inst.d + 1];
    let mut m = IntervalMatrix::zeros(3 * n, n, p);
    for i in 0..n {
        for j in 0..n {
            let k = inst.a[i].dot(&inst.b[j])?;
            let v = cache1[k]
                .get_or_insert_with(|| activation.s(&(&activation.v0 + &d0.mul_int(k as i64))))
                .clone();
            m.set(i, j, v);
            let c = inst.b[i].complement().dot(&inst.b[j])?;
            let v = cache2[c]
                .get_or_insert_with(|| activation.s(&(&activation.v1 + &d1.mul_int(c as i64))))
                .clone();
            m.set(n + i, j, v.clone());
            m.set(2 * n + i, j, v);
        }
    }
    let mut labels = vec![1i8; 2 * n];
    labels.extend(std::iter::repeat_n(-1, n));
    Ok(ErmMatrixInstance { m, labels, loss: loss.clone(), activation: activation.clone(), network: NetworkView { weights, examples } })
}

/// Result of minimizing the ERM objective.
#[derive(Clone, Debug, PartialEq)]
pub struct ErmSolution {
    pub alpha: Vec<Interval>,
    /// Enclosure of the objective at `alpha` (an upper bound on the optimum).
    pub objective: Interval,
    /// Logistic: `‖∇f(α)‖∞`. Hinge: `‖Aᵀw‖∞` for the LP dual weights.
    pub stationarity_residual: Interval,
    /// Certified lower bound on the optimum.
    pub lower_bound: Interval,
    pub converged: bool,
    pub iterations: usize,
}

struct PlainProblem {
    /// `A = diag(y) M` at midpoints, row-major `rows x n`.
    a: Vec<Float>,
    rows: usize,
    n: usize,
    prec: u32,
}

impl PlainProblem {
    fn new(erm: &ErmMatrixInstance) -> Self {
        let rows = erm.m.rows();
        let n = erm.n();
        let a = (0..rows)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let v = erm.m.get(i, j).mid();
                if erm.labels[i] > 0 {
                    v
                } else {
                    -v
                }
            })
            .collect();
        PlainProblem { a, rows, n, prec: erm.prec() }
    }

    fn z(&self, alpha: &[Float]) -> Vec<Float> {
        (0..self.rows)
            .map(|i| {
                let mut s = Float::with_val(self.prec, 0);
                for (aij, x) in self.a[i * self.n..(i + 1) * self.n].iter().zip(alpha) {
                    s += Float::with_val(self.prec, aij * x);
                }
                s
            })
            .collect()
    }

    fn value(&self, loss: &NiceLoss, alpha: &[Float]) -> Float {
        self.z(alpha).iter().fold(Float::with_val(self.prec, 0), |acc, z| acc + loss.value_f(z))
    }

    /// `Aᵀ v`.
    fn at(&self, v: &[Float]) -> Vec<Float> {
        (0..self.n)
            .map(|j| {
                let mut s = Float::with_val(self.prec, 0);
                for (i, vi) in v.iter().enumerate().take(self.rows) {
                    s += Float::with_val(self.prec, &self.a[i * self.n + j] * vi);
                }
                s
            })
            .collect()
    }
}

fn max_abs(v: &[Float], prec: u32) -> Float {
    v.iter().fold(Float::with_val(prec, 0), |acc, x| {
        let a = Float::with_val(prec, x.abs_ref());
        if a > acc {
            a
        } else {
            acc
        }
    })
}

/// Minimizes the ERM objective starting from `start`.
///
/// Logistic: damped Newton until `‖∇f‖∞ <= tol`. Hinge: subgradient steps
/// with averaging, then the epigraph LP
/// `min Σξ  s.t.  ξ_i + y_i (M(α⁺ - α⁻))_i - s_i = 1` solved by simplex.
pub fn solve_final_layer(erm: &ErmMatrixInstance, start: &[Float], tol: &Float) -> Result<ErmSolution> {
    let prob = PlainProblem::new(erm);
    let p = prob.prec;
    if start.len() != prob.n {
        return Err(Error::DimensionMismatch { expected: prob.n, found: start.len() });
    }
    match erm.loss.kind {
        LossKind::Logistic => newton(erm, &prob, start, tol),
        LossKind::Hinge => {
            let (warm, warm_val, iters) = subgradient(erm, &prob, start, 200);
            let lp = epigraph_lp(&prob)?;
            let lp_val = prob.value(&erm.loss, &lp.0);
            let (alpha, duals) = if lp_val <= warm_val { (lp.0, lp.1) } else { (warm, lp.1) };
            let ai: Vec<Interval> = alpha.iter().map(|v| Interval::from_float(v.clone())).collect();
            let objective = erm.objective(&ai)?;
            let lower_bound = erm.dual_lower_bound(&duals)?;
            let resid = max_abs(&prob.at(&duals), p);
            Ok(ErmSolution {
                alpha: ai,
                objective,
                stationarity_residual: Interval::new(Float::with_val(p, 0), resid)?,
                lower_bound,
                converged: true,
                iterations: iters + lp.2,
            })
        }
    }
}

fn newton(erm: &ErmMatrixInstance, prob: &PlainProblem, start: &[Float], tol: &Float) -> Result<ErmSolution> {
    let p = prob.prec;
    let (n, rows) = (prob.n, prob.rows);
    let loss = &erm.loss;
    let mut alpha = start.to_vec();
    let mut f = prob.value(loss, &alpha);
    let mut converged = false;
    let mut iters = 0;
    let armijo = Float::with_val(p, 1e-4);
    for it in 0..200 {
        iters = it;
        let z = prob.z(&alpha);
        let d1: Vec<Float> = z.iter().map(|v| loss.deriv_f(v)).collect();
        let g = prob.at(&d1);
        if max_abs(&g, p) <= *tol {
            converged = true;
            break;
        }
        let d2: Vec<Float> = z.iter().map(|v| loss.second_f(v)).collect();
        let mut h = vec![Float::with_val(p, 0); n * n];
        for (r, d2r) in d2.iter().enumerate().take(rows) {
            for j in 0..n {
                let wj = Float::with_val(p, &prob.a[r * n + j] * d2r);
                for k in 0..=j {
                    h[j * n + k] += Float::with_val(p, &wj * &prob.a[r * n + k]);
                }
            }
        }
        for j in 0..n {
            for k in 0..j {
                h[k * n + j] = h[j * n + k].clone();
            }
        }
        let neg_g: Vec<Float> = g.iter().map(|v| Float::with_val(p, -v)).collect();
        let mut ridge = Float::with_val(p, 0);
        let dir = loop {
            let mut hr = h.clone();
            for j in 0..n {
                hr[j * n + j] += &ridge;
            }
            match cholesky(&hr, n, p) {
                Ok(l) => break cholesky_solve(&l, n, &neg_g, p),
                Err(_) => {
                    let tr = (0..n).fold(Float::with_val(p, 0), |acc, j| acc + &h[j * n + j]);
                    ridge = if ridge.is_zero() {
                        Float::with_val(p, &tr * Float::with_val(p, Float::i_exp(1, -(p as i32) / 2)))
                    } else {
                        ridge * 16u32
                    };
                    if ridge.is_zero() {
                        ridge = Float::with_val(p, Float::i_exp(1, -(p as i32) / 2));
                    }
                }
            }
        };
        let slope = g.iter().zip(&dir).fold(Float::with_val(p, 0), |acc, (a, b)| acc + Float::with_val(p, a * b));
        let mut step = Float::with_val(p, 1);
        let mut accepted = false;
        for _ in 0..200 {
            let trial: Vec<Float> =
                alpha.iter().zip(&dir).map(|(a, d)| Float::with_val(p, a + Float::with_val(p, d * &step))).collect();
            let ft = prob.value(loss, &trial);
            let bound = Float::with_val(p, &f + Float::with_val(p, &armijo * &step) * &slope);
            if ft <= bound {
                alpha = trial;
                f = ft;
                accepted = true;
                break;
            }
            step /= 2u32;
        }
        if !accepted {
            break;
        }
    }
    let z = prob.z(&alpha);
    let weights: Vec<Float> = z.iter().map(|v| sigmoid_f(&Float::with_val(p, -v))).collect();
    let ai: Vec<Interval> = alpha.iter().map(|v| Interval::from_float(v.clone())).collect();
    let objective = erm.objective(&ai)?;
    let lower_bound = erm.dual_lower_bound(&weights)?;

    // certified gradient Aᵀ l'(z) at the final iterate
    let zi = erm.m.mul_vec(&ai)?;
    let ln2 = Interval::ln2(p);
    let lprime: Vec<Interval> = zi
        .iter()
        .zip(&erm.labels)
        .map(|(v, &y)| {
            let yz = signed(v, y);
            -&sigmoid(&-&yz).div(&ln2).expect("ln 2 > 0")
        })
        .collect();
    let mut resid = Float::with_val(p, 0);
    for j in 0..n {
        let terms: Vec<Interval> = (0..rows).map(|i| &signed(erm.m.get(i, j), erm.labels[i]) * &lprime[i]).collect();
        let r = Interval::sum(p, &terms).mag();
        if r > resid {
            resid = r;
        }
    }
    Ok(ErmSolution {
        alpha: ai,
        objective,
        stationarity_residual: Interval::new(Float::with_val(p, 0), resid)?,
        lower_bound,
        converged,
        iterations: iters,
    })
}

fn subgradient(erm: &ErmMatrixInstance, prob: &PlainProblem, start: &[Float], iters: usize) -> (Vec<Float>, Float, usize) {
    let p = prob.prec;
    let loss = &erm.loss;
    let mut alpha = start.to_vec();
    let mut best = alpha.clone();
    let mut best_val = prob.value(loss, &alpha);
    let mut avg = alpha.clone();
    let scale = max_abs(start, p).max(&Float::with_val(p, 1)).clone();
    for k in 0..iters {
        let z = prob.z(&alpha);
        let d: Vec<Float> = z.iter().map(|v| loss.deriv_f(v)).collect();
        let g = prob.at(&d);
        let gn = max_abs(&g, p);
        if gn.is_zero() {
            break;
        }
        let eta = Float::with_val(p, &scale / Float::with_val(p, (k + 1) as u32).sqrt()) / &gn / 10u32;
        for (a, gi) in alpha.iter_mut().zip(&g) {
            *a -= Float::with_val(p, gi * &eta);
        }
        let w = Float::with_val(p, 1) / Float::with_val(p, (k + 2) as u32);
        for (m, a) in avg.iter_mut().zip(&alpha) {
            let diff = Float::with_val(p, a - &*m);
            *m += diff * &w;
        }
        for cand in [&alpha, &avg] {
            let v = prob.value(loss, cand);
            if v < best_val {
                best_val = v;
                best = cand.clone();
            }
        }
    }
    (best, best_val, iters)
}

/// Returns `(α, dual weights, iterations)`.
fn epigraph_lp(prob: &PlainProblem) -> Result<(Vec<Float>, Vec<Float>, usize)> {
    let p = prob.prec;
    let (m, n) = (prob.rows, prob.n);
    let k = 2 * n + 2 * m;
    let mut a = vec![Float::with_val(p, 0); m * k];
    for i in 0..m {
        for j in 0..n {
            a[i * k + j] = prob.a[i * n + j].clone();
            a[i * k + n + j] = Float::with_val(p, -&prob.a[i * n + j]);
        }
        a[i * k + 2 * n + i] = Float::with_val(p, 1);
        a[i * k + 2 * n + m + i] = Float::with_val(p, -1);
    }
    let b = vec![Float::with_val(p, 1); m];
    let c: Vec<Float> = (0..k).map(|j| Float::with_val(p, (2 * n..2 * n + m).contains(&j) as u32)).collect();
    let basis: Vec<usize> = (2 * n..2 * n + m).collect();
    let sol = simplex(&a, &b, &c, &basis, p)?;
    let alpha = (0..n).map(|j| Float::with_val(p, &sol.x[j] - &sol.x[n + j])).collect();
    Ok((alpha, sol.duals, sol.iterations))
}

/// `n^{min(100 K, T/2)}`, the magnitude of the certificate point.
pub fn certificate_exponent(loss: &NiceLoss, t: u32) -> Rational {
    let paper = Rational::from(100) * &loss.k_loss;
    let cap = Rational::from((t, 2));
    if paper < cap {
        paper
    } else {
        cap
    }
}

pub fn certificate_point(erm: &ErmMatrixInstance, exponent: &Rational) -> Result<Interval> {
    let p = erm.prec();
    let ln_n = Interval::from_int(p, erm.n().max(2) as i64).ln()?;
    Ok((&Interval::from_rational(p, exponent) * &ln_n).exp())
}

/// Everything computed by one run of the network reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct NnReport {
    /// Objective at the certificate point.
    pub certificate_value: Interval,
    pub solution: ErmSolution,
    /// Enclosure of the optimum.
    pub minimum: Interval,
    /// `(3n - 1/2) l(0)`.
    pub theta: Interval,
    /// `3n l(0) - minimum`; YES iff it clears `l(0)/2`.
    pub deficit: Interval,
}

pub fn nn_report(
    inst: &VectorPairInstance,
    loss: &NiceLoss,
    kind: ActivationKind,
    t: u32,
    prec: u32,
) -> Result<NnReport> {
    let p = prec.max(NN_MIN_PRECISION);
    let n = inst.n();
    let act = activation_thresholds(kind, t, n.max(2), p)?;
    let erm = build_layer_matrix(inst, loss, &act)?;
    let cert = certificate_point(&erm, &certificate_exponent(loss, t))?;
    let certificate_value = erm.objective_at_constant(&cert)?;
    let start = vec![cert.mid(); n];
    let tol = Float::with_val(p, Float::i_exp(1, -(p as i32) / 2));
    let solution = solve_final_layer(&erm, &start, &tol)?;

    let l0 = loss.l_at_zero(p);
    let trivial = match loss.kind {
        LossKind::Hinge => vec![Float::with_val(p, 1); 3 * n],
        LossKind::Logistic => vec![Float::with_val(p, 0.5); 3 * n],
    };
    let lb = erm.dual_lower_bound(&trivial)?.max(&solution.lower_bound);
    let ub = certificate_value.min(&solution.objective);
    if lb.lo() > ub.hi() {
        return Err(Error::Validation("lower bound exceeds achieved objective".into()));
    }
    let minimum = Interval::new(lb.lo().clone(), ub.hi().clone())?;
    let level = l0.mul_int(3 * n as i64);
    let theta = &level - &l0.div_int(2)?;
    let deficit = &level - &minimum;
    Ok(NnReport { certificate_value, solution, minimum, theta, deficit })
}

pub fn nn_distinguisher(
    inst: &VectorPairInstance,
    loss: &NiceLoss,
    kind: ActivationKind,
    t: u32,
    policy: &PrecisionPolicy,
) -> Result<ReductionVerdict> {
    let reduction = match loss.kind {
        LossKind::Hinge => Reduction::NnHinge,
        LossKind::Logistic => Reduction::NnLogistic,
    };
    decide(reduction, policy, |bits| {
        let r = nn_report(inst, loss, kind, t, bits)?;
        let half = loss.l_at_zero(r.deficit.prec()).div_int(2)?;
        Ok((r.deficit, half))
    })
}
