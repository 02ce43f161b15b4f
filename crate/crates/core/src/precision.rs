//! Outward-rounded interval arithmetic over MPFR floats.
//!
//! Every [`Interval`] encloses the exact real value it stands for. Lower
//! endpoints are rounded toward minus infinity and upper endpoints toward
//! plus infinity, so any chain of operations keeps that guarantee.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::{Constant, Round, Special};
use rug::ops::AssignRound;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Plain extended-precision scalar.
pub type Scalar = Float;

/// Smallest working precision accepted anywhere in the crate.
pub const MIN_PRECISION: u32 = 64;

/// Hard ceiling for precision escalation.
pub const DEFAULT_PRECISION_CAP: u32 = 1 << 20;

fn clamp_prec(prec: u32) -> u32 {
    prec.max(MIN_PRECISION)
}

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Clone, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo.to_string_radix(10, Some(20)), self.hi.to_string_radix(10, Some(20)))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo_decimal(17), self.hi_decimal(17))
    }
}

impl Interval {
    /// Builds `[lo, hi]`, rejecting NaN endpoints and inverted bounds.
    pub fn new(lo: Float, hi: Float) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::Domain("NaN interval endpoint".into()));
        }
        if lo > hi {
            return Err(Error::Domain(format!("inverted interval [{lo}, {hi}]")));
        }
        Ok(Interval { lo, hi })
    }

    /// Degenerate interval around an exactly representable float.
    pub fn from_float(x: Float) -> Self {
        let mut lo = x;
        if lo.prec() < MIN_PRECISION {
            lo.set_prec(MIN_PRECISION);
        }
        Interval { hi: lo.clone(), lo }
    }

    pub fn from_f64(prec: u32, x: f64) -> Self {
        assert!(!x.is_nan(), "NaN is not an interval");
        let p = clamp_prec(prec);
        Interval {
            lo: Float::with_val(p, x),
            hi: Float::with_val(p, x),
        }
    }

    pub fn from_int(prec: u32, x: i64) -> Self {
        let p = clamp_prec(prec);
        Interval {
            lo: Float::with_val_round(p, x, Round::Down).0,
            hi: Float::with_val_round(p, x, Round::Up).0,
        }
    }

    pub fn from_integer(prec: u32, x: &Integer) -> Self {
        let p = clamp_prec(prec);
        Interval {
            lo: Float::with_val_round(p, x, Round::Down).0,
            hi: Float::with_val_round(p, x, Round::Up).0,
        }
    }

    pub fn from_rational(prec: u32, x: &Rational) -> Self {
        let p = clamp_prec(prec);
        Interval {
            lo: Float::with_val_round(p, x, Round::Down).0,
            hi: Float::with_val_round(p, x, Round::Up).0,
        }
    }

    /// Enclosure of `num / den`.
    pub fn from_ratio(prec: u32, num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Self::from_rational(prec, &Rational::from((num, den)))
    }

    pub fn zero(prec: u32) -> Self {
        Self::from_int(prec, 0)
    }

    pub fn one(prec: u32) -> Self {
        Self::from_int(prec, 1)
    }

    /// Enclosure of ln 2.
    pub fn ln2(prec: u32) -> Self {
        let p = clamp_prec(prec);
        Interval {
            lo: Float::with_val_round(p, Constant::Log2, Round::Down).0,
            hi: Float::with_val_round(p, Constant::Log2, Round::Up).0,
        }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    /// Same enclosure, endpoints re-rounded outward to `prec` bits.
    pub fn with_prec(&self, prec: u32) -> Self {
        let p = clamp_prec(prec);
        Interval {
            lo: Float::with_val_round(p, &self.lo, Round::Down).0,
            hi: Float::with_val_round(p, &self.hi, Round::Up).0,
        }
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    /// `hi - lo`, rounded up.
    pub fn width(&self) -> Float {
        Float::with_val_round(self.prec(), &self.hi - &self.lo, Round::Up).0
    }

    /// Midpoint, rounded to nearest.
    pub fn mid(&self) -> Float {
        let mut m = Float::with_val(self.prec(), &self.lo + &self.hi);
        m /= 2;
        m
    }

    pub fn mid_f64(&self) -> f64 {
        self.mid().to_f64()
    }

    /// Upper bound on `|x|` over the interval.
    pub fn mag(&self) -> Float {
        let a = Float::with_val(self.prec(), self.lo.abs_ref());
        if a > self.hi {
            a
        } else {
            self.hi.clone()
        }
    }

    /// Lower bound on `|x|` over the interval.
    pub fn mig(&self) -> Float {
        if self.contains_zero() {
            Float::with_val(self.prec(), 0)
        } else if self.lo > 0 {
            self.lo.clone()
        } else {
            Float::with_val(self.prec(), -&self.hi)
        }
    }

    pub fn contains_float(&self, x: &Float) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn contains_f64(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_rational(&self, x: &Rational) -> bool {
        self.lo <= *x && self.hi >= *x
    }

    /// True if `other` is a subset of `self`.
    pub fn encloses(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= 0 && self.hi >= 0
    }

    /// Certainly strictly positive.
    pub fn is_positive(&self) -> bool {
        self.lo > 0
    }

    pub fn is_nonnegative(&self) -> bool {
        self.lo >= 0
    }

    /// Certified strict comparison: `Some(Less)` if every point of `self`
    /// is below every point of `other`, `Some(Greater)` for the converse,
    /// `None` when the intervals touch or overlap.
    pub fn certainly_cmp(&self, other: &Interval) -> Option<Ordering> {
        if self.hi < other.lo {
            Some(Ordering::Less)
        } else if self.lo > other.hi {
            Some(Ordering::Greater)
        } else {
            None
        }
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Interval) -> Self {
        Interval {
            lo: if self.lo <= other.lo { self.lo.clone() } else { other.lo.clone() },
            hi: if self.hi >= other.hi { self.hi.clone() } else { other.hi.clone() },
        }
    }

    /// `self` widened by `r` on both sides.
    pub fn inflate(&self, r: &Float) -> Self {
        let p = self.prec();
        Interval {
            lo: Float::with_val_round(p, &self.lo - r, Round::Down).0,
            hi: Float::with_val_round(p, &self.hi + r, Round::Up).0,
        }
    }

    pub fn abs(&self) -> Self {
        if self.lo >= 0 {
            self.clone()
        } else if self.hi <= 0 {
            -self.clone()
        } else {
            Interval {
                lo: Float::with_val(self.prec(), 0),
                hi: self.mag(),
            }
        }
    }

    /// Interval maximum `max(self, other)`.
    pub fn max(&self, other: &Interval) -> Self {
        Interval {
            lo: if self.lo >= other.lo { self.lo.clone() } else { other.lo.clone() },
            hi: if self.hi >= other.hi { self.hi.clone() } else { other.hi.clone() },
        }
    }

    /// Interval minimum `min(self, other)`.
    pub fn min(&self, other: &Interval) -> Self {
        Interval {
            lo: if self.lo <= other.lo { self.lo.clone() } else { other.lo.clone() },
            hi: if self.hi <= other.hi { self.hi.clone() } else { other.hi.clone() },
        }
    }

    pub fn square(&self) -> Self {
        let a = self.abs();
        let p = a.prec();
        Interval {
            lo: Float::with_val_round(p, a.lo.square_ref(), Round::Down).0,
            hi: Float::with_val_round(p, a.hi.square_ref(), Round::Up).0,
        }
    }

    /// `self^k` by repeated squaring.
    pub fn powi(&self, k: u32) -> Self {
        let mut result = Interval::one(self.prec());
        if k == 0 {
            return result;
        }
        if k.is_multiple_of(2) {
            // even powers are monotone in |x|
            let base = self.abs();
            return pow_by_squaring(base, k, result);
        }
        let base = self.clone();
        result = pow_by_squaring(base, k, result);
        result
    }

    pub fn mul_int(&self, k: i64) -> Self {
        self * &Interval::from_int(self.prec(), k)
    }

    pub fn div_int(&self, k: i64) -> Result<Self> {
        self.div(&Interval::from_int(self.prec(), k))
    }

    /// `self / rhs`; errors when `rhs` contains zero.
    pub fn div(&self, rhs: &Interval) -> Result<Self> {
        if rhs.contains_zero() {
            return Err(Error::Domain(format!("division by interval containing zero {rhs:?}")));
        }
        let p = self.prec().max(rhs.prec());
        Ok(endpoint_hull(|a, b, r| Float::with_val_round(p, a / b, r).0, self, rhs))
    }

    /// Enclosure of `exp(x)`.
    pub fn exp(&self) -> Self {
        let p = self.prec();
        let (lo, _) = Float::with_val_round(p, self.lo.exp_ref(), Round::Down);
        let (mut hi, _) = Float::with_val_round(p, self.hi.exp_ref(), Round::Up);
        if hi.is_infinite() {
            hi = Float::with_val(p, Special::Infinity);
            hi.next_down();
        }
        let lo = if lo.is_infinite() {
            let mut l = Float::with_val(p, Special::Infinity);
            l.next_down();
            l
        } else {
            lo
        };
        Interval { lo, hi }
    }

    /// Enclosure of `ln(x)`; the interval must be strictly positive.
    pub fn ln(&self) -> Result<Self> {
        if self.lo <= 0 {
            return Err(Error::Domain(format!("logarithm of non-positive interval {self:?}")));
        }
        let p = self.prec();
        Ok(Interval {
            lo: Float::with_val_round(p, self.lo.ln_ref(), Round::Down).0,
            hi: Float::with_val_round(p, self.hi.ln_ref(), Round::Up).0,
        })
    }

    /// Enclosure of `ln(1 + x)`; requires `x > -1`.
    pub fn ln_1p(&self) -> Result<Self> {
        if self.lo <= -1 {
            return Err(Error::Domain(format!("ln_1p of interval reaching -1 {self:?}")));
        }
        let p = self.prec();
        Ok(Interval {
            lo: Float::with_val_round(p, self.lo.ln_1p_ref(), Round::Down).0,
            hi: Float::with_val_round(p, self.hi.ln_1p_ref(), Round::Up).0,
        })
    }

    /// Enclosure of `sqrt(x)`; the interval must be non-negative.
    pub fn sqrt(&self) -> Result<Self> {
        if self.lo < 0 {
            return Err(Error::Domain(format!("square root of negative interval {self:?}")));
        }
        let p = self.prec();
        Ok(Interval {
            lo: Float::with_val_round(p, self.lo.sqrt_ref(), Round::Down).0,
            hi: Float::with_val_round(p, self.hi.sqrt_ref(), Round::Up).0,
        })
    }

    /// Decimal rendering of `lo`, rounded down to `digits` significant digits.
    pub fn lo_decimal(&self, digits: usize) -> String {
        self.lo.to_string_radix_round(10, Some(digits), Round::Down)
    }

    /// Decimal rendering of `hi`, rounded up to `digits` significant digits.
    pub fn hi_decimal(&self, digits: usize) -> String {
        self.hi.to_string_radix_round(10, Some(digits), Round::Up)
    }

    /// Sum of a sequence, all at `prec` bits.
    pub fn sum<'a, I: IntoIterator<Item = &'a Interval>>(prec: u32, items: I) -> Interval {
        let p = clamp_prec(prec);
        let mut lo = Float::with_val(p, 0);
        let mut hi = Float::with_val(p, 0);
        for x in items {
            lo.add_assign_round(&x.lo, Round::Down);
            hi.add_assign_round(&x.hi, Round::Up);
        }
        Interval { lo, hi }
    }
}

fn pow_by_squaring(mut base: Interval, mut k: u32, mut acc: Interval) -> Interval {
    while k > 0 {
        if k & 1 == 1 {
            acc = &acc * &base;
        }
        k >>= 1;
        if k > 0 {
            base = base.square();
        }
    }
    acc
}

/// Min/max over the four endpoint combinations of a binary operation that
/// is monotone in each argument on the relevant domain.
fn endpoint_hull<F>(op: F, x: &Interval, y: &Interval) -> Interval
where
    F: Fn(&Float, &Float, Round) -> Float,
{
    let pairs = [(&x.lo, &y.lo), (&x.lo, &y.hi), (&x.hi, &y.lo), (&x.hi, &y.hi)];
    let mut lo: Option<Float> = None;
    let mut hi: Option<Float> = None;
    for (a, b) in pairs {
        let d = op(a, b, Round::Down);
        let u = op(a, b, Round::Up);
        lo = Some(match lo {
            Some(l) if l <= d => l,
            _ => d,
        });
        hi = Some(match hi {
            Some(h) if h >= u => h,
            _ => u,
        });
    }
    Interval { lo: lo.unwrap(), hi: hi.unwrap() }
}

trait AddAssignRound {
    fn add_assign_round(&mut self, rhs: &Float, round: Round);
}

impl AddAssignRound for Float {
    fn add_assign_round(&mut self, rhs: &Float, round: Round) {
        let p = self.prec();
        let (v, _) = Float::with_val_round(p, &*self + rhs, round);
        *self = v;
    }
}

impl Add for &Interval {
    type Output = Interval;
    fn add(self, rhs: &Interval) -> Interval {
        let p = self.prec().max(rhs.prec());
        let mut lo = Float::new(p);
        lo.assign_round(&self.lo + &rhs.lo, Round::Down);
        let mut hi = Float::new(p);
        hi.assign_round(&self.hi + &rhs.hi, Round::Up);
        Interval { lo, hi }
    }
}

impl Sub for &Interval {
    type Output = Interval;
    fn sub(self, rhs: &Interval) -> Interval {
        let p = self.prec().max(rhs.prec());
        let mut lo = Float::new(p);
        lo.assign_round(&self.lo - &rhs.hi, Round::Down);
        let mut hi = Float::new(p);
        hi.assign_round(&self.hi - &rhs.lo, Round::Up);
        Interval { lo, hi }
    }
}

impl Mul for &Interval {
    type Output = Interval;
    fn mul(self, rhs: &Interval) -> Interval {
        let p = self.prec().max(rhs.prec());
        if self.lo >= 0 && rhs.lo >= 0 {
            let mut lo = Float::new(p);
            lo.assign_round(&self.lo * &rhs.lo, Round::Down);
            let mut hi = Float::new(p);
            hi.assign_round(&self.hi * &rhs.hi, Round::Up);
            return Interval { lo, hi };
        }
        endpoint_hull(|a, b, r| Float::with_val_round(p, a * b, r).0, self, rhs)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl Neg for &Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        -self.clone()
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Interval {
            type Output = Interval;
            fn $m(self, rhs: Interval) -> Interval {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&Interval> for Interval {
            type Output = Interval;
            fn $m(self, rhs: &Interval) -> Interval {
                (&self).$m(rhs)
            }
        }
    };
}

forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Which arithmetic operation [`interval_arith`] applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
    Neg,
}

/// Applies `op` to `x` (and `y` for binary ops).
pub fn interval_arith(op: ArithOp, x: &Interval, y: &Interval) -> Result<Interval> {
    Ok(match op {
        ArithOp::Add => x + y,
        ArithOp::Sub => x - y,
        ArithOp::Mul => x * y,
        ArithOp::Div => x.div(y)?,
        ArithOp::Neg => -x,
    })
}

pub fn interval_exp(x: &Interval) -> Interval {
    x.exp()
}

pub fn interval_ln(x: &Interval) -> Result<Interval> {
    x.ln()
}

/// Start and cap for precision escalation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub start_bits: u32,
    pub cap_bits: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy { start_bits: 256, cap_bits: DEFAULT_PRECISION_CAP }
    }
}

impl PrecisionPolicy {
    pub fn new(start_bits: u32, cap_bits: u32) -> Self {
        let start_bits = clamp_prec(start_bits);
        PrecisionPolicy { start_bits, cap_bits: cap_bits.max(start_bits) }
    }

    /// Starting precision sized to hold `exp(-c * depth)` next to O(1)
    /// quantities with 4x headroom: `4 * ceil(c * depth / ln 2)` bits.
    pub fn for_depth(c: f64, depth: usize, cap_bits: u32) -> Self {
        let bits = (c * depth as f64 / std::f64::consts::LN_2).ceil().max(1.0);
        let start = (4.0 * bits).min(u32::MAX as f64) as u32;
        Self::new(start.min(cap_bits), cap_bits)
    }
}

/// Outcome of a certified threshold comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Statistic strictly above the upper end of the threshold band.
    Above,
    /// Statistic strictly below the lower end of the threshold band.
    Below,
    Undecidable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertifiedOutcome {
    pub side: Side,
    pub statistic: Interval,
    pub threshold: Interval,
    pub bits: u32,
}

/// Compares a statistic against a threshold band `[no_bound, yes_bound]`.
pub fn classify(statistic: &Interval, threshold: &Interval) -> Side {
    if statistic.lo() > threshold.hi() {
        Side::Above
    } else if statistic.hi() < threshold.lo() {
        Side::Below
    } else {
        Side::Undecidable
    }
}

/// Reruns `compute` at doubling precision until the statistic it returns
/// strictly clears the threshold band, or the cap is reached.
///
/// `compute(bits)` returns `(statistic, threshold)`.
pub fn escalate_precision<F, E>(policy: &PrecisionPolicy, mut compute: F) -> std::result::Result<CertifiedOutcome, E>
where
    F: FnMut(u32) -> std::result::Result<(Interval, Interval), E>,
{
    let mut bits = policy.start_bits;
    loop {
        let (statistic, threshold) = compute(bits)?;
        let side = classify(&statistic, &threshold);
        if side != Side::Undecidable || bits >= policy.cap_bits {
            return Ok(CertifiedOutcome { side, statistic, threshold, bits });
        }
        bits = bits.saturating_mul(2).min(policy.cap_bits);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integer_addition_is_exact() {
        let r = interval_arith(ArithOp::Add, &Interval::from_int(64, 1), &Interval::from_int(64, 2)).unwrap();
        assert!(r.is_point());
        assert_eq!(r.lo().to_f64(), 3.0);
    }

    #[test]
    fn zero_annihilates() {
        let x = Interval::new(Float::with_val(64, -3.5), Float::with_val(64, 7.25)).unwrap();
        let r = &Interval::zero(64) * &x;
        assert!(r.is_point());
        assert!(r.lo().is_zero());
    }

    #[test]
    fn one_third_within_two_ulp() {
        let r = Interval::one(128).div(&Interval::from_int(128, 3)).unwrap();
        let third = Float::with_val(256, 1) / Float::with_val(256, 3);
        assert!(r.contains_float(&third));
        let mut ulp = Float::with_val(128, 1) / 3u32;
        let before = ulp.clone();
        ulp.next_up();
        let one_ulp = Float::with_val(256, &ulp - &before);
        assert!(r.width() <= one_ulp * 2u32);
    }

    #[test]
    fn division_by_zero_interval_fails() {
        let y = Interval::new(Float::with_val(64, -1), Float::with_val(64, 1)).unwrap();
        assert!(matches!(Interval::one(64).div(&y), Err(Error::Domain(_))));
        assert!(interval_arith(ArithOp::Div, &Interval::one(64), &Interval::zero(64)).is_err());
    }

    #[test]
    fn inverted_interval_rejected() {
        assert!(Interval::new(Float::with_val(64, 2), Float::with_val(64, 1)).is_err());
    }

    #[test]
    fn exp_of_zero_is_one() {
        let r = Interval::zero(200).exp();
        assert!(r.is_point());
        assert_eq!(r.lo().to_f64(), 1.0);
    }

    #[test]
    fn exp_of_minus_ln2_is_half() {
        let ln2 = Interval::ln2(300);
        let r = (-ln2).exp();
        assert!(r.contains_f64(0.5));
        assert!(r.width() < Float::with_val(300, Float::i_exp(1, -290)));
        // ln 2 through the logarithm route gives the same enclosure
        let ln2b = Interval::from_int(300, 2).ln().unwrap();
        assert!((-ln2b).exp().contains_f64(0.5));
    }

    #[test]
    fn ln_of_one_is_zero() {
        let r = Interval::one(128).ln().unwrap();
        assert!(r.is_point() && r.lo().is_zero());
    }

    #[test]
    fn ln_of_nonpositive_fails() {
        assert!(Interval::zero(64).ln().is_err());
        assert!(Interval::from_int(64, -2).ln().is_err());
    }

    #[test]
    fn ln_16_matches_newton_reference() {
        // Newton on f(y) = e^y - 16 at 400 bits, independent of MPFR's log.
        let p = 400;
        let mut y = Float::with_val(p, 2.77);
        for _ in 0..20 {
            let e = Float::with_val(p, y.exp_ref());
            y -= (e.clone() - 16u32) / e;
        }
        let r = Interval::from_int(200, 16).ln().unwrap();
        assert!(r.contains_float(&y));
        assert!(r.lo().to_f64() > 2.772_588_7 && r.hi().to_f64() < 2.772_588_8);
    }

    #[test]
    fn exp_of_kernel_exponent_matches_repeated_multiplication() {
        // exp(-C t) with C = 100 ln n equals n^(-100 t).
        let n = 5i64;
        let t = 3u32;
        let p = 2000;
        let c = Interval::from_int(p, n).ln().unwrap().mul_int(100);
        let via_exp = (-(c.mul_int(t as i64))).exp();
        let inv_n = Interval::one(p).div(&Interval::from_int(p, n)).unwrap();
        let via_pow = inv_n.powi(100 * t);
        assert!(via_exp.overlaps(&via_pow));
        let rel = Float::with_val(p, via_exp.width() / via_exp.lo());
        assert!(rel < Float::with_val(p, Float::i_exp(1, -1980)));
    }

    #[test]
    fn exp_overflow_saturates() {
        let huge = Interval::from_float(Float::with_val(64, Float::i_exp(1, 1_000_000_000)));
        let r = huge.exp();
        assert!(r.hi().is_finite());
        assert!(r.lo().is_finite());
    }

    #[test]
    fn escalation_decides_immediately_when_clear() {
        let policy = PrecisionPolicy::new(128, 1024);
        let out = escalate_precision::<_, Error>(&policy, |bits| {
            let stat = Interval::new(Float::with_val(bits, 0.4), Float::with_val(bits, 0.6))?;
            Ok((stat, Interval::from_f64(bits, 0.1)))
        })
        .unwrap();
        assert_eq!(out.side, Side::Above);
        assert_eq!(out.bits, 128);
    }

    #[test]
    fn escalation_resolves_after_one_doubling() {
        // (1 + 3^-100) - 1 straddles 1.0001 * 3^-100 at 128 bits but not at 256.
        let policy = PrecisionPolicy::new(128, 4096);
        let out = escalate_precision::<_, Error>(&policy, |bits| {
            let s = Interval::one(bits).div(&Interval::from_int(bits, 3))?.powi(100);
            let stat = (&Interval::one(bits) + &s) - Interval::one(bits);
            let thr = &s * &Interval::from_ratio(bits, 10001, 10000);
            Ok((stat, thr))
        })
        .unwrap();
        assert_eq!(out.side, Side::Below);
        assert_eq!(out.bits, 256);
    }

    #[test]
    fn exact_tie_is_undecidable_at_cap() {
        let policy = PrecisionPolicy::new(64, 1024);
        let out = escalate_precision::<_, Error>(&policy, |bits| {
            let s = Interval::one(bits).div(&Interval::from_int(bits, 7))?;
            Ok((s.clone(), s))
        })
        .unwrap();
        assert_eq!(out.side, Side::Undecidable);
        assert_eq!(out.bits, 1024);
    }

    #[test]
    fn start_bits_follow_depth_rule() {
        let p = PrecisionPolicy::for_depth(std::f64::consts::LN_2, 100, DEFAULT_PRECISION_CAP);
        assert_eq!(p.start_bits, 400);
        // clamped to the minimum working precision
        let p = PrecisionPolicy::for_depth(std::f64::consts::LN_2, 10, DEFAULT_PRECISION_CAP);
        assert_eq!(p.start_bits, MIN_PRECISION);
    }
}
