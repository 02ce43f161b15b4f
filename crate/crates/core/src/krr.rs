//! Kernel ridge regression (lambda = 0, y = 1) and the inverse-sum reduction.

use crate::error::{Error, Result};
use crate::instances::{ProblemKind, VectorPairInstance};
use crate::kernels::{gram, self_gram, KernelMatrix, KernelParams};
use crate::linalg::{certified_inverse, certified_spd_solve, IntervalMatrix};
use crate::precision::{Interval, PrecisionPolicy};
use crate::verdict::{decide, Reduction, ReductionVerdict};

/// Certified enclosure of `K^{-1} rhs`.
pub fn solve_spd(k: &KernelMatrix, rhs: &[Interval]) -> Result<Vec<Interval>> {
    certified_spd_solve(k.matrix(), rhs)
}

/// `s(K^{-1}) = 1' K^{-1} 1`.
pub fn inverse_entry_sum(k: &IntervalMatrix) -> Result<Interval> {
    let p = k.prec();
    let ones = vec![Interval::one(p); k.rows()];
    let x = certified_spd_solve(k, &ones)?;
    Ok(Interval::sum(p, &x))
}

/// Off-diagonal bound `eps / (1 - eps n)` for the inverse of `I + E` with
/// `|E_ij| <= eps`; every entry of `(I + E)^{-1} - I` is within it.
pub fn almost_identity_closure(eps: &Interval, n: usize) -> Result<Interval> {
    let p = eps.prec();
    let en = eps.mul_int(n as i64);
    if *en.hi() > 0.5 {
        return Err(Error::Parameter(format!("eps * n = {} exceeds 1/2", en.hi_decimal(6))));
    }
    let r = eps.div(&(&Interval::one(p) - &en))?;
    Interval::new(rug::Float::with_val(p, 0), r.hi().clone())
}

/// Evaluates both sides of `(X+Y)^{-1} = X^{-1} - X^{-1}(I + Y X^{-1})^{-1} Y X^{-1}`
/// and reports whether they overlap entrywise.
pub fn binomial_inverse_check(x: &IntervalMatrix, y: &IntervalMatrix) -> Result<bool> {
    let n = x.rows();
    let p = x.prec().max(y.prec());
    let lhs = certified_inverse(&x.add(y)?)?;
    let xi = certified_inverse(x)?;
    let inner = certified_inverse(&IntervalMatrix::identity(n, p).add(&y.mul(&xi)?)?)?;
    let rhs = xi.sub(&xi.mul(&inner)?.mul(y)?.mul(&xi)?)?;
    Ok(lhs.entries().iter().zip(rhs.entries()).all(|(a, b)| a.overlaps(b)))
}

/// Quantities behind one run of the reduction.
#[derive(Clone, Debug, PartialEq)]
pub struct KrrReport {
    /// `(s(K_A^{-1}) + s(K_B^{-1}) - s(K_{A,B}^{-1})) / 2`.
    pub s_hat: Interval,
    /// Certified bound on `|s_hat - Σ k(a, b)|`.
    pub error_bound: Interval,
    /// `10 * error_bound`.
    pub slack: Interval,
    /// `s_hat` widened by `slack`; the error is relative to `s_hat`, so it
    /// goes on the statistic rather than the band.
    pub statistic: Interval,
    /// `[2 n^2 delta, Delta / 2]`.
    pub band: Interval,
}

/// Refuses kernels too wide for the two cases to separate: `exp(C) >= 100 n^2`.
pub fn check_separation(params: &KernelParams, n: usize) -> Result<()> {
    let p = params.prec();
    let need = Interval::from_int(p, 100 * (n * n) as i64).ln()?;
    if params.c().lo() < need.hi() {
        return Err(Error::Parameter(format!(
            "C = {} is below ln(100 n^2) = {}; the KRR cases do not separate",
            params.c().lo_decimal(8),
            need.hi_decimal(8)
        )));
    }
    Ok(())
}

pub fn krr_report(inst: &VectorPairInstance, params: &KernelParams) -> Result<KrrReport> {
    if inst.kind != ProblemKind::Bhcp {
        return Err(Error::Validation("the KRR reduction takes a BHCP instance".into()));
    }
    inst.require_distinct_points()?;
    let n = inst.n();
    check_separation(params, n)?;
    let p = params.prec();
    let t = inst.threshold()?;

    let mut all = inst.a.clone();
    all.extend(inst.b.iter().cloned());
    let k_ab = self_gram(&all, params)?;
    let k_a = gram(&inst.a, &inst.a, params)?;
    let k_b = gram(&inst.b, &inst.b, params)?;
    let s_a = inverse_entry_sum(k_a.matrix())?;
    let s_b = inverse_entry_sum(k_b.matrix())?;
    let s_ab = inverse_entry_sum(k_ab.matrix())?;
    let s_hat = (&(&s_a + &s_b) - &s_ab).div_int(2)?;

    // With X the block diagonal of K = X + Y, both X^{-1} 1 and K^{-1} 1
    // have entries in [1 - N eps', 1 + N eps'] and Y >= 0, so
    // 2 s_hat = u'Yv lies within a factor (1 ± N eps')^2 of s(Y).
    let big_n = all.len();
    let eps = Interval::from_float(k_ab.matrix().max_offdiag_mag());
    let eps_inv = almost_identity_closure(&eps, big_n)?;
    let one = Interval::one(p);
    let eta = &(&one + &eps_inv.mul_int(big_n as i64)).square() - &one;
    let s_hi = Interval::from_float(s_hat.hi().clone()).max(&Interval::zero(p));
    let err = (&s_hi * &eta).div(&(&one - &eta))?;
    let error_bound = Interval::new(rug::Float::with_val(p, 0), err.hi().clone())?;
    let slack = error_bound.mul_int(10);

    let delta = params.at_distance(t as u64);
    let big_delta = params.at_distance(t as u64 - 1);
    let no_bound = delta.mul_int(2 * (n * n) as i64);
    let yes_bound = big_delta.div_int(2)?;
    let band = Interval::new(no_bound.hi().clone(), yes_bound.lo().clone())
        .map_err(|_| Error::Parameter("KRR threshold band is empty at this precision".into()))?;
    let statistic = s_hat.inflate(slack.hi());
    Ok(KrrReport { s_hat, error_bound, slack, statistic, band })
}

pub fn krr_distinguisher(
    inst: &VectorPairInstance,
    params: &KernelParams,
    policy: &PrecisionPolicy,
) -> Result<ReductionVerdict> {
    decide(Reduction::Krr, policy, |bits| {
        let r = krr_report(inst, &params.with_prec(bits)?)?;
        Ok((r.statistic, r.band))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_inverse_sum_is_n() {
        let s = inverse_entry_sum(&IntervalMatrix::identity(7, 128)).unwrap();
        assert!(s.contains_f64(7.0));
        assert!(s.is_point());
    }

    #[test]
    fn closure_at_zero() {
        let b = almost_identity_closure(&Interval::zero(64), 10).unwrap();
        assert!(b.hi().is_zero());
        assert!(almost_identity_closure(&Interval::from_f64(64, 0.1), 6).is_err());
    }

    #[test]
    fn binomial_scaled_identity() {
        let p = 128;
        let x = IntervalMatrix::identity(3, p).map(|v| v.mul_int(2));
        let y = IntervalMatrix::identity(3, p);
        assert!(binomial_inverse_check(&x, &y).unwrap());
        let inv = certified_inverse(&x.add(&y).unwrap()).unwrap();
        assert!(inv.get(0, 0).contains_rational(&rug::Rational::from((1, 3))));
    }

    #[test]
    fn narrow_kernel_refused() {
        let params = KernelParams::new(rug::Rational::from(1), 4, 128).unwrap();
        assert!(check_separation(&params, 4).is_err());
        assert!(check_separation(&KernelParams::standard(4, 128).unwrap(), 4).is_ok());
    }
}
