//! Kernel PCA through the trace of the centered kernel matrix.
//!
//! `tr(K') = n - s(K)/n` for a unit-diagonal `K`, so the eigenvalue sum
//! reveals the entry sum, and
//! `(s(K_{A,B}) - s(K_A) - s(K_B)) / 2 = Σ k(a, b)`.

use crate::error::{Error, Result};
use crate::instances::{ProblemKind, VectorPairInstance};
use crate::kernels::{gram, self_gram, KernelParams};
use crate::linalg::IntervalMatrix;
use crate::precision::{Interval, PrecisionPolicy};
use crate::verdict::{decide, Reduction, ReductionVerdict};

/// `n - s(K)/n`.
pub fn centered_trace(k: &IntervalMatrix) -> Result<Interval> {
    if !k.is_square() || k.rows() == 0 {
        return Err(Error::Validation("centered trace needs a non-empty square matrix".into()));
    }
    let n = k.rows() as i64;
    Ok(&Interval::from_int(k.prec(), n) - &k.entry_sum().div_int(n)?)
}

/// `tr((I - J/n) K (I - J/n))` by explicit products.
pub fn centered_trace_direct(k: &IntervalMatrix) -> Result<Interval> {
    let n = k.rows();
    let p = k.prec();
    let inv_n = Interval::one(p).div_int(n as i64)?;
    let h = IntervalMatrix::from_fn(n, n, |i, j| {
        if i == j {
            &Interval::one(p) - &inv_n
        } else {
            -&inv_n
        }
    });
    Ok(h.mul(k)?.mul(&h)?.trace())
}

#[derive(Clone, Debug, PartialEq)]
pub struct KpcaReport {
    /// `(s(K_{A,B}) - s(K_A) - s(K_B)) / 2`.
    pub s: Interval,
    /// `[n^2 delta, Delta / 2]`.
    pub band: Interval,
}

pub fn kpca_report(inst: &VectorPairInstance, params: &KernelParams) -> Result<KpcaReport> {
    if inst.kind != ProblemKind::Bhcp {
        return Err(Error::Validation("the KPCA reduction takes a BHCP instance".into()));
    }
    let n = inst.n();
    let t = inst.threshold()?;
    let mut all = inst.a.clone();
    all.extend(inst.b.iter().cloned());
    let s_ab = self_gram(&all, params)?.entry_sum();
    let s_a = gram(&inst.a, &inst.a, params)?.entry_sum();
    let s_b = gram(&inst.b, &inst.b, params)?.entry_sum();
    let s = (&(&s_ab - &s_a) - &s_b).div_int(2)?;
    let no_bound = params.at_distance(t as u64).mul_int((n * n) as i64);
    let yes_bound = params.at_distance(t as u64 - 1).div_int(2)?;
    let band = Interval::new(no_bound.hi().clone(), yes_bound.lo().clone())
        .map_err(|_| Error::Parameter("KPCA threshold band is empty for this kernel".into()))?;
    Ok(KpcaReport { s, band })
}

/// `Delta >= n^10 delta`, i.e. `C >= 10 ln n`.
pub fn case_separation_holds(params: &KernelParams, n: usize) -> Result<bool> {
    let need = Interval::from_int(params.prec(), n.max(1) as i64).ln()?.mul_int(10);
    Ok(params.c().lo() >= need.hi())
}

pub fn kpca_distinguisher(
    inst: &VectorPairInstance,
    params: &KernelParams,
    policy: &PrecisionPolicy,
) -> Result<ReductionVerdict> {
    decide(Reduction::Kpca, policy, |bits| {
        let r = kpca_report(inst, &params.with_prec(bits)?)?;
        Ok((r.s, r.band))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_trace_zero() {
        let k = IntervalMatrix::identity(1, 64);
        assert!(centered_trace(&k).unwrap().contains_f64(0.0));
        assert!(centered_trace_direct(&k).unwrap().contains_f64(0.0));
    }

    #[test]
    fn identity_trace_n_minus_one() {
        let k = IntervalMatrix::identity(5, 128);
        assert!(centered_trace(&k).unwrap().contains_f64(4.0));
        assert!(centered_trace_direct(&k).unwrap().contains_f64(4.0));
    }

    #[test]
    fn default_kernel_separates() {
        for n in [2, 4, 16, 24, 1000] {
            assert!(case_separation_holds(&KernelParams::standard(n, 128).unwrap(), n).unwrap());
        }
    }
}
