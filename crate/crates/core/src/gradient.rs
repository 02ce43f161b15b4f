//! Gradient of the network loss at `α = 0`.
//!
//! `∂/∂α_j Σ_a l(Σ_j α_j S(a, b_j)) = l'(0) Σ_a S(a, b_j)` at the origin, so
//! the entry sum of the gradient is `l'(0) Σ_{a,b} S(a, b)`.

use std::str::FromStr;

use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{ProblemKind, VectorPairInstance};
use crate::nn::{sigmoid, NiceLoss};
use crate::precision::{Interval, PrecisionPolicy};
use crate::verdict::{decide, Reduction, ReductionVerdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gadget {
    /// `S(a, b) = max(0, 1 - 2 aᵀb)`.
    Relu,
    /// `S(a, b) = σ(-10 ln(n) aᵀb)`.
    Sigmoid,
}

impl FromStr for Gadget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().trim_end_matches("_gadget") {
            "relu" => Ok(Gadget::Relu),
            "sigmoid" => Ok(Gadget::Sigmoid),
            _ => Err(Error::Parameter(format!("unknown gadget '{s}'"))),
        }
    }
}

/// Gadget value for a given inner product; `n` scales the sigmoid slope.
pub fn gadget_value(gadget: Gadget, inner: usize, n: usize, prec: u32) -> Result<Interval> {
    Ok(match gadget {
        Gadget::Relu => Interval::from_int(prec, (1 - 2 * inner as i64).max(0)),
        Gadget::Sigmoid => {
            let slope = Interval::from_int(prec, n.max(2) as i64).ln()?.mul_int(10);
            sigmoid(&-&slope.mul_int(inner as i64))
        }
    })
}

fn gadget_scale(inst: &VectorPairInstance) -> usize {
    inst.n().max(inst.m())
}

fn check(inst: &VectorPairInstance) -> Result<()> {
    if inst.kind != ProblemKind::Ovp {
        return Err(Error::Validation("the gradient reduction takes an OVP instance".into()));
    }
    Ok(())
}

/// The activation table `S(a_i, b_j)`.
pub fn activations(inst: &VectorPairInstance, gadget: Gadget, prec: u32) -> Result<Vec<Vec<Interval>>> {
    check(inst)?;
    let n = gadget_scale(inst);
    let mut cache: Vec<Option<Interval>> = vec![None; inst.d + 1];
    inst.a
        .iter()
        .map(|a| {
            inst.b
                .iter()
                .map(|b| {
                    let k = a.dot(b)?;
                    if let Some(v) = &cache[k] {
                        return Ok(v.clone());
                    }
                    let v = gadget_value(gadget, k, n, prec)?;
                    cache[k] = Some(v.clone());
                    Ok(v)
                })
                .collect()
        })
        .collect()
}

/// Gradient of `Σ_a l(F(a))` at `α = 0` and the sum of its entries.
pub fn loss_gradient_at_zero(
    inst: &VectorPairInstance,
    loss: &NiceLoss,
    gadget: Gadget,
    prec: u32,
) -> Result<(Vec<Interval>, Interval)> {
    let s = activations(inst, gadget, prec)?;
    let lp = loss.l_prime_at_zero(prec);
    let grad: Vec<Interval> = (0..inst.m())
        .map(|j| {
            let col: Vec<Interval> = s.iter().map(|row| row[j].clone()).collect();
            &lp * &Interval::sum(prec, &col)
        })
        .collect();
    let total = Interval::sum(prec, &grad);
    Ok((grad, total))
}

/// Total loss `Σ_a l(Σ_j α_j S(a, b_j))` with all labels `+1`.
pub fn total_loss(inst: &VectorPairInstance, loss: &NiceLoss, gadget: Gadget, alpha: &[Interval]) -> Result<Interval> {
    if alpha.len() != inst.m() {
        return Err(Error::DimensionMismatch { expected: inst.m(), found: alpha.len() });
    }
    let prec = alpha.iter().map(Interval::prec).max().unwrap_or(64);
    let s = activations(inst, gadget, prec)?;
    let terms: Vec<Interval> = s
        .iter()
        .map(|row| {
            let f: Vec<Interval> = row.iter().zip(alpha).map(|(x, a)| x * a).collect();
            loss.eval(&Interval::sum(prec, &f))
        })
        .collect();
    Ok(Interval::sum(prec, &terms))
}

/// The unique integer inside `x`, if there is exactly one.
pub fn unique_integer(x: &Interval) -> Option<Integer> {
    let lo = x.lo().clone().ceil().to_integer()?;
    let hi = x.hi().clone().floor().to_integer()?;
    (lo == hi).then_some(lo)
}

/// Orthogonal-pair count recovered from the ReLU-gadget gradient.
pub fn count_from_gradient(inst: &VectorPairInstance, loss: &NiceLoss, prec: u32) -> Result<Integer> {
    let (_, total) = loss_gradient_at_zero(inst, loss, Gadget::Relu, prec)?;
    let ratio = total.div(&loss.l_prime_at_zero(prec))?;
    unique_integer(&ratio).ok_or_else(|| Error::Validation(format!("gradient ratio {ratio} does not pin an integer")))
}

/// ReLU: statistic `entry_sum / l'(0)` (the pair count) against `1/2`.
/// Sigmoid: statistic `|entry_sum|` against `|l'(0)|/4`.
pub fn gradient_distinguisher(
    inst: &VectorPairInstance,
    loss: &NiceLoss,
    gadget: Gadget,
    policy: &PrecisionPolicy,
) -> Result<ReductionVerdict> {
    let reduction = match gadget {
        Gadget::Relu => Reduction::GradRelu,
        Gadget::Sigmoid => Reduction::GradSigmoid,
    };
    decide(reduction, policy, |bits| {
        let (_, total) = loss_gradient_at_zero(inst, loss, gadget, bits)?;
        let lp = loss.l_prime_at_zero(bits);
        Ok(match gadget {
            Gadget::Relu => (total.div(&lp)?, Interval::from_ratio(bits, 1, 2)),
            Gadget::Sigmoid => (total.abs(), lp.abs().div_int(4)?),
        })
    })
}
