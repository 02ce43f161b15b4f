//! Dense tableau simplex over MPFR floats.
//!
//! Solves `min c'x  s.t.  A x = b, x >= 0` starting from a caller-supplied
//! basis whose columns form the identity (so `b >= 0` is a feasible start).
//! Pricing is Dantzig's rule, switching to Bland's rule after a run of
//! degenerate pivots.

use rug::Float;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<Float>,
    /// Simplex multipliers `y = c_B B^{-1}`.
    pub duals: Vec<Float>,
    pub objective: Float,
    pub iterations: usize,
}

/// `a` is row-major `m x k`.
pub fn simplex(a: &[Float], b: &[Float], c: &[Float], basis: &[usize], prec: u32) -> Result<LpSolution> {
    let m = b.len();
    let k = c.len();
    if a.len() != m * k || basis.len() != m {
        return Err(Error::DimensionMismatch { expected: m * k, found: a.len() });
    }
    for (i, &j) in basis.iter().enumerate() {
        if j >= k || (0..m).any(|r| a[r * k + j] != if r == i { 1 } else { 0 }) {
            return Err(Error::Validation(format!("initial basis column {j} is not a unit vector")));
        }
        if b[i] < 0 {
            return Err(Error::Validation("initial basis is infeasible (negative right-hand side)".into()));
        }
    }
    let eps = Float::with_val(prec, Float::i_exp(1, -(prec as i32) / 2));
    let w = k + 1;
    let mut t: Vec<Float> = Vec::with_capacity(m * w);
    for r in 0..m {
        for j in 0..k {
            t.push(Float::with_val(prec, &a[r * k + j]));
        }
        t.push(Float::with_val(prec, &b[r]));
    }
    let mut basis = basis.to_vec();
    let initial = basis.clone();
    let reduced = |t: &[Float], basis: &[usize]| -> Vec<Float> {
        (0..k)
            .map(|j| {
                let mut d = Float::with_val(prec, &c[j]);
                for r in 0..m {
                    d -= Float::with_val(prec, &c[basis[r]] * &t[r * w + j]);
                }
                d
            })
            .collect()
    };

    let max_iter = 50 * (m + k);
    let mut degenerate_run = 0usize;
    for iter in 0..max_iter {
        let d = reduced(&t, &basis);
        let bland = degenerate_run > 50;
        let mut enter = None;
        for j in 0..k {
            if d[j] < -eps.clone() && !basis.contains(&j) {
                match enter {
                    None => enter = Some(j),
                    Some(e) if !bland && d[j] < d[e] => enter = Some(j),
                    _ => {}
                }
                if bland {
                    break;
                }
            }
        }
        let Some(e) = enter else {
            let mut x = vec![Float::with_val(prec, 0); k];
            for r in 0..m {
                x[basis[r]] = t[r * w + k].clone();
            }
            let objective = x.iter().zip(c).fold(Float::with_val(prec, 0), |acc, (xi, ci)| acc + Float::with_val(prec, xi * ci));
            let duals = initial.iter().map(|&j| Float::with_val(prec, &c[j] - &d[j])).collect();
            return Ok(LpSolution { x, duals, objective, iterations: iter });
        };
        let mut leave: Option<(usize, Float)> = None;
        for r in 0..m {
            let coef = &t[r * w + e];
            if *coef > eps {
                let ratio = Float::with_val(prec, &t[r * w + k] / coef);
                let better = match &leave {
                    None => true,
                    Some((lr, best)) => ratio < *best || (ratio == *best && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        let Some((pr, ratio)) = leave else {
            return Err(Error::Validation("linear program is unbounded".into()));
        };
        degenerate_run = if ratio.is_zero() { degenerate_run + 1 } else { 0 };

        let piv = t[pr * w + e].clone();
        for j in 0..w {
            t[pr * w + j] /= &piv;
        }
        let prow: Vec<Float> = t[pr * w..(pr + 1) * w].to_vec();
        for r in 0..m {
            if r == pr {
                continue;
            }
            let f = t[r * w + e].clone();
            if f.is_zero() {
                continue;
            }
            for j in 0..w {
                let delta = Float::with_val(prec, &f * &prow[j]);
                t[r * w + j] -= delta;
            }
        }
        basis[pr] = e;
    }
    Err(Error::NonConvergence { iterations: max_iter, best_gap: "simplex iteration cap".into() })
}
