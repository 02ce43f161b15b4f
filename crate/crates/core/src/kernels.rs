//! Gaussian kernel `k(x, y) = exp(-C ||x - y||^2)` on small integer points.
//!
//! Inputs are binary vectors or vectors over {-1, 0, 1}, so the squared
//! distance is an exact integer and only the exponential is rounded.

use rug::Rational;

use crate::error::{Error, Result};
use crate::instances::BitVector;
use crate::linalg::IntervalMatrix;
use crate::precision::Interval;

/// Bandwidth `C`, either `multiplier * ln(n_ref)` or given directly.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelParams {
    c: Interval,
    multiplier: Option<Rational>,
    n_ref: Option<usize>,
}

pub const DEFAULT_C_MULTIPLIER: i64 = 100;

impl KernelParams {
    pub fn new(multiplier: Rational, n_ref: usize, prec: u32) -> Result<Self> {
        if multiplier <= 0 {
            return Err(Error::Parameter(format!("kernel multiplier must be positive, got {multiplier}")));
        }
        if n_ref < 2 {
            return Err(Error::Parameter(format!("n_ref must be at least 2 so that C > 0, got {n_ref}")));
        }
        let ln_n = Interval::from_int(prec, n_ref as i64).ln()?;
        let c = &Interval::from_rational(prec, &multiplier) * &ln_n;
        Ok(KernelParams { c, multiplier: Some(multiplier), n_ref: Some(n_ref) })
    }

    /// `C = 100 ln n`.
    pub fn standard(n: usize, prec: u32) -> Result<Self> {
        Self::new(Rational::from(DEFAULT_C_MULTIPLIER), n.max(2), prec)
    }

    pub fn from_c(c: Interval) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::Parameter(format!("kernel parameter C must be positive, got {c}")));
        }
        Ok(KernelParams { c, multiplier: None, n_ref: None })
    }

    /// Same parameters recomputed at a new precision.
    pub fn with_prec(&self, prec: u32) -> Result<Self> {
        match (&self.multiplier, self.n_ref) {
            (Some(m), Some(n)) => Self::new(m.clone(), n, prec),
            _ => Ok(KernelParams { c: self.c.with_prec(prec), multiplier: None, n_ref: None }),
        }
    }

    pub fn c(&self) -> &Interval {
        &self.c
    }

    pub fn multiplier(&self) -> Option<&Rational> {
        self.multiplier.as_ref()
    }

    pub fn n_ref(&self) -> Option<usize> {
        self.n_ref
    }

    pub fn prec(&self) -> u32 {
        self.c.prec()
    }

    /// `exp(-C * dist)`.
    pub fn at_distance(&self, dist: u64) -> Interval {
        if dist == 0 {
            return Interval::one(self.prec());
        }
        (-self.c.mul_int(dist as i64)).exp()
    }
}

/// Gram matrix with its kernel parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    entries: IntervalMatrix,
    params: KernelParams,
    symmetric: bool,
}

impl KernelMatrix {
    pub fn rows(&self) -> usize {
        self.entries.rows()
    }

    pub fn cols(&self) -> usize {
        self.entries.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> &Interval {
        self.entries.get(i, j)
    }

    pub fn matrix(&self) -> &IntervalMatrix {
        &self.entries
    }

    pub fn into_matrix(self) -> IntervalMatrix {
        self.entries
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn transpose(&self) -> KernelMatrix {
        KernelMatrix { entries: self.entries.transpose(), params: self.params.clone(), symmetric: self.symmetric }
    }

    pub fn entry_sum(&self) -> Interval {
        entry_sum(self)
    }
}

/// Squared Euclidean distance between two integer vectors.
pub fn squared_distance(x: &[i8], y: &[i8]) -> Result<u64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    Ok(x.iter().zip(y).map(|(&a, &b)| ((a as i64 - b as i64) * (a as i64 - b as i64)) as u64).sum())
}

pub fn gaussian_kernel(x: &BitVector, y: &BitVector, params: &KernelParams) -> Result<Interval> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), found: y.dim() });
    }
    Ok(params.at_distance(x.xor_count(y) as u64))
}

pub fn gaussian_kernel_signed(x: &[i8], y: &[i8], params: &KernelParams) -> Result<Interval> {
    Ok(params.at_distance(squared_distance(x, y)?))
}

fn assemble(dists: Vec<Vec<u64>>, params: &KernelParams, symmetric: bool) -> KernelMatrix {
    let max = dists.iter().flatten().copied().max().unwrap_or(0) as usize;
    // every distance value is exponentiated once
    let mut cache: Vec<Option<Interval>> = vec![None; max + 1];
    let rows = dists.len();
    let cols = dists.first().map_or(0, Vec::len);
    let entries = IntervalMatrix::from_fn(rows, cols, |i, j| {
        let d = dists[i][j] as usize;
        cache[d].get_or_insert_with(|| params.at_distance(d as u64)).clone()
    });
    KernelMatrix { entries, params: params.clone(), symmetric }
}

/// `K[i][j] = k(rows[i], cols[j])`.
pub fn gram(rows: &[BitVector], cols: &[BitVector], params: &KernelParams) -> Result<KernelMatrix> {
    let dists = rows
        .iter()
        .map(|r| cols.iter().map(|c| Ok(crate::oracles::hamming(r, c)? as u64)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let symmetric = std::ptr::eq(rows, cols) || rows == cols;
    Ok(assemble(dists, params, symmetric))
}

/// Self-Gram of one point set.
pub fn self_gram(points: &[BitVector], params: &KernelParams) -> Result<KernelMatrix> {
    gram(points, points, params)
}

pub fn gram_signed(rows: &[Vec<i8>], cols: &[Vec<i8>], params: &KernelParams) -> Result<KernelMatrix> {
    let dists = rows
        .iter()
        .map(|r| cols.iter().map(|c| squared_distance(r, c)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let symmetric = rows == cols;
    Ok(assemble(dists, params, symmetric))
}

/// `s(K)`: sum of all entries.
pub fn entry_sum(k: &KernelMatrix) -> Interval {
    k.entries.entry_sum()
}

/// Diagonal entries contain 1 and every off-diagonal magnitude is at most `eps`.
pub fn almost_identity_check(k: &IntervalMatrix, eps: &Interval) -> bool {
    if !k.is_square() {
        return false;
    }
    let n = k.rows();
    (0..n).all(|i| {
        k.get(i, i).contains_f64(1.0) && (0..n).all(|j| i == j || k.get(i, j).mag() <= *eps.lo())
    })
}
