//! Dense interval matrices and certified linear solves.
//!
//! Approximate factorizations run in plain round-to-nearest arithmetic at
//! the working precision; the error of the approximate answer is then
//! bounded with interval residuals, so every returned enclosure is
//! rigorous regardless of how good the factorization was.

use rug::Float;

use crate::error::{Error, Result};
use crate::precision::Interval;

#[derive(Clone, Debug, PartialEq)]
pub struct IntervalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Interval>,
}

impl IntervalMatrix {
    pub fn from_fn<F: FnMut(usize, usize) -> Interval>(rows: usize, cols: usize, mut f: F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        IntervalMatrix { rows, cols, data }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Interval>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, found: data.len() });
        }
        Ok(IntervalMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize, prec: u32) -> Self {
        Self::from_fn(rows, cols, |_, _| Interval::zero(prec))
    }

    pub fn identity(n: usize, prec: u32) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Interval::one(prec) } else { Interval::zero(prec) })
    }

    /// Point matrix from plain floats.
    pub fn from_floats(rows: usize, cols: usize, values: &[Float]) -> Self {
        Self::from_fn(rows, cols, |i, j| Interval::from_float(values[i * cols + j].clone()))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Interval {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Interval) {
        self.data[i * self.cols + j] = v;
    }

    pub fn entries(&self) -> &[Interval] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Interval] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn prec(&self) -> u32 {
        self.data.iter().map(Interval::prec).max().unwrap_or(crate::precision::MIN_PRECISION)
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn map<F: FnMut(&Interval) -> Interval>(&self, f: F) -> Self {
        IntervalMatrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(f).collect() }
    }

    fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch { expected: self.rows * self.cols, found: other.rows * other.cols });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(IntervalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(IntervalMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch { expected: self.cols, found: other.rows });
        }
        let p = self.prec().max(other.prec());
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            let terms: Vec<Interval> = (0..self.cols).map(|k| self.get(i, k) * other.get(k, j)).collect();
            Interval::sum(p, &terms)
        }))
    }

    pub fn mul_vec(&self, v: &[Interval]) -> Result<Vec<Interval>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch { expected: self.cols, found: v.len() });
        }
        let p = self.prec();
        Ok((0..self.rows)
            .map(|i| {
                let terms: Vec<Interval> = self.row(i).iter().zip(v).map(|(a, x)| a * x).collect();
                Interval::sum(p, &terms)
            })
            .collect())
    }

    /// Sum of all entries.
    pub fn entry_sum(&self) -> Interval {
        Interval::sum(self.prec(), &self.data)
    }

    pub fn trace(&self) -> Interval {
        let diag: Vec<Interval> = (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).collect();
        Interval::sum(self.prec(), &diag)
    }

    /// Upper bound on the infinity norm (max absolute row sum).
    pub fn norm_inf_upper(&self) -> Float {
        let p = self.prec();
        let mut best = Float::with_val(p, 0);
        for i in 0..self.rows {
            let mags: Vec<Interval> = self.row(i).iter().map(|x| Interval::from_float(x.mag())).collect();
            let s = Interval::sum(p, &mags);
            if *s.hi() > best {
                best = s.hi().clone();
            }
        }
        best
    }

    /// Largest magnitude upper bound among off-diagonal entries.
    pub fn max_offdiag_mag(&self) -> Float {
        let mut best = Float::with_val(self.prec(), 0);
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    let m = self.get(i, j).mag();
                    if m > best {
                        best = m;
                    }
                }
            }
        }
        best
    }

    pub fn midpoints(&self) -> Vec<Float> {
        self.data.iter().map(Interval::mid).collect()
    }

    /// True when `m[i][j]` and `m[j][i]` overlap for every pair.
    pub fn is_symmetric(&self) -> bool {
        self.is_square()
            && (0..self.rows).all(|i| (0..i).all(|j| self.get(i, j).overlaps(self.get(j, i))))
    }
}

/// Plain-arithmetic Gauss-Jordan inverse with partial pivoting.
pub fn approx_inverse(a: &[Float], n: usize, prec: u32) -> Result<Vec<Float>> {
    let mut m: Vec<Float> = a.iter().map(|x| Float::with_val(prec, x)).collect();
    let mut inv: Vec<Float> =
        (0..n * n).map(|k| Float::with_val(prec, if k / n == k % n { 1 } else { 0 })).collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&r, &s| {
                let (x, y) = (Float::with_val(prec, m[r * n + col].abs_ref()), Float::with_val(prec, m[s * n + col].abs_ref()));
                x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if m[pivot * n + col].is_zero() {
            return Err(Error::Singular(format!("zero pivot in column {col}")));
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
                inv.swap(pivot * n + k, col * n + k);
            }
        }
        let piv = m[col * n + col].clone();
        for k in 0..n {
            m[col * n + k] /= &piv;
            inv[col * n + k] /= &piv;
        }
        for r in 0..n {
            if r == col || m[r * n + col].is_zero() {
                continue;
            }
            let f = m[r * n + col].clone();
            for k in 0..n {
                let t = Float::with_val(prec, &f * &m[col * n + k]);
                m[r * n + k] -= t;
                let t = Float::with_val(prec, &f * &inv[col * n + k]);
                inv[r * n + k] -= t;
            }
        }
    }
    Ok(inv)
}

/// Rigorous enclosure of `m^{-1}` for every matrix in the interval matrix.
///
/// With `R` an approximate inverse of the midpoint and `rho = ||I - R m||`
/// below one, `||m^{-1} - R|| <= rho ||R|| / (1 - rho)` entrywise.
pub fn certified_inverse(m: &IntervalMatrix) -> Result<IntervalMatrix> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.rows(), found: m.cols() });
    }
    let n = m.rows();
    let p = m.prec();
    let r = approx_inverse(&m.midpoints(), n, p)?;
    let r_mat = IntervalMatrix::from_floats(n, n, &r);
    let g = IntervalMatrix::identity(n, p).sub(&r_mat.mul(m)?)?;
    let rho = Interval::from_float(g.norm_inf_upper());
    if *rho.hi() >= 1 {
        return Err(Error::Singular(format!("contraction bound {} is not below one", rho.hi_decimal(6))));
    }
    let r_norm = Interval::from_float(r_mat.norm_inf_upper());
    let radius = (&rho * &r_norm).div(&(&Interval::one(p) - &rho))?;
    Ok(r_mat.map(|x| x.inflate(radius.hi())))
}

/// Upper bound on `||m^{-1}||_inf`, valid for every matrix in `m`.
pub fn inverse_norm_bound(m: &IntervalMatrix) -> Result<Interval> {
    let n = m.rows();
    let p = m.prec();
    // Near-identity fast path: ||m - I|| < 1 gives the Neumann bound.
    let e = m.sub(&IntervalMatrix::identity(n, p))?;
    let eta = Interval::from_float(e.norm_inf_upper());
    if *eta.hi() < 1 {
        return Interval::one(p).div(&(&Interval::one(p) - &eta));
    }
    let r = approx_inverse(&m.midpoints(), n, p)?;
    let r_mat = IntervalMatrix::from_floats(n, n, &r);
    let g = IntervalMatrix::identity(n, p).sub(&r_mat.mul(m)?)?;
    let rho = Interval::from_float(g.norm_inf_upper());
    if *rho.hi() >= 1 {
        return Err(Error::Singular(format!("contraction bound {} is not below one", rho.hi_decimal(6))));
    }
    Interval::from_float(r_mat.norm_inf_upper()).div(&(&Interval::one(p) - &rho))
}

/// Cholesky factor `L` (row-major, lower triangular) of a symmetric matrix.
pub fn cholesky(a: &[Float], n: usize, prec: u32) -> Result<Vec<Float>> {
    let mut l = vec![Float::with_val(prec, 0); n * n];
    for j in 0..n {
        let mut diag = Float::with_val(prec, &a[j * n + j]);
        for k in 0..j {
            diag -= Float::with_val(prec, l[j * n + k].square_ref());
        }
        if diag <= 0 {
            return Err(Error::Indefinite(format!("non-positive pivot at row {j}")));
        }
        let ljj = diag.sqrt();
        for i in (j + 1)..n {
            let mut s = Float::with_val(prec, &a[i * n + j]);
            for k in 0..j {
                s -= Float::with_val(prec, &l[i * n + k] * &l[j * n + k]);
            }
            l[i * n + j] = s / &ljj;
        }
        l[j * n + j] = ljj;
    }
    Ok(l)
}

/// Solves `L L^T x = b` by forward and back substitution.
pub fn cholesky_solve(l: &[Float], n: usize, b: &[Float], prec: u32) -> Vec<Float> {
    let mut y = vec![Float::with_val(prec, 0); n];
    for i in 0..n {
        let mut s = Float::with_val(prec, &b[i]);
        for k in 0..i {
            s -= Float::with_val(prec, &l[i * n + k] * &y[k]);
        }
        y[i] = s / &l[i * n + i];
    }
    let mut x = vec![Float::with_val(prec, 0); n];
    for i in (0..n).rev() {
        let mut s = y[i].clone();
        for k in (i + 1)..n {
            s -= Float::with_val(prec, &l[k * n + i] * &x[k]);
        }
        x[i] = s / &l[i * n + i];
    }
    x
}

/// Residual `b - m x` for a point vector `x`, as intervals.
pub fn residual(m: &IntervalMatrix, x: &[Float], b: &[Interval]) -> Result<Vec<Interval>> {
    let xi: Vec<Interval> = x.iter().map(|v| Interval::from_float(v.clone())).collect();
    let mx = m.mul_vec(&xi)?;
    Ok(b.iter().zip(&mx).map(|(bi, mi)| bi - mi).collect())
}

/// Certified enclosure of `m^{-1} b` for a symmetric positive definite `m`:
/// Cholesky at working precision, one refinement step, then the bound
/// `|x - x_hat| <= ||m^{-1}|| ||b - m x_hat||`.
pub fn certified_spd_solve(m: &IntervalMatrix, b: &[Interval]) -> Result<Vec<Interval>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch { expected: m.rows(), found: m.cols() });
    }
    let n = m.rows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    if !m.is_symmetric() {
        return Err(Error::Validation("matrix is not symmetric".into()));
    }
    let p = m.prec().max(b.iter().map(Interval::prec).max().unwrap_or(0));
    let mid = m.midpoints();
    let l = cholesky(&mid, n, p)?;
    let b_mid: Vec<Float> = b.iter().map(Interval::mid).collect();
    let mut x = cholesky_solve(&l, n, &b_mid, p);

    // one refinement step with the residual formed at double precision
    let hp = 2 * p;
    let r: Vec<Float> = (0..n)
        .map(|i| {
            let mut s = Float::with_val(hp, &b_mid[i]);
            for j in 0..n {
                s -= Float::with_val(hp, &mid[i * n + j] * &x[j]);
            }
            Float::with_val(p, s)
        })
        .collect();
    let dx = cholesky_solve(&l, n, &r, p);
    for (xi, di) in x.iter_mut().zip(&dx) {
        *xi += di;
    }

    let res = residual(m, &x, b)?;
    let res_norm = res.iter().map(Interval::mag).fold(Float::with_val(p, 0), |acc, v| if v > acc { v } else { acc });
    let kinv = inverse_norm_bound(m)?;
    let err = &kinv * &Interval::from_float(res_norm);
    Ok(x.into_iter().map(|v| Interval::from_float(v).inflate(err.hi())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(p: u32, v: f64) -> Interval {
        Interval::from_f64(p, v)
    }

    #[test]
    fn identity_solve() {
        let m = IntervalMatrix::identity(4, 128);
        let ones = vec![Interval::one(128); 4];
        let x = certified_spd_solve(&m, &ones).unwrap();
        for xi in &x {
            assert!(xi.contains_f64(1.0));
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let p = 256;
        let q = Interval::from_ratio(p, 1, 7);
        let m = IntervalMatrix::from_fn(2, 2, |i, j| if i == j { Interval::one(p) } else { q.clone() });
        let x = certified_spd_solve(&m, &[Interval::one(p), Interval::one(p)]).unwrap();
        let expect = Interval::one(p).div(&(&Interval::one(p) + &q)).unwrap();
        for xi in &x {
            assert!(xi.overlaps(&expect));
            assert!(xi.width() < Float::with_val(p, Float::i_exp(1, -240)));
        }
    }

    #[test]
    fn indefinite_detected() {
        let p = 128;
        let m = IntervalMatrix::from_fn(2, 2, |i, j| if i == j { pt(p, 1.0) } else { pt(p, 2.0) });
        assert!(matches!(certified_spd_solve(&m, &[Interval::one(p), Interval::one(p)]), Err(Error::Indefinite(_))));
    }

    #[test]
    fn inverse_of_scaled_identity() {
        let p = 128;
        let m = IntervalMatrix::from_fn(3, 3, |i, j| if i == j { pt(p, 2.0) } else { Interval::zero(p) });
        let inv = certified_inverse(&m).unwrap();
        for i in 0..3 {
            assert!(inv.get(i, i).contains_f64(0.5));
        }
    }

    #[test]
    fn singular_matrix_rejected() {
        let p = 128;
        let m = IntervalMatrix::from_fn(2, 2, |_, _| Interval::one(p));
        assert!(certified_inverse(&m).is_err());
    }
}
