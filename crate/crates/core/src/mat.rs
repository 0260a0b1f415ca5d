//! Dense row-major matrix, generic over the entry type.
//!
//! One storage type serves three element domains: arbitrary-precision
//! integers (`IntMat`), exact rationals (`RatMat`) and floating scalars
//! (`Mat<R: Real>`). Sizes here are desk scale (≲ 16 a side), so the
//! implementations favor clarity over blocking.

use crate::error::Error;
use crate::scalar::{r64, Real};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T> Mat<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "entry count must equal rows*cols");
        Mat { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn at(&self, r: usize, c: usize) -> &T {
        &self.data[r * self.cols + c]
    }

    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| f(x)).collect(),
        }
    }
}

impl<T: Clone> Mat<T> {
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        assert!(!rows.is_empty(), "from_rows needs at least one row");
        let cols = rows[0].len();
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
        }
        Mat {
            rows: rows.len(),
            cols,
            data: rows.iter().flat_map(|r| r.iter().cloned()).collect(),
        }
    }

    pub fn col(&self, c: usize) -> Vec<T> {
        (0..self.rows).map(|r| self.at(r, c).clone()).collect()
    }

    pub fn transpose(&self) -> Mat<T> {
        Mat::from_fn(self.cols, self.rows, |r, c| self.at(c, r).clone())
    }

    /// Column vector from a slice.
    pub fn col_vec(v: &[T]) -> Self {
        Mat {
            rows: v.len(),
            cols: 1,
            data: v.to_vec(),
        }
    }

    /// Horizontal concatenation `[self | other]`.
    pub fn hcat(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.rows, other.rows);
        Mat::from_fn(self.rows, self.cols + other.cols, |r, c| {
            if c < self.cols {
                self.at(r, c).clone()
            } else {
                other.at(r, c - self.cols).clone()
            }
        })
    }

    /// Vertical concatenation `[self; other]`.
    pub fn vcat(&self, other: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, other.cols);
        Mat::from_fn(self.rows + other.rows, self.cols, |r, c| {
            if r < self.rows {
                self.at(r, c).clone()
            } else {
                other.at(r - self.rows, c).clone()
            }
        })
    }

    pub fn submatrix(&self, r0: usize, c0: usize, rows: usize, cols: usize) -> Mat<T> {
        assert!(r0 + rows <= self.rows && c0 + cols <= self.cols);
        Mat::from_fn(rows, cols, |r, c| self.at(r0 + r, c0 + c).clone())
    }

    pub fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.cols {
            self.data.swap(i * self.cols + c, j * self.cols + c);
        }
    }

    pub fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.rows {
            self.data.swap(r * self.cols + i, r * self.cols + j);
        }
    }
}

impl<T: Clone + Zero> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }
}

impl<T: Clone + Zero + One> Mat<T> {
    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, n, |r, c| if r == c { T::one() } else { T::zero() })
    }
}

impl<T> Mat<T>
where
    T: Clone + Zero + Add<Output = T> + Mul<Output = T>,
{
    pub fn mul(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in mul");
        Mat::from_fn(self.rows, rhs.cols, |r, c| {
            let mut acc = T::zero();
            for k in 0..self.cols {
                acc = acc + self.at(r, k).clone() * rhs.at(k, c).clone();
            }
            acc
        })
    }

    pub fn scale(&self, s: &T) -> Mat<T> {
        self.map(|x| x.clone() * s.clone())
    }
}

impl<T> Mat<T>
where
    T: Clone + Add<Output = T>,
{
    pub fn add(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |r, c| {
            self.at(r, c).clone() + rhs.at(r, c).clone()
        })
    }
}

impl<T> Mat<T>
where
    T: Clone + Sub<Output = T>,
{
    pub fn sub(&self, rhs: &Mat<T>) -> Mat<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat::from_fn(self.rows, self.cols, |r, c| {
            self.at(r, c).clone() - rhs.at(r, c).clone()
        })
    }
}

impl<T> Mat<T>
where
    T: Clone + Neg<Output = T>,
{
    pub fn neg(&self) -> Mat<T> {
        self.map(|x| -x.clone())
    }
}

impl<T: Zero> Mat<T> {
    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{:?} ", self.data[r * self.cols + c])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

// ---------------------------------------------------------------------------
// Floating-point operations.
// ---------------------------------------------------------------------------

impl<R: Real> Mat<R> {
    pub fn from_f64(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat {
            rows,
            cols,
            data: data.iter().map(|&x| r64(x)).collect(),
        }
    }

    /// Gram matrix `selfᵀ·self`.
    pub fn gram(&self) -> Mat<R> {
        Mat::from_fn(self.cols, self.cols, |i, j| {
            let mut acc = R::zero();
            for r in 0..self.rows {
                acc += *self.at(r, i) * *self.at(r, j);
            }
            acc
        })
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> R {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = R::one();
        for k in 0..n {
            let mut piv = k;
            let mut best = a.at(k, k).abs();
            for r in k + 1..n {
                let v = a.at(r, k).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == R::zero() {
                return R::zero();
            }
            if piv != k {
                a.swap_rows(piv, k);
                det = -det;
            }
            det *= *a.at(k, k);
            for r in k + 1..n {
                let f = *a.at(r, k) / *a.at(k, k);
                for c in k..n {
                    let sub = f * *a.at(k, c);
                    *a.at_mut(r, c) -= sub;
                }
            }
        }
        det
    }

    /// Inverse by Gauss-Jordan with partial pivoting.
    pub fn inverse(&self) -> Result<Mat<R>, Error> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Mat::<R>::identity(n);
        for k in 0..n {
            let mut piv = k;
            let mut best = a.at(k, k).abs();
            for r in k + 1..n {
                let v = a.at(r, k).abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == R::zero() {
                return Err(Error::SingularMatrix);
            }
            a.swap_rows(piv, k);
            inv.swap_rows(piv, k);
            let d = *a.at(k, k);
            for c in 0..n {
                *a.at_mut(k, c) /= d;
                *inv.at_mut(k, c) /= d;
            }
            for r in 0..n {
                if r == k {
                    continue;
                }
                let f = *a.at(r, k);
                if f == R::zero() {
                    continue;
                }
                for c in 0..n {
                    let s1 = f * *a.at(k, c);
                    *a.at_mut(r, c) -= s1;
                    let s2 = f * *inv.at(k, c);
                    *inv.at_mut(r, c) -= s2;
                }
            }
        }
        Ok(inv)
    }

    /// Solve `self · x = b` for a single right-hand side.
    pub fn solve(&self, b: &[R]) -> Result<Vec<R>, Error> {
        let inv = self.inverse()?;
        Ok((0..self.rows)
            .map(|r| {
                let mut acc = R::zero();
                for c in 0..self.cols {
                    acc += *inv.at(r, c) * b[c];
                }
                acc
            })
            .collect())
    }

    pub fn frobenius(&self) -> R {
        self.data.iter().map(|x| *x * *x).sum::<R>().sqrt()
    }

    pub fn max_abs(&self) -> R {
        self.data
            .iter()
            .fold(R::zero(), |acc, x| acc.max(x.abs()))
    }

    /// Cholesky factor `U` (upper triangular) with `self = Uᵀ·U`.
    pub fn cholesky(&self) -> Result<Mat<R>, Error> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut u = Mat::<R>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut acc = *self.at(i, j);
                for k in 0..i {
                    acc -= *u.at(k, i) * *u.at(k, j);
                }
                if i == j {
                    if acc <= R::zero() {
                        return Err(Error::NumericalFailure(
                            "matrix not positive definite".into(),
                        ));
                    }
                    *u.at_mut(i, i) = acc.sqrt();
                } else {
                    *u.at_mut(i, j) = acc / *u.at(i, i);
                }
            }
        }
        Ok(u)
    }
}

// ---------------------------------------------------------------------------
// Exact conversions.
// ---------------------------------------------------------------------------

pub type IntMat = Mat<BigInt>;
pub type RatMat = Mat<BigRational>;

impl Mat<BigInt> {
    pub fn from_i64(rows: usize, cols: usize, data: &[i64]) -> Self {
        assert_eq!(data.len(), rows * cols);
        Mat {
            rows,
            cols,
            data: data.iter().map(|&x| BigInt::from(x)).collect(),
        }
    }

    pub fn from_i64_rows(rows: &[Vec<i64>]) -> Self {
        let v: Vec<Vec<BigInt>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
            .collect();
        Mat::from_rows(&v)
    }

    pub fn to_i64(&self) -> Option<Mat<i64>> {
        let mut data = Vec::with_capacity(self.data.len());
        for x in &self.data {
            data.push(x.to_i64()?);
        }
        Some(Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn to_rat(&self) -> RatMat {
        self.map(|x| BigRational::from_integer(x.clone()))
    }

    pub fn to_real<R: Real>(&self) -> Mat<R> {
        self.map(|x| r64(x.to_f64().expect("entry fits in f64")))
    }

    pub fn max_abs_i64(&self) -> i64 {
        self.data
            .iter()
            .map(|x| x.abs().to_i64().unwrap_or(i64::MAX))
            .max()
            .unwrap_or(0)
    }
}

impl Mat<BigRational> {
    pub fn to_real<R: Real>(&self) -> Mat<R> {
        self.map(|x| r64(x.to_f64().expect("entry fits in f64")))
    }

    /// Cast to integers; `None` if any entry has a denominator.
    pub fn to_int(&self) -> Option<IntMat> {
        let mut data = Vec::with_capacity(self.data.len());
        for x in &self.data {
            if !x.is_integer() {
                return None;
            }
            data.push(x.to_integer());
        }
        Some(Mat {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }
}
