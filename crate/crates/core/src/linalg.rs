//! Exact integer and rational linear algebra.
//!
//! Everything here works over [`BigInt`] and [`BigRational`]; there is no
//! floating point anywhere in the geometry kernels. Rationals from
//! `num-rational` are reduced on construction with a positive denominator,
//! so structural equality is numeric equality.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

pub type Int = BigInt;
pub type Rat = BigRational;
pub type IntVec = Vec<Int>;
pub type RatVec = Vec<Rat>;
pub type IntMat = Matrix<Int>;
pub type RatMat = Matrix<Rat>;

/// Dense row-major matrix with at least one row and one column.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Clone> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::EmptyMatrix);
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from rows, rejecting ragged input.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptyMatrix)?.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * first);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != first {
                return Err(Error::RaggedRows {
                    row: i,
                    expected: first,
                    got: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::new(rows.len(), first, data)
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.cols + j] = value;
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> + '_ {
        self.data.chunks(self.cols)
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.rows().map(<[T]>::to_vec).collect()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Self {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn map<U, F: FnMut(&T) -> U>(&self, f: F) -> Matrix<U> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl<T> Matrix<T>
where
    T: Clone + Zero + One,
{
    pub fn identity(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        Self {
            rows: n,
            cols: n,
            data,
        }
    }
}

impl<T> Matrix<T>
where
    T: Clone + Zero + std::ops::Mul<Output = T>,
    for<'a> &'a T: std::ops::Mul<&'a T, Output = T>,
{
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut data = Vec::with_capacity(self.rows * other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = T::zero();
                for k in 0..self.cols {
                    acc = acc + self.get(i, k) * other.get(k, j);
                }
                data.push(acc);
            }
        }
        Ok(Self {
            rows: self.rows,
            cols: other.cols,
            data,
        })
    }

    pub fn mul_vec(&self, v: &[T]) -> Result<Vec<T>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok(self
            .rows()
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (a, b)| acc + a * b)
            })
            .collect())
    }
}

impl Matrix<i64> {
    pub fn to_int(&self) -> IntMat {
        self.map(|&x| Int::from(x))
    }
}

impl IntMat {
    pub fn to_rat(&self) -> RatMat {
        self.map(|x| Rat::from_integer(x.clone()))
    }
}

pub fn dot(a: &[Int], b: &[Int]) -> Int {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn dot_rat(a: &[Int], b: &[Rat]) -> Rat {
    a.iter()
        .zip(b)
        .fold(Rat::zero(), |acc, (x, y)| acc + y * x)
}

pub fn gcd_slice(v: &[Int]) -> Int {
    v.iter().fold(Int::zero(), |g, x| g.gcd(x))
}

/// Divides an integer vector by the gcd of its entries. Zero stays zero.
pub fn make_primitive(v: &mut [Int]) {
    let g = gcd_slice(v);
    if !g.is_zero() && !g.is_one() {
        for x in v.iter_mut() {
            *x = &*x / &g;
        }
    }
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn det(m: &IntMat) -> Result<Int> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let n = m.nrows();
    let mut a = m.clone();
    let mut sign = Int::one();
    let mut prev = Int::one();
    for k in 0..n {
        if a.get(k, k).is_zero() {
            let Some(p) = (k + 1..n).find(|&i| !a.get(i, k).is_zero()) else {
                return Ok(Int::zero());
            };
            a.swap_rows(k, p);
            sign = -sign;
        }
        let pivot = a.get(k, k).clone();
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&pivot * a.get(i, j) - a.get(i, k) * a.get(k, j)) / &prev;
                a.set(i, j, v);
            }
            a.set(i, k, Int::zero());
        }
        prev = pivot;
    }
    Ok(sign * a.get(n - 1, n - 1).clone())
}

/// Row-style Hermite normal form.
///
/// Returns `(h, u)` with `h = u * m`, `u` unimodular, pivots positive and
/// every entry above a pivot reduced into `[0, pivot)`. Zero rows sink to
/// the bottom.
pub fn hnf(m: &IntMat) -> (IntMat, IntMat) {
    let rows = m.nrows();
    let cols = m.ncols();
    let mut h = m.clone();
    let mut u = IntMat::identity(rows);
    let mut pivot_row = 0;

    for col in 0..cols {
        if pivot_row == rows {
            break;
        }
        // Euclid on the column below the pivot row until a single nonzero remains.
        loop {
            let best = (pivot_row..rows)
                .filter(|&i| !h.get(i, col).is_zero())
                .min_by(|&a, &b| h.get(a, col).abs().cmp(&h.get(b, col).abs()));
            let Some(best) = best else { break };
            if best != pivot_row {
                h.swap_rows(best, pivot_row);
                u.swap_rows(best, pivot_row);
            }
            let mut done = true;
            for i in pivot_row + 1..rows {
                if h.get(i, col).is_zero() {
                    continue;
                }
                let q = h.get(i, col).div_floor(h.get(pivot_row, col));
                add_row_multiple(&mut h, i, pivot_row, &-&q);
                add_row_multiple(&mut u, i, pivot_row, &-&q);
                if !h.get(i, col).is_zero() {
                    done = false;
                }
            }
            if done {
                break;
            }
        }
        if h.get(pivot_row, col).is_zero() {
            continue;
        }
        if h.get(pivot_row, col).is_negative() {
            negate_row(&mut h, pivot_row);
            negate_row(&mut u, pivot_row);
        }
        let pivot = h.get(pivot_row, col).clone();
        for i in 0..pivot_row {
            let q = h.get(i, col).div_floor(&pivot);
            if !q.is_zero() {
                add_row_multiple(&mut h, i, pivot_row, &-&q);
                add_row_multiple(&mut u, i, pivot_row, &-&q);
            }
        }
        pivot_row += 1;
    }
    (h, u)
}

fn add_row_multiple(m: &mut IntMat, target: usize, source: usize, factor: &Int) {
    for j in 0..m.ncols() {
        let v = m.get(target, j) + factor * m.get(source, j);
        m.set(target, j, v);
    }
}

fn negate_row(m: &mut IntMat, row: usize) {
    for j in 0..m.ncols() {
        let v = -m.get(row, j);
        m.set(row, j, v);
    }
}

/// Solves `a x = b` exactly for square `a`.
pub fn solve(a: &RatMat, b: &[Rat]) -> Result<RatVec> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut m = a.clone();
    let mut rhs = b.to_vec();
    for k in 0..n {
        let p = (k..n).find(|&i| !m.get(i, k).is_zero()).ok_or(Error::Singular)?;
        m.swap_rows(k, p);
        rhs.swap(k, p);
        let pivot = m.get(k, k).clone();
        for i in k + 1..n {
            if m.get(i, k).is_zero() {
                continue;
            }
            let f = m.get(i, k) / &pivot;
            for j in k..n {
                let v = m.get(i, j) - &f * m.get(k, j);
                m.set(i, j, v);
            }
            let v = &rhs[i] - &f * &rhs[k];
            rhs[i] = v;
        }
    }
    let mut x = vec![Rat::zero(); n];
    for k in (0..n).rev() {
        let mut acc = rhs[k].clone();
        for j in k + 1..n {
            acc -= m.get(k, j) * &x[j];
        }
        x[k] = acc / m.get(k, k);
    }
    Ok(x)
}

/// Exact inverse of a square rational matrix.
pub fn inverse(a: &RatMat) -> Result<RatMat> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::NotSquare {
            rows: n,
            cols: a.ncols(),
        });
    }
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let e: RatVec = (0..n)
            .map(|i| if i == j { Rat::one() } else { Rat::zero() })
            .collect();
        cols.push(solve(a, &e)?);
    }
    Ok(Matrix::from_rows(&cols)?.transpose())
}

/// Integer vector parallel to `v`, same direction, with coprime entries.
pub fn primitive(v: &[Rat]) -> Result<IntVec> {
    if v.iter().all(Zero::is_zero) {
        return Err(Error::ZeroVector);
    }
    let lcm = v.iter().fold(Int::one(), |l, x| l.lcm(x.denom()));
    let mut out: IntVec = v
        .iter()
        .map(|x| x.numer() * (&lcm / x.denom()))
        .collect();
    make_primitive(&mut out);
    Ok(out)
}

/// Rank of a list of integer vectors, by fraction-free elimination.
pub fn rank(vectors: &[IntVec]) -> usize {
    let Some(first) = vectors.first() else {
        return 0;
    };
    let cols = first.len();
    let mut rows: Vec<IntVec> = vectors.to_vec();
    let mut r = 0;
    for col in 0..cols {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let pivot = rows[r][col].clone();
        for i in r + 1..rows.len() {
            if rows[i][col].is_zero() {
                continue;
            }
            let f = rows[i][col].clone();
            for j in 0..cols {
                let v = &pivot * &rows[i][j] - &f * &rows[r][j];
                rows[i][j] = v;
            }
            make_primitive(&mut rows[i]);
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    r
}
