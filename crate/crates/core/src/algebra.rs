//! Dense complex matrices, random device generation, and validity metrics.
//!
//! The matrix type is a straightforward row-major buffer. Sizes in this
//! problem domain stay small (tens of modes), so the implementation favors
//! clarity over blocking or vectorization.
//!
//! Random unitaries are drawn from the Haar measure by orthonormalizing a
//! complex Ginibre matrix; random Bogoliubov pairs come from the singular
//! value form `U = W1 diag(cosh r) W2`, `V = W1 diag(sinh r) conj(W2)`,
//! which satisfies both defining constraints by construction.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scalar::Scalar;

/// Errors from matrix construction and matrix arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    /// A dimension argument was unusable (zero modes, wrong buffer length).
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    /// Operand shapes are incompatible for the requested operation.
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(usize, usize, usize, usize),
    /// A numeric parameter was out of range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type AlgebraResult<T> = Result<T, AlgebraError>;

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexMatrix<T> {
    /// Wraps a row-major buffer. The buffer length must equal `rows * cols`.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex<T>>) -> AlgebraResult<Self> {
        if entries.len() != rows * cols {
            return Err(AlgebraError::InvalidDimension(format!(
                "buffer of length {} cannot fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    /// Builds a matrix by evaluating `f(row, col)` at every position.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex<T>,
    ) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                entries.push(f(i, j));
            }
        }
        Self {
            rows,
            cols,
            entries,
        }
    }

    /// Square matrix with the given diagonal and zeros elsewhere.
    pub fn diagonal(diag: &[Complex<T>]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                diag[i]
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
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

    /// Row `i` as a contiguous slice.
    pub fn row(&self, i: usize) -> &[Complex<T>] {
        assert!(i < self.rows, "row {i} out of range for {} rows", self.rows);
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z.conj()).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn matmul(&self, other: &Self) -> AlgebraResult<Self> {
        if self.cols != other.rows {
            return Err(AlgebraError::ShapeMismatch(
                self.rows, self.cols, other.rows, other.cols,
            ));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, other: &Self) -> AlgebraResult<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> AlgebraResult<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> AlgebraResult<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(AlgebraError::ShapeMismatch(
                self.rows, self.cols, other.rows, other.cols,
            ));
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, factor: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&z| z * factor).collect(),
        }
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.entries
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), T::max)
    }

    pub fn all_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Max-norm of `M M\u{2020} - I`. Errors on non-square input.
    pub fn unitarity_residual(&self) -> AlgebraResult<T> {
        if !self.is_square() {
            return Err(AlgebraError::ShapeMismatch(
                self.rows, self.cols, self.cols, self.rows,
            ));
        }
        let gram = self.matmul(&self.adjoint())?;
        gram.sub(&Self::identity(self.rows)).map(|d| d.max_abs())
    }

    /// Frobenius norm.
    pub fn frobenius_norm(&self) -> T {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |acc, x| acc + x)
            .sqrt()
    }
}

impl<T> std::ops::Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = Complex<T>;

    fn index(&self, (i, j): (usize, usize)) -> &Complex<T> {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of range"
        );
        &self.entries[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for ComplexMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex<T> {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of range"
        );
        &mut self.entries[i * self.cols + j]
    }
}

// Matrices serialize as nested arrays of [re, im] pairs so device files stay
// readable and language-neutral.
impl<T: Scalar> Serialize for ComplexMatrix<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[T; 2]>> = (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de, T: Scalar> Deserialize<'de> for ComplexMatrix<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<[T; 2]>> = Vec::deserialize(deserializer)?;
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ncols) {
            return Err(D::Error::custom("matrix rows have unequal lengths"));
        }
        let entries = rows
            .into_iter()
            .flatten()
            .map(|[re, im]| Complex::new(re, im))
            .collect();
        ComplexMatrix::new(nrows, ncols, entries).map_err(D::Error::custom)
    }
}

/// Serde adapter for a bare complex number as a `[re, im]` pair.
pub mod complex_serde {
    use super::*;

    pub fn serialize<T: Scalar, S: Serializer>(
        z: &Complex<T>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(serializer)
    }

    pub fn deserialize<'de, T: Scalar, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Complex<T>, D::Error> {
        let [re, im] = <[T; 2]>::deserialize(deserializer)?;
        Ok(Complex::new(re, im))
    }
}

/// Frobenius distance `||a - b||_F`.
pub fn frobenius_distance<T: Scalar>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> AlgebraResult<T> {
    a.sub(b).map(|d| d.frobenius_norm())
}

/// Whether `||m m\u{2020} - I||_max <= tol`. Errors on non-square input.
pub fn is_unitary<T: Scalar>(m: &ComplexMatrix<T>, tol: T) -> AlgebraResult<bool> {
    Ok(m.unitarity_residual()? <= tol)
}

/// Draws an `n x n` unitary from the Haar measure, reproducibly from `seed`.
pub fn haar_random_unitary<T: Scalar>(n: usize, seed: u64) -> AlgebraResult<ComplexMatrix<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_with_rng(n, &mut rng)
}

fn gaussian_column<T: Scalar, R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Complex<T>> {
    // Complex standard normal: variance 1/2 per quadrature.
    let scale = (T::one() + T::one()).sqrt().recip();
    (0..n)
        .map(|_| {
            Complex::new(
                T::standard_normal(rng) * scale,
                T::standard_normal(rng) * scale,
            )
        })
        .collect()
}

/// Orthonormalizes the columns of a Ginibre draw. The Gram-Schmidt
/// coefficients of this factorization have positive real diagonal, which is
/// exactly the normalization that makes the result Haar distributed.
pub(crate) fn haar_with_rng<T: Scalar, R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> AlgebraResult<ComplexMatrix<T>> {
    if n == 0 {
        return Err(AlgebraError::InvalidDimension(
            "mode count must be at least 1".into(),
        ));
    }
    let mut cols: Vec<Vec<Complex<T>>> = (0..n).map(|_| gaussian_column(n, rng)).collect();
    let floor = T::min_positive_value().sqrt();
    for k in 0..n {
        loop {
            // Two projection sweeps keep orthogonality near machine epsilon.
            for _ in 0..2 {
                for j in 0..k {
                    let (head, tail) = cols.split_at_mut(k);
                    let q = &head[j];
                    let v = &mut tail[0];
                    let proj = q
                        .iter()
                        .zip(v.iter())
                        .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                            acc + a.conj() * b
                        });
                    for (vi, qi) in v.iter_mut().zip(q.iter()) {
                        *vi -= proj * qi;
                    }
                }
            }
            let norm = cols[k]
                .iter()
                .map(|z| z.norm_sqr())
                .fold(T::zero(), |acc, x| acc + x)
                .sqrt();
            if norm > floor {
                let inv = norm.recip();
                for z in cols[k].iter_mut() {
                    *z *= inv;
                }
                break;
            }
            // Degenerate draw; replace the column and retry.
            cols[k] = gaussian_column(n, rng);
        }
    }
    Ok(ComplexMatrix::from_fn(n, n, |i, j| cols[j][i]))
}

/// Draws a random Bogoliubov pair `(u, v)` with squeezing parameters uniform
/// on `[0, max_squeeze]`, reproducibly from `seed`.
///
/// The pair satisfies `u u\u{2020} - v v\u{2020} = I` and has symmetric `u v^T`.
/// With `max_squeeze = 0` the `v` part is exactly zero.
pub fn random_bogoliubov<T: Scalar>(
    n: usize,
    max_squeeze: T,
    seed: u64,
) -> AlgebraResult<(ComplexMatrix<T>, ComplexMatrix<T>)> {
    if n == 0 {
        return Err(AlgebraError::InvalidDimension(
            "mode count must be at least 1".into(),
        ));
    }
    if !(max_squeeze.is_finite() && max_squeeze >= T::zero()) {
        return Err(AlgebraError::InvalidParameter(
            "max_squeeze must be finite and non-negative".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w1 = haar_with_rng::<T, _>(n, &mut rng)?;
    let w2 = haar_with_rng::<T, _>(n, &mut rng)?;
    let r: Vec<T> = (0..n)
        .map(|_| T::uniform(&mut rng, T::zero(), max_squeeze))
        .collect();
    let cosh_diag: Vec<Complex<T>> = r
        .iter()
        .map(|&x| Complex::new(x.cosh(), T::zero()))
        .collect();
    let sinh_diag: Vec<Complex<T>> = r
        .iter()
        .map(|&x| Complex::new(x.sinh(), T::zero()))
        .collect();
    let u = w1
        .matmul(&ComplexMatrix::diagonal(&cosh_diag))?
        .matmul(&w2)?;
    let v = w1
        .matmul(&ComplexMatrix::diagonal(&sinh_diag))?
        .matmul(&w2.conj())?;
    Ok((u, v))
}
