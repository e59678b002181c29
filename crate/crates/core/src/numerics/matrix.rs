use std::ops::Index;

use num_complex::Complex;

use super::scalar::{all_finite, czero, Real};
use super::NumericsError;

/// Dense complex vector; state amplitudes live here.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector<T> {
    entries: Vec<Complex<T>>,
}

impl<T: Real> ComplexVector<T> {
    pub fn new(entries: Vec<Complex<T>>) -> Result<Self, NumericsError> {
        if entries.is_empty() {
            return Err(NumericsError::Empty);
        }
        if !all_finite(&entries) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self { entries })
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "vector dimension must be positive");
        Self {
            entries: vec![czero(); dim],
        }
    }

    /// Unit vector along `index`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.entries[index] = Complex::new(T::one(), T::zero());
        v
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.entries
    }

    pub fn into_vec(self) -> Vec<Complex<T>> {
        self.entries
    }

    pub fn norm_sqr(&self) -> T {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    /// `⟨self|other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        assert_eq!(self.dim(), other.dim(), "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .fold(czero(), |acc, (a, b)| acc + a.conj() * b)
    }

    pub fn normalize(&mut self) -> Result<(), NumericsError> {
        let n = self.norm_sqr().sqrt();
        if n <= T::zero() || !n.is_finite() {
            return Err(NumericsError::ZeroNorm);
        }
        let inv = T::one() / n;
        for z in &mut self.entries {
            *z = *z * inv;
        }
        Ok(())
    }

    /// True when `|‖v‖² − 1| ≤ tol`.
    pub fn is_normalized(&self, tol: T) -> bool {
        (self.norm_sqr() - T::one()).abs() <= tol
    }
}

impl<T> Index<usize> for ComplexVector<T> {
    type Output = Complex<T>;
    fn index(&self, i: usize) -> &Complex<T> {
        &self.entries[i]
    }
}

/// Dense Hermitian matrix, row-major.
///
/// The only mutators write an upper-triangle entry together with its mirror
/// image, so `entry(i, j) == entry(j, i).conj()` holds bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix<T> {
    dim: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Real> HermitianMatrix<T> {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self {
            dim,
            entries: vec![czero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set_diagonal(i, T::one());
        }
        m
    }

    /// Builds from a full row-major matrix, reading only the upper triangle
    /// and rejecting inputs whose lower triangle disagrees by more than `tol`.
    pub fn from_rows(dim: usize, rows: &[Complex<T>], tol: T) -> Result<Self, NumericsError> {
        if dim == 0 || rows.len() != dim * dim {
            return Err(NumericsError::Shape {
                expected: dim * dim,
                got: rows.len(),
            });
        }
        if !all_finite(rows) {
            return Err(NumericsError::NonFinite);
        }
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in i..dim {
                let upper = rows[i * dim + j];
                let lower = rows[j * dim + i];
                if (upper - lower.conj()).norm() > tol {
                    return Err(NumericsError::NotHermitian { row: i, col: j });
                }
                if i == j {
                    m.set_diagonal(i, upper.re);
                } else {
                    m.set(i, j, upper);
                }
            }
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.entries[i * self.dim + j]
    }

    pub fn set_diagonal(&mut self, i: usize, value: T) {
        self.entries[i * self.dim + i] = Complex::new(value, T::zero());
    }

    /// Sets `(i, j)` to `value` and `(j, i)` to its conjugate; `i != j`.
    pub fn set(&mut self, i: usize, j: usize, value: Complex<T>) {
        assert_ne!(i, j, "use set_diagonal for diagonal entries");
        self.entries[i * self.dim + j] = value;
        self.entries[j * self.dim + i] = value.conj();
    }

    /// Adds `value` to `(i, j)` and its conjugate to `(j, i)`; on the diagonal
    /// only the real part `2·Re(value)` survives, which is what `X + X†` gives.
    pub fn add_hopping(&mut self, i: usize, j: usize, value: Complex<T>) {
        if i == j {
            let d = i * self.dim + i;
            self.entries[d].re += value.re + value.re;
            return;
        }
        let a = i * self.dim + j;
        let b = j * self.dim + i;
        self.entries[a] += value;
        self.entries[b] = self.entries[a].conj();
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|i| self.get(i, i).re).sum()
    }

    pub fn max_abs(&self) -> T {
        self.entries.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        all_finite(&self.entries)
    }

    pub fn mul_vec(&self, x: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(x.len(), self.dim, "dimension mismatch");
        self.entries
            .chunks_exact(self.dim)
            .map(|row| row.iter().zip(x).fold(czero(), |acc, (a, b)| acc + a * b))
            .collect()
    }

    pub fn scale(&mut self, factor: T) {
        for z in &mut self.entries {
            *z = *z * factor;
        }
    }

    /// `D H D†` for the diagonal unitary `D = diag(phases)`.
    pub fn conjugate_by_diagonal(&self, phases: &[Complex<T>]) -> Self {
        assert_eq!(phases.len(), self.dim, "dimension mismatch");
        let mut out = self.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.entries[i * self.dim + j] = phases[i] * self.get(i, j) * phases[j].conj();
            }
        }
        out
    }

    /// Largest entrywise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(T::zero(), T::max)
    }
}

/// Sparse Hermitian operator: real diagonal plus upper-triangle links.
///
/// Used on hot paths of the integrators, where the zigzag coupling graph has
/// at most four neighbours per site.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseHermitian<T> {
    dim: usize,
    diagonal: Vec<T>,
    /// `(i, j, ⟨i|H|j⟩)` with `i < j`.
    links: Vec<(usize, usize, Complex<T>)>,
}

impl<T: Real> SparseHermitian<T> {
    pub fn new(dim: usize, diagonal: Vec<T>, links: Vec<(usize, usize, Complex<T>)>) -> Self {
        assert_eq!(diagonal.len(), dim, "diagonal length must equal dim");
        for &(i, j, _) in &links {
            assert!(i < j && j < dim, "links must be strictly upper triangular");
        }
        Self {
            dim,
            diagonal,
            links,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::new(dim, vec![T::zero(); dim], Vec::new())
    }

    /// Keeps every structurally nonzero entry of a dense matrix.
    pub fn from_dense(h: &HermitianMatrix<T>) -> Self {
        let dim = h.dim();
        let diagonal = (0..dim).map(|i| h.get(i, i).re).collect();
        let mut links = Vec::new();
        for i in 0..dim {
            for j in i + 1..dim {
                let v = h.get(i, j);
                if v.re != T::zero() || v.im != T::zero() {
                    links.push((i, j, v));
                }
            }
        }
        Self::new(dim, diagonal, links)
    }

    pub fn to_dense(&self) -> HermitianMatrix<T> {
        let mut h = HermitianMatrix::zeros(self.dim);
        for (i, &d) in self.diagonal.iter().enumerate() {
            h.set_diagonal(i, d);
        }
        for &(i, j, v) in &self.links {
            h.add_hopping(i, j, v);
        }
        h
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diagonal
    }

    pub fn diagonal_mut(&mut self) -> &mut [T] {
        &mut self.diagonal
    }

    pub fn links(&self) -> &[(usize, usize, Complex<T>)] {
        &self.links
    }

    pub fn links_mut(&mut self) -> &mut [(usize, usize, Complex<T>)] {
        &mut self.links
    }

    /// `out[offset + i] += scale · (H x[offset..])_i`.
    ///
    /// `offset` lets the single-excitation block act inside a larger vector.
    #[inline]
    pub fn apply_add(
        &self,
        scale: Complex<T>,
        x: &[Complex<T>],
        out: &mut [Complex<T>],
        offset: usize,
    ) {
        for (i, &d) in self.diagonal.iter().enumerate() {
            if d != T::zero() {
                out[offset + i] += scale * x[offset + i] * d;
            }
        }
        for &(i, j, v) in &self.links {
            out[offset + i] += scale * v * x[offset + j];
            out[offset + j] += scale * v.conj() * x[offset + i];
        }
    }
}
