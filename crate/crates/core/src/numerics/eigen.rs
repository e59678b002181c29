//! Dense Hermitian eigensolver.
//!
//! Householder reduction to a complex tridiagonal form, a diagonal phase
//! similarity that makes the tridiagonal real symmetric, then implicit QL
//! with Wilkinson shifts. Eigenvectors are accumulated only when requested.

use num_complex::Complex;

use super::matrix::{ComplexVector, HermitianMatrix};
use super::scalar::{czero, Real};
use super::NumericsError;

const MAX_QL_ITERATIONS: usize = 60;

/// Spectrum and orthonormal eigenbasis of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct EigenDecomposition<T> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    /// `eigenvectors[j]` pairs with `eigenvalues[j]`.
    pub eigenvectors: Vec<ComplexVector<T>>,
}

impl<T: Real> EigenDecomposition<T> {
    /// `V diag(E) V†`.
    pub fn reconstruct(&self) -> HermitianMatrix<T> {
        let n = self.eigenvalues.len();
        let mut rows = vec![czero(); n * n];
        for (e, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let v = v.as_slice();
            for i in 0..n {
                let vi = v[i] * *e;
                for j in 0..n {
                    rows[i * n + j] += vi * v[j].conj();
                }
            }
        }
        HermitianMatrix::from_rows(n, &rows, T::infinity()).expect("square by construction")
    }
}

/// Full spectrum and eigenvectors of `h`.
pub fn eig_hermitian<T: Real>(h: &HermitianMatrix<T>) -> Result<EigenDecomposition<T>, NumericsError> {
    if !h.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let n = h.dim();
    let tri = tridiagonalize(h, true);
    let (mut d, mut e) = (tri.diagonal, tri.off_diagonal_abs);
    // Rows of `z` are eigenvectors of the real tridiagonal.
    let mut z: Vec<T> = vec![T::zero(); n * n];
    for i in 0..n {
        z[i * n + i] = T::one();
    }
    ql_implicit(&mut d, &mut e, Some(&mut z))?;

    let q = tri.q.expect("requested");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    for &j in &order {
        eigenvalues.push(d[j]);
        let zj = &z[j * n..(j + 1) * n];
        let mut v = vec![czero::<T>(); n];
        for (r, out) in v.iter_mut().enumerate() {
            let qrow = &q[r * n..(r + 1) * n];
            let mut acc = czero::<T>();
            for i in 0..n {
                acc += qrow[i] * zj[i];
            }
            *out = acc;
        }
        eigenvectors.push(ComplexVector::new(v)?);
    }
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

/// Ascending eigenvalues only; skips all vector accumulation.
pub fn eigvals_hermitian<T: Real>(h: &HermitianMatrix<T>) -> Result<Vec<T>, NumericsError> {
    if !h.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let tri = tridiagonalize(h, false);
    let (mut d, mut e) = (tri.diagonal, tri.off_diagonal_abs);
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
    Ok(d)
}

struct Tridiagonal<T> {
    diagonal: Vec<T>,
    /// `|e_i|` between `i` and `i + 1`; last entry is zero.
    off_diagonal_abs: Vec<T>,
    /// `Q·D` (row-major) such that `(QD)† H (QD)` is the real tridiagonal.
    q: Option<Vec<Complex<T>>>,
}

fn tridiagonalize<T: Real>(h: &HermitianMatrix<T>, want_q: bool) -> Tridiagonal<T> {
    let n = h.dim();
    let mut a: Vec<Complex<T>> = h.as_slice().to_vec();
    let mut q: Option<Vec<Complex<T>>> = want_q.then(|| {
        let mut m = vec![czero(); n * n];
        for i in 0..n {
            m[i * n + i] = Complex::new(T::one(), T::zero());
        }
        m
    });
    let two = T::lit(2.0);
    let mut v = vec![czero::<T>(); n];
    let mut p = vec![czero::<T>(); n];

    for k in 0..n.saturating_sub(2) {
        let m = n - k - 1;
        let x = |a: &[Complex<T>], i: usize| a[(k + 1 + i) * n + k];
        let norm = (0..m).map(|i| x(&a, i).norm_sqr()).sum::<T>().sqrt();
        let tail = (1..m).map(|i| x(&a, i).norm_sqr()).sum::<T>();
        if norm == T::zero() || tail == T::zero() {
            continue;
        }
        let x0 = x(&a, 0);
        let x0_abs = x0.norm();
        let phase = if x0_abs > T::zero() {
            x0 / x0_abs
        } else {
            Complex::new(T::one(), T::zero())
        };
        let alpha = -phase * norm;
        for i in 0..m {
            v[i] = x(&a, i);
        }
        v[0] -= alpha;
        let vnorm = (0..m).map(|i| v[i].norm_sqr()).sum::<T>().sqrt();
        if vnorm == T::zero() {
            continue;
        }
        for vi in v.iter_mut().take(m) {
            *vi = *vi / vnorm;
        }

        // Trailing block B ← P B P with P = I − 2 v v†.
        let off = k + 1;
        for i in 0..m {
            let row = &a[(off + i) * n + off..(off + i) * n + n];
            p[i] = row.iter().zip(&v[..m]).fold(czero(), |acc, (b, vj)| acc + b * vj);
        }
        let kk: T = (0..m).map(|i| (v[i].conj() * p[i]).re).sum();
        for i in 0..m {
            p[i] -= v[i] * kk;
        }
        for i in 0..m {
            let (vi, wi) = (v[i], p[i]);
            let row = &mut a[(off + i) * n + off..(off + i) * n + n];
            for j in 0..m {
                row[j] -= (vi * p[j].conj() + wi * v[j].conj()) * two;
            }
        }
        a[off * n + k] = alpha;
        a[k * n + off] = alpha.conj();
        for i in 1..m {
            a[(off + i) * n + k] = czero();
            a[k * n + off + i] = czero();
        }

        if let Some(q) = q.as_mut() {
            for r in 0..n {
                let row = &mut q[r * n + off..r * n + n];
                let s = row.iter().zip(&v[..m]).fold(czero(), |acc, (qr, vj)| acc + qr * vj) * two;
                for j in 0..m {
                    row[j] -= s * v[j].conj();
                }
            }
        }
    }

    let diagonal: Vec<T> = (0..n).map(|i| a[i * n + i].re).collect();
    let mut off_diagonal_abs = vec![T::zero(); n];
    let mut phases = vec![Complex::new(T::one(), T::zero()); n];
    for i in 0..n.saturating_sub(1) {
        let e = a[(i + 1) * n + i];
        let mag = e.norm();
        off_diagonal_abs[i] = mag;
        phases[i + 1] = if mag > T::zero() {
            phases[i] * (e / mag)
        } else {
            phases[i]
        };
    }
    if let Some(q) = q.as_mut() {
        for r in 0..n {
            for (c, ph) in phases.iter().enumerate() {
                q[r * n + c] *= ph;
            }
        }
    }
    Tridiagonal {
        diagonal,
        off_diagonal_abs,
        q,
    }
}

/// Implicit QL on a real symmetric tridiagonal. `z` holds one eigenvector per
/// row and is rotated alongside.
fn ql_implicit<T: Real>(d: &mut [T], e: &mut [T], mut z: Option<&mut [T]>) -> Result<(), NumericsError> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(NumericsError::NoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for k in 0..n {
                        let f = zi1[k];
                        zi1[k] = s * zi[k] + c * f;
                        zi[k] = c * zi[k] - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}
