use num_complex::Complex;

use super::DynamicsError;
use crate::numerics::{eigvals_hermitian, ComplexVector, HermitianMatrix, Real};

/// Pure state in the `N + 1`-dimensional subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState<T> {
    amplitudes: ComplexVector<T>,
}

impl<T: Real> QuantumState<T> {
    /// Tolerance on `‖ψ‖²` accepted by [`Self::new`].
    pub const NORM_TOL: f64 = 1e-10;

    pub fn new(amplitudes: ComplexVector<T>) -> Result<Self, DynamicsError> {
        if !amplitudes.is_normalized(T::lit(Self::NORM_TOL)) {
            return Err(DynamicsError::NotNormalized(amplitudes.norm_sqr().to_f64_lossy()));
        }
        Ok(Self { amplitudes })
    }

    pub(crate) fn from_raw(amplitudes: Vec<Complex<T>>) -> Self {
        Self {
            amplitudes: ComplexVector::new(amplitudes).expect("integrator output is finite and non-empty"),
        }
    }

    /// `|ψ₀⟩` for `qubits` qubits.
    pub fn ground(qubits: usize) -> Self {
        Self {
            amplitudes: ComplexVector::basis(qubits + 1, 0),
        }
    }

    /// `|ψ_site⟩`.
    pub fn excitation(qubits: usize, site: usize) -> Result<Self, DynamicsError> {
        check_site(site, qubits)?;
        Ok(Self {
            amplitudes: ComplexVector::basis(qubits + 1, site),
        })
    }

    /// `(|ψ₀⟩ + |ψ_site⟩)/√2`.
    pub fn superposition(qubits: usize, site: usize) -> Result<Self, DynamicsError> {
        check_site(site, qubits)?;
        let mut v = vec![Complex::new(T::zero(), T::zero()); qubits + 1];
        let a = Complex::new(T::FRAC_1_SQRT_2(), T::zero());
        v[0] = a;
        v[site] = a;
        Ok(Self {
            amplitudes: ComplexVector::new(v).expect("finite"),
        })
    }

    pub fn qubits(&self) -> usize {
        self.amplitudes.dim() - 1
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        self.amplitudes.as_slice()
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.norm_sqr()
    }
}

pub(crate) fn check_site(site: usize, qubits: usize) -> Result<(), DynamicsError> {
    if site == 0 || site > qubits {
        Err(DynamicsError::SiteOutOfRange { site, qubits })
    } else {
        Ok(())
    }
}

/// Row-major `(N + 1) × (N + 1)` density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    dim: usize,
    entries: Vec<Complex<T>>,
}

impl<T: Real> DensityMatrix<T> {
    /// Checks Hermiticity and unit trace within `tol`.
    pub fn new(dim: usize, entries: Vec<Complex<T>>, tol: T) -> Result<Self, DynamicsError> {
        if dim < 2 || entries.len() != dim * dim {
            return Err(DynamicsError::BadDensity("shape must be (N+1)² with N ≥ 1"));
        }
        let rho = Self { dim, entries };
        if !rho.entries.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(DynamicsError::BadDensity("non-finite entry"));
        }
        if rho.hermiticity_error() > tol {
            return Err(DynamicsError::BadDensity("not Hermitian"));
        }
        if (rho.trace().re - T::one()).abs() > tol {
            return Err(DynamicsError::BadDensity("trace differs from 1"));
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(dim: usize, entries: Vec<Complex<T>>) -> Self {
        Self { dim, entries }
    }

    /// `|ψ⟩⟨ψ|`.
    pub fn from_pure(state: &QuantumState<T>) -> Self {
        let a = state.amplitudes();
        let dim = a.len();
        let mut entries = Vec::with_capacity(dim * dim);
        for x in a {
            for y in a {
                entries.push(x * y.conj());
            }
        }
        Self { dim, entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn qubits(&self) -> usize {
        self.dim - 1
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.entries[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.entries
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self.get(i, i))
    }

    /// `max |ρ_ij − ρ_ji*|`.
    pub fn hermiticity_error(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> Result<T, DynamicsError> {
        let mut sym = self.entries.clone();
        for i in 0..self.dim {
            for j in 0..self.dim {
                sym[i * self.dim + j] = (self.get(i, j) + self.get(j, i).conj()) * T::lit(0.5);
            }
        }
        let h = HermitianMatrix::from_rows(self.dim, &sym, T::lit(1e-12))?;
        Ok(eigvals_hermitian(&h)?[0])
    }

    /// Excited-state population of qubit `site`.
    pub fn population(&self, site: usize) -> Result<T, DynamicsError> {
        check_site(site, self.qubits())?;
        Ok(self.get(site, site).re)
    }
}

/// Expectation value of the lowering operator `σₙ⁻`.
///
/// The result is `ψ₀*·ψₙ` (pure) or `ρ_{n0}` (mixed), so a single-excitation
/// energy `E` appears as `e^{−iEt}` and lands at `+E/2π` on the spectrum axis.
pub trait SigmaMinus<T: Real> {
    fn sigma_minus(&self, site: usize) -> Result<Complex<T>, DynamicsError>;
}

impl<T: Real> SigmaMinus<T> for QuantumState<T> {
    fn sigma_minus(&self, site: usize) -> Result<Complex<T>, DynamicsError> {
        check_site(site, self.qubits())?;
        let a = self.amplitudes();
        Ok(a[site] * a[0].conj() / self.norm_sqr())
    }
}

impl<T: Real> SigmaMinus<T> for DensityMatrix<T> {
    fn sigma_minus(&self, site: usize) -> Result<Complex<T>, DynamicsError> {
        check_site(site, self.qubits())?;
        Ok(self.get(site, 0))
    }
}

pub fn expectation_sigma_minus<T: Real, S: SigmaMinus<T>>(state: &S, site: usize) -> Result<Complex<T>, DynamicsError> {
    state.sigma_minus(site)
}
