//! Time evolution in the zero- and one-excitation subspace
//! `{|ψ₀⟩, |ψ₁⟩, …, |ψ_N⟩}`: closed-system state vectors, the Lindblad master
//! equation and quantum-jump trajectories.
//!
//! Index 0 is the all-ground state `|ψ₀⟩` with energy 0; index `n` holds a
//! single excitation on qubit `n`. Hamiltonians are supplied as their
//! `N × N` single-excitation block, since nothing couples `|ψ₀⟩` to it.
//!
//! Noise is relaxation `√(1/T1)·σₙ⁻` and pure dephasing `√(γ_φ/2)·σₙᶻ` on
//! every qubit, with `γ_φ = 1/T2* − 1/(2T1)`.

mod evolve;
mod integrator;
mod state;

pub use evolve::{
    evolve_coherences, evolve_lindblad, evolve_trajectories, evolve_unitary, Samples,
    TrajectoryAverage,
};
pub use state::{expectation_sigma_minus, DensityMatrix, QuantumState, SigmaMinus};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::modulation::InteractionHamiltonian;
use crate::numerics::{HermitianMatrix, NumericsError, Real, SparseHermitian};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("step size underflow at t = {t:e} s (problem too stiff for the tolerances)")]
    StepUnderflow { t: f64 },
    #[error("integration produced non-finite values near t = {t:e} s")]
    NonFinite { t: f64 },
    #[error("state dimension {state} does not match Hamiltonian block {block} + 1")]
    DimensionMismatch { state: usize, block: usize },
    #[error("state is not normalised (‖ψ‖² = {0})")]
    NotNormalized(f64),
    #[error("site {site} outside 1..={qubits}")]
    SiteOutOfRange { site: usize, qubits: usize },
    #[error("invalid time grid: {0}")]
    BadGrid(&'static str),
    #[error("invalid noise: {0}")]
    BadNoise(&'static str),
    #[error("trajectory count must be positive")]
    ZeroTrajectories,
    #[error("invalid density matrix: {0}")]
    BadDensity(&'static str),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Time-dependent single-excitation block `H(t)`.
///
/// Implementations must be pure: concurrent tasks share one source.
pub trait HamiltonianSource<T: Real>: Sync {
    fn qubits(&self) -> usize;

    /// `H(t)`; implementations may build it in `scratch` or return their own
    /// storage.
    fn at<'a>(&'a self, t: T, scratch: &'a mut SparseHermitian<T>) -> &'a SparseHermitian<T>;
}

/// Time-independent Hamiltonian.
#[derive(Clone, Debug, PartialEq)]
pub struct StaticHamiltonian<T> {
    h: SparseHermitian<T>,
}

impl<T: Real> StaticHamiltonian<T> {
    pub fn new(h: &HermitianMatrix<T>) -> Self {
        Self {
            h: SparseHermitian::from_dense(h),
        }
    }

    /// Uncoupled qubits, `H = 0`.
    pub fn zeros(qubits: usize) -> Self {
        Self {
            h: SparseHermitian::zeros(qubits),
        }
    }
}

impl<T: Real> HamiltonianSource<T> for StaticHamiltonian<T> {
    fn qubits(&self) -> usize {
        self.h.dim()
    }

    fn at<'a>(&'a self, _t: T, _scratch: &'a mut SparseHermitian<T>) -> &'a SparseHermitian<T> {
        &self.h
    }
}

impl<T: Real> HamiltonianSource<T> for InteractionHamiltonian<T> {
    fn qubits(&self) -> usize {
        InteractionHamiltonian::qubits(self)
    }

    fn at<'a>(&'a self, t: T, scratch: &'a mut SparseHermitian<T>) -> &'a SparseHermitian<T> {
        self.fill(t, scratch);
        scratch
    }
}

/// Relaxation and dephasing times in seconds; infinite means absent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec<T> {
    t1: T,
    t2_star: T,
}

impl<T: Real> NoiseSpec<T> {
    pub fn new(t1: T, t2_star: T) -> Result<Self, DynamicsError> {
        if t1.is_nan() || t2_star.is_nan() || !(t1 > T::zero()) || !(t2_star > T::zero()) {
            return Err(DynamicsError::BadNoise("T1 and T2* must be positive"));
        }
        if t2_star > T::lit(2.0) * t1 {
            return Err(DynamicsError::BadNoise("T2* must not exceed 2·T1"));
        }
        Ok(Self { t1, t2_star })
    }

    /// No relaxation and no dephasing.
    pub fn none() -> Self {
        Self {
            t1: T::infinity(),
            t2_star: T::infinity(),
        }
    }

    pub fn t1(&self) -> T {
        self.t1
    }

    pub fn t2_star(&self) -> T {
        self.t2_star
    }

    /// `1/T1`.
    pub fn gamma1(&self) -> T {
        T::one() / self.t1
    }

    /// Pure dephasing rate `1/T2* − 1/(2T1)`.
    pub fn gamma_phi(&self) -> T {
        (T::one() / self.t2_star - T::lit(0.5) / self.t1).max(T::zero())
    }

    pub fn is_noiseless(&self) -> bool {
        self.gamma1() == T::zero() && self.gamma_phi() == T::zero()
    }
}

/// Sampling grid and integrator tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid<T> {
    t_end: T,
    dt_sample: T,
    rtol: T,
    atol: T,
    max_step: T,
}

impl<T: Real> TimeGrid<T> {
    pub const DEFAULT_RTOL: f64 = 1e-8;
    pub const DEFAULT_ATOL: f64 = 1e-10;

    /// Default tolerances; the step cap equals the sample spacing.
    pub fn new(t_end: T, dt_sample: T) -> Result<Self, DynamicsError> {
        Self::with_settings(
            t_end,
            dt_sample,
            T::lit(Self::DEFAULT_RTOL),
            T::lit(Self::DEFAULT_ATOL),
            dt_sample,
        )
    }

    pub fn with_settings(t_end: T, dt_sample: T, rtol: T, atol: T, max_step: T) -> Result<Self, DynamicsError> {
        let all = [t_end, dt_sample, rtol, atol, max_step];
        if all.iter().any(|x| !x.is_finite() || !(*x > T::zero())) {
            return Err(DynamicsError::BadGrid("all grid parameters must be positive and finite"));
        }
        if dt_sample > t_end {
            return Err(DynamicsError::BadGrid("dt_sample exceeds t_end"));
        }
        Ok(Self {
            t_end,
            dt_sample,
            rtol,
            atol,
            max_step,
        })
    }

    /// Caps the step at `1/(20·f_max)` for a largest drive frequency
    /// `nu_max` (angular).
    pub fn resolving(self, nu_max: T) -> Result<Self, DynamicsError> {
        let cap = T::TAU() / (T::lit(20.0) * nu_max);
        Self::with_settings(self.t_end, self.dt_sample, self.rtol, self.atol, self.max_step.min(cap))
    }

    pub fn t_end(&self) -> T {
        self.t_end
    }

    pub fn dt_sample(&self) -> T {
        self.dt_sample
    }

    pub fn rtol(&self) -> T {
        self.rtol
    }

    pub fn atol(&self) -> T {
        self.atol
    }

    pub fn max_step(&self) -> T {
        self.max_step
    }

    /// `round(t_end / dt_sample)` samples at `k·dt_sample`, starting at 0.
    pub fn len(&self) -> usize {
        (self.t_end / self.dt_sample).round().to_f64_lossy() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn times(&self) -> Vec<T> {
        (0..self.len()).map(|k| T::from_usize_lossy(k) * self.dt_sample).collect()
    }
}

/// Trajectory count and master seed; trajectory `i` uses stream `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub count: usize,
    pub seed: u64,
}

impl TrajectoryConfig {
    pub fn new(count: usize, seed: u64) -> Result<Self, DynamicsError> {
        if count == 0 {
            return Err(DynamicsError::ZeroTrajectories);
        }
        Ok(Self { count, seed })
    }
}
