//! Frequency-modulated qubit chain: drive schedules, closed-form effective
//! couplings and the exact interaction-picture Hamiltonian.
//!
//! Qubit `n` (1-based) has frequency `ω̄ₙ + εₙ cos(νₙ t + θₙ)`. Qubits repeat
//! with period three, and the three modulation frequencies bridge the three
//! detunings by a first-order sideband:
//!
//! ```text
//! ν₁ = ω̄₁ − ω̄₃,   ν₂ = ω̄₁ − ω̄₂,   ν₃ = ω̄₂ − ω̄₃
//! ```
//!
//! In the interaction picture the coupling between qubits `m` and `n` is
//! `g·e^{i[χ_m(t) − χ_n(t)]}` with
//! `χₙ(t) = ω̄ₙ t + αₙ[sin(νₙ t + θₙ) − sin θₙ]` and `αₙ = εₙ/νₙ`.
//! Its time average is the zigzag Hamiltonian with `J = g·J₀(α)·J₁(α)`, up to
//! the constant diagonal gauge `diag(e^{−iαₙ sin θₙ})` introduced by the
//! anchoring term.

use num_complex::Complex;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::numerics::{bessel_j01, cis, HermitianMatrix, Real, SparseHermitian};

/// Largest accepted modulation index (below the first zero of `J₀`).
pub const ALPHA_MAX: f64 = 1.8;
/// Default lower bound on `min|Δ_mn| / g`.
pub const DEFAULT_DETUNING_RATIO: f64 = 10.0;
/// Relative tolerance on the sideband-matching identities.
pub const SIDEBAND_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModulationError {
    #[error("need at least 3 qubits, got {0}")]
    TooFewQubits(usize),
    #[error("coupling g must be positive and finite, got {0}")]
    BadCoupling(f64),
    #[error("inconsistent modulation frequencies: ν₁ = {nu1:e} but ν₂ + ν₃ = {sum:e}")]
    InconsistentFrequencies { nu1: f64, sum: f64 },
    #[error("ν{index} = {nu:e} does not match its detuning {detuning:e}")]
    SidebandMismatch { index: usize, nu: f64, detuning: f64 },
    #[error("modulation frequencies must be positive, got ν{index} = {nu:e}")]
    NonPositiveFrequency { index: usize, nu: f64 },
    #[error("alpha = {0} outside [0, 1.8]")]
    AlphaOutOfRange(f64),
    #[error("expected {expected} per-qubit values, got {got}")]
    WrongLength { expected: usize, got: usize },
    #[error("non-finite drive parameter")]
    NonFinite,
}

/// Non-fatal schedule diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ScheduleWarning {
    /// `min|Δ_mn|/g` below the configured ratio; the effective model degrades.
    WeakDetuning { ratio: f64, threshold: f64 },
}

/// Qubit count and bare exchange coupling (angular frequency).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeviceSpec<T> {
    qubits: usize,
    g: T,
}

impl<T: Real> DeviceSpec<T> {
    pub fn new(qubits: usize, g: T) -> Result<Self, ModulationError> {
        if qubits < 3 {
            return Err(ModulationError::TooFewQubits(qubits));
        }
        if !g.is_finite() || !(g > T::zero()) {
            return Err(ModulationError::BadCoupling(g.to_f64_lossy()));
        }
        Ok(Self { qubits, g })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn g(&self) -> T {
        self.g
    }
}

/// Central and modulation frequencies of the three qubit types (angular).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrequencyPlan<T> {
    omega_bar: [T; 3],
    nu: [T; 3],
}

impl<T: Real> FrequencyPlan<T> {
    /// Checks `ν₁ = ν₂ + ν₃` and that each `ν` equals its detuning.
    pub fn new(omega_bar: [T; 3], nu: [T; 3]) -> Result<Self, ModulationError> {
        if omega_bar.iter().chain(&nu).any(|x| !x.is_finite()) {
            return Err(ModulationError::NonFinite);
        }
        for (i, &v) in nu.iter().enumerate() {
            if !(v > T::zero()) {
                return Err(ModulationError::NonPositiveFrequency {
                    index: i + 1,
                    nu: v.to_f64_lossy(),
                });
            }
        }
        let tol = T::lit(SIDEBAND_TOL) * nu[0];
        if (nu[0] - (nu[1] + nu[2])).abs() > tol {
            return Err(ModulationError::InconsistentFrequencies {
                nu1: nu[0].to_f64_lossy(),
                sum: (nu[1] + nu[2]).to_f64_lossy(),
            });
        }
        let detunings = [
            omega_bar[0] - omega_bar[2],
            omega_bar[0] - omega_bar[1],
            omega_bar[1] - omega_bar[2],
        ];
        for (i, (&v, &d)) in nu.iter().zip(&detunings).enumerate() {
            if (v - d).abs() > tol {
                return Err(ModulationError::SidebandMismatch {
                    index: i + 1,
                    nu: v.to_f64_lossy(),
                    detuning: d.to_f64_lossy(),
                });
            }
        }
        Ok(Self { omega_bar, nu })
    }

    /// Derives `ω̄₂ = ω̄₁ − ν₂` and `ω̄₃ = ω̄₁ − ν₁` after checking `ν₁ = ν₂ + ν₃`.
    pub fn from_modulation(omega1: T, nu: [T; 3]) -> Result<Self, ModulationError> {
        Self::new([omega1, omega1 - nu[1], omega1 - nu[0]], nu)
    }

    pub fn omega_bar(&self) -> [T; 3] {
        self.omega_bar
    }

    pub fn nu(&self) -> [T; 3] {
        self.nu
    }

    /// `min(|Δ₁₂|, |Δ₂₃|, |Δ₁₃|)`.
    pub fn min_detuning(&self) -> T {
        let [a, b, c] = self.omega_bar;
        (a - b).abs().min((b - c).abs()).min((a - c).abs())
    }

    /// Largest modulation frequency.
    pub fn nu_max(&self) -> T {
        self.nu.iter().copied().fold(T::zero(), T::max)
    }
}

/// Qubit type `1, 2, 3` of 1-based site `n`.
#[inline]
pub fn qubit_type(n: usize) -> usize {
    (n - 1) % 3 + 1
}

/// Initial modulation phase that imprints link phase `φ` on site `n`.
pub fn phase_rule<T: Real>(n: usize, phi: T) -> T {
    let nf = T::from_usize_lossy(n);
    if qubit_type(n) == 1 {
        T::PI() - nf * phi
    } else {
        nf * phi
    }
}

/// Per-qubit drive parameters, index `n − 1` for qubit `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriveSchedule<T> {
    omega_bar: Vec<T>,
    epsilon: Vec<T>,
    nu: Vec<T>,
    theta: Vec<T>,
    alpha: Vec<T>,
    phi: T,
    warnings: Vec<ScheduleWarning>,
}

/// Builds the period-3 schedule for link phase `phi` with uniform `alpha`.
///
/// A detuning below `detuning_ratio·g` is reported in
/// [`DriveSchedule::warnings`] rather than rejected.
pub fn make_schedule<T: Real>(
    device: &DeviceSpec<T>,
    phi: T,
    alpha: T,
    plan: &FrequencyPlan<T>,
    detuning_ratio: T,
) -> Result<DriveSchedule<T>, ModulationError> {
    if !phi.is_finite() || !detuning_ratio.is_finite() {
        return Err(ModulationError::NonFinite);
    }
    check_alpha(alpha)?;
    let n = device.qubits();
    let omega_bar = (1..=n).map(|k| plan.omega_bar[qubit_type(k) - 1]).collect();
    let nu: Vec<T> = (1..=n).map(|k| plan.nu[qubit_type(k) - 1]).collect();
    let theta = (1..=n).map(|k| phase_rule(k, phi)).collect();
    let mut warnings = Vec::new();
    let ratio = plan.min_detuning() / device.g();
    if ratio < detuning_ratio * (T::one() - T::lit(SIDEBAND_TOL)) {
        warnings.push(ScheduleWarning::WeakDetuning {
            ratio: ratio.to_f64_lossy(),
            threshold: detuning_ratio.to_f64_lossy(),
        });
    }
    Ok(DriveSchedule {
        epsilon: nu.iter().map(|&v| alpha * v).collect(),
        alpha: vec![alpha; n],
        omega_bar,
        nu,
        theta,
        phi,
        warnings,
    })
}

fn check_alpha<T: Real>(alpha: T) -> Result<(), ModulationError> {
    if !alpha.is_finite() || alpha < T::zero() || alpha > T::lit(ALPHA_MAX) {
        return Err(ModulationError::AlphaOutOfRange(alpha.to_f64_lossy()));
    }
    Ok(())
}

impl<T: Real> DriveSchedule<T> {
    pub fn qubits(&self) -> usize {
        self.theta.len()
    }

    pub fn omega_bar(&self) -> &[T] {
        &self.omega_bar
    }

    pub fn epsilon(&self) -> &[T] {
        &self.epsilon
    }

    pub fn nu(&self) -> &[T] {
        &self.nu
    }

    pub fn theta(&self) -> &[T] {
        &self.theta
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    /// Link phase the schedule was built for.
    pub fn phi(&self) -> T {
        self.phi
    }

    pub fn warnings(&self) -> &[ScheduleWarning] {
        &self.warnings
    }

    /// Replaces the per-qubit modulation indices (and amplitudes `εₙ = αₙνₙ`).
    pub fn with_alpha(mut self, alpha: Vec<T>) -> Result<Self, ModulationError> {
        if alpha.len() != self.qubits() {
            return Err(ModulationError::WrongLength {
                expected: self.qubits(),
                got: alpha.len(),
            });
        }
        for &a in &alpha {
            check_alpha(a)?;
        }
        self.epsilon = alpha.iter().zip(&self.nu).map(|(&a, &v)| a * v).collect();
        self.alpha = alpha;
        Ok(self)
    }

    /// Shifts every central frequency by `offset`.
    pub fn shifted(mut self, offset: T) -> Self {
        for w in &mut self.omega_bar {
            *w += offset;
        }
        self
    }

    /// Hex SHA-256 over the little-endian `f64` bits of every field.
    pub fn digest(&self) -> String {
        let mut hasher = Sha256::new();
        for field in [&self.omega_bar, &self.epsilon, &self.nu, &self.theta, &self.alpha] {
            for &x in field.iter() {
                hasher.update(x.to_f64_lossy().to_bits().to_le_bytes());
            }
        }
        hasher.update(self.phi.to_f64_lossy().to_bits().to_le_bytes());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    /// Diagonal of the constant gauge `e^{−iαₙ sin θₙ}` relating the time
    /// average of [`interaction_hamiltonian_at`] to [`effective_hamiltonian`].
    pub fn anchor_phases(&self) -> Vec<Complex<T>> {
        self.alpha
            .iter()
            .zip(&self.theta)
            .map(|(&a, &th)| cis(-a * th.sin()))
            .collect()
    }
}

/// Link couplings of the effective model; `nn[k] = J_{n,n+1}` and
/// `nnn[k] = J_{n+2,n}` for `n = k + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveCouplings<T> {
    pub nn: Vec<Complex<T>>,
    pub nnn: Vec<Complex<T>>,
}

impl<T: Real> EffectiveCouplings<T> {
    pub fn qubits(&self) -> usize {
        self.nn.len() + 1
    }
}

/// First-order sideband couplings from the Bessel expansion of the drive.
pub fn effective_couplings<T: Real>(
    device: &DeviceSpec<T>,
    schedule: &DriveSchedule<T>,
) -> EffectiveCouplings<T> {
    let g = device.g();
    let n_q = schedule.qubits();
    let bessel: Vec<(T, T)> = schedule.alpha.iter().map(|&a| bessel_j01(a)).collect();
    let th = &schedule.theta;
    let mut nn = Vec::with_capacity(n_q - 1);
    for n in 1..n_q {
        let (j0_n, _) = bessel[n - 1];
        let (_, j1_next) = bessel[n];
        let theta = th[n];
        nn.push(if qubit_type(n) == 3 {
            cis(-theta) * (g * j0_n * -j1_next)
        } else {
            cis(theta) * (g * j0_n * j1_next)
        });
    }
    let mut nnn = Vec::with_capacity(n_q.saturating_sub(2));
    for n in 1..n_q.saturating_sub(1) {
        let (j0_far, _) = bessel[n + 1];
        let (_, j1_n) = bessel[n - 1];
        let theta = th[n - 1];
        nnn.push(if qubit_type(n) == 1 {
            cis(-theta) * (g * j0_far * -j1_n)
        } else {
            cis(theta) * (g * j0_far * j1_n)
        });
    }
    EffectiveCouplings { nn, nnn }
}

/// Single-excitation matrix with `⟨ψ_{n+1}|H|ψ_n⟩ = J_{n,n+1}` and
/// `⟨ψ_n|H|ψ_{n+2}⟩ = J_{n+2,n}`.
pub fn effective_hamiltonian<T: Real>(couplings: &EffectiveCouplings<T>) -> HermitianMatrix<T> {
    let mut h = HermitianMatrix::zeros(couplings.qubits());
    for (k, &j) in couplings.nn.iter().enumerate() {
        h.add_hopping(k + 1, k, j);
    }
    for (k, &j) in couplings.nnn.iter().enumerate() {
        h.add_hopping(k, k + 2, j);
    }
    h
}

/// Effective Hamiltonian in the anchored interaction frame: `D H_eff D†`
/// with `D` from [`DriveSchedule::anchor_phases`]. Same spectrum as
/// [`effective_hamiltonian`].
pub fn anchored_effective_hamiltonian<T: Real>(
    device: &DeviceSpec<T>,
    schedule: &DriveSchedule<T>,
) -> HermitianMatrix<T> {
    effective_hamiltonian(&effective_couplings(device, schedule))
        .conjugate_by_diagonal(&schedule.anchor_phases())
}

/// Exact (pre-RWA) interaction-picture Hamiltonian, precomputed for fast
/// repeated evaluation. Immutable and shareable across threads.
#[derive(Clone, Debug)]
pub struct InteractionHamiltonian<T> {
    g: T,
    /// `ω̄ₙ − ω̄₁`; only differences enter the couplings.
    detuning: Vec<T>,
    alpha: Vec<T>,
    nu: Vec<T>,
    theta: Vec<T>,
    sin_theta: Vec<T>,
}

impl<T: Real> InteractionHamiltonian<T> {
    pub fn new(device: &DeviceSpec<T>, schedule: &DriveSchedule<T>) -> Self {
        let w1 = schedule.omega_bar[0];
        Self {
            g: device.g(),
            detuning: schedule.omega_bar.iter().map(|&w| w - w1).collect(),
            alpha: schedule.alpha.clone(),
            nu: schedule.nu.clone(),
            theta: schedule.theta.clone(),
            sin_theta: schedule.theta.iter().map(|t| t.sin()).collect(),
        }
    }

    pub fn qubits(&self) -> usize {
        self.detuning.len()
    }

    /// Frame phase `χₙ(t) − ω̄₁ t`.
    #[inline]
    pub fn frame_phase(&self, n: usize, t: T) -> T {
        self.detuning[n] * t + self.alpha[n] * ((self.nu[n] * t + self.theta[n]).sin() - self.sin_theta[n])
    }

    /// Writes `H(t)` into `out`, reusing its storage when the structure already matches.
    pub fn fill(&self, t: T, out: &mut SparseHermitian<T>) {
        let n = self.qubits();
        if out.dim() != n || out.links().len() != 2 * n - 3 {
            *out = SparseHermitian::new(n, vec![T::zero(); n], self.link_pattern());
        }
        let p: Vec<Complex<T>> = (0..n).map(|k| cis(self.frame_phase(k, t))).collect();
        for link in out.links_mut() {
            let (i, j) = (link.0, link.1);
            link.2 = p[i] * p[j].conj() * self.g;
        }
    }

    fn link_pattern(&self) -> Vec<(usize, usize, Complex<T>)> {
        let n = self.qubits();
        let zero = Complex::new(T::zero(), T::zero());
        let mut links = Vec::with_capacity(2 * n - 3);
        for i in 0..n {
            for j in [i + 1, i + 2] {
                if j < n {
                    links.push((i, j, zero));
                }
            }
        }
        links
    }

    pub fn at(&self, t: T) -> HermitianMatrix<T> {
        let mut s = SparseHermitian::zeros(0);
        self.fill(t, &mut s);
        s.to_dense()
    }
}

/// Dense `H(t)` with `⟨ψ_m|H|ψ_n⟩ = g·e^{i[χ_m(t) − χ_n(t)]}` for `|m − n| ∈ {1, 2}`.
pub fn interaction_hamiltonian_at<T: Real>(
    t: T,
    device: &DeviceSpec<T>,
    schedule: &DriveSchedule<T>,
) -> HermitianMatrix<T> {
    InteractionHamiltonian::new(device, schedule).at(t)
}
