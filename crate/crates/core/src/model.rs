//! Zigzag Hofstadter-like lattice, Harper chain and the momentum-space band
//! problem, with exact spectra over flux grids.
//!
//! Sites are numbered `1..=N`; basis index `n − 1` holds an excitation on
//! site `n`. The zigzag hopping convention is
//!
//! ```text
//! ⟨ψ_n|H|ψ_{n+2}⟩ = J e^{i n φ},   ⟨ψ_n|H|ψ_{n+1}⟩ = J e^{−i (n+1) φ}
//! ```
//!
//! so the flux through every rhombic cell is `Φ = 3φ`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{cis, eigvals_hermitian, wrap_angle, HermitianMatrix, NumericsError, Real};

/// Tolerance on `N·φ ≡ 0 (mod 2π)` for periodic zigzag chains.
pub const FLUX_QUANTIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("need at least {min} sites, got {got}")]
    TooFewSites { min: usize, got: usize },
    #[error("periodic chain of {sites} sites needs N·φ ≡ 0 mod 2π; residual {residual:e} rad")]
    FluxNotQuantized { sites: usize, residual: f64 },
    #[error("p = {p} and q = {q} are not coprime")]
    NotCoprime { p: i64, q: u64 },
    #[error("q must be positive")]
    ZeroDenominator,
    #[error("k = {k} outside the magnetic Brillouin zone [-π/{q}, π/{q}]")]
    MomentumOutOfZone { k: f64, q: u64 },
    #[error("non-finite model parameter")]
    NonFinite,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Zigzag,
    Harper,
}

/// Parameters of the zigzag lattice.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSpec<T> {
    sites: usize,
    coupling: T,
    phi: T,
    boundary: Boundary,
}

impl<T: Real> LatticeSpec<T> {
    pub fn new(sites: usize, coupling: T, phi: T, boundary: Boundary) -> Result<Self, ModelError> {
        if sites < 3 {
            return Err(ModelError::TooFewSites { min: 3, got: sites });
        }
        if !coupling.is_finite() || !phi.is_finite() {
            return Err(ModelError::NonFinite);
        }
        if boundary == Boundary::Periodic {
            let residual = wrap_angle(T::from_usize_lossy(sites) * phi).abs();
            if residual > T::lit(FLUX_QUANTIZATION_TOL) {
                return Err(ModelError::FluxNotQuantized {
                    sites,
                    residual: residual.to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            sites,
            coupling,
            phi,
            boundary,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn coupling(&self) -> T {
        self.coupling
    }

    /// Per-link phase φ.
    pub fn phi(&self) -> T {
        self.phi
    }

    /// Flux per rhombic cell, `Φ = 3φ`.
    pub fn flux(&self) -> T {
        T::lit(3.0) * self.phi
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
}

/// Nearest quantized link phase `2πm/N` for a periodic chain; returns `m`
/// (in `0..N`) and the snapped phase.
pub fn snap_phase<T: Real>(sites: usize, phi: T) -> (usize, T) {
    let n = T::from_usize_lossy(sites);
    let m = (phi * n / T::TAU()).round().to_f64_lossy() as i64;
    let m = m.rem_euclid(sites as i64) as usize;
    (m, T::TAU() * T::from_usize_lossy(m) / n)
}

/// Single-excitation matrix of the zigzag Hamiltonian.
pub fn build_zigzag<T: Real>(spec: &LatticeSpec<T>) -> HermitianMatrix<T> {
    let n_sites = spec.sites;
    let j = spec.coupling;
    let phi = spec.phi;
    let mut h = HermitianMatrix::zeros(n_sites);
    for n in 1..=n_sites {
        let nf = T::from_usize_lossy(n);
        let idx = n - 1;
        match spec.boundary {
            Boundary::Open => {
                if n + 2 <= n_sites {
                    h.add_hopping(idx, idx + 2, cis(nf * phi) * j);
                }
                if n < n_sites {
                    h.add_hopping(idx, idx + 1, cis(-(nf + T::one()) * phi) * j);
                }
            }
            Boundary::Periodic => {
                h.add_hopping(idx, (idx + 2) % n_sites, cis(nf * phi) * j);
                h.add_hopping(idx, (idx + 1) % n_sites, cis(-(nf + T::one()) * phi) * j);
            }
        }
    }
    h
}

/// Harper chain: hops `J` and on-site energies `2J cos(nΦ)`, `n = 1..=N`.
pub fn build_harper<T: Real>(
    sites: usize,
    coupling: T,
    flux: T,
    boundary: Boundary,
) -> Result<HermitianMatrix<T>, ModelError> {
    if sites < 2 {
        return Err(ModelError::TooFewSites { min: 2, got: sites });
    }
    if !coupling.is_finite() || !flux.is_finite() {
        return Err(ModelError::NonFinite);
    }
    let mut h = HermitianMatrix::zeros(sites);
    let hop = Complex::new(coupling, T::zero());
    for n in 1..=sites {
        let idx = n - 1;
        h.set_diagonal(idx, T::lit(2.0) * coupling * (T::from_usize_lossy(n) * flux).cos());
        if n < sites {
            h.add_hopping(idx, idx + 1, hop);
        } else if boundary == Boundary::Periodic {
            h.add_hopping(idx, 0, hop);
        }
    }
    Ok(h)
}

/// Phase accumulated along a closed path of basis indices, as
/// `arg Π ⟨path[k+1]|H|path[k]⟩`, wrapped into `(−π, π]`.
pub fn loop_phase<T: Real>(h: &HermitianMatrix<T>, path: &[usize]) -> T {
    let mut prod = Complex::new(T::one(), T::zero());
    for w in path.windows(2) {
        prod *= h.get(w[1], w[0]);
    }
    prod.arg()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Rational flux `Φ/2π = p/q` at momentum `k` in the magnetic Brillouin zone.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandProblem<T> {
    p: i64,
    q: u64,
    k: T,
}

impl<T: Real> BandProblem<T> {
    pub fn new(p: i64, q: u64, k: T) -> Result<Self, ModelError> {
        if q == 0 {
            return Err(ModelError::ZeroDenominator);
        }
        if gcd(p.unsigned_abs(), q) != 1 {
            return Err(ModelError::NotCoprime { p, q });
        }
        let edge = T::PI() / T::from_u64(q).expect("q fits scalar");
        if !k.is_finite() || k.abs() > edge * (T::one() + T::epsilon() * T::lit(8.0)) {
            return Err(ModelError::MomentumOutOfZone {
                k: k.to_f64_lossy(),
                q,
            });
        }
        Ok(Self { p, q, k })
    }

    pub fn p(&self) -> i64 {
        self.p
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn k(&self) -> T {
        self.k
    }

    /// `Φ = 2πp/q`.
    pub fn flux(&self) -> T {
        T::TAU() * T::from_i64(self.p).expect("p fits") / T::from_u64(self.q).expect("q fits")
    }

    /// `φ = Φ/3`.
    pub fn phi(&self) -> T {
        self.flux() / T::lit(3.0)
    }

    /// Coupling between bands `v` and `v + 1`: `J[e^{i(k+vφ)} + e^{−2i(k+vφ)}]`.
    pub fn coupling(&self, v: u64, coupling: T) -> Complex<T> {
        let x = self.k + T::from_u64(v).expect("v fits") * self.phi();
        (cis(x) + cis(-(x + x))) * coupling
    }
}

/// `q × q` momentum-space Hamiltonian; band `q − 1` wraps onto band `0`.
pub fn band_hamiltonian<T: Real>(bp: &BandProblem<T>, coupling: T) -> HermitianMatrix<T> {
    let q = bp.q as usize;
    let mut h = HermitianMatrix::zeros(q);
    for v in 0..q {
        h.add_hopping(v, (v + 1) % q, bp.coupling(v as u64, coupling));
    }
    h
}

/// Momenta `2πm/N` inside the half-open zone `[−π/q, π/q)`.
pub fn allowed_momenta<T: Real>(sites: usize, q: u64) -> Vec<T> {
    let n = sites as i64;
    let qf = T::from_u64(q).expect("q fits");
    let edge = T::PI() / qf;
    let slack = T::epsilon() * T::lit(64.0);
    (-n..n)
        .map(|m| T::TAU() * T::from_i64(m).expect("fits") / T::from_usize_lossy(sites))
        .filter(|&k| k >= -edge - slack && k < edge - slack)
        .collect()
}

/// Sorted union of band eigenvalues over the momenta allowed on an
/// `sites`-site ring.
pub fn band_spectrum<T: Real>(p: i64, q: u64, sites: usize, coupling: T) -> Result<Vec<T>, ModelError> {
    let mut all = Vec::with_capacity(sites);
    for k in allowed_momenta::<T>(sites, q) {
        let bp = BandProblem::new(p, q, k)?;
        all.extend(eigvals_hermitian(&band_hamiltonian(&bp, coupling))?);
    }
    all.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(all)
}

/// One flux column of an exact butterfly.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactRow<T> {
    /// Flux asked for, radians.
    pub requested_flux: T,
    /// Flux actually diagonalized (after torus snapping), radians.
    pub flux: T,
    /// Ascending, in units of `J`.
    pub eigenvalues: Vec<T>,
}

impl<T: Real> ExactRow<T> {
    pub fn trace(&self) -> T {
        self.eigenvalues.iter().copied().sum()
    }
}

/// Flux a model is actually diagonalized at: periodic chains snap to the
/// torus-quantized grid (`φ = 2πm/N` for the zigzag, `Φ = 2πm/N` for Harper).
pub fn effective_flux<T: Real>(model: ModelKind, sites: usize, boundary: Boundary, flux: T) -> T {
    match (boundary, model) {
        (Boundary::Open, _) => flux,
        (Boundary::Periodic, ModelKind::Zigzag) => T::lit(3.0) * snap_phase(sites, flux / T::lit(3.0)).1,
        (Boundary::Periodic, ModelKind::Harper) => snap_phase(sites, flux).1,
    }
}

/// Spectrum of one model at one flux, in units of `J`.
pub fn exact_row<T: Real>(
    model: ModelKind,
    sites: usize,
    boundary: Boundary,
    flux: T,
) -> Result<ExactRow<T>, ModelError> {
    let used = effective_flux(model, sites, boundary, flux);
    let h = match model {
        ModelKind::Zigzag => build_zigzag(&LatticeSpec::new(sites, T::one(), used / T::lit(3.0), boundary)?),
        ModelKind::Harper => build_harper(sites, T::one(), used, boundary)?,
    };
    Ok(ExactRow {
        requested_flux: flux,
        flux: used,
        eigenvalues: eigvals_hermitian(&h)?,
    })
}

/// Exact spectra over a flux grid; rows are independent and returned in grid
/// order.
pub fn exact_butterfly<T: Real>(
    sites: usize,
    boundary: Boundary,
    flux_grid: &[T],
    model: ModelKind,
) -> Vec<Result<ExactRow<T>, ModelError>> {
    flux_grid
        .par_iter()
        .map(|&flux| exact_row(model, sites, boundary, flux))
        .collect()
}
