//! Fourier-transform spectroscopy: sampled `2⟨σₙ⁻⟩` records, power spectra
//! summed over initial sites, and peak extraction.
//!
//! A record for site `n` starts from `(|ψ₀⟩ + |ψₙ⟩)/√2`. Its value is
//! `Σⱼ |cⱼ|² e^{−iEⱼt}` up to decay, so every eigenenergy whose eigenvector
//! overlaps site `n` shows up as a line at `+Eⱼ/2π`. Summing the spectra of
//! all sites recovers the full spectrum because the initial sites span the
//! single-excitation space.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    evolve_coherences, evolve_trajectories, evolve_unitary, expectation_sigma_minus, DensityMatrix,
    DynamicsError, NoiseSpec, QuantumState, StaticHamiltonian, TimeGrid, TrajectoryConfig,
};
use crate::model::{build_zigzag, LatticeSpec, ModelError};
use crate::modulation::{DeviceSpec, DriveSchedule, InteractionHamiltonian};
use crate::numerics::{eigvals_hermitian, fft_power, uniform_step, HermitianMatrix, NumericsError, Real};

/// Bound on `|2⟨σₙ⁻⟩|` for the superposition initial state, with slack.
pub const RECORD_BOUND: f64 = 1.0 + 2e-6;
/// Power below this fraction of a peak makes its log-parabola meaningless.
const LOG_FLOOR: f64 = 1e-20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectroscopyError {
    #[error("record needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("times and values differ in length ({times} vs {values})")]
    LengthMismatch { times: usize, values: usize },
    #[error("sample times are not uniformly spaced near index {0}")]
    NonUniform(usize),
    #[error("|value| = {value} at sample {index} exceeds the coherence bound")]
    OutOfBounds { index: usize, value: f64 },
    #[error("no records supplied")]
    NoRecords,
    #[error("record for site {0} uses a different time grid")]
    MismatchedGrid(usize),
    #[error("record for site {0} belongs to a different flux")]
    MismatchedFlux(usize),
    #[error("site {0} supplied twice")]
    DuplicateSite(usize),
    #[error("relative threshold {0} outside (0, 1)")]
    BadThreshold(f64),
    #[error("minimum separation must be non-negative and finite")]
    BadSeparation,
    #[error("the unitary engine cannot model T1/T2* noise")]
    NoiseWithUnitary,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Sampled `2⟨σₙ⁻⟩ = ⟨σₙˣ⟩ + i⟨σₙʸ⟩` for one initial site.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpectationRecord<T> {
    site: usize,
    times: Vec<T>,
    values: Vec<Complex<T>>,
    dt: T,
    flux: T,
    schedule_digest: Option<String>,
}

impl<T: Real> ExpectationRecord<T> {
    /// Validates uniform spacing and the coherence bound.
    pub fn new(
        site: usize,
        times: Vec<T>,
        values: Vec<Complex<T>>,
        flux: T,
        schedule_digest: Option<String>,
    ) -> Result<Self, SpectroscopyError> {
        if times.len() != values.len() {
            return Err(SpectroscopyError::LengthMismatch {
                times: times.len(),
                values: values.len(),
            });
        }
        if times.len() < 2 {
            return Err(SpectroscopyError::TooFewSamples(times.len()));
        }
        let tol = T::lit(1e-12).max(T::epsilon() * T::from_usize_lossy(times.len()));
        let dt = uniform_step(&times, tol).map_err(|e| match e {
            NumericsError::NonUniform { index } => SpectroscopyError::NonUniform(index),
            other => other.into(),
        })?;
        for (index, v) in values.iter().enumerate() {
            let m = v.norm();
            if !(m <= T::lit(RECORD_BOUND)) {
                return Err(SpectroscopyError::OutOfBounds {
                    index,
                    value: m.to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            site,
            times,
            values,
            dt,
            flux,
            schedule_digest,
        })
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Sample spacing, seconds.
    pub fn dt(&self) -> T {
        self.dt
    }

    /// Flux `Φ`, radians.
    pub fn flux(&self) -> T {
        self.flux
    }

    pub fn schedule_digest(&self) -> Option<&str> {
        self.schedule_digest.as_deref()
    }
}

/// Time-evolution back end of [`record_run`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Closed system; noise must be absent.
    Unitary,
    /// Master equation.
    Lindblad,
    /// Quantum-jump average.
    Trajectories(TrajectoryConfig),
}

/// What generates the dynamics of a run.
#[derive(Clone, Copy, Debug)]
pub enum Drive<'a, T> {
    /// Exact interaction-picture evolution of a modulated chain. The flux is
    /// `3φ` of the schedule.
    Modulated {
        device: &'a DeviceSpec<T>,
        schedule: &'a DriveSchedule<T>,
    },
    /// A fixed single-excitation Hamiltonian labelled with `flux`.
    Static { hamiltonian: &'a HermitianMatrix<T>, flux: T },
}

/// Evolves `(|ψ₀⟩ + |ψ_site⟩)/√2` and samples `2⟨σ_site⁻⟩`.
///
/// Modulated drives have their step size capped to resolve the fastest
/// modulation (see [`TimeGrid::resolving`]).
pub fn record_run<T: Real>(
    site: usize,
    drive: &Drive<'_, T>,
    noise: &NoiseSpec<T>,
    grid: &TimeGrid<T>,
    engine: &Engine,
) -> Result<ExpectationRecord<T>, SpectroscopyError> {
    match *drive {
        Drive::Modulated { device, schedule } => {
            let h = InteractionHamiltonian::new(device, schedule);
            let nu_max = schedule.nu().iter().copied().fold(T::zero(), T::max);
            let grid = grid.resolving(nu_max)?;
            let flux = T::lit(3.0) * schedule.phi();
            run_with(site, &h, noise, &grid, engine, flux, Some(schedule.digest()))
        }
        Drive::Static { hamiltonian, flux } => {
            let h = StaticHamiltonian::new(hamiltonian);
            run_with(site, &h, noise, grid, engine, flux, None)
        }
    }
}

fn run_with<T: Real, H: crate::dynamics::HamiltonianSource<T>>(
    site: usize,
    h: &H,
    noise: &NoiseSpec<T>,
    grid: &TimeGrid<T>,
    engine: &Engine,
    flux: T,
    digest: Option<String>,
) -> Result<ExpectationRecord<T>, SpectroscopyError> {
    let psi = QuantumState::superposition(h.qubits(), site)?;
    let two = T::lit(2.0);
    let (times, values) = match engine {
        Engine::Unitary => {
            if !noise.is_noiseless() {
                return Err(SpectroscopyError::NoiseWithUnitary);
            }
            let out = evolve_unitary(&psi, h, grid)?;
            let values = out
                .values
                .iter()
                .map(|s| expectation_sigma_minus(s, site).map(|z| z * two))
                .collect::<Result<_, _>>()?;
            (out.times, values)
        }
        Engine::Lindblad => {
            let out = evolve_coherences(&DensityMatrix::from_pure(&psi), h, noise, grid)?;
            let values = out.values.iter().map(|col| col[site - 1] * two).collect();
            (out.times, values)
        }
        Engine::Trajectories(cfg) => {
            let out = evolve_trajectories(&psi, h, noise, grid, cfg)?;
            let values = out.sigma_minus(site)?.into_iter().map(|z| z * two).collect();
            (out.times, values)
        }
    };
    ExpectationRecord::new(site, times, values, flux, digest)
}

/// Apodization applied before the transform.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Window {
    #[default]
    Rectangular,
    /// Symmetric Hann window over the record.
    Hann,
}

impl Window {
    pub fn weights<T: Real>(self, len: usize) -> Vec<T> {
        match self {
            Window::Rectangular => vec![T::one(); len],
            Window::Hann if len < 2 => vec![T::one(); len],
            Window::Hann => {
                let span = T::from_usize_lossy(len - 1);
                (0..len)
                    .map(|k| T::lit(0.5) * (T::one() - (T::TAU() * T::from_usize_lossy(k) / span).cos()))
                    .collect()
            }
        }
    }
}

/// Transform settings with the defaults `zero_pad_factor = 4`, rectangular
/// window, `rel_threshold = 0.05` and a one-bin minimum peak separation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSettings {
    pub zero_pad_factor: usize,
    pub window: Window,
    pub rel_threshold: f64,
    /// Minimum peak separation in FFT bins.
    pub min_separation_bins: f64,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        Self {
            zero_pad_factor: 4,
            window: Window::Rectangular,
            rel_threshold: 0.05,
            min_separation_bins: 1.0,
        }
    }
}

/// Power spectrum at one flux, summed over the contributing sites.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumRow<T> {
    /// Flux `Φ`, radians.
    pub flux: T,
    /// Hz, ascending, uniform.
    pub frequencies: Vec<T>,
    pub power: Vec<T>,
    pub bin_width: T,
    /// Contributing sites, in input order.
    pub sites: Vec<usize>,
    /// Per-site power, parallel to `sites`.
    pub site_power: Vec<Vec<T>>,
}

impl<T: Real> SpectrumRow<T> {
    /// The row a single initial site would give on its own.
    pub fn site_row(&self, site: usize) -> Option<SpectrumRow<T>> {
        let k = self.sites.iter().position(|&s| s == site)?;
        Some(SpectrumRow {
            flux: self.flux,
            frequencies: self.frequencies.clone(),
            power: self.site_power[k].clone(),
            bin_width: self.bin_width,
            sites: vec![site],
            site_power: vec![self.site_power[k].clone()],
        })
    }

    pub fn total_power(&self) -> T {
        self.power.iter().copied().sum()
    }
}

/// Transforms every record and sums the power bin by bin in input order.
pub fn spectrum_of<T: Real>(
    records: &[ExpectationRecord<T>],
    zero_pad_factor: usize,
    window: Window,
) -> Result<SpectrumRow<T>, SpectroscopyError> {
    let first = records.first().ok_or(SpectroscopyError::NoRecords)?;
    let mut sites: Vec<usize> = Vec::with_capacity(records.len());
    for r in records {
        if r.times != first.times {
            return Err(SpectroscopyError::MismatchedGrid(r.site));
        }
        if r.flux != first.flux {
            return Err(SpectroscopyError::MismatchedFlux(r.site));
        }
        if sites.contains(&r.site) {
            return Err(SpectroscopyError::DuplicateSite(r.site));
        }
        sites.push(r.site);
    }
    let w: Vec<T> = window.weights(first.values.len());
    let mut frequencies = Vec::new();
    let mut bin_width = T::zero();
    let mut site_power = Vec::with_capacity(records.len());
    for r in records {
        let series: Vec<Complex<T>> = r.values.iter().zip(&w).map(|(v, &x)| v * x).collect();
        let ps = fft_power(&series, r.dt, zero_pad_factor)?;
        frequencies = ps.frequencies;
        bin_width = ps.bin_width;
        site_power.push(ps.power);
    }
    let mut power = vec![T::zero(); frequencies.len()];
    for p in &site_power {
        for (acc, &x) in power.iter_mut().zip(p) {
            *acc += x;
        }
    }
    Ok(SpectrumRow {
        flux: first.flux,
        frequencies,
        power,
        bin_width,
        sites,
        site_power,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak<T> {
    /// Hz.
    pub frequency: T,
    pub height: T,
}

/// Detected peaks, ascending in frequency.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct PeakList<T> {
    pub peaks: Vec<Peak<T>>,
}

impl<T: Real> PeakList<T> {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn frequencies(&self) -> Vec<T> {
        self.peaks.iter().map(|p| p.frequency).collect()
    }
}

/// Strict local maxima with `power ≥ rel_threshold·max`, refined by a
/// parabola through the log-power of the three surrounding bins. Maxima
/// closer than `min_separation` (Hz) are merged, keeping the higher.
pub fn detect_peaks<T: Real>(
    row: &SpectrumRow<T>,
    rel_threshold: T,
    min_separation: T,
) -> Result<PeakList<T>, SpectroscopyError> {
    if !(rel_threshold > T::zero() && rel_threshold < T::one()) {
        return Err(SpectroscopyError::BadThreshold(rel_threshold.to_f64_lossy()));
    }
    if !(min_separation >= T::zero()) || !min_separation.is_finite() {
        return Err(SpectroscopyError::BadSeparation);
    }
    let p = &row.power;
    let top = p.iter().copied().fold(T::zero(), T::max);
    if p.len() < 3 || !(top > T::zero()) {
        return Ok(PeakList::default());
    }
    let cut = rel_threshold * top;
    let mut found: Vec<Peak<T>> = Vec::new();
    for i in 1..p.len() - 1 {
        if p[i] > p[i - 1] && p[i] > p[i + 1] && p[i] >= cut {
            let (delta, height) = refine(p[i - 1], p[i], p[i + 1]);
            found.push(Peak {
                frequency: row.frequencies[i] + delta * row.bin_width,
                height,
            });
        }
    }
    found.sort_by(|a, b| b.height.partial_cmp(&a.height).expect("finite power"));
    let mut kept: Vec<Peak<T>> = Vec::with_capacity(found.len());
    for cand in found {
        if kept.iter().all(|k| (k.frequency - cand.frequency).abs() >= min_separation) {
            kept.push(cand);
        }
    }
    kept.sort_by(|a, b| a.frequency.partial_cmp(&b.frequency).expect("finite frequency"));
    Ok(PeakList { peaks: kept })
}

/// Vertex offset (bins, within ±½) and height of the log-parabola.
fn refine<T: Real>(left: T, mid: T, right: T) -> (T, T) {
    let floor = T::lit(LOG_FLOOR) * mid;
    if left < floor || right < floor {
        return (T::zero(), mid);
    }
    let (a, b, c) = (left.ln(), mid.ln(), right.ln());
    let curv = a - T::lit(2.0) * b + c;
    if !(curv < T::zero()) {
        return (T::zero(), mid);
    }
    let half = T::lit(0.5);
    let delta = (half * (a - c) / curv).max(-half).min(half);
    let height = (b - T::lit(0.25) * (a - c) * delta).exp();
    (delta, height)
}

/// Where the comparison energies come from.
#[derive(Clone, Copy, Debug)]
pub enum ReferenceSource<'a, T> {
    Lattice(&'a LatticeSpec<T>),
    Hamiltonian(&'a HermitianMatrix<T>),
}

impl<'a, T> From<&'a LatticeSpec<T>> for ReferenceSource<'a, T> {
    fn from(s: &'a LatticeSpec<T>) -> Self {
        ReferenceSource::Lattice(s)
    }
}

impl<'a, T> From<&'a HermitianMatrix<T>> for ReferenceSource<'a, T> {
    fn from(h: &'a HermitianMatrix<T>) -> Self {
        ReferenceSource::Hamiltonian(h)
    }
}

/// Ascending single-excitation energies, measured from the ground state
/// `E₀ = 0`, in the units of the source (`J` for a lattice, angular
/// frequency for an effective Hamiltonian).
pub fn eigenenergies_reference<'a, T: Real>(
    source: impl Into<ReferenceSource<'a, T>>,
) -> Result<Vec<T>, SpectroscopyError> {
    let vals = match source.into() {
        ReferenceSource::Lattice(spec) => eigvals_hermitian(&build_zigzag(spec))?,
        ReferenceSource::Hamiltonian(h) => eigvals_hermitian(h)?,
    };
    Ok(vals)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(power: Vec<f64>) -> SpectrumRow<f64> {
        let n = power.len();
        SpectrumRow {
            flux: 0.0,
            frequencies: (0..n).map(|k| k as f64).collect(),
            power: power.clone(),
            bin_width: 1.0,
            sites: vec![1],
            site_power: vec![power],
        }
    }

    #[test]
    fn rejects_bad_threshold() {
        let r = row(vec![0.0, 1.0, 0.0]);
        assert!(detect_peaks(&r, 0.0, 1.0).is_err());
        assert!(detect_peaks(&r, 1.0, 1.0).is_err());
        assert!(detect_peaks(&r, 0.5, -1.0).is_err());
    }

    #[test]
    fn empty_and_flat_spectra_have_no_peaks() {
        assert!(detect_peaks(&row(vec![]), 0.1, 1.0).unwrap().is_empty());
        assert!(detect_peaks(&row(vec![1.0; 8]), 0.1, 1.0).unwrap().is_empty());
        assert!(detect_peaks(&row(vec![0.0; 8]), 0.1, 1.0).unwrap().is_empty());
    }

    #[test]
    fn parabola_vertex_is_exact_for_gaussian() {
        let centre = 10.3;
        let p: Vec<f64> = (0..20).map(|k| (-((k as f64 - centre) / 2.0).powi(2)).exp()).collect();
        let peaks = detect_peaks(&row(p), 0.1, 1.0).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks.peaks[0].frequency - centre).abs() < 1e-12);
        assert!((peaks.peaks[0].height - 1.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_and_merge() {
        let p = vec![0.0, 1.0, 0.0, 0.5, 0.0, 0.01, 0.0];
        let r = row(p);
        assert_eq!(detect_peaks(&r, 0.05, 1.0).unwrap().frequencies(), vec![1.0, 3.0]);
        assert_eq!(detect_peaks(&r, 0.05, 2.5).unwrap().frequencies(), vec![1.0]);
        assert_eq!(detect_peaks(&r, 0.005, 1.0).unwrap().len(), 3);
    }

    #[test]
    fn hann_weights() {
        let w: Vec<f64> = Window::Hann.weights(5);
        assert_eq!(w[0], 0.0);
        assert!((w[2] - 1.0).abs() < 1e-15);
        assert!((w[1] - 0.5).abs() < 1e-15);
    }
}
