//! Butterfly experiments over a flux grid: exact spectra and the
//! spectroscopic reconstruction, with run manifests and comparison against
//! theory.
//!
//! Everything here is `f64`. Results are bitwise reproducible for a given
//! [`SweepConfig`] whatever the thread count: tasks are independent, seeds
//! derive from `(seed, flux index, site)`, and reductions run in fixed
//! `(flux, site)` order.

mod io;

pub use io::{
    format_number, write_deviation_csv, write_exact_csv, write_peaks_csv, write_spectro_csv,
    DEVIATION_HEADER, EXACT_HEADER, PEAKS_HEADER, SPECTRO_HEADER,
};

use std::f64::consts::TAU;
use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dynamics::{NoiseSpec, TimeGrid, TrajectoryConfig};
use crate::model::{exact_butterfly, Boundary, LatticeSpec, ModelKind};
use crate::modulation::{make_schedule, DeviceSpec, FrequencyPlan, ScheduleWarning};
use crate::numerics::bessel_j01;
use crate::spectroscopy::{
    detect_peaks, eigenenergies_reference, record_run, spectrum_of, Drive, Engine, PeakList, SpectrumSettings,
};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep configuration: {0}")]
    Config(String),
    #[error("dataset is {found}, expected {expected}")]
    WrongVariant { expected: Variant, found: Variant },
    #[error("could not build thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Modulation(#[from] crate::modulation::ModulationError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("manifest serialization: {0}")]
    Serialize(#[from] toml::ser::Error),
    #[error("manifest parse: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Exact,
    Spectroscopic,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Exact => "exact",
            Variant::Spectroscopic => "spectroscopic",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Unitary,
    Lindblad,
    Trajectories,
}

/// Everything a sweep depends on, in SI units (seconds, rad/s).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Fluxes `Φ/2π = k/flux_count`, `k = 0..flux_count`.
    pub flux_count: usize,
    pub qubits: usize,
    pub model: ModelKind,
    pub boundary: Boundary,
    pub engine: EngineKind,
    pub trajectories: usize,
    pub seed: u64,
    /// Bare coupling `g`, rad/s.
    pub coupling: f64,
    /// Central frequency of type-1 qubits, rad/s.
    pub omega1: f64,
    /// Modulation frequencies `ν₁, ν₂, ν₃`, rad/s.
    pub nu: [f64; 3],
    pub alpha: f64,
    pub detuning_ratio: f64,
    pub noise: NoiseSpec<f64>,
    pub grid: TimeGrid<f64>,
    pub spectrum: SpectrumSettings,
    /// Half-width of the frequency band written to the heatmap CSV, Hz.
    pub csv_band_hz: f64,
    /// Worker threads; 0 uses all available cores. Not part of the hash.
    pub threads: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        let mhz = TAU * 1e6;
        Self {
            flux_count: 120,
            qubits: 14,
            model: ModelKind::Zigzag,
            boundary: Boundary::Open,
            engine: EngineKind::Lindblad,
            trajectories: 100,
            seed: 0,
            coupling: 10.0 * mhz,
            omega1: 5000.0 * mhz,
            nu: [250.0 * mhz, 150.0 * mhz, 100.0 * mhz],
            alpha: 1.0,
            detuning_ratio: crate::modulation::DEFAULT_DETUNING_RATIO,
            noise: NoiseSpec::new(20e-6, 2e-6).expect("valid default noise"),
            grid: TimeGrid::new(4e-6, 2e-9).expect("valid default grid"),
            spectrum: SpectrumSettings::default(),
            csv_band_hz: 25e6,
            threads: 0,
        }
    }
}

impl SweepConfig {
    /// Flux values `Φ` in radians.
    pub fn fluxes(&self) -> Vec<f64> {
        (0..self.flux_count)
            .map(|k| TAU * k as f64 / self.flux_count as f64)
            .collect()
    }

    /// Effective coupling `J = g·J₀(α)·J₁(α)`, rad/s.
    pub fn effective_coupling(&self) -> f64 {
        let (j0, j1) = bessel_j01(self.alpha);
        self.coupling * j0 * j1
    }

    /// Hex SHA-256 of the canonical TOML form, ignoring `threads`.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.threads = 0;
        let text = toml::to_string(&c).expect("config serializes");
        hex(&Sha256::digest(text.as_bytes()))
    }

    /// Checks shared by both sweep variants.
    pub fn validate_exact(&self) -> Result<(), SweepError> {
        if self.flux_count == 0 {
            return Err(SweepError::Config("flux_count must be positive".into()));
        }
        if self.qubits < 3 {
            return Err(SweepError::Config(format!("qubits must be at least 3, got {}", self.qubits)));
        }
        Ok(())
    }

    pub fn validate_spectro(&self) -> Result<(), SweepError> {
        self.validate_exact()?;
        if self.model != ModelKind::Zigzag || self.boundary != Boundary::Open {
            return Err(SweepError::Config(
                "spectroscopic sweeps simulate an open zigzag chain".into(),
            ));
        }
        if self.engine == EngineKind::Trajectories && self.trajectories == 0 {
            return Err(SweepError::Config("trajectories must be positive".into()));
        }
        if self.engine == EngineKind::Unitary && !self.noise.is_noiseless() {
            return Err(SweepError::Config("the unitary engine needs noise disabled".into()));
        }
        let s = &self.spectrum;
        if s.zero_pad_factor == 0 {
            return Err(SweepError::Config("spectrum.zero_pad_factor must be positive".into()));
        }
        if !(s.rel_threshold > 0.0 && s.rel_threshold < 1.0) {
            return Err(SweepError::Config("spectrum.rel_threshold must lie in (0, 1)".into()));
        }
        if !(s.min_separation_bins >= 0.0) {
            return Err(SweepError::Config("spectrum.min_separation_bins must be non-negative".into()));
        }
        if !(self.csv_band_hz > 0.0) {
            return Err(SweepError::Config("csv_band_hz must be positive".into()));
        }
        DeviceSpec::new(self.qubits, self.coupling)?;
        FrequencyPlan::from_modulation(self.omega1, self.nu)?;
        TimeGrid::with_settings(
            self.grid.t_end(),
            self.grid.dt_sample(),
            self.grid.rtol(),
            self.grid.atol(),
            self.grid.max_step(),
        )?;
        if self.noise != NoiseSpec::none() {
            NoiseSpec::new(self.noise.t1(), self.noise.t2_star())?;
        }
        Ok(())
    }

    fn pool(&self) -> Result<rayon::ThreadPool, SweepError> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| SweepError::ThreadPool(e.to_string()))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Seed of the trajectory ensemble for one `(flux, site)` task.
pub fn task_seed(seed: u64, flux_index: usize, site: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((flux_index as u64) << 32) | site as u64);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskFailure {
    pub site: usize,
    pub error: String,
}

/// Per-row bookkeeping in the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowLog {
    pub flux_over_2pi: f64,
    /// Flux actually used (after torus snapping for periodic exact rows).
    pub used_flux_over_2pi: f64,
    /// Summed task wall time.
    pub wall_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<TaskFailure>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_digest: Option<String>,
}

/// Parameters, versions and timing of a sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub library_version: String,
    pub variant: Variant,
    pub config_hash: String,
    pub threads_used: usize,
    pub wall_seconds: f64,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub config: SweepConfig,
    pub rows: Vec<RowLog>,
}

impl Manifest {
    pub fn to_toml(&self) -> Result<String, SweepError> {
        Ok(toml::to_string(self)?)
    }

    pub fn from_toml(text: &str) -> Result<Self, SweepError> {
        Ok(toml::from_str(text)?)
    }
}

/// Exact eigenvalues at one flux, units of `J`; empty when the row failed.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactFluxRow {
    pub flux: f64,
    pub eigenvalues: Vec<f64>,
}

/// Summed spectrum and peaks at one flux.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectroFluxRow {
    pub flux: f64,
    /// Empty when every task of the row failed.
    pub power: Vec<f64>,
    pub peaks: PeakList<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rows {
    Exact(Vec<ExactFluxRow>),
    Spectroscopic {
        /// Hz, shared by every row.
        frequencies: Vec<f64>,
        rows: Vec<SpectroFluxRow>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ButterflyDataset {
    pub manifest: Manifest,
    pub rows: Rows,
}

impl ButterflyDataset {
    pub fn variant(&self) -> Variant {
        match self.rows {
            Rows::Exact(_) => Variant::Exact,
            Rows::Spectroscopic { .. } => Variant::Spectroscopic,
        }
    }
}

/// Progress callback, called once per finished flux row with
/// `(rows done, rows total)`.
pub type Progress<'a> = &'a (dyn Fn(usize, usize) + Sync);

fn manifest(cfg: &SweepConfig, variant: Variant, threads: usize) -> Manifest {
    Manifest {
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        variant,
        config_hash: cfg.hash(),
        threads_used: threads,
        wall_seconds: 0.0,
        warnings: Vec::new(),
        config: cfg.clone(),
        rows: Vec::new(),
    }
}

/// Sorted eigenvalues of the configured model at every flux. Rows that fail
/// are logged in the manifest and left empty.
pub fn run_exact_sweep(cfg: &SweepConfig, progress: Option<Progress<'_>>) -> Result<ButterflyDataset, SweepError> {
    cfg.validate_exact()?;
    let pool = cfg.pool()?;
    let start = Instant::now();
    let fluxes = cfg.fluxes();
    let results = pool.install(|| {
        fluxes
            .par_iter()
            .map(|&f| {
                let t0 = Instant::now();
                let r = exact_butterfly(cfg.qubits, cfg.boundary, &[f], cfg.model).pop().expect("one row");
                (r, t0.elapsed().as_secs_f64())
            })
            .collect::<Vec<_>>()
    });
    let mut m = manifest(cfg, Variant::Exact, pool.current_num_threads());
    let mut rows = Vec::with_capacity(fluxes.len());
    for (k, ((res, secs), &f)) in results.into_iter().zip(&fluxes).enumerate() {
        let mut log = RowLog {
            flux_over_2pi: f / TAU,
            used_flux_over_2pi: f / TAU,
            wall_seconds: secs,
            error: None,
            failures: Vec::new(),
            schedule_digest: None,
        };
        match res {
            Ok(row) => {
                log.used_flux_over_2pi = row.flux / TAU;
                rows.push(ExactFluxRow {
                    flux: row.flux,
                    eigenvalues: row.eigenvalues,
                });
            }
            Err(e) => {
                log.error = Some(e.to_string());
                rows.push(ExactFluxRow {
                    flux: f,
                    eigenvalues: Vec::new(),
                });
            }
        }
        m.rows.push(log);
        if let Some(p) = progress {
            p(k + 1, fluxes.len());
        }
    }
    m.wall_seconds = start.elapsed().as_secs_f64();
    Ok(ButterflyDataset {
        manifest: m,
        rows: Rows::Exact(rows),
    })
}

/// Spectroscopic butterfly: for every flux, one evolution per initial site,
/// the summed spectrum and its peaks. `(flux, site)` tasks run in parallel;
/// a failing task drops out of its row and is logged in the manifest.
pub fn run_spectro_sweep(cfg: &SweepConfig, progress: Option<Progress<'_>>) -> Result<ButterflyDataset, SweepError> {
    cfg.validate_spectro()?;
    let pool = cfg.pool()?;
    let start = Instant::now();
    let device = DeviceSpec::new(cfg.qubits, cfg.coupling)?;
    let plan = FrequencyPlan::from_modulation(cfg.omega1, cfg.nu)?;
    let fluxes = cfg.fluxes();
    let schedules = fluxes
        .iter()
        .map(|&f| make_schedule(&device, f / 3.0, cfg.alpha, &plan, cfg.detuning_ratio))
        .collect::<Result<Vec<_>, _>>()?;
    let n = cfg.qubits;
    let threads = pool.current_num_threads();
    // Enough rows per batch to keep every worker busy.
    let batch = (2 * threads).div_ceil(n).max(1);

    let mut m = manifest(cfg, Variant::Spectroscopic, threads);
    for w in schedules.first().map(|s| s.warnings()).unwrap_or_default() {
        m.warnings.push(match w {
            ScheduleWarning::WeakDetuning { ratio, threshold } => {
                format!("minimum detuning is {ratio:.3}·g, below the {threshold}·g guideline")
            }
        });
    }
    let mut frequencies: Vec<f64> = Vec::new();
    let mut rows = Vec::with_capacity(fluxes.len());
    for first in (0..fluxes.len()).step_by(batch) {
        let last = (first + batch).min(fluxes.len());
        let tasks: Vec<(usize, usize)> = (first..last).flat_map(|k| (1..=n).map(move |s| (k, s))).collect();
        let results = pool.install(|| {
            tasks
                .par_iter()
                .map(|&(k, site)| {
                    let t0 = Instant::now();
                    let engine = match cfg.engine {
                        EngineKind::Unitary => Engine::Unitary,
                        EngineKind::Lindblad => Engine::Lindblad,
                        EngineKind::Trajectories => Engine::Trajectories(TrajectoryConfig {
                            count: cfg.trajectories,
                            seed: task_seed(cfg.seed, k, site),
                        }),
                    };
                    let drive = Drive::Modulated {
                        device: &device,
                        schedule: &schedules[k],
                    };
                    let r = record_run(site, &drive, &cfg.noise, &cfg.grid, &engine);
                    (r, t0.elapsed().as_secs_f64())
                })
                .collect::<Vec<_>>()
        });
        let mut it = results.into_iter();
        for k in first..last {
            let mut log = RowLog {
                flux_over_2pi: fluxes[k] / TAU,
                used_flux_over_2pi: fluxes[k] / TAU,
                wall_seconds: 0.0,
                error: None,
                failures: Vec::new(),
                schedule_digest: Some(schedules[k].digest()),
            };
            let mut records = Vec::with_capacity(n);
            for site in 1..=n {
                let (r, secs) = it.next().expect("one result per task");
                log.wall_seconds += secs;
                match r {
                    Ok(rec) => records.push(rec),
                    Err(e) => log.failures.push(TaskFailure {
                        site,
                        error: e.to_string(),
                    }),
                }
            }
            let mut row = SpectroFluxRow {
                flux: fluxes[k],
                power: Vec::new(),
                peaks: PeakList::default(),
            };
            if records.is_empty() {
                log.error = Some("every site failed".into());
            } else {
                match spectrum_of(&records, cfg.spectrum.zero_pad_factor, cfg.spectrum.window).and_then(|s| {
                    let p = detect_peaks(
                        &s,
                        cfg.spectrum.rel_threshold,
                        cfg.spectrum.min_separation_bins * s.bin_width,
                    )?;
                    Ok((s, p))
                }) {
                    Ok((s, p)) => {
                        if frequencies.is_empty() {
                            frequencies = s.frequencies;
                        }
                        row.power = s.power;
                        row.peaks = p;
                    }
                    Err(e) => log.error = Some(e.to_string()),
                }
            }
            rows.push(row);
            m.rows.push(log);
            if let Some(p) = progress {
                p(k + 1, fluxes.len());
            }
        }
    }
    m.wall_seconds = start.elapsed().as_secs_f64();
    Ok(ButterflyDataset {
        manifest: m,
        rows: Rows::Spectroscopic { frequencies, rows },
    })
}

/// Peaks of one flux row against the exact spectrum.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxDeviation {
    pub flux: f64,
    /// Exact energies `E/2π`, Hz, ascending.
    pub reference: Vec<f64>,
    /// `(peak, nearest exact energy)`, Hz.
    pub matches: Vec<(f64, f64)>,
    /// Mean `|peak − nearest|`, Hz; NaN without peaks.
    pub mean_abs: f64,
    pub max_abs: f64,
    /// Exact energies that no peak chose as its nearest.
    pub unmatched: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationReport {
    pub rows: Vec<FluxDeviation>,
    /// Over every matched peak of every row, Hz.
    pub mean_abs: f64,
    pub max_abs: f64,
    pub unmatched: usize,
    pub peaks: usize,
}

/// Matches every detected peak to the nearest eigenvalue of the open zigzag
/// chain with `J = g·J₀(α)·J₁(α)`.
pub fn compare_to_theory(ds: &ButterflyDataset) -> Result<DeviationReport, SweepError> {
    let Rows::Spectroscopic { rows, .. } = &ds.rows else {
        return Err(SweepError::WrongVariant {
            expected: Variant::Spectroscopic,
            found: ds.variant(),
        });
    };
    let cfg = &ds.manifest.config;
    let j_hz = cfg.effective_coupling() / TAU;
    let mut out = Vec::with_capacity(rows.len());
    let (mut sum, mut count, mut worst, mut unmatched) = (0.0, 0usize, 0.0f64, 0usize);
    for row in rows {
        let spec = LatticeSpec::new(cfg.qubits, 1.0, row.flux / 3.0, Boundary::Open)
            .map_err(|e| SweepError::Config(e.to_string()))?;
        let reference: Vec<f64> = eigenenergies_reference(&spec)
            .map_err(|e| SweepError::Config(e.to_string()))?
            .into_iter()
            .map(|e| e * j_hz)
            .collect();
        let mut chosen = vec![false; reference.len()];
        let mut matches = Vec::with_capacity(row.peaks.len());
        for p in &row.peaks.peaks {
            let (idx, e) = reference
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - p.frequency).abs().total_cmp(&(b.1 - p.frequency).abs()))
                .expect("non-empty reference");
            chosen[idx] = true;
            matches.push((p.frequency, *e));
        }
        let devs: Vec<f64> = matches.iter().map(|(p, e)| (p - e).abs()).collect();
        let row_max = devs.iter().copied().fold(0.0, f64::max);
        let row_unmatched = chosen.iter().filter(|c| !**c).count();
        sum += devs.iter().sum::<f64>();
        count += devs.len();
        worst = worst.max(row_max);
        unmatched += row_unmatched;
        out.push(FluxDeviation {
            flux: row.flux,
            mean_abs: if devs.is_empty() {
                f64::NAN
            } else {
                devs.iter().sum::<f64>() / devs.len() as f64
            },
            max_abs: row_max,
            unmatched: row_unmatched,
            reference,
            matches,
        });
    }
    Ok(DeviationReport {
        rows: out,
        mean_abs: if count == 0 { f64::NAN } else { sum / count as f64 },
        max_abs: worst,
        unmatched,
        peaks: count,
    })
}
