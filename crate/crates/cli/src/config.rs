//! Run configuration in laboratory units and its conversion to the SI
//! values the library works in. This is the only place where MHz, μs and ns
//! meet rad/s and seconds.

use std::f64::consts::TAU;
use std::path::PathBuf;

use hofstadter::dynamics::{NoiseSpec, TimeGrid};
use hofstadter::model::{Boundary, ModelKind};
use hofstadter::spectroscopy::{SpectrumSettings, Window};
use hofstadter::sweep::{EngineKind, SweepConfig};
use serde::{Deserialize, Serialize};

/// `2π·10⁶`: MHz to rad/s.
pub const MHZ: f64 = TAU * 1e6;
pub const US: f64 = 1e-6;
pub const NS: f64 = 1e-9;

/// Invalid configuration; the message names the offending key.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{key}: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// 0 uses every core.
    pub threads: usize,
    pub out_dir: PathBuf,
    pub lattice: LatticeSection,
    pub device: DeviceSection,
    pub noise: NoiseSection,
    pub evolution: EvolutionSection,
    pub spectrum: SpectrumSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeSection {
    pub qubits: usize,
    pub model: ModelKind,
    pub boundary: Boundary,
    pub fluxes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceSection {
    pub coupling_mhz: f64,
    pub omega1_mhz: f64,
    pub nu_mhz: [f64; 3],
    pub alpha: f64,
    pub detuning_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub enabled: bool,
    pub t1_us: f64,
    pub t2_star_us: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolutionSection {
    pub engine: EngineKind,
    pub trajectories: usize,
    pub t_end_us: f64,
    pub dt_ns: f64,
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub zero_pad_factor: usize,
    pub window: Window,
    pub rel_threshold: f64,
    pub min_separation_bins: f64,
    pub csv_band_mhz: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: 0,
            out_dir: PathBuf::from("runs"),
            lattice: LatticeSection::default(),
            device: DeviceSection::default(),
            noise: NoiseSection::default(),
            evolution: EvolutionSection::default(),
            spectrum: SpectrumSection::default(),
        }
    }
}

impl Default for LatticeSection {
    fn default() -> Self {
        Self {
            qubits: 14,
            model: ModelKind::Zigzag,
            boundary: Boundary::Open,
            fluxes: 120,
        }
    }
}

impl Default for DeviceSection {
    fn default() -> Self {
        Self {
            coupling_mhz: 10.0,
            omega1_mhz: 5000.0,
            nu_mhz: [250.0, 150.0, 100.0],
            alpha: 1.0,
            detuning_ratio: hofstadter::modulation::DEFAULT_DETUNING_RATIO,
        }
    }
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            enabled: true,
            t1_us: 20.0,
            t2_star_us: 2.0,
        }
    }
}

impl Default for EvolutionSection {
    fn default() -> Self {
        Self {
            engine: EngineKind::Lindblad,
            trajectories: 100,
            t_end_us: 4.0,
            dt_ns: 2.0,
            rtol: TimeGrid::<f64>::DEFAULT_RTOL,
            atol: TimeGrid::<f64>::DEFAULT_ATOL,
        }
    }
}

impl Default for SpectrumSection {
    fn default() -> Self {
        let s = SpectrumSettings::default();
        Self {
            zero_pad_factor: s.zero_pad_factor,
            window: s.window,
            rel_threshold: s.rel_threshold,
            min_separation_bins: s.min_separation_bins,
            csv_band_mhz: 25.0,
        }
    }
}

fn positive(key: &str, x: f64) -> Result<(), ConfigError> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::new(key, format!("must be positive and finite, got {x}")))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let key = e
                .span()
                .and_then(|s| text.get(s))
                .map(|k| k.trim().to_string())
                .unwrap_or_else(|| "config".into());
            ConfigError::new(&key, msg)
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Checks that do not depend on the subcommand.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.lattice.qubits == 0 {
            return Err(ConfigError::new("lattice.qubits", "must be at least 1"));
        }
        if self.lattice.fluxes == 0 {
            return Err(ConfigError::new("lattice.fluxes", "must be positive"));
        }
        positive("device.coupling_mhz", self.device.coupling_mhz)?;
        positive("device.omega1_mhz", self.device.omega1_mhz)?;
        for (k, nu) in self.device.nu_mhz.iter().enumerate() {
            positive(&format!("device.nu_mhz[{k}]"), *nu)?;
        }
        let [n1, n2, n3] = self.device.nu_mhz;
        if ((n2 + n3) - n1).abs() > 1e-9 * n1 {
            return Err(ConfigError::new(
                "device.nu_mhz",
                format!("first entry must equal the sum of the other two ({n1} ≠ {n2} + {n3})"),
            ));
        }
        if self.device.omega1_mhz <= n1 {
            return Err(ConfigError::new("device.omega1_mhz", "must exceed nu_mhz[0]"));
        }
        if !(0.0..=hofstadter::modulation::ALPHA_MAX).contains(&self.device.alpha) {
            return Err(ConfigError::new(
                "device.alpha",
                format!("must lie in [0, {}]", hofstadter::modulation::ALPHA_MAX),
            ));
        }
        positive("device.detuning_ratio", self.device.detuning_ratio)?;
        if self.noise.enabled {
            positive("noise.t1_us", self.noise.t1_us)?;
            positive("noise.t2_star_us", self.noise.t2_star_us)?;
            if self.noise.t2_star_us > 2.0 * self.noise.t1_us {
                return Err(ConfigError::new("noise.t2_star_us", "must not exceed 2·t1_us"));
            }
        }
        let e = &self.evolution;
        positive("evolution.t_end_us", e.t_end_us)?;
        positive("evolution.dt_ns", e.dt_ns)?;
        positive("evolution.rtol", e.rtol)?;
        positive("evolution.atol", e.atol)?;
        if e.dt_ns * NS > e.t_end_us * US {
            return Err(ConfigError::new("evolution.dt_ns", "exceeds t_end_us"));
        }
        if e.engine == EngineKind::Trajectories && e.trajectories == 0 {
            return Err(ConfigError::new("evolution.trajectories", "must be positive"));
        }
        if e.engine == EngineKind::Unitary && self.noise.enabled {
            return Err(ConfigError::new(
                "evolution.engine",
                "unitary evolution needs noise.enabled = false",
            ));
        }
        let s = &self.spectrum;
        if s.zero_pad_factor == 0 {
            return Err(ConfigError::new("spectrum.zero_pad_factor", "must be positive"));
        }
        if !(s.rel_threshold > 0.0 && s.rel_threshold < 1.0) {
            return Err(ConfigError::new("spectrum.rel_threshold", "must lie in (0, 1)"));
        }
        if !(s.min_separation_bins >= 0.0 && s.min_separation_bins.is_finite()) {
            return Err(ConfigError::new("spectrum.min_separation_bins", "must be non-negative"));
        }
        positive("spectrum.csv_band_mhz", s.csv_band_mhz)?;
        Ok(())
    }

    pub fn noise(&self) -> Result<NoiseSpec<f64>, ConfigError> {
        if !self.noise.enabled {
            return Ok(NoiseSpec::none());
        }
        NoiseSpec::new(self.noise.t1_us * US, self.noise.t2_star_us * US)
            .map_err(|e| ConfigError::new("noise", e.to_string()))
    }

    pub fn grid(&self) -> Result<TimeGrid<f64>, ConfigError> {
        let e = &self.evolution;
        let dt = e.dt_ns * NS;
        TimeGrid::with_settings(e.t_end_us * US, dt, e.rtol, e.atol, dt)
            .map_err(|err| ConfigError::new("evolution", err.to_string()))
    }

    pub fn spectrum_settings(&self) -> SpectrumSettings {
        SpectrumSettings {
            zero_pad_factor: self.spectrum.zero_pad_factor,
            window: self.spectrum.window,
            rel_threshold: self.spectrum.rel_threshold,
            min_separation_bins: self.spectrum.min_separation_bins,
        }
    }

    /// The library configuration, in rad/s and seconds.
    pub fn sweep_config(&self) -> Result<SweepConfig, ConfigError> {
        self.validate()?;
        Ok(SweepConfig {
            flux_count: self.lattice.fluxes,
            qubits: self.lattice.qubits,
            model: self.lattice.model,
            boundary: self.lattice.boundary,
            engine: self.evolution.engine,
            trajectories: self.evolution.trajectories,
            seed: self.seed,
            coupling: self.device.coupling_mhz * MHZ,
            omega1: self.device.omega1_mhz * MHZ,
            nu: self.device.nu_mhz.map(|v| v * MHZ),
            alpha: self.device.alpha,
            detuning_ratio: self.device.detuning_ratio,
            noise: self.noise()?,
            grid: self.grid()?,
            spectrum: self.spectrum_settings(),
            csv_band_hz: self.spectrum.csv_band_mhz * 1e6,
            threads: self.threads,
        })
    }
}
