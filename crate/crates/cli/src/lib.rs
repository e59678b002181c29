//! `butterfly` command-line front end.

pub mod config;

use std::collections::BTreeMap;
use std::f64::consts::{PI, TAU};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use hofstadter::model::{build_zigzag, Boundary, LatticeSpec, ModelKind};
use hofstadter::modulation::{effective_couplings, effective_hamiltonian, make_schedule, DeviceSpec, FrequencyPlan};
use hofstadter::numerics::HermitianMatrix;
use hofstadter::spectroscopy::{detect_peaks, record_run, spectrum_of, Drive, Engine};
use hofstadter::dynamics::TrajectoryConfig;
use hofstadter::sweep::{
    compare_to_theory, format_number, run_exact_sweep, run_spectro_sweep, write_deviation_csv, write_exact_csv,
    write_peaks_csv, write_spectro_csv, EngineKind, Manifest, SweepError, SPECTRO_HEADER,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{ConfigError, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const TRACE_HEADER: &str = "t_us,sx,sy";

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0:#}")]
    Runtime(anyhow::Error),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<SweepError> for Failure {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Config(_) | SweepError::Modulation(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.into()),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "butterfly", version, about = "Hofstadter butterfly on a frequency-modulated qubit chain")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact spectra of the zigzag or Harper model over a flux grid.
    ButterflyExact {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lattice: LatticeArgs,
    },
    /// Spectroscopic butterfly from simulated time evolution.
    ButterflySpectro {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        engine: EngineArgs,
    },
    /// One time trace and its spectrum.
    Evolve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lattice: LatticeArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Initially excited site, 1..=N.
        #[arg(long, default_value_t = 1)]
        site: usize,
        /// Flux Φ/2π through each rhombus.
        #[arg(long, default_value_t = 0.0)]
        flux_over_2pi: f64,
    },
    /// Effective couplings of the drive schedule.
    Couplings {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        lattice: LatticeArgs,
        /// Link phase φ/2π (the flux is 3φ).
        #[arg(long, conflicts_with = "flux_over_2pi")]
        phi_over_2pi: Option<f64>,
        /// Flux Φ/2π.
        #[arg(long)]
        flux_over_2pi: Option<f64>,
        /// Modulation index α.
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Print the default configuration file.
    DefaultConfig,
}

#[derive(Args, Debug, Default)]
pub struct Common {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores, 1 = serial).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
pub struct LatticeArgs {
    /// Number of qubits N.
    #[arg(long)]
    pub n: Option<usize>,
    /// Number of flux values in [0, 1).
    #[arg(long)]
    pub fluxes: Option<usize>,
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    #[arg(long, value_enum)]
    pub boundary: Option<BoundaryArg>,
}

#[derive(Args, Debug, Default)]
pub struct EngineArgs {
    #[arg(long, value_enum)]
    pub engine: Option<EngineArg>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    /// Disable relaxation and dephasing.
    #[arg(long)]
    pub no_noise: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    Zigzag,
    Harper,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum BoundaryArg {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EngineArg {
    Unitary,
    Lindblad,
    Trajectories,
}

/// What a run directory records next to its data files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub run_hash: String,
    pub library_version: String,
    #[serde(default)]
    pub arguments: BTreeMap<String, String>,
    pub config: RunConfig,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub summary: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Manifest>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {f}");
            f.exit_code()
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, Failure> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::from_toml(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if let Some(t) = common.threads {
        cfg.threads = t;
    }
    if let Some(d) = &common.out_dir {
        cfg.out_dir = d.clone();
    }
    Ok(cfg)
}

fn apply_lattice(cfg: &mut RunConfig, a: &LatticeArgs) {
    if let Some(n) = a.n {
        cfg.lattice.qubits = n;
    }
    if let Some(f) = a.fluxes {
        cfg.lattice.fluxes = f;
    }
    if let Some(m) = a.model {
        cfg.lattice.model = match m {
            ModelArg::Zigzag => ModelKind::Zigzag,
            ModelArg::Harper => ModelKind::Harper,
        };
    }
    if let Some(b) = a.boundary {
        cfg.lattice.boundary = match b {
            BoundaryArg::Open => Boundary::Open,
            BoundaryArg::Periodic => Boundary::Periodic,
        };
    }
}

fn apply_engine(cfg: &mut RunConfig, a: &EngineArgs) {
    if let Some(e) = a.engine {
        cfg.evolution.engine = match e {
            EngineArg::Unitary => EngineKind::Unitary,
            EngineArg::Lindblad => EngineKind::Lindblad,
            EngineArg::Trajectories => EngineKind::Trajectories,
        };
    }
    if let Some(t) = a.trajectories {
        cfg.evolution.trajectories = t;
    }
    if a.no_noise {
        cfg.noise.enabled = false;
    }
}

/// Hash of everything that determines the outputs: command, arguments and
/// configuration without `threads` and `out_dir`.
pub fn run_hash(command: &str, arguments: &BTreeMap<String, String>, cfg: &RunConfig) -> String {
    let mut c = cfg.clone();
    c.threads = 0;
    c.out_dir = PathBuf::new();
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update(b"\n");
    h.update(toml::to_string(arguments).expect("arguments serialize").as_bytes());
    h.update(b"\n");
    h.update(c.to_toml().as_bytes());
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

struct RunDir {
    path: PathBuf,
    manifest: RunManifest,
}

impl RunDir {
    fn create(command: &str, arguments: BTreeMap<String, String>, cfg: &RunConfig) -> Result<Self, Failure> {
        let hash = run_hash(command, &arguments, cfg);
        let path = cfg.out_dir.join(format!("{command}-{}", &hash[..16]));
        fs::create_dir_all(&path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Self {
            path,
            manifest: RunManifest {
                command: command.to_string(),
                run_hash: hash,
                library_version: env!("CARGO_PKG_VERSION").to_string(),
                arguments,
                config: cfg.clone(),
                summary: BTreeMap::new(),
                sweep: None,
            },
        })
    }

    fn file(&self, name: &str) -> Result<BufWriter<File>, Failure> {
        let p = self.path.join(name);
        let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        Ok(BufWriter::new(f))
    }

    fn finish(self) -> Result<PathBuf, Failure> {
        let text = toml::to_string(&self.manifest).context("serializing manifest")?;
        fs::write(self.path.join("manifest.toml"), text).context("writing manifest")?;
        emit(&format!("{}\n", self.path.display()));
        Ok(self.path)
    }
}

/// Writes to stdout; a closed pipe is not an error.
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn flush(mut w: BufWriter<File>) -> Result<(), Failure> {
    w.flush()?;
    Ok(())
}

fn progress(done: usize, total: usize) {
    eprintln!("flux row {done}/{total}");
}

pub fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::ButterflyExact { common, lattice } => {
            let mut cfg = load(&common)?;
            apply_lattice(&mut cfg, &lattice);
            butterfly_exact(&cfg).map(|_| ())
        }
        Command::ButterflySpectro { common, lattice, engine } => {
            let mut cfg = load(&common)?;
            apply_lattice(&mut cfg, &lattice);
            apply_engine(&mut cfg, &engine);
            butterfly_spectro(&cfg).map(|_| ())
        }
        Command::Evolve {
            common,
            lattice,
            engine,
            site,
            flux_over_2pi,
        } => {
            let mut cfg = load(&common)?;
            apply_lattice(&mut cfg, &lattice);
            apply_engine(&mut cfg, &engine);
            evolve(&cfg, site, flux_over_2pi).map(|_| ())
        }
        Command::Couplings {
            common,
            lattice,
            phi_over_2pi,
            flux_over_2pi,
            alpha,
        } => {
            let mut cfg = load(&common)?;
            apply_lattice(&mut cfg, &lattice);
            if let Some(a) = alpha {
                cfg.device.alpha = a;
            }
            let phi = phi_over_2pi.or(flux_over_2pi.map(|f| f / 3.0)).unwrap_or(0.0);
            couplings(&cfg, phi).map(|_| ())
        }
        Command::DefaultConfig => {
            emit(&RunConfig::default().to_toml());
            Ok(())
        }
    }
}

pub fn butterfly_exact(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let sweep = cfg.sweep_config()?;
    let ds = run_exact_sweep(&sweep, Some(&progress))?;
    let mut dir = RunDir::create("butterfly-exact", BTreeMap::new(), cfg)?;
    let mut w = dir.file("exact.csv")?;
    write_exact_csv(&ds, &mut w)?;
    flush(w)?;
    let failed = ds.manifest.rows.iter().filter(|r| r.error.is_some()).count();
    dir.manifest.summary.insert("failed_rows".into(), failed as f64);
    dir.manifest.sweep = Some(ds.manifest);
    dir.finish()
}

pub fn butterfly_spectro(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let sweep = cfg.sweep_config()?;
    let ds = run_spectro_sweep(&sweep, Some(&progress))?;
    let report = compare_to_theory(&ds)?;
    let mut dir = RunDir::create("butterfly-spectro", BTreeMap::new(), cfg)?;
    let mut w = dir.file("spectrum.csv")?;
    write_spectro_csv(&ds, sweep.csv_band_hz, &mut w)?;
    flush(w)?;
    let mut w = dir.file("peaks.csv")?;
    write_peaks_csv(&ds, &mut w)?;
    flush(w)?;
    let mut w = dir.file("deviation.csv")?;
    write_deviation_csv(&report, &mut w)?;
    flush(w)?;
    let s = &mut dir.manifest.summary;
    s.insert("mean_abs_dev_mhz".into(), report.mean_abs / 1e6);
    s.insert("max_abs_dev_mhz".into(), report.max_abs / 1e6);
    s.insert("unmatched_eigenvalues".into(), report.unmatched as f64);
    s.insert("peaks".into(), report.peaks as f64);
    eprintln!(
        "mean |Δ| = {:.4} MHz, max |Δ| = {:.4} MHz over {} peaks, {} eigenvalues unmatched",
        report.mean_abs / 1e6,
        report.max_abs / 1e6,
        report.peaks,
        report.unmatched
    );
    dir.manifest.sweep = Some(ds.manifest);
    dir.finish()
}

fn schedule_parts(
    cfg: &RunConfig,
    sweep: &hofstadter::sweep::SweepConfig,
    phi: f64,
) -> Result<(DeviceSpec<f64>, hofstadter::modulation::DriveSchedule<f64>), Failure> {
    let device = DeviceSpec::new(cfg.lattice.qubits, sweep.coupling)
        .map_err(|e| ConfigError::new("lattice.qubits", e.to_string()))?;
    let plan = FrequencyPlan::from_modulation(sweep.omega1, sweep.nu)
        .map_err(|e| ConfigError::new("device.nu_mhz", e.to_string()))?;
    let schedule = make_schedule(&device, phi, sweep.alpha, &plan, sweep.detuning_ratio)
        .map_err(|e| ConfigError::new("device", e.to_string()))?;
    for w in schedule.warnings() {
        eprintln!("warning: {w:?}");
    }
    Ok((device, schedule))
}

pub fn evolve(cfg: &RunConfig, site: usize, flux_over_2pi: f64) -> Result<PathBuf, Failure> {
    let sweep = cfg.sweep_config()?;
    let n = cfg.lattice.qubits;
    if n == 2 {
        return Err(ConfigError::new("lattice.qubits", "evolve needs N = 1 or N ≥ 3").into());
    }
    if site == 0 || site > n {
        return Err(ConfigError::new("--site", format!("must lie in 1..={n}, got {site}")).into());
    }
    if !flux_over_2pi.is_finite() {
        return Err(ConfigError::new("--flux-over-2pi", "must be finite").into());
    }
    let flux = TAU * flux_over_2pi;
    let engine = match sweep.engine {
        EngineKind::Unitary => Engine::Unitary,
        EngineKind::Lindblad => Engine::Lindblad,
        EngineKind::Trajectories => Engine::Trajectories(TrajectoryConfig {
            count: sweep.trajectories,
            seed: sweep.seed,
        }),
    };
    let single = HermitianMatrix::zeros(1);
    let parts = if n >= 3 {
        Some(schedule_parts(cfg, &sweep, flux / 3.0)?)
    } else {
        None
    };
    let drive = match &parts {
        Some((device, schedule)) => Drive::Modulated { device, schedule },
        None => Drive::Static {
            hamiltonian: &single,
            flux,
        },
    };
    let rec = record_run(site, &drive, &sweep.noise, &sweep.grid, &engine).context("time evolution failed")?;
    let row = spectrum_of(&[rec.clone()], sweep.spectrum.zero_pad_factor, sweep.spectrum.window)
        .context("spectrum failed")?;
    let peaks = detect_peaks(
        &row,
        sweep.spectrum.rel_threshold,
        sweep.spectrum.min_separation_bins * row.bin_width,
    )
    .context("peak detection failed")?;

    let mut args = BTreeMap::new();
    args.insert("site".into(), site.to_string());
    args.insert("flux_over_2pi".into(), format_number(flux_over_2pi));
    let mut dir = RunDir::create("evolve", args, cfg)?;
    let mut w = dir.file("trace.csv")?;
    writeln!(w, "{TRACE_HEADER}")?;
    for (t, v) in rec.times().iter().zip(rec.values()) {
        writeln!(w, "{},{},{}", format_number(t / 1e-6), format_number(v.re), format_number(v.im))?;
    }
    flush(w)?;
    let mut w = dir.file("spectrum.csv")?;
    writeln!(w, "{SPECTRO_HEADER}")?;
    let f = format_number(flux_over_2pi);
    for (fr, p) in row.frequencies.iter().zip(&row.power) {
        if fr.abs() <= sweep.csv_band_hz {
            writeln!(w, "{f},{},{}", format_number(fr / 1e6), format_number(*p))?;
        }
    }
    flush(w)?;
    for p in &peaks.peaks {
        eprintln!("peak {:.4} MHz", p.frequency / 1e6);
    }
    dir.manifest.summary.insert("peaks".into(), peaks.len() as f64);
    if let Some(d) = rec.schedule_digest() {
        dir.manifest.arguments.insert("schedule_digest".into(), d.to_string());
    }
    dir.finish()
}

/// One coupling of the effective Hamiltonian against the zigzag model.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkRow {
    pub from: usize,
    pub to: usize,
    pub abs_mhz: f64,
    pub phase_over_pi: f64,
    pub expected_phase_over_pi: f64,
    pub error: f64,
}

/// `⟨ψ_from|H|ψ_to⟩` for every nearest and next-nearest link.
pub fn link_table(cfg: &RunConfig, phi: f64) -> Result<(Vec<LinkRow>, f64), Failure> {
    let sweep = cfg.sweep_config()?;
    if cfg.lattice.qubits < 3 {
        return Err(ConfigError::new("lattice.qubits", "couplings need at least 3 qubits").into());
    }
    let (device, schedule) = schedule_parts(cfg, &sweep, phi)?;
    let h = effective_hamiltonian(&effective_couplings(&device, &schedule));
    let j = sweep.effective_coupling();
    let spec = LatticeSpec::new(cfg.lattice.qubits, j, phi, Boundary::Open)
        .map_err(|e| ConfigError::new("lattice", e.to_string()))?;
    let z = build_zigzag(&spec);
    let mut rows = Vec::new();
    for d in [1, 2] {
        for a in 0..cfg.lattice.qubits - d {
            let (x, y) = (h.get(a, a + d), z.get(a, a + d));
            rows.push(LinkRow {
                from: a + 1,
                to: a + 1 + d,
                abs_mhz: x.norm() / config::MHZ,
                phase_over_pi: x.arg() / PI + 0.0,
                expected_phase_over_pi: y.arg() / PI + 0.0,
                error: (x - y).norm(),
            });
        }
    }
    Ok((rows, j))
}

pub fn couplings(cfg: &RunConfig, phi: f64) -> Result<PathBuf, Failure> {
    if !phi.is_finite() {
        return Err(ConfigError::new("--phi-over-2pi", "must be finite").into());
    }
    let (rows, j) = link_table(cfg, TAU * phi)?;
    let g = cfg.device.coupling_mhz * config::MHZ;
    let worst = rows.iter().map(|r| r.error).fold(0.0, f64::max);
    let mut table = format!("J/2π = {:.6} MHz, φ/2π = {phi}\n", j / config::MHZ);
    table += &format!("{:>5} {:>5} {:>12} {:>12} {:>12}\n", "from", "to", "|J|/2π MHz", "phase/π", "zigzag/π");
    for r in &rows {
        table += &format!(
            "{:>5} {:>5} {:>12.6} {:>12.6} {:>12.6}\n",
            r.from, r.to, r.abs_mhz, r.phase_over_pi, r.expected_phase_over_pi
        );
    }
    emit(&table);
    let mut args = BTreeMap::new();
    args.insert("phi_over_2pi".into(), format_number(phi));
    let mut dir = RunDir::create("couplings", args, cfg)?;
    let mut w = dir.file("couplings.csv")?;
    writeln!(w, "from,to,abs_mhz,phase_over_pi,expected_phase_over_pi")?;
    for r in &rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.from,
            r.to,
            format_number(r.abs_mhz),
            format_number(r.phase_over_pi),
            format_number(r.expected_phase_over_pi)
        )?;
    }
    flush(w)?;
    dir.manifest.summary.insert("effective_coupling_mhz".into(), j / config::MHZ);
    dir.manifest.summary.insert("max_link_error_mhz".into(), worst / config::MHZ);
    let path = dir.finish()?;
    if worst > 1e-9 * g {
        return Err(anyhow::anyhow!("effective couplings deviate from the zigzag pattern by {worst:e} rad/s").into());
    }
    Ok(path)
}

/// Reads a run manifest back.
pub fn read_manifest(path: &Path) -> anyhow::Result<RunManifest> {
    let text = fs::read_to_string(path)?;
    Ok(toml::from_str(&text)?)
}
