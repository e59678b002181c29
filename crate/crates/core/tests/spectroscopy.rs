use hofstadter::dynamics::{NoiseSpec, TimeGrid, TrajectoryConfig};
use hofstadter::model::{exact_row, Boundary, LatticeSpec, ModelKind};
use hofstadter::modulation::{make_schedule, DeviceSpec, FrequencyPlan};
use hofstadter::numerics::{eig_hermitian, HermitianMatrix};
use hofstadter::spectroscopy::{
    detect_peaks, eigenenergies_reference, record_run, spectrum_of, Drive, Engine, ExpectationRecord,
    SpectroscopyError, SpectrumRow, Window,
};
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

const MHZ: f64 = TAU * 1e6;
const US: f64 = 1e-6;

fn synthetic(site: usize, n: usize, dt: f64, f: impl Fn(f64) -> Complex64) -> ExpectationRecord<f64> {
    let times: Vec<f64> = (0..n).map(|k| k as f64 * dt).collect();
    let values = times.iter().map(|&t| f(t)).collect();
    ExpectationRecord::new(site, times, values, 0.0, None).unwrap()
}

fn tone(freq_hz: f64, weight: f64, tau: f64) -> impl Fn(f64) -> Complex64 {
    move |t| Complex64::from_polar(weight * (-t / tau).exp(), -TAU * freq_hz * t)
}

#[test]
fn record_validation() {
    let t = vec![0.0, 1.0, 2.0];
    let ok = vec![Complex64::new(1.0, 0.0); 3];
    assert!(ExpectationRecord::new(1, t.clone(), ok.clone(), 0.0, None).is_ok());
    assert!(matches!(
        ExpectationRecord::new(1, vec![0.0, 1.0, 2.5], ok.clone(), 0.0, None),
        Err(SpectroscopyError::NonUniform(_))
    ));
    assert!(matches!(
        ExpectationRecord::new(1, t.clone(), vec![Complex64::new(1.1, 0.0); 3], 0.0, None),
        Err(SpectroscopyError::OutOfBounds { index: 0, .. })
    ));
    assert!(ExpectationRecord::new(1, t, ok[..2].to_vec(), 0.0, None).is_err());
}

#[test]
fn uncoupled_qubit_is_constant_with_power_at_zero() {
    let h = HermitianMatrix::zeros(1);
    let drive = Drive::Static { hamiltonian: &h, flux: 0.0 };
    let grid = TimeGrid::new(1.0 * US, 0.01 * US).unwrap();
    let rec = record_run(1, &drive, &NoiseSpec::none(), &grid, &Engine::Unitary).unwrap();
    assert!(rec.values().iter().all(|v| (v - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    let row = spectrum_of(&[rec], 4, Window::Rectangular).unwrap();
    let peaks = detect_peaks(&row, 0.05, row.bin_width).unwrap();
    assert_eq!(peaks.frequencies(), vec![0.0]);
}

#[test]
fn single_qubit_decays_at_t2_star() {
    let h = HermitianMatrix::zeros(1);
    let drive = Drive::Static { hamiltonian: &h, flux: 0.0 };
    let noise = NoiseSpec::new(20.0 * US, 2.0 * US).unwrap();
    let grid = TimeGrid::new(4.0 * US, 2e-9).unwrap();
    let rec = record_run(1, &drive, &noise, &grid, &Engine::Lindblad).unwrap();
    for (t, v) in rec.times().iter().zip(rec.values()) {
        assert!((v - Complex64::new((-t / (2.0 * US)).exp(), 0.0)).norm() <= 1e-6);
    }
    assert!(matches!(
        record_run(1, &drive, &noise, &grid, &Engine::Unitary),
        Err(SpectroscopyError::NoiseWithUnitary)
    ));
    let cfg = TrajectoryConfig::new(200, 5).unwrap();
    let tr = record_run(1, &drive, &noise, &TimeGrid::new(1.0 * US, 0.1 * US).unwrap(), &Engine::Trajectories(cfg))
        .unwrap();
    assert_eq!(tr.values()[0], Complex64::new(1.0, 0.0));
    assert!(tr.values().iter().all(|v| v.norm() <= 1.0 + 1e-9));
}

#[test]
fn site_zero_rejected() {
    let h = HermitianMatrix::zeros(2);
    let drive = Drive::Static { hamiltonian: &h, flux: 0.0 };
    let grid = TimeGrid::new(1.0, 0.1).unwrap();
    assert!(record_run(0, &drive, &NoiseSpec::none(), &grid, &Engine::Unitary).is_err());
    assert!(record_run(3, &drive, &NoiseSpec::none(), &grid, &Engine::Unitary).is_err());
}

#[test]
fn two_sites_give_lines_at_plus_minus_j() {
    let j = 3.0 * MHZ;
    let mut h = HermitianMatrix::zeros(2);
    h.set(0, 1, Complex64::new(j, 0.0));
    let drive = Drive::Static { hamiltonian: &h, flux: 0.0 };
    let grid = TimeGrid::new(4.0 * US, 2e-9).unwrap();
    let recs: Vec<_> = (1..=2)
        .map(|s| record_run(s, &drive, &NoiseSpec::none(), &grid, &Engine::Unitary).unwrap())
        .collect();
    let row = spectrum_of(&recs, 4, Window::Hann).unwrap();
    let peaks = detect_peaks(&row, 0.05, row.bin_width).unwrap().frequencies();
    assert_eq!(peaks.len(), 2);
    assert!((peaks[0] + 3e6).abs() <= 0.1 * row.bin_width);
    assert!((peaks[1] - 3e6).abs() <= 0.1 * row.bin_width);
}

#[test]
fn negative_phase_rotation_lands_at_positive_frequency() {
    let e = 5.0 * MHZ;
    let rec = synthetic(1, 2000, 2e-9, |t| Complex64::from_polar(1.0, -e * t));
    let row = spectrum_of(&[rec], 4, Window::Hann).unwrap();
    let peaks = detect_peaks(&row, 0.05, row.bin_width).unwrap().frequencies();
    assert_eq!(peaks.len(), 1);
    assert!((peaks[0] - 5e6).abs() <= 0.1 * row.bin_width);
}

#[test]
fn on_bin_tone_is_exact() {
    let dt = 1e-3;
    let n = 2048;
    let f0 = 100.0 / (n as f64 * dt);
    let rec = synthetic(1, n, dt, tone(f0, 1.0, f64::INFINITY));
    let row = spectrum_of(&[rec], 1, Window::Rectangular).unwrap();
    let peaks = detect_peaks(&row, 0.05, row.bin_width).unwrap();
    assert_eq!(peaks.len(), 1);
    assert!((peaks.peaks[0].frequency - f0).abs() <= 1e-9, "{} Hz off", peaks.peaks[0].frequency - f0);
}

#[test]
fn two_lorentzians_ten_bins_apart() {
    let bin = 0.25e6;
    let (c1, c2) = (100.3, 110.3);
    let lorentz = |x: f64, c: f64, h: f64| h / (1.0 + ((x - c) / 2.0).powi(2));
    let frequencies: Vec<f64> = (0..256).map(|k| k as f64 * bin).collect();
    let power: Vec<f64> = (0..256)
        .map(|k| lorentz(k as f64, c1, 1.0) + lorentz(k as f64, c2, 0.7))
        .collect();
    let row = SpectrumRow {
        flux: 0.0,
        frequencies,
        power: power.clone(),
        bin_width: bin,
        sites: vec![1],
        site_power: vec![power],
    };
    let peaks = detect_peaks(&row, 0.05, bin).unwrap().frequencies();
    assert_eq!(peaks.len(), 2);
    assert!((peaks[0] / bin - c1).abs() <= 0.2, "{}", peaks[0] / bin - c1);
    assert!((peaks[1] / bin - c2).abs() <= 0.2, "{}", peaks[1] / bin - c2);
}

#[test]
fn sum_rule_and_site_rows() {
    let dt = 1e-8;
    let recs: Vec<_> = (1..=3)
        .map(|s| synthetic(s, 500, dt, tone(s as f64 * 1e6, 0.5, 1e-6)))
        .collect();
    let row = spectrum_of(&recs, 2, Window::Rectangular).unwrap();
    for k in 0..row.power.len() {
        let expect = row.site_power[0][k] + row.site_power[1][k] + row.site_power[2][k];
        assert_eq!(row.power[k], expect);
    }
    let per_site: f64 = (1..=3).map(|s| row.site_row(s).unwrap().total_power()).sum();
    assert!((row.total_power() - per_site).abs() <= 1e-12 * per_site);
    assert!(row.site_row(4).is_none());
    let only2 = row.site_row(2).unwrap();
    let p = detect_peaks(&only2, 0.05, only2.bin_width).unwrap().frequencies();
    assert_eq!(p.len(), 1);
    assert!((p[0] - 2e6).abs() < only2.bin_width);
    assert!(row.power.iter().all(|&x| x >= 0.0));
}

#[test]
fn mismatched_records_rejected() {
    let a = synthetic(1, 100, 1e-8, tone(1e6, 0.5, 1e-6));
    let b = synthetic(2, 100, 2e-8, tone(1e6, 0.5, 1e-6));
    assert!(matches!(
        spectrum_of(&[a.clone(), b], 1, Window::Rectangular),
        Err(SpectroscopyError::MismatchedGrid(2))
    ));
    assert!(matches!(
        spectrum_of(&[a.clone(), a.clone()], 1, Window::Rectangular),
        Err(SpectroscopyError::DuplicateSite(1))
    ));
    let c = ExpectationRecord::new(2, a.times().to_vec(), a.values().to_vec(), 1.0, None).unwrap();
    assert!(matches!(
        spectrum_of(&[a, c], 1, Window::Rectangular),
        Err(SpectroscopyError::MismatchedFlux(2))
    ));
    assert!(matches!(
        spectrum_of::<f64>(&[], 1, Window::Rectangular),
        Err(SpectroscopyError::NoRecords)
    ));
}

/// Hermitian matrix with prescribed eigenvalues and random eigenvectors.
fn with_spectrum(energies: &[f64], seed: u64) -> HermitianMatrix<f64> {
    let n = energies.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = HermitianMatrix::zeros(n);
    for i in 0..n {
        r.set_diagonal(i, rng.random_range(-1.0..1.0));
        for j in i + 1..n {
            r.set(i, j, Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
        }
    }
    let basis = eig_hermitian(&r).unwrap().eigenvectors;
    let mut h = HermitianMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for (e, v) in energies.iter().zip(&basis) {
                acc += v.as_slice()[i] * v.as_slice()[j].conj() * *e;
            }
            if i == j {
                h.set_diagonal(i, acc.re);
            } else {
                h.set(i, j, acc);
            }
        }
    }
    h
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn summed_spectrum_is_complete(n in 2usize..=8, seed in any::<u64>(), gaps in prop::collection::vec(0.5f64..2.0, 8)) {
        let mut energies = vec![-6.0];
        for g in &gaps[..n - 1] {
            energies.push(energies.last().unwrap() + g);
        }
        let min_gap = gaps[..n - 1].iter().copied().fold(f64::INFINITY, f64::min) * 1e6;
        let h = with_spectrum(&energies.iter().map(|e| e * MHZ).collect::<Vec<_>>(), seed);
        let drive = Drive::Static { hamiltonian: &h, flux: 0.0 };
        let t_end = (8.0 / min_gap).max(4.0 * US);
        let grid = TimeGrid::new(t_end, 10e-9).unwrap();
        let recs: Vec<_> = (1..=n)
            .map(|s| record_run(s, &drive, &NoiseSpec::none(), &grid, &Engine::Unitary).unwrap())
            .collect();
        let row = spectrum_of(&recs, 4, Window::Rectangular).unwrap();
        let peaks = detect_peaks(&row, 0.05, row.bin_width).unwrap().frequencies();
        for e in &energies {
            let nearest = peaks.iter().map(|p| (p - e * 1e6).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest <= row.bin_width, "E = {e} MHz, miss {nearest} Hz, bin {}", row.bin_width);
        }
    }
}

#[test]
fn reference_energies() {
    let spec = LatticeSpec::new(14, 1.0, 0.0, Boundary::Open).unwrap();
    let e = eigenenergies_reference(&spec).unwrap();
    assert_eq!(e.len(), 14);
    assert!(e.windows(2).all(|w| w[0] <= w[1]));
    assert!(e[13] < 4.0 && e[13] > 3.7);
    let row = exact_row(ModelKind::Zigzag, 14, Boundary::Open, 0.0).unwrap();
    assert_eq!(e, row.eigenvalues);
    let zero = LatticeSpec::new(6, 0.0, 0.3, Boundary::Open).unwrap();
    assert!(eigenenergies_reference(&zero).unwrap().iter().all(|&x| x == 0.0));
}

#[test]
fn modulated_record_carries_metadata() {
    let plan = FrequencyPlan::from_modulation(TAU * 5e9, [250.0 * MHZ, 150.0 * MHZ, 100.0 * MHZ]).unwrap();
    let dev = DeviceSpec::new(3, 10.0 * MHZ).unwrap();
    let phi = 0.4;
    let sched = make_schedule(&dev, phi, 1.0, &plan, 10.0).unwrap();
    let drive = Drive::Modulated { device: &dev, schedule: &sched };
    let grid = TimeGrid::new(0.1 * US, 2e-9).unwrap();
    let noise = NoiseSpec::new(20.0 * US, 2.0 * US).unwrap();
    let rec = record_run(2, &drive, &noise, &grid, &Engine::Lindblad).unwrap();
    assert_eq!(rec.site(), 2);
    assert!((rec.flux() - 3.0 * phi).abs() < 1e-15);
    assert_eq!(rec.schedule_digest(), Some(sched.digest().as_str()));
    assert!((rec.values()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    assert_eq!(rec.values().len(), 50);
}

#[test]
fn single_precision_pipeline() {
    let times: Vec<f32> = (0..256).map(|k| k as f32 * 1e-3).collect();
    let values = times.iter().map(|&t| num_complex::Complex32::from_polar(0.5, -TAU as f32 * 40.0 * t)).collect();
    let rec = ExpectationRecord::new(1, times, values, 0.0f32, None).unwrap();
    let row = spectrum_of(&[rec], 4, Window::Hann).unwrap();
    let p = detect_peaks(&row, 0.05, row.bin_width).unwrap().frequencies();
    assert_eq!(p.len(), 1);
    assert!((p[0] - 40.0).abs() < row.bin_width);
}
