use hofstadter::model::{
    band_spectrum, build_harper, build_zigzag, exact_butterfly, loop_phase, BandProblem, Boundary,
    LatticeSpec, ModelKind,
};
use hofstadter::numerics::{eigvals_hermitian, wrap_angle};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn angle_eq(a: f64, b: f64, tol: f64) -> bool {
    wrap_angle(a - b).abs() <= tol
}

proptest! {
    #[test]
    fn gauge_loops(phi in -10.0f64..10.0, sites in 4usize..40) {
        let h = build_zigzag(&LatticeSpec::new(sites, 1.0, phi, Boundary::Open).unwrap());
        for n in 1..=sites - 2 {
            let i = n - 1;
            let tri = loop_phase(&h, &[i, i + 1, i + 2, i]);
            prop_assert!(angle_eq(tri, (3.0 * n as f64 + 3.0) * phi, 1e-12), "triangle at n={}", n);
        }
        for n in 1..=sites - 3 {
            let i = n - 1;
            let rhombus = loop_phase(&h, &[i, i + 2, i + 3, i + 1, i]);
            prop_assert!(angle_eq(rhombus, 3.0 * phi, 1e-12), "rhombus at n={}", n);
        }
    }

    #[test]
    fn hermitian_by_construction(phi in -10.0f64..10.0, sites in 3usize..30, periodic in any::<bool>()) {
        let (phi, boundary) = if periodic {
            (TAU * (phi.abs() * 7.0).floor() / sites as f64, Boundary::Periodic)
        } else {
            (phi, Boundary::Open)
        };
        let h = build_zigzag(&LatticeSpec::new(sites, 1.3, phi, boundary).unwrap());
        for i in 0..sites {
            for j in 0..sites {
                prop_assert_eq!(h.get(i, j), h.get(j, i).conj());
            }
        }
    }

    #[test]
    fn spectrum_periodic_in_phi(phi in 0.0f64..TAU, sites in 3usize..40) {
        let a = eigvals_hermitian(&build_zigzag(&LatticeSpec::new(sites, 1.0, phi, Boundary::Open).unwrap())).unwrap();
        let b = eigvals_hermitian(&build_zigzag(&LatticeSpec::new(sites, 1.0, phi + TAU, Boundary::Open).unwrap())).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn band_coupling_magnitude(p in 0i64..7, q in 1u64..8, frac in -1.0f64..1.0, v in 0u64..8) {
        prop_assume!(num_integer_gcd(p.unsigned_abs(), q) == 1);
        let k = frac * PI / q as f64;
        let bp = BandProblem::new(p, q, k).unwrap();
        let flux = bp.flux();
        let lhs = bp.coupling(v, 1.0).norm();
        let rhs = (2.0 + 2.0 * (3.0 * k + v as f64 * flux).cos()).max(0.0).sqrt();
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{} vs {}", lhs, rhs);
    }
}

fn num_integer_gcd(a: u64, b: u64) -> u64 {
    if b == 0 { a } else { num_integer_gcd(b, a % b) }
}

#[test]
fn band_matches_real_space() {
    for q in [2u64, 3, 4, 5] {
        for p in 1..q as i64 {
            if num_integer_gcd(p as u64, q) != 1 {
                continue;
            }
            for r in 1..=3 {
                let sites = 3 * q as usize * r;
                let phi = TAU * p as f64 / (3.0 * q as f64);
                let spec = LatticeSpec::new(sites, 1.0, phi, Boundary::Periodic).unwrap();
                let real = eigvals_hermitian(&build_zigzag(&spec)).unwrap();
                let bands = band_spectrum(p, q, sites, 1.0).unwrap();
                assert_eq!(bands.len(), sites);
                for (a, b) in real.iter().zip(&bands) {
                    assert!((a - b).abs() <= 1e-8, "p/q = {p}/{q}, N = {sites}: {a} vs {b}");
                }
            }
        }
    }
}

#[test]
fn zero_flux_band_edge() {
    let bands = band_spectrum(0, 1, 1, 1.0f64).unwrap();
    assert_eq!(bands.len(), 1);
    assert!((bands[0] - 4.0).abs() < 1e-14);
}

#[test]
fn harper_circulant() {
    let n = 300;
    let h = build_harper(n, 1.0, 0.0, Boundary::Periodic).unwrap();
    let ev = eigvals_hermitian(&h).unwrap();
    let mut analytic: Vec<f64> = (0..n).map(|m| 2.0 * (1.0 + (TAU * m as f64 / n as f64).cos())).collect();
    analytic.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (a, b) in ev.iter().zip(&analytic) {
        assert!((a - b).abs() <= 1e-9);
    }
    assert!((h.trace() - 2.0 * n as f64).abs() < 1e-9);
}

#[test]
fn zigzag_zero_flux_extremes() {
    // Oracle: E(k) = 2J(cos k + cos 2k), minimised at cos k = −1/4 → −2.25J; maximum 4J at k = 0.
    let spec = LatticeSpec::new(300, 1.0f64, 0.0, Boundary::Periodic).unwrap();
    let ev = eigvals_hermitian(&build_zigzag(&spec)).unwrap();
    assert!((ev[0] + 2.25).abs() <= 1e-3, "{}", ev[0]);
    assert!((ev[299] - 4.0).abs() <= 1e-3, "{}", ev[299]);
}

#[test]
fn traces_zigzag_vs_harper() {
    let zz = exact_butterfly(300, Boundary::Periodic, &[0.0f64, 1.1, 4.0], ModelKind::Zigzag);
    for row in zz {
        assert!(row.unwrap().trace().abs() <= 1e-9 * 300.0);
    }
    let hp = exact_butterfly(300, Boundary::Periodic, &[0.0f64], ModelKind::Harper);
    assert!((hp[0].as_ref().unwrap().trace() - 600.0).abs() <= 1e-9 * 300.0);
}

#[test]
fn butterfly_rows_in_grid_order_and_snapped() {
    let grid: Vec<f64> = (0..8).map(|i| TAU * i as f64 / 8.0).collect();
    let rows = exact_butterfly(7, Boundary::Periodic, &grid, ModelKind::Zigzag);
    assert_eq!(rows.len(), 8);
    for (row, &req) in rows.iter().zip(&grid) {
        let row = row.as_ref().unwrap();
        assert_eq!(row.requested_flux, req);
        // φ = Φ/3 must sit on 2πm/7.
        let m = row.flux / 3.0 * 7.0 / TAU;
        assert!((m - m.round()).abs() < 1e-9);
        assert_eq!(row.eigenvalues.len(), 7);
    }
    let open = exact_butterfly(14, Boundary::Open, &grid, ModelKind::Zigzag);
    assert_eq!(open[3].as_ref().unwrap().flux, grid[3]);
}

#[test]
fn harper_open_any_flux() {
    let h = build_harper(10, 1.0, 0.77, Boundary::Open).unwrap();
    let expect: f64 = (1..=10).map(|n| 2.0 * (n as f64 * 0.77).cos()).sum();
    assert!((h.trace() - expect).abs() < 1e-12);
}
