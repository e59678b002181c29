use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::integrator::{check_underflow, next_step, Dopri5, Driver};
use super::state::{check_site, DensityMatrix, QuantumState};
use super::{DynamicsError, HamiltonianSource, NoiseSpec, TimeGrid, TrajectoryConfig};
use crate::numerics::{Real, SparseHermitian};

/// Values recorded at the grid's sample times.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples<T, S> {
    pub times: Vec<T>,
    pub values: Vec<S>,
}

fn minus_i<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), -T::one())
}

fn check_dims<T: Real, H: HamiltonianSource<T>>(state_dim: usize, h: &H) -> Result<(), DynamicsError> {
    if state_dim != h.qubits() + 1 {
        return Err(DynamicsError::DimensionMismatch {
            state: state_dim,
            block: h.qubits(),
        });
    }
    Ok(())
}

/// Integrates `y' = f(t, y)` over the grid, passing each sample to `record`.
fn sample_ode<T, F, R>(
    y0: &[Complex<T>],
    f: &mut F,
    grid: &TimeGrid<T>,
    normalize: bool,
    mut record: R,
) -> Result<Vec<T>, DynamicsError>
where
    T: Real,
    F: FnMut(T, &[Complex<T>], &mut [Complex<T>]),
    R: FnMut(&[Complex<T>]),
{
    let times = grid.times();
    let mut driver = Driver::new(y0.len(), grid.rtol(), grid.atol(), grid.max_step(), grid.max_step(), normalize);
    let mut y = y0.to_vec();
    let mut t = T::zero();
    for &tk in &times {
        driver.advance(f, &mut t, &mut y, tk)?;
        record(&y);
    }
    Ok(times)
}

/// Solves `i d|Ψ⟩/dt = H(t)|Ψ⟩`, renormalising after every accepted step.
pub fn evolve_unitary<T: Real, H: HamiltonianSource<T>>(
    initial: &QuantumState<T>,
    h: &H,
    grid: &TimeGrid<T>,
) -> Result<Samples<T, QuantumState<T>>, DynamicsError> {
    check_dims(initial.amplitudes().len(), h)?;
    let mut scratch = SparseHermitian::zeros(0);
    let mut f = |t: T, y: &[Complex<T>], dy: &mut [Complex<T>]| {
        dy.fill(Complex::new(T::zero(), T::zero()));
        h.at(t, &mut scratch).apply_add(minus_i(), y, dy, 1);
    };
    let mut values = Vec::with_capacity(grid.len());
    let times = sample_ode(initial.amplitudes(), &mut f, grid, true, |y| {
        values.push(QuantumState::from_raw(y.to_vec()))
    })?;
    Ok(Samples { times, values })
}

/// `−i[H, ρ] + D_relax[ρ] + D_dephase[ρ]` in the `(N + 1)²` subspace.
fn lindblad_rhs<T: Real>(
    h: &SparseHermitian<T>,
    gamma1: T,
    gamma_phi: T,
    rho: &[Complex<T>],
    drho: &mut [Complex<T>],
) {
    let d = h.dim() + 1;
    let mi = minus_i::<T>();
    let pi = -mi;
    drho.fill(Complex::new(T::zero(), T::zero()));
    for (i, &e) in h.diagonal().iter().enumerate() {
        if e == T::zero() {
            continue;
        }
        let r = i + 1;
        for b in 0..d {
            drho[r * d + b] += mi * rho[r * d + b] * e;
            drho[b * d + r] += pi * rho[b * d + r] * e;
        }
    }
    for &(i, j, v) in h.links() {
        let (ri, rj) = (i + 1, j + 1);
        let vc = v.conj();
        for b in 0..d {
            drho[ri * d + b] += mi * v * rho[rj * d + b];
            drho[rj * d + b] += mi * vc * rho[ri * d + b];
            drho[b * d + rj] += pi * rho[b * d + ri] * v;
            drho[b * d + ri] += pi * rho[b * d + rj] * vc;
        }
    }
    let half = T::lit(0.5) * gamma1;
    let mut feed = T::zero();
    for a in 0..d {
        let ea = if a == 0 { T::zero() } else { T::one() };
        for b in 0..d {
            let eb = if b == 0 { T::zero() } else { T::one() };
            let mut rate = half * (ea + eb);
            if a != b {
                rate += gamma_phi * (ea + eb);
            }
            drho[a * d + b] -= rho[a * d + b] * rate;
        }
        if a > 0 {
            feed += rho[a * d + a].re;
        }
    }
    drho[0] += Complex::new(gamma1 * feed, T::zero());
}

/// Lindblad master equation with relaxation and pure dephasing on every qubit.
pub fn evolve_lindblad<T: Real, H: HamiltonianSource<T>>(
    initial: &DensityMatrix<T>,
    h: &H,
    noise: &NoiseSpec<T>,
    grid: &TimeGrid<T>,
) -> Result<Samples<T, DensityMatrix<T>>, DynamicsError> {
    check_dims(initial.dim(), h)?;
    let (g1, gphi) = (noise.gamma1(), noise.gamma_phi());
    let d = initial.dim();
    let mut scratch = SparseHermitian::zeros(0);
    let mut f = |t: T, y: &[Complex<T>], dy: &mut [Complex<T>]| {
        lindblad_rhs(h.at(t, &mut scratch), g1, gphi, y, dy);
    };
    let mut values = Vec::with_capacity(grid.len());
    let times = sample_ode(initial.as_slice(), &mut f, grid, false, |y| {
        values.push(DensityMatrix::from_raw(d, y.to_vec()))
    })?;
    Ok(Samples { times, values })
}

/// The coherences `ρ_{n0}`, `n = 1..=N`, of the master-equation solution.
///
/// This block decouples exactly: no term of the generator feeds it from
/// elsewhere, and it decays at `γ₁/2 + γ_φ = 1/T2*`. Solving it alone costs
/// `O(N)` per evaluation instead of `O(N²)`.
pub fn evolve_coherences<T: Real, H: HamiltonianSource<T>>(
    initial: &DensityMatrix<T>,
    h: &H,
    noise: &NoiseSpec<T>,
    grid: &TimeGrid<T>,
) -> Result<Samples<T, Vec<Complex<T>>>, DynamicsError> {
    check_dims(initial.dim(), h)?;
    let rate = T::lit(0.5) * noise.gamma1() + noise.gamma_phi();
    let c0: Vec<Complex<T>> = (1..initial.dim()).map(|n| initial.get(n, 0)).collect();
    let mut scratch = SparseHermitian::zeros(0);
    let mut f = |t: T, y: &[Complex<T>], dy: &mut [Complex<T>]| {
        for (d, &c) in dy.iter_mut().zip(y) {
            *d = -(c * rate);
        }
        h.at(t, &mut scratch).apply_add(minus_i(), y, dy, 0);
    };
    let mut values = Vec::with_capacity(grid.len());
    let times = sample_ode(&c0, &mut f, grid, false, |y| values.push(y.to_vec()))?;
    Ok(Samples { times, values })
}

/// Ensemble mean of `|ψ⟩⟨ψ|/⟨ψ|ψ⟩` over quantum-jump trajectories.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryAverage<T> {
    pub times: Vec<T>,
    pub mean: Vec<DensityMatrix<T>>,
    /// Standard error of each entry's real and imaginary parts, row-major.
    pub std_error: Vec<Vec<Complex<T>>>,
    pub count: usize,
}

impl<T: Real> TrajectoryAverage<T> {
    /// Mean `⟨σₙ⁻⟩` at every sample.
    pub fn sigma_minus(&self, site: usize) -> Result<Vec<Complex<T>>, DynamicsError> {
        check_site(site, self.mean.first().map_or(0, |r| r.qubits()))?;
        Ok(self.mean.iter().map(|r| r.get(site, 0)).collect())
    }

    /// Standard error of `⟨σₙ⁻⟩` (real and imaginary parts).
    pub fn sigma_minus_std_error(&self, site: usize) -> Result<Vec<Complex<T>>, DynamicsError> {
        let d = self.mean.first().map_or(0, |r| r.dim());
        check_site(site, d.saturating_sub(1))?;
        Ok(self.std_error.iter().map(|e| e[site * d]).collect())
    }
}

/// Trajectories per deterministic work unit.
const BLOCK: usize = 64;
/// Target accuracy of the located jump time, in cumulative probability.
const JUMP_TOL: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

struct Accumulator<T> {
    sum: Vec<Complex<T>>,
    /// `(Σ re², Σ im²)` packed as a complex number.
    sq: Vec<Complex<T>>,
}

impl<T: Real> Accumulator<T> {
    fn new(len: usize) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self {
            sum: vec![z; len],
            sq: vec![z; len],
        }
    }

    fn record(&mut self, k: usize, y: &[Complex<T>]) {
        let d = y.len();
        let base = k * d * d;
        let nrm = norm_of(y);
        for i in 0..d {
            for j in 0..d {
                let v = y[i] * y[j].conj() / nrm;
                self.sum[base + i * d + j] += v;
                self.sq[base + i * d + j] += Complex::new(v.re * v.re, v.im * v.im);
            }
        }
    }

    fn absorb(&mut self, other: &Self) {
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sq.iter_mut().zip(&other.sq) {
            *a += b;
        }
    }
}

/// Monte Carlo wave-function unravelling of [`evolve_lindblad`].
///
/// Each trajectory evolves under `H − (i/2)Σ L†L` until its squared norm
/// falls to a uniform threshold, where the jump time is located by bisection,
/// a collapse operator is chosen by rate and the state renormalised.
/// Trajectory `i` draws from ChaCha8 stream `i` of the configured seed; fixed
/// blocks summed in order make the result independent of the thread count.
pub fn evolve_trajectories<T: Real, H: HamiltonianSource<T>>(
    initial: &QuantumState<T>,
    h: &H,
    noise: &NoiseSpec<T>,
    grid: &TimeGrid<T>,
    cfg: &TrajectoryConfig,
) -> Result<TrajectoryAverage<T>, DynamicsError> {
    if cfg.count == 0 {
        return Err(DynamicsError::ZeroTrajectories);
    }
    let d = initial.amplitudes().len();
    check_dims(d, h)?;
    let k_len = grid.len();
    let times = grid.times();
    let mut total = Accumulator::new(k_len * d * d);

    if noise.is_noiseless() {
        // Every trajectory follows the same unitary path.
        let path = evolve_unitary(initial, h, grid)?;
        for (k, s) in path.values.iter().enumerate() {
            total.record(k, s.amplitudes());
        }
        return Ok(finish(times, d, total, 1, cfg.count));
    }

    let blocks = cfg.count.div_ceil(BLOCK);
    let width = rayon::current_num_threads().max(1);
    for chunk_start in (0..blocks).step_by(width) {
        let chunk: Vec<Result<Accumulator<T>, DynamicsError>> = (chunk_start..(chunk_start + width).min(blocks))
            .into_par_iter()
            .map(|b| {
                let mut acc = Accumulator::new(k_len * d * d);
                for index in b * BLOCK..((b + 1) * BLOCK).min(cfg.count) {
                    run_trajectory(initial, h, noise, grid, cfg.seed, index as u64, &mut acc)?;
                }
                Ok(acc)
            })
            .collect();
        for acc in chunk {
            total.absorb(&acc?);
        }
    }
    Ok(finish(times, d, total, cfg.count, cfg.count))
}

/// `recorded` distinct samples stand for `count` trajectories.
fn finish<T: Real>(times: Vec<T>, d: usize, acc: Accumulator<T>, recorded: usize, count: usize) -> TrajectoryAverage<T> {
    let n = T::from_usize_lossy(recorded);
    let per = d * d;
    let mut mean = Vec::with_capacity(times.len());
    let mut std_error = Vec::with_capacity(times.len());
    for k in 0..times.len() {
        let m: Vec<Complex<T>> = acc.sum[k * per..(k + 1) * per].iter().map(|s| s / n).collect();
        let se = if recorded > 1 {
            acc.sq[k * per..(k + 1) * per]
                .iter()
                .zip(&m)
                .map(|(q, mu)| {
                    let var_re = (q.re / n - mu.re * mu.re).max(T::zero()) / (n - T::one());
                    let var_im = (q.im / n - mu.im * mu.im).max(T::zero()) / (n - T::one());
                    Complex::new(var_re.sqrt(), var_im.sqrt())
                })
                .collect()
        } else {
            vec![Complex::new(T::zero(), T::zero()); per]
        };
        mean.push(DensityMatrix::from_raw(d, m));
        std_error.push(se);
    }
    TrajectoryAverage {
        times,
        mean,
        std_error,
        count,
    }
}

fn draw<T: Real>(rng: &mut ChaCha8Rng) -> T {
    // (0, 1]: a zero threshold would never trigger.
    T::lit(1.0 - rng.random::<f64>())
}

fn run_trajectory<T: Real, H: HamiltonianSource<T>>(
    initial: &QuantumState<T>,
    h: &H,
    noise: &NoiseSpec<T>,
    grid: &TimeGrid<T>,
    seed: u64,
    index: u64,
    acc: &mut Accumulator<T>,
) -> Result<(), DynamicsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n_q = h.qubits();
    let (g1, gphi) = (noise.gamma1(), noise.gamma_phi());
    let half = T::lit(0.5);
    // −(i/2)Σ L†L = −(1/2)[γ₁·P₁ + (N γ_φ/2)·I]
    let damp_ground = half * half * gphi * T::from_usize_lossy(n_q);
    let damp_excited = damp_ground + half * g1;
    let mut scratch = SparseHermitian::zeros(0);
    let mut f = |t: T, y: &[Complex<T>], dy: &mut [Complex<T>]| {
        dy[0] = -(y[0] * damp_ground);
        for (d, &c) in dy[1..].iter_mut().zip(&y[1..]) {
            *d = -(c * damp_excited);
        }
        h.at(t, &mut scratch).apply_add(minus_i(), y, dy, 1);
    };

    let mut stepper = Dopri5::new(n_q + 1, grid.rtol(), grid.atol());
    let mut y = initial.amplitudes().to_vec();
    let mut t = T::zero();
    let mut step = grid.max_step();
    let mut threshold: T = draw(&mut rng);
    let tol = T::lit(JUMP_TOL);
    for (k, tk) in grid.times().into_iter().enumerate() {
        while t < tk {
            let remaining = tk - t;
            let last = step >= remaining;
            let hs = if last { remaining } else { step };
            let err = stepper.attempt(&mut f, t, &y, hs);
            if !err.is_finite() {
                return Err(DynamicsError::NonFinite { t: t.to_f64_lossy() });
            }
            if err > T::one() {
                step = next_step(hs, err, false);
                check_underflow(step, t)?;
                continue;
            }
            let norm: T = stepper.ynew().iter().map(|z| z.norm_sqr()).sum();
            if norm > threshold {
                stepper.accept(&mut y, None);
                t = if last { tk } else { t + hs };
                if !last || hs == step {
                    step = next_step(hs, err, true).min(grid.max_step());
                }
                continue;
            }
            // The threshold is crossed inside (t, t + hs]; k₁ stays valid for
            // every trial step from the same (t, y).
            let (mut lo, mut hi) = (T::zero(), hs);
            let mut s = hs;
            for _ in 0..MAX_BISECTIONS {
                if (norm_of(stepper.ynew()) - threshold).abs() <= tol {
                    break;
                }
                s = half * (lo + hi);
                stepper.attempt(&mut f, t, &y, s);
                if norm_of(stepper.ynew()) > threshold {
                    lo = s;
                } else {
                    hi = s;
                }
            }
            stepper.accept(&mut y, None);
            t = if s == remaining { tk } else { t + s };
            jump(&mut y, g1, gphi, &mut rng);
            stepper.invalidate();
            threshold = draw(&mut rng);
        }
        acc.record(k, &y);
    }
    Ok(())
}

fn norm_of<T: Real>(y: &[Complex<T>]) -> T {
    y.iter().map(|z| z.norm_sqr()).sum()
}

/// Applies one collapse operator chosen with probability proportional to its
/// rate, then renormalises.
fn jump<T: Real>(y: &mut [Complex<T>], g1: T, gphi: T, rng: &mut ChaCha8Rng) {
    let n_q = y.len() - 1;
    let norm = norm_of(y);
    let dephase = T::lit(0.5) * gphi * norm;
    let total = g1 * (norm - y[0].norm_sqr()) + dephase * T::from_usize_lossy(n_q);
    let mut u = T::lit(rng.random::<f64>()) * total;
    let zero = Complex::new(T::zero(), T::zero());
    let mut chosen = None;
    for n in 1..=n_q {
        let w = g1 * y[n].norm_sqr();
        if u < w {
            chosen = Some((true, n));
            break;
        }
        u -= w;
    }
    if chosen.is_none() {
        for n in 1..=n_q {
            if u < dephase || n == n_q {
                chosen = Some((false, n));
                break;
            }
            u -= dephase;
        }
    }
    match chosen {
        Some((true, n)) => {
            // σₙ⁻ moves the site-n amplitude onto |ψ₀⟩.
            let a = y[n];
            y.fill(zero);
            y[0] = a;
        }
        Some((false, n)) => {
            // σₙᶻ is +1 on |ψₙ⟩ and −1 on every other basis state.
            for (m, z) in y.iter_mut().enumerate() {
                if m != n {
                    *z = -*z;
                }
            }
        }
        None => {}
    }
    let inv = T::one() / norm_of(y).sqrt();
    for z in y.iter_mut() {
        *z = *z * inv;
    }
}
