//! Dormand–Prince 5(4) with FSAL and standard step-size control, specialised
//! to complex state vectors with linear right-hand sides.

use num_complex::Complex;

use super::DynamicsError;
use crate::numerics::Real;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth- minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) struct Dopri5<T: Real> {
    k: [Vec<Complex<T>>; 7],
    ytmp: Vec<Complex<T>>,
    ynew: Vec<Complex<T>>,
    rtol: T,
    atol: T,
    /// `k[0]` holds `f(t, y)` for the current `(t, y)`.
    fsal: bool,
    c: [T; 7],
    a: [[T; 6]; 7],
    e: [T; 7],
}

impl<T: Real> Dopri5<T> {
    pub(crate) fn new(dim: usize, rtol: T, atol: T) -> Self {
        let zero = vec![Complex::new(T::zero(), T::zero()); dim];
        Self {
            k: std::array::from_fn(|_| zero.clone()),
            ytmp: zero.clone(),
            ynew: zero,
            rtol,
            atol,
            fsal: false,
            c: C.map(T::lit),
            a: A.map(|row| row.map(T::lit)),
            e: E.map(T::lit),
        }
    }

    /// Marks `k[0]` stale, e.g. after the caller changes `y` discontinuously.
    pub(crate) fn invalidate(&mut self) {
        self.fsal = false;
    }

    pub(crate) fn ynew(&self) -> &[Complex<T>] {
        &self.ynew
    }

    /// One trial step of size `h` from `(t, y)`; the proposal lands in
    /// [`Self::ynew`] and the scaled RMS error estimate is returned.
    pub(crate) fn attempt<F>(&mut self, f: &mut F, t: T, y: &[Complex<T>], h: T) -> T
    where
        F: FnMut(T, &[Complex<T>], &mut [Complex<T>]),
    {
        if !self.fsal {
            f(t, y, &mut self.k[0]);
            self.fsal = true;
        }
        for s in 1..7 {
            for i in 0..y.len() {
                let mut acc = Complex::new(T::zero(), T::zero());
                for (j, &a) in self.a[s][..s].iter().enumerate() {
                    if a != T::zero() {
                        acc += self.k[j][i] * a;
                    }
                }
                self.ytmp[i] = y[i] + acc * h;
            }
            let ts = t + self.c[s] * h;
            f(ts, &self.ytmp, &mut self.k[s]);
            if s == 6 {
                self.ynew.copy_from_slice(&self.ytmp);
            }
        }
        let mut sum = T::zero();
        for i in 0..y.len() {
            let mut err = Complex::new(T::zero(), T::zero());
            for (j, &e) in self.e.iter().enumerate() {
                if e != T::zero() {
                    err += self.k[j][i] * e;
                }
            }
            let scale = self.atol + self.rtol * y[i].norm().max(self.ynew[i].norm());
            sum += (err * h).norm_sqr() / (scale * scale);
        }
        (sum / T::from_usize_lossy(y.len().max(1))).sqrt()
    }

    /// Accepts the last attempt: `y ← ynew`, with `k[6]` becoming the next
    /// `k[0]`. `rescale` multiplies both, which keeps FSAL exact for linear
    /// right-hand sides.
    pub(crate) fn accept(&mut self, y: &mut [Complex<T>], rescale: Option<T>) {
        if let Some(s) = rescale {
            for z in self.ynew.iter_mut().chain(self.k[6].iter_mut()) {
                *z = *z * s;
            }
        }
        y.copy_from_slice(&self.ynew);
        self.k.swap(0, 6);
        self.fsal = true;
    }
}

/// Step-size proposal after an attempt with scaled error `err`.
pub(crate) fn next_step<T: Real>(h: T, err: T, accepted: bool) -> T {
    let fac = if err == T::zero() {
        T::lit(5.0)
    } else {
        T::lit(0.9) * err.powf(T::lit(-0.2))
    };
    let upper = if accepted { T::lit(5.0) } else { T::one() };
    h * fac.max(T::lit(0.2)).min(upper)
}

/// Integration state shared across consecutive sample intervals.
pub(crate) struct Driver<T: Real> {
    pub(crate) stepper: Dopri5<T>,
    pub(crate) h: T,
    pub(crate) h_max: T,
    pub(crate) normalize: bool,
}

impl<T: Real> Driver<T> {
    pub(crate) fn new(dim: usize, rtol: T, atol: T, h0: T, h_max: T, normalize: bool) -> Self {
        Self {
            stepper: Dopri5::new(dim, rtol, atol),
            h: h0.min(h_max),
            h_max,
            normalize,
        }
    }

    /// Advances `(t, y)` to exactly `t_end`.
    pub(crate) fn advance<F>(
        &mut self,
        f: &mut F,
        t: &mut T,
        y: &mut [Complex<T>],
        t_end: T,
    ) -> Result<(), DynamicsError>
    where
        F: FnMut(T, &[Complex<T>], &mut [Complex<T>]),
    {
        while *t < t_end {
            let remaining = t_end - *t;
            let last = self.h >= remaining;
            let h = if last { remaining } else { self.h };
            let err = self.stepper.attempt(f, *t, y, h);
            if !err.is_finite() {
                return Err(DynamicsError::NonFinite { t: t.to_f64_lossy() });
            }
            if err <= T::one() {
                let scale = if self.normalize {
                    let n = self.stepper.ynew().iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
                    Some(T::one() / n)
                } else {
                    None
                };
                self.stepper.accept(y, scale);
                *t = if last { t_end } else { *t + h };
                // A shortened final step says nothing about the proposal.
                if !last || h == self.h {
                    self.h = next_step(h, err, true).min(self.h_max);
                }
            } else {
                self.h = next_step(h, err, false);
                check_underflow(self.h, *t)?;
            }
        }
        Ok(())
    }
}

pub(crate) fn check_underflow<T: Real>(h: T, t: T) -> Result<(), DynamicsError> {
    let floor = T::lit(16.0) * T::epsilon() * t.abs().max(T::min_positive_value().sqrt());
    if h <= floor {
        Err(DynamicsError::StepUnderflow { t: t.to_f64_lossy() })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        // y' = −y, y(0) = 1.
        let mut f = |_t: f64, y: &[Complex<f64>], dy: &mut [Complex<f64>]| dy[0] = -y[0];
        let mut d = Driver::new(1, 1e-10, 1e-12, 0.1, 1.0, false);
        let mut y = vec![Complex::new(1.0, 0.0)];
        let mut t = 0.0;
        d.advance(&mut f, &mut t, &mut y, 3.0).unwrap();
        assert_eq!(t, 3.0);
        assert!((y[0].re - (-3.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rotation_with_normalization() {
        let mut f = |_t: f64, y: &[Complex<f64>], dy: &mut [Complex<f64>]| {
            dy[0] = Complex::new(0.0, -1.0) * y[1];
            dy[1] = Complex::new(0.0, -1.0) * y[0];
        };
        let mut d = Driver::new(2, 1e-10, 1e-12, 0.01, 0.05, true);
        let mut y = vec![Complex::new(1.0, 0.0), Complex::new(0.0, 0.0)];
        let mut t = 0.0;
        for k in 1..=10 {
            d.advance(&mut f, &mut t, &mut y, 0.3 * k as f64).unwrap();
        }
        assert!((y[1].norm_sqr() - 3.0f64.sin().powi(2)).abs() < 1e-9);
        assert!(((y[0].norm_sqr() + y[1].norm_sqr()) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nan_reported() {
        let mut f = |_t: f64, _y: &[Complex<f64>], dy: &mut [Complex<f64>]| dy[0] = Complex::new(f64::NAN, 0.0);
        let mut d = Driver::new(1, 1e-8, 1e-10, 0.1, 1.0, false);
        let mut y = vec![Complex::new(1.0, 0.0)];
        let mut t = 0.0;
        assert!(matches!(
            d.advance(&mut f, &mut t, &mut y, 1.0),
            Err(DynamicsError::NonFinite { .. })
        ));
    }
}
