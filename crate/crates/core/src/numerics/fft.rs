use num_complex::Complex;
use rustfft::FftPlanner;

use super::scalar::{all_finite, czero, Real};
use super::NumericsError;

/// Squared DFT magnitudes on an ascending frequency axis.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerSpectrum<T> {
    /// Hz, ascending. The axis is negated relative to the raw DFT so a
    /// component `e^{−iEt}` lands at `+E/2π`.
    pub frequencies: Vec<T>,
    pub power: Vec<T>,
    /// Transform length after zero padding.
    pub padded_len: usize,
    /// Frequency spacing, Hz.
    pub bin_width: T,
}

/// `|DFT(series)|²` after zero padding to `next_pow2(len) · zero_pad_factor`.
///
/// Raw bin `m` (signed, `−L/2 ≤ m < L/2`) is reported at `−m/(L·dt)`.
pub fn fft_power<T: Real>(
    series: &[Complex<T>],
    dt: T,
    zero_pad_factor: usize,
) -> Result<PowerSpectrum<T>, NumericsError> {
    if series.len() < 2 {
        return Err(NumericsError::TooFewSamples(series.len()));
    }
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(NumericsError::BadStep);
    }
    if zero_pad_factor == 0 {
        return Err(NumericsError::BadPadFactor);
    }
    if !all_finite(series) {
        return Err(NumericsError::NonFinite);
    }
    let len = series.len().next_power_of_two() * zero_pad_factor;
    let mut buf = vec![czero::<T>(); len];
    buf[..series.len()].copy_from_slice(series);
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);

    let bin_width = T::one() / (T::from_usize_lossy(len) * dt);
    let half = (len / 2) as isize;
    // Raw bins m ∈ [−L/2, L/2 − 1]; reported axis runs [−(L/2 − 1)δ, (L/2)δ].
    let mut frequencies = Vec::with_capacity(len);
    let mut power = Vec::with_capacity(len);
    for m in (-half..half).rev() {
        let idx = m.rem_euclid(len as isize) as usize;
        frequencies.push(-T::from_isize(m).expect("index fits scalar") * bin_width);
        power.push(buf[idx].norm_sqr());
    }
    Ok(PowerSpectrum {
        frequencies,
        power,
        padded_len: len,
        bin_width,
    })
}

/// Sample spacing of a time axis, rejecting non-uniform grids (relative
/// tolerance on each spacing).
pub fn uniform_step<T: Real>(times: &[T], rel_tol: T) -> Result<T, NumericsError> {
    if times.len() < 2 {
        return Err(NumericsError::TooFewSamples(times.len()));
    }
    let span = times[times.len() - 1] - times[0];
    let dt = span / T::from_usize_lossy(times.len() - 1);
    if !(dt > T::zero()) {
        return Err(NumericsError::BadStep);
    }
    for (k, w) in times.windows(2).enumerate() {
        if ((w[1] - w[0]) - dt).abs() > rel_tol * dt {
            return Err(NumericsError::NonUniform { index: k });
        }
    }
    Ok(dt)
}
