//! Bessel functions of the first kind, orders −1, 0 and 1.

use super::scalar::Real;
use super::NumericsError;

/// Below this |x| the power series is summed directly; its largest term is
/// then ~10², so cancellation costs at most two digits.
const SERIES_LIMIT: f64 = 8.0;

/// `J_order(x)` for `order ∈ {−1, 0, 1}`.
pub fn bessel_j<T: Real>(order: i32, x: T) -> Result<T, NumericsError> {
    if !x.is_finite() {
        return Err(NumericsError::NonFinite);
    }
    let (j0, j1) = bessel_j01(x);
    match order {
        0 => Ok(j0),
        1 => Ok(j1),
        -1 => Ok(-j1),
        other => Err(NumericsError::UnsupportedOrder(other)),
    }
}

/// `(J₀(x), J₁(x))` together; the effective couplings always need both.
pub fn bessel_j01<T: Real>(x: T) -> (T, T) {
    let ax = x.abs();
    let (j0, j1) = if ax <= T::lit(SERIES_LIMIT) {
        series(ax)
    } else {
        miller(ax)
    };
    (j0, if x < T::zero() { -j1 } else { j1 })
}

fn series<T: Real>(x: T) -> (T, T) {
    let q = -(x * x) / T::lit(4.0);
    let mut term0 = T::one();
    let mut term1 = x / T::lit(2.0);
    let (mut j0, mut j1) = (term0, term1);
    for k in 1..200 {
        let kf = T::from_usize_lossy(k);
        term0 *= q / (kf * kf);
        term1 *= q / (kf * (kf + T::one()));
        j0 += term0;
        j1 += term1;
        if term0.abs() <= T::epsilon() * T::lit(1e-3) && term1.abs() <= T::epsilon() * T::lit(1e-3) {
            break;
        }
    }
    (j0, j1)
}

/// Miller's backward recurrence normalised by `J₀ + 2 Σ J_{2k} = 1`.
fn miller<T: Real>(x: T) -> (T, T) {
    let xf = x.to_f64_lossy();
    let start = (xf + 30.0 + 6.0 * xf.sqrt()).ceil() as usize;
    let start = start + (start & 1);
    let rescale_at = T::lit(1e10);
    let shrink = T::lit(1e-10);
    let two_over_x = T::lit(2.0) / x;

    let mut next = T::zero(); // j_{k+1}
    let mut cur = T::lit(1e-30); // j_k
    let mut even_sum = T::zero();
    let mut j1 = T::zero();
    let mut k = start;
    while k > 0 {
        let prev = T::from_usize_lossy(k) * two_over_x * cur - next;
        next = cur;
        cur = prev;
        k -= 1;
        if k % 2 == 0 && k > 0 {
            even_sum += cur;
        }
        if k == 1 {
            j1 = cur;
        }
        if cur.abs() > rescale_at {
            cur *= shrink;
            next *= shrink;
            even_sum *= shrink;
            j1 *= shrink;
        }
    }
    let norm = cur + T::lit(2.0) * even_sum;
    (cur / norm, j1 / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_zero() {
        assert_eq!(bessel_j(0, 0.0f64).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0f64).unwrap(), 0.0);
        assert_eq!(bessel_j(-1, 0.0f64).unwrap(), 0.0);
    }

    #[test]
    fn unsupported_order() {
        assert!(matches!(
            bessel_j(2, 1.0f64),
            Err(NumericsError::UnsupportedOrder(2))
        ));
        assert!(matches!(bessel_j(-2, 1.0f64), Err(NumericsError::UnsupportedOrder(-2))));
    }

    #[test]
    fn parity() {
        for &x in &[0.3, 1.0, 7.5, 12.0, 40.0] {
            let (a0, a1) = bessel_j01(x);
            let (b0, b1) = bessel_j01(-x);
            assert_eq!(a0, b0);
            assert_eq!(a1, -b1);
        }
    }

    #[test]
    fn branches_agree_at_switch() {
        // Series and recurrence both evaluated just across the switch point.
        let x = SERIES_LIMIT;
        let (s0, s1) = series(x);
        let (m0, m1) = miller(x);
        assert!((s0 - m0).abs() < 1e-13, "{s0} vs {m0}");
        assert!((s1 - m1).abs() < 1e-13, "{s1} vs {m1}");
    }
}
