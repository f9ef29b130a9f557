//! Small complex helpers shared by the moment and per-mode integrands.

use num_complex::Complex64;

/// Integral of exp(-z s) over s in [0, t], i.e. (1 - exp(-z t)) / z,
/// evaluated without cancellation when |z t| is small.
#[inline]
#[must_use]
pub fn window(z: Complex64, t: f64) -> Complex64 {
    let w = z * t;
    if w.norm() < 0.1 {
        // (1 - e^{-w}) / w = sum_n (-w)^n / (n+1)!
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for n in 1..12 {
            term = -term * w / (n as f64 + 1.0);
            sum += term;
        }
        sum * t
    } else {
        (1.0 - (-w).exp()) / z
    }
}

/// Same as [`window`] when exp(-z t) is already known.
#[inline]
#[must_use]
pub fn window_with(z: Complex64, t: f64, decay: Complex64) -> Complex64 {
    if (z * t).norm() < 0.1 {
        window(z, t)
    } else {
        (1.0 - decay) / z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn window_matches_direct_form_away_from_zero() {
        for &(re, im, t) in &[(0.3, 1.0, 2.0), (0.05, -0.04, 1.0), (1.0, 0.0, 0.1), (0.0, 3.0, 0.05)] {
            let z = Complex64::new(re, im);
            let direct = (1.0 - (-z * t).exp()) / z;
            assert!((window(z, t) - direct).norm() < 1e-14 * direct.norm().max(1.0));
        }
    }

    #[test]
    fn window_at_zero_is_length() {
        assert!((window(Complex64::new(0.0, 0.0), 3.5) - 3.5).norm() < 1e-15);
        let tiny = Complex64::new(1e-13, -2e-13);
        assert!((window(tiny, 2.0) - 2.0).norm() < 1e-12);
    }
}
